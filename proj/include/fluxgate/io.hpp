// Copyright 2026 The fluxgate developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fluxgate/circuit.hpp"
#include "fluxgate/dynamics.hpp"
#include "fluxgate/pulses.hpp"

namespace fluxgate {

using json = nlohmann::json;

/// Parses a device description. Energies in GHz, keys matching the
/// CircuitParams field names, optional "disorder" block; unknown keys are
/// rejected.
inline std::pair<CircuitParams, DisorderParams> device_from_json(const json& j) {
    static const std::vector<std::string> keys = {"E_Ja",     "E_Jb",     "E_Ca",
                                                  "E_Cb",     "E_L",      "E_Jc",
                                                  "E_Lprime", "E_Cminus", "E_Cplus"};
    static const std::vector<std::string> dis_keys = {"dE_L", "dE_Lprime", "dC"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "disorder") continue;
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw InvalidParameters("unknown device key: " + k);
    }
    auto need = [&](const std::string& k) {
        if (!j.contains(k)) throw InvalidParameters("missing device key: " + k);
        if (!j.at(k).is_number()) throw InvalidParameters("device key is not a number: " + k);
        return j.at(k).get<double>();
    };
    CircuitParams p;
    p.E_Ja = need("E_Ja");
    p.E_Jb = need("E_Jb");
    p.E_Ca = need("E_Ca");
    p.E_Cb = need("E_Cb");
    p.E_L = need("E_L");
    p.E_Jc = need("E_Jc");
    p.E_Lprime = need("E_Lprime");
    p.E_Cminus = need("E_Cminus");
    p.E_Cplus = need("E_Cplus");
    DisorderParams d;
    if (j.contains("disorder")) {
        const json& jd = j.at("disorder");
        for (auto it = jd.begin(); it != jd.end(); ++it)
            if (std::find(dis_keys.begin(), dis_keys.end(), it.key()) == dis_keys.end())
                throw InvalidParameters("unknown disorder key: " + it.key());
        d.dE_L = jd.value("dE_L", 0.0);
        d.dE_Lprime = jd.value("dE_Lprime", 0.0);
        d.dC = jd.value("dC", 0.0);
    }
    p.validate();
    d.validate();
    return {p, d};
}

inline std::pair<CircuitParams, DisorderParams> load_device(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameters("cannot open device file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidParameters("device file is not valid JSON: " + std::string(e.what()));
    }
    return device_from_json(j);
}

inline json device_to_json(const CircuitParams& p, const DisorderParams& d = {}) {
    json j{{"E_Ja", p.E_Ja},         {"E_Jb", p.E_Jb},       {"E_Ca", p.E_Ca},
           {"E_Cb", p.E_Cb},         {"E_L", p.E_L},         {"E_Jc", p.E_Jc},
           {"E_Lprime", p.E_Lprime}, {"E_Cminus", p.E_Cminus}, {"E_Cplus", p.E_Cplus}};
    if (!d.is_zero())
        j["disorder"] = {{"dE_L", d.dE_L}, {"dE_Lprime", d.dE_Lprime}, {"dC", d.dC}};
    return j;
}

/// GateSchedule serialization: amplitudes in Phi_0 units, frequencies in
/// GHz, durations in ns, angles in radians.
inline json schedule_to_json(const GateSchedule& sched) {
    json segs = json::array();
    for (const auto& s : sched.segments) {
        json js{{"duration_ns", s.duration_ns}};
        if (s.pulse) {
            js["type"] = "pulse";
            js["line"] = to_string(s.pulse->line);
            js["amplitude_Phi0"] = s.pulse->flux_amplitude / two_pi;
            js["frequency_GHz"] = s.pulse->omega_d / two_pi;
            js["n_periods"] = s.pulse->n_periods;
            if (s.pulse->bessel_index > 0) js["bessel_index"] = s.pulse->bessel_index;
        } else {
            js["type"] = "idle";
        }
        segs.push_back(std::move(js));
    }
    return json{{"segments", std::move(segs)},
                {"phases", {{"alpha", sched.phases.alpha},
                            {"beta", sched.phases.beta},
                            {"gamma", sched.phases.gamma}}},
                {"z_angles", {{"theta_a1", sched.z_angles[0]},
                              {"theta_b1", sched.z_angles[1]},
                              {"theta_a2", sched.z_angles[2]},
                              {"theta_b2", sched.z_angles[3]}}},
                {"total_time_ns", sched.total_time_ns}};
}

inline GateSchedule schedule_from_json(const json& j) {
    GateSchedule sched;
    for (const auto& js : j.at("segments")) {
        Segment seg;
        seg.duration_ns = js.at("duration_ns").get<double>();
        if (js.at("type") == "pulse") {
            PulseSpec p;
            const std::string line = js.at("line").get<std::string>();
            p.line = line == "a" ? FluxLine::a : line == "b" ? FluxLine::b : FluxLine::c;
            p.flux_amplitude = js.at("amplitude_Phi0").get<double>() * two_pi;
            p.omega_d = js.at("frequency_GHz").get<double>() * two_pi;
            p.n_periods = js.at("n_periods").get<int>();
            p.bessel_index = js.value("bessel_index", 0);
            seg.pulse = p;
        }
        sched.segments.push_back(std::move(seg));
    }
    const auto& ph = j.at("phases");
    sched.phases = PhiSwapPhases{ph.at("alpha"), ph.at("beta"), ph.at("gamma")};
    const auto& za = j.at("z_angles");
    sched.z_angles = {za.at("theta_a1"), za.at("theta_b1"), za.at("theta_a2"),
                      za.at("theta_b2")};
    sched.total_time_ns = j.at("total_time_ns").get<double>();
    return sched;
}

inline GateSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameters("cannot open schedule file: " + path);
    json j;
    in >> j;
    return schedule_from_json(j);
}

/// Deterministic CSV writer: fixed "%.12g" formatting, one header row.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw InvalidParameters("cannot open output file: " + path);
    }
    void header(const std::vector<std::string>& names) {
        for (size_t i = 0; i < names.size(); ++i)
            out_ << (i ? "," : "") << names[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& values) {
        char buf[32];
        for (size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g", values[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

}  // namespace fluxgate
