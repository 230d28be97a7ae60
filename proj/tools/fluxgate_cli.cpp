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

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "fluxgate/fluxgate.hpp"

namespace fs = std::filesystem;
using namespace fluxgate;

namespace {

struct Grid {
    double min = 0, max = 0;
    int points = 0;

    double at(int i) const {
        if (points == 1) return min;
        return min + (max - min) * i / double(points - 1);
    }
    void validate(const std::string& name) const {
        if (points < 1) throw InvalidParameters(name + ": grid is empty");
        if (points > 1 && !(max > min)) throw InvalidParameters(name + ": grid is not monotone");
    }
};

Grid grid_from_json(const json& j, Grid fallback) {
    Grid g = fallback;
    if (j.is_object()) {
        g.min = j.value("min", g.min);
        g.max = j.value("max", g.max);
        g.points = j.value("points", g.points);
    }
    return g;
}

struct RunConfig {
    std::string device_path = "data/device.json";
    std::string output_dir = "out";
    int workers = 0;
    json raw;

    json section(const std::string& name) const {
        return raw.contains(name) ? raw.at(name) : json::object();
    }
};

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw InvalidParameters("cannot open config file: " + path);
    try {
        in >> cfg.raw;
    } catch (const json::exception& e) {
        throw InvalidParameters("config is not valid JSON: " + std::string(e.what()));
    }
    cfg.device_path = cfg.raw.value("device", cfg.device_path);
    cfg.output_dir = cfg.raw.value("output_dir", cfg.output_dir);
    cfg.workers = cfg.raw.value("workers", 0);
    return cfg;
}

ProductDims dims_from_json(const json& j, ProductDims d = {}) {
    if (j.is_array() && j.size() >= 4) {
        d.qubit_a = j[0];
        d.qubit_b = j[1];
        d.minus = j[2];
        d.plus = j[3];
    }
    return d;
}

void write_manifest(const fs::path& dir, const std::string& command, json files) {
    json m{{"command", command}, {"files", std::move(files)}};
    std::ofstream out(dir / (command + "_manifest.json"));
    out << m.dump(2) << "\n";
}

json file_entry(const std::string& name, const std::string& description, json columns) {
    return json{{"file", name}, {"description", description}, {"columns", std::move(columns)}};
}

struct OperatingPoint {
    FluxPoint flux;                  // exact sweet contour at the off position
    std::shared_ptr<FullModel> model;
    GateSystem sys;
    double omega_a = 0, omega_b = 0;  // angular dressed frequencies
    double j_ac = 0;                  // signed, h*GHz
    double omega_ac_a = 0, omega_ac_b = 0;
};

OperatingPoint build_operating_point(const CircuitParams& params, const ProductDims& dims,
                                     int n_states) {
    OperatingPoint op;
    const FluxPoint off = find_off_position(params, OffPositionMode::effective);
    op.flux = exact_sweet_point(params, off.phi_c);
    op.model = std::make_shared<FullModel>(params, op.flux, dims,
                                           std::max(n_states + 6, n_states));
    op.sys = reduce_to_gate_system(*op.model, n_states);
    op.omega_a = two_pi * op.sys.energies(2);
    op.omega_b = two_pi * op.sys.energies(1);
    op.j_ac = ac_coupling(op.model->drive_elements(FluxLine::c));
    const auto ha = op.model->drive_elements(FluxLine::a);
    const auto hb = op.model->drive_elements(FluxLine::b);
    op.omega_ac_a = 0.5 * (ha(0, 2) + ha(1, 3));
    op.omega_ac_b = 0.5 * (hb(0, 1) + hb(2, 3));
    return op;
}

int cmd_spectrum(const RunConfig& cfg, const CircuitParams& params) {
    const json sec = cfg.section("spectrum");
    Grid qubit_grid = grid_from_json(sec.value("qubit_flux", json()), {-0.06, 0.06, 49});
    Grid coupler_grid = grid_from_json(sec.value("coupler_flux", json()), {0.0, 0.5, 51});
    Grid contour_grid = grid_from_json(sec.value("contour", json()), {0.05, 0.45, 41});
    const int levels = sec.value("levels", 8);
    qubit_grid.validate("qubit_flux");
    coupler_grid.validate("coupler_flux");
    contour_grid.validate("contour");
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    // Single-mode spectra against their own flux.
    for (QubitId q : {QubitId::a, QubitId::b}) {
        const std::string name = q == QubitId::a ? "qubit_a" : "qubit_b";
        CsvWriter csv((dir / ("spectrum_" + name + ".csv")).string());
        std::vector<std::string> head{"delta_phi_over_2pi"};
        for (int k = 1; k <= 5; ++k) head.push_back("E_" + std::to_string(k) + "_GHz");
        csv.header(head);
        for (int i = 0; i < qubit_grid.points; ++i) {
            const double dphi = qubit_grid.at(i) * two_pi;
            const auto mode = build_fluxonium(params, q, dphi, 110);
            const auto es = eigh_full(Eigen::MatrixXd(mode.hamiltonian.matrix.real()));
            std::vector<double> row{dphi / two_pi};
            for (int k = 1; k <= 5; ++k) row.push_back(es.values(k) - es.values(0));
            csv.row(row);
        }
    }
    {
        CsvWriter csv((dir / "spectrum_coupler.csv").string());
        std::vector<std::string> head{"phi_c_over_2pi"};
        for (int k = 1; k <= 5; ++k) head.push_back("E_" + std::to_string(k) + "_GHz");
        csv.header(head);
        for (int i = 0; i < coupler_grid.points; ++i) {
            const double phic = coupler_grid.at(i) * two_pi;
            const auto mode = build_coupler_minus(params, phic, 110);
            const auto es = eigh_full(Eigen::MatrixXd(mode.hamiltonian.matrix.real()));
            std::vector<double> row{phic / two_pi};
            for (int k = 1; k <= 5; ++k) row.push_back(es.values(k) - es.values(0));
            csv.row(row);
        }
    }

    // Coupled spectrum along the sweet-spot contour, exact and effective.
    const ProductDims dims = dims_from_json(sec.value("dims", json()),
                                            ProductDims{10, 10, 7, 5, 110, 24});
    std::vector<FluxPoint> contour;
    for (int i = 0; i < contour_grid.points; ++i)
        contour.push_back(contour_modes(params, contour_grid.at(i) * two_pi).flux);
    const auto rows = spectrum_along_contour(params, contour, levels, dims);
    CsvWriter csv((dir / "spectrum_contour.csv").string());
    std::vector<std::string> head{"phi_c_over_2pi", "E_00", "E_01", "E_10", "E_11"};
    for (int k = 4; k < levels; ++k) head.push_back("E_" + std::to_string(k));
    for (const char* c : {"Eeff_01", "Eeff_10", "Eeff_11"}) head.push_back(c);
    csv.header(head);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        const auto& r = rows[i];
        std::vector<double> row{r.flux.phi_c / two_pi};
        // computational gaps by label, remaining levels in energy order
        std::array<double, 4> comp{0, 0, 0, 0};
        std::vector<double> rest;
        for (int k = 0; k < r.gaps.size(); ++k) {
            bool is_comp = false;
            for (int la = 0; la < 2 && !is_comp; ++la)
                for (int mb = 0; mb < 2 && !is_comp; ++mb)
                    if (r.labels[k] ==
                        ((static_cast<long>(la) * dims.qubit_b + mb) * dims.minus) * dims.plus) {
                        comp[2 * la + mb] = r.gaps(k);
                        is_comp = true;
                    }
            if (!is_comp) rest.push_back(r.gaps(k));
        }
        for (double g : comp) row.push_back(g);
        for (int k = 0; k + 4 < levels && k < static_cast<int>(rest.size()); ++k)
            row.push_back(rest[k]);
        while (row.size() < head.size() - 3) row.push_back(0.0);
        const auto ep = effective_params(params, r.flux, dims);
        const Eigen::Matrix4d heff = effective_hamiltonian(ep);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(heff);
        for (int k = 1; k < 4; ++k) row.push_back(es.eigenvalues()(k) - es.eigenvalues()(0));
        csv.row(row);
    }
    write_manifest(dir, "spectrum",
                   json::array({file_entry("spectrum_qubit_a.csv",
                                           "qubit a levels vs its flux deviation",
                                           {"delta_phi_over_2pi", "E_k - E_0 in GHz"}),
                                file_entry("spectrum_qubit_b.csv",
                                           "qubit b levels vs its flux deviation",
                                           {"delta_phi_over_2pi", "E_k - E_0 in GHz"}),
                                file_entry("spectrum_coupler.csv",
                                           "coupler difference-mode levels vs coupler flux",
                                           {"phi_c_over_2pi", "E_k - E_0 in GHz"}),
                                file_entry("spectrum_contour.csv",
                                           "coupled spectrum along the sweet-spot contour, "
                                           "exact and effective-model gaps in GHz",
                                           {"phi_c_over_2pi", "E_label", "Eeff_label"})}));
    return 0;
}

int cmd_coupling_sweep(const RunConfig& cfg, const CircuitParams& params) {
    const json sec = cfg.section("coupling_sweep");
    Grid grid = grid_from_json(sec.value("phi_c", json()), {0.05, 0.45, 81});
    grid.validate("phi_c");
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const auto rows = parallel_map<std::array<double, 4>>(
        grid.points,
        [&](int i) {
            const double phic = grid.at(i) * two_pi;
            const auto cs = coupling_strength_on_contour(params, phic);
            return std::array<double, 4>{phic / two_pi, cs.J * 1e3, cs.J_minus * 1e3,
                                         cs.J_plus * 1e3};
        },
        cfg.workers);
    CsvWriter csv((dir / "coupling_sweep.csv").string());
    csv.header({"phi_c_over_2pi", "J_MHz", "J_minus_MHz", "J_plus_MHz"});
    for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3]});
    write_manifest(dir, "coupling-sweep",
                   json::array({file_entry("coupling_sweep.csv",
                                           "two-qubit coupling strength along the contour",
                                           {"phi_c_over_2pi", "J_MHz", "J_minus_MHz",
                                            "J_plus_MHz"})}));
    return 0;
}

int cmd_sensitivity_map(const RunConfig& cfg, const CircuitParams& params) {
    const json sec = cfg.section("sensitivity_map");
    Grid ejc = grid_from_json(sec.value("E_Jc", json()), {1.0, 6.0, 6});
    Grid ecm = grid_from_json(sec.value("E_Cminus", json()), {6.0, 26.0, 6});
    ejc.validate("E_Jc");
    ecm.validate("E_Cminus");
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const int n = ejc.points * ecm.points;
    const auto rows = parallel_map<std::array<double, 4>>(
        n,
        [&](int idx) {
            const int i = idx / ecm.points, j = idx % ecm.points;
            CircuitParams p = params;
            p.E_Jc = ejc.at(i);
            p.E_Cminus = ecm.at(j);
            std::array<double, 4> row{p.E_Jc, p.E_Cminus,
                                      std::numeric_limits<double>::quiet_NaN(),
                                      std::numeric_limits<double>::quiet_NaN()};
            try {
                const double djdphi = flux_sensitivity(p);
                const FluxPoint off = find_off_position(p, OffPositionMode::effective);
                const auto ep = effective_params(p, off);
                row[2] = std::abs(djdphi);
                row[3] = ep.chi_a * 1e3;
            } catch (const Error&) {
                // off position or dispersive expansion unavailable: leave NaN
            }
            return row;
        },
        cfg.workers);
    CsvWriter csv((dir / "sensitivity_map.csv").string());
    csv.header({"E_Jc", "E_Cminus", "dJdPhi_MHz_per_Phi0", "chi_a_MHz"});
    for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3]});
    write_manifest(dir, "sensitivity-map",
                   json::array({file_entry(
                       "sensitivity_map.csv",
                       "coupling-strength flux sensitivity and qubit-a Lamb shift over "
                       "coupler parameters; cells without an off position are NaN",
                       {"E_Jc", "E_Cminus", "dJdPhi_MHz_per_Phi0", "chi_a_MHz"})}));
    return 0;
}

int cmd_off_position(const RunConfig& cfg, const CircuitParams& params) {
    const FluxPoint eff = find_off_position(params, OffPositionMode::effective);
    std::printf("off position (coupling-zero): phi_c/2pi = %.5f\n", eff.phi_c / two_pi);
    const json sec = cfg.section("off_position");
    if (sec.value("exact", true)) {
        const FluxPoint ex = find_off_position(params, OffPositionMode::exact);
        std::printf("off position (11-energy-minimum): phi_c/2pi = %.5f\n", ex.phi_c / two_pi);
        std::printf("relative deviation: %.3f%%\n",
                    100.0 * std::abs(ex.phi_c - eff.phi_c) / std::abs(ex.phi_c));
    }
    std::printf("contour deltas at coupling zero: delta_phi_a/2pi = %.6f, "
                "delta_phi_b/2pi = %.6f\n",
                eff.delta_phi_a() / two_pi, eff.delta_phi_b() / two_pi);
    return 0;
}

int cmd_identity_scan(const RunConfig& cfg, const CircuitParams& params) {
    const json sec = cfg.section("identity_scan");
    Grid ratio = grid_from_json(sec.value("ratio", json()), {0.5, 7.0, 60});
    Grid flux = grid_from_json(sec.value("flux", json()), {0.0, 0.12, 60});
    ratio.validate("ratio");
    flux.validate("flux");
    const QubitId qubit = sec.value("qubit", std::string("b")) == "a" ? QubitId::a : QubitId::b;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const auto sys = single_fluxonium_system(params, qubit);
    const double wq = sys.omega_q();
    PropagationOptions opts;
    opts.rtol = sec.value("rtol", 1e-9);
    opts.atol = sec.value("atol", 1e-11);
    const int n = ratio.points * flux.points;
    const auto rows = parallel_map<std::array<double, 3>>(
        n,
        [&](int idx) {
            const int i = idx / flux.points, j = idx % flux.points;
            const double wd = ratio.at(i) * wq;
            const double dphi = flux.at(j) * two_pi;
            const double f = identity_fidelity(sys, dphi, wd, opts);
            return std::array<double, 3>{ratio.at(i), flux.at(j), f};
        },
        cfg.workers);
    CsvWriter csv((dir / "identity_scan.csv").string());
    csv.header({"omega_d_over_omega_q", "delta_phi_over_2pi", "fidelity"});
    for (const auto& r : rows) csv.row({r[0], r[1], r[2]});
    write_manifest(dir, "identity-scan",
                   json::array({file_entry(
                       "identity_scan.csv",
                       "single-period identity-pulse fidelity over drive frequency "
                       "(units of the qubit frequency) and flux amplitude",
                       {"omega_d_over_omega_q", "delta_phi_over_2pi", "fidelity"})}));
    return 0;
}

int cmd_bloch_traj(const RunConfig& cfg, const CircuitParams& params) {
    const json sec = cfg.section("bloch_traj");
    const QubitId qubit = sec.value("qubit", std::string("b")) == "a" ? QubitId::a : QubitId::b;
    std::vector<std::pair<double, int>> points = {{5.3, 1}, {3.3, 1}, {2.1, 2}};
    if (sec.contains("points")) {
        points.clear();
        for (const auto& jp : sec.at("points"))
            points.emplace_back(jp.at("ratio").get<double>(), jp.at("bessel_index").get<int>());
    }
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const auto sys = single_fluxonium_system(params, qubit);
    const double wq = sys.omega_q();
    json files = json::array();
    for (size_t ip = 0; ip < points.size(); ++ip) {
        const double wd = points[ip].first * wq;
        const int k = points[ip].second;
        const double dphi = (identity_amplitude(wd, k) / two_pi) / sys.drive_coeff();
        const double t_final = two_pi / wd;
        const int n_samples = sec.value("samples", 400);
        const int nlev = static_cast<int>(sys.energies.size());
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(nlev, 2);
        const Eigen::VectorXcd omega = (two_pi * sys.energies).cast<complexd>();
        const Eigen::MatrixXcd drive = sys.drive.cast<complexd>();
        auto rhs = [&](double t, Eigen::Map<const Eigen::MatrixXcd> x,
                       Eigen::Map<Eigen::MatrixXcd> dxdt) {
            dxdt = omega.asDiagonal() * x;
            dxdt.noalias() += (two_pi * dphi * std::sin(wd * t)) * (drive * x);
            dxdt *= complexd(0.0, -1.0);
        };
        const std::string name = "bloch_traj_" + std::to_string(ip) + ".csv";
        CsvWriter csv((dir / name).string());
        csv.header({"t_ns", "x_ground", "y_ground", "z_ground", "x_excited", "y_excited",
                    "z_excited"});
        auto bloch = [](const Eigen::Vector2cd& c) {
            return std::array<double, 3>{2.0 * (std::conj(c(0)) * c(1)).real(),
                                         2.0 * (std::conj(c(0)) * c(1)).imag(),
                                         std::norm(c(0)) - std::norm(c(1))};
        };
        for (int s = 0; s <= n_samples; ++s) {
            const double t0 = t_final * (s == 0 ? 0 : s - 1) / n_samples;
            const double t1 = t_final * s / n_samples;
            if (s > 0) integrate_complex_ode(rhs, u, t0, t1);
            const auto bg = bloch(u.col(0).head<2>());
            const auto be = bloch(u.col(1).head<2>());
            csv.row({t1, bg[0], bg[1], bg[2], be[0], be[1], be[2]});
        }
        files.push_back(file_entry(
            name,
            "lab-frame Bloch trajectories of both qubit states under an identity pulse at "
            "omega_d/omega_q = " + std::to_string(points[ip].first),
            {"t_ns", "x,y,z for ground start", "x,y,z for excited start"}));
    }
    write_manifest(dir, "bloch-traj", std::move(files));
    return 0;
}

int cmd_gate_design(const RunConfig& cfg, const CircuitParams& params, int n, int m,
                    bool calibrate, const std::string& out_file) {
    const json sec = cfg.section("gate");
    const ProductDims dims = dims_from_json(sec.value("dims", json()));
    const int n_states = sec.value("n_states", 54);
    auto op = build_operating_point(params, dims, n_states);
    SchedulerInput in{op.omega_a, op.omega_b, op.j_ac, op.omega_ac_a, op.omega_ac_b};
    GateSchedule sched = schedule_sqrt_iswap(in, n, m);
    if (calibrate) sched = calibrate_identity_pulses(sched, op.sys);
    json j = schedule_to_json(sched);
    j["operating_point"] = {{"phi_c_over_2pi", op.flux.phi_c / two_pi},
                            {"delta_phi_a_over_2pi", op.flux.delta_phi_a() / two_pi},
                            {"delta_phi_b_over_2pi", op.flux.delta_phi_b() / two_pi},
                            {"omega_a_prime_GHz", op.omega_a / two_pi},
                            {"omega_b_prime_GHz", op.omega_b / two_pi},
                            {"J_ac_GHz", op.j_ac}};
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const fs::path path = out_file.empty() ? dir / "gate_schedule.json" : fs::path(out_file);
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    std::printf("schedule written to %s (total %.2f ns, swap segment %.2f ns)\n",
                path.string().c_str(), sched.total_time_ns, sched.swap_segment_ns());
    return 0;
}

int cmd_gate_sim(const RunConfig& cfg, const CircuitParams& params,
                 const std::string& schedule_path, const std::string& open_mode, int n_states,
                 double tol) {
    std::ifstream in(schedule_path);
    if (!in) throw InvalidParameters("cannot open schedule file: " + schedule_path);
    json sj;
    in >> sj;
    const GateSchedule sched = schedule_from_json(sj);
    const json sec = cfg.section("gate");
    const ProductDims dims = dims_from_json(sec.value("dims", json()));
    auto op = build_operating_point(params, dims, n_states);
    if (sj.contains("operating_point")) {
        const double phic = sj["operating_point"].value("phi_c_over_2pi", 0.0) * two_pi;
        if (phic > 0.0 && std::abs(phic - op.flux.phi_c) > 1e-3)
            std::fprintf(stderr, "note: schedule was designed at phi_c/2pi = %.5f, device off "
                                 "position is %.5f\n",
                         phic / two_pi, op.flux.phi_c / two_pi);
    }

    PropagationOptions opts;
    opts.rtol = tol;
    opts.atol = tol * 1e-2;
    opts.record_dt_ns = sec.value("record_dt_ns", 0.25);
    const auto res = propagate_unitary(op.sys, sched.segments, opts);
    const Eigen::Matrix4cd u_proj = res.U.topRows(4);
    const double f_closed = closed_fidelity(u_proj, sqrt_iswap_matrix(), 4);

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    json report{{"F_closed", f_closed},
                {"leakage", res.comp_leakage},
                {"unitarity_defect", res.max_leakage},
                {"total_time_ns", sched.total_time_ns},
                {"n_states", n_states}};

    // population traces for the 00 and 01 initial states
    {
        CsvWriter csv((dir / "gate_populations.csv").string());
        csv.header({"t_ns", "P_00", "P_01", "P_10", "P_11", "P_leak", "initial"});
        for (int col : {0, 1}) {
            for (size_t s = 0; s < res.times.size(); ++s) {
                const auto& p = res.populations[s];
                csv.row({res.times[s], p(0, col), p(1, col), p(2, col), p(3, col), p(4, col),
                         double(col)});
            }
        }
        report["populations_csv"] = (dir / "gate_populations.csv").string();
    }

    if (open_mode != "none") {
        const DecoherenceRates rates = open_mode == "conservative"
                                           ? DecoherenceRates::conservative()
                                           : DecoherenceRates::optimistic();
        LindbladOptions lopts;
        lopts.unitary.rtol = tol;
        lopts.unitary.atol = tol * 1e-2;
        const auto chi = lindblad_tomography(op.sys, sched.segments, rates, lopts);
        const auto chi_t = chi_from_unitary(sqrt_iswap_matrix());
        report["F_open"] = open_fidelity(chi, chi_t, 4);
        report["open_mode"] = open_mode;
    }

    std::ofstream rep(dir / "gate_report.json");
    rep << report.dump(2) << "\n";
    std::printf("%s\n", report.dump(2).c_str());
    write_manifest(dir, "gate-sim",
                   json::array({file_entry("gate_populations.csv",
                                           "computational populations during the gate for the "
                                           "00 and 01 initial states",
                                           {"t_ns", "P_00", "P_01", "P_10", "P_11", "P_leak",
                                            "initial"}),
                                file_entry("gate_report.json", "fidelities and leakage", {})}));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"design and verification of flux-pulse gates on coupled fluxonium qubits"};
    app.require_subcommand(1);

    std::string config_path, device_path, output_dir;
    int workers = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--device", device_path, "device JSON (overrides config)");
    app.add_option("--out", output_dir, "output directory (overrides config)");
    app.add_option("--workers", workers, "worker count (default: FLUXGATE_WORKERS or cores)");

    auto* c_spectrum = app.add_subcommand("spectrum", "mode and coupled-system spectra");
    auto* c_sweep = app.add_subcommand("coupling-sweep", "coupling strength along the contour");
    auto* c_map = app.add_subcommand("sensitivity-map",
                                     "flux sensitivity and dispersiveness over coupler "
                                     "parameters");
    auto* c_off = app.add_subcommand("off-position", "locate the decoupling flux");
    auto* c_scan = app.add_subcommand("identity-scan", "identity-pulse fidelity grid");
    auto* c_bloch = app.add_subcommand("bloch-traj", "Bloch trajectories of identity pulses");
    auto* c_design = app.add_subcommand("gate-design", "build a sqrt(iSWAP) schedule");
    auto* c_sim = app.add_subcommand("gate-sim", "simulate a schedule on the full model");

    int n = 2, m = 8;
    bool no_calibrate = false;
    std::string design_out;
    c_design->add_option("--n", n, "drive periods of the swap segment");
    c_design->add_option("--m", m, "sum-frequency period count");
    c_design->add_flag("--no-calibrate", no_calibrate,
                       "keep analytic identity-pulse amplitudes");
    c_design->add_option("--out-file", design_out, "schedule output path");

    std::string schedule_path, open_mode = "none";
    int n_states = 54;
    double tol = 1e-10;
    c_sim->add_option("--schedule", schedule_path, "gate schedule JSON")->required();
    c_sim->add_option("--open", open_mode, "none|conservative|optimistic")
        ->check(CLI::IsMember({"none", "conservative", "optimistic"}));
    c_sim->add_option("--n-states", n_states, "retained levels");
    c_sim->add_option("--tol", tol, "integrator relative tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (!device_path.empty()) cfg.device_path = device_path;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (workers > 0) cfg.workers = workers;
        const auto [params, disorder] = load_device(cfg.device_path);
        (void)disorder;

        if (*c_spectrum) return cmd_spectrum(cfg, params);
        if (*c_sweep) return cmd_coupling_sweep(cfg, params);
        if (*c_map) return cmd_sensitivity_map(cfg, params);
        if (*c_off) return cmd_off_position(cfg, params);
        if (*c_scan) return cmd_identity_scan(cfg, params);
        if (*c_bloch) return cmd_bloch_traj(cfg, params);
        if (*c_design) return cmd_gate_design(cfg, params, n, m, !no_calibrate, design_out);
        if (*c_sim) return cmd_gate_sim(cfg, params, schedule_path, open_mode, n_states, tol);
    } catch (const InvalidParameters& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
