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

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "fluxgate/effective.hpp"
#include "fluxgate/integrate.hpp"
#include "fluxgate/pulses.hpp"

// Full time-domain verification: propagation of the driven system in the
// static eigenbasis, open-system evolution under relaxation and dephasing of
// the computational qubits, process tomography and both fidelity measures.

namespace fluxgate {

/// Retained-eigenbasis reduction of the full model: static energies plus the
/// three flux-drive operators, with bare labels for the retained levels.
struct GateSystem {
    Eigen::VectorXd energies;                // h*GHz, relative to ground
    std::array<Eigen::MatrixXd, 3> drives;   // h*GHz per radian of flux
    std::vector<long> labels;                // bare flat labels, -1 if unassigned
    std::vector<int> dims;                   // product dims decoding the labels

    int n() const { return static_cast<int>(energies.size()); }

    /// Retained level carrying the bare label (la, mb, nm, pp), or -1.
    int level_of(int la, int mb, int nm, int pp) const {
        const long flat =
            ((static_cast<long>(la) * dims[1] + mb) * dims[2] + nm) * dims[3] + pp;
        for (int k = 0; k < n(); ++k)
            if (labels[k] == flat) return k;
        return -1;
    }
};

/// Reduces a diagonalized full model to its lowest n_states levels. The
/// computational four occupy levels 0..3 in the (00,01,10,11) energy order.
inline GateSystem reduce_to_gate_system(const FullModel& fm, int n_states) {
    if (n_states < 4) throw InvalidParameters("at least the computational four must be retained");
    if (n_states > fm.eigensystem.levels())
        throw TruncationTooSmall("fewer levels diagonalized than requested for retention");
    GateSystem sys;
    sys.energies = fm.eigensystem.energies.head(n_states).array() - fm.eigensystem.energies(0);
    const Eigen::MatrixXd w = fm.eigensystem.states.leftCols(n_states);
    for (int l = 0; l < 3; ++l) sys.drives[l] = w.transpose() * fm.drives[l] * w;
    sys.labels.assign(fm.eigensystem.labels.begin(), fm.eigensystem.labels.begin() + n_states);
    sys.dims = fm.eigensystem.dims;
    for (int i = 0; i < 4; ++i)
        if (sys.labels[i] != fm.eigensystem.computational_flat_index(i / 2, i % 2))
            throw AmbiguousLabeling("computational states are not the four lowest levels");
    return sys;
}

struct PropagationOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double record_dt_ns = 0.0;  // > 0: sample populations on this grid
};

struct PropagationResult {
    Eigen::MatrixXcd U;             // propagator columns on the retained space
    double max_leakage = 0.0;       // out of the retained space is not observable;
                                    // this is 1 - (norm of each evolved column)
    double comp_leakage = 0.0;      // final population outside the computational four
    bool truncation_warning = false;
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> populations;  // per sample: 5 x k rows P00..P11, Pleak
};

namespace detail {

inline Eigen::MatrixXd population_sample(const Eigen::MatrixXcd& u) {
    const int k = static_cast<int>(u.cols());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(5, k);
    for (int j = 0; j < k; ++j) {
        double comp = 0.0;
        for (int c = 0; c < 4 && c < u.rows(); ++c) {
            const double pc = std::norm(u(c, j));
            p(c, j) = pc;
            comp += pc;
        }
        p(4, j) = std::max(0.0, 1.0 - comp);
    }
    return p;
}

}  // namespace detail

/// Propagates columns of the Schroedinger equation for the driven system,
/// i dU/dt = 2 pi [diag(E) + sum_l phi_l(t) h_l] U, segment by segment. The
/// initial condition defaults to the computational four basis columns.
inline PropagationResult propagate_unitary(const GateSystem& sys,
                                           const std::vector<Segment>& segments,
                                           const PropagationOptions& opts = {},
                                           std::optional<Eigen::MatrixXcd> initial = {}) {
    const int n = sys.n();
    Eigen::MatrixXcd u = initial ? std::move(*initial)
                                 : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(n, 4));
    PropagationResult out;
    const Eigen::VectorXcd omega = (two_pi * sys.energies).cast<complexd>();  // rad/ns
    double t_global = 0.0;
    if (opts.record_dt_ns > 0.0) {
        out.times.push_back(0.0);
        out.populations.push_back(detail::population_sample(u));
    }
    auto record = [&](const Eigen::MatrixXcd& state, double t) {
        out.times.push_back(t);
        out.populations.push_back(detail::population_sample(state));
    };
    for (const auto& seg : segments) {
        Eigen::MatrixXcd hop;
        double amp = 0.0, wd = 0.0;
        if (seg.pulse) {
            hop = sys.drives[static_cast<int>(seg.pulse->line)].cast<complexd>();
            amp = seg.pulse->flux_amplitude;
            wd = seg.pulse->omega_d;
        }
        auto rhs = [&](double t, Eigen::Map<const Eigen::MatrixXcd> x,
                       Eigen::Map<Eigen::MatrixXcd> dxdt) {
            dxdt = omega.asDiagonal() * x;
            if (hop.size() > 0) {
                const double f = amp * std::sin(wd * t);
                dxdt.noalias() += (two_pi * f) * (hop * x);
            }
            dxdt *= complexd(0.0, -1.0);
        };
        if (opts.record_dt_ns > 0.0) {
            double t_local = 0.0;
            while (t_local < seg.duration_ns - 1e-12) {
                const double t_next = std::min(t_local + opts.record_dt_ns, seg.duration_ns);
                integrate_complex_ode(rhs, u, t_local, t_next, opts.rtol, opts.atol);
                t_local = t_next;
                record(u, t_global + t_local);
            }
        } else {
            integrate_complex_ode(rhs, u, 0.0, seg.duration_ns, opts.rtol, opts.atol);
        }
        t_global += seg.duration_ns;
    }
    for (int j = 0; j < u.cols(); ++j)
        out.max_leakage = std::max(out.max_leakage, std::abs(1.0 - u.col(j).squaredNorm()));
    if (u.rows() >= 4 && u.cols() >= 1) {
        double comp = 0.0;
        for (int j = 0; j < u.cols(); ++j) comp += u.col(j).head(4).squaredNorm();
        out.comp_leakage = std::max(0.0, 1.0 - comp / u.cols());
    }
    out.truncation_warning = out.max_leakage > 1e-4;
    out.U = std::move(u);
    return out;
}

/// Closed-system gate fidelity of the projected propagator against a target
/// unitary; leakage is penalized through the trace of U^dag U.
inline double closed_fidelity(const Eigen::MatrixXcd& u_proj, const Eigen::MatrixXcd& u_target,
                              int d) {
    if (u_proj.rows() != d || u_proj.cols() != d || u_target.rows() != d ||
        u_target.cols() != d)
        throw BasisIncompatible("fidelity arguments must be d x d");
    const double t1 = (u_proj.adjoint() * u_proj).trace().real();
    const complexd t2 = (u_target.adjoint() * u_proj).trace();
    return (t1 + std::norm(t2)) / (d * (d + 1.0));
}

/// Relaxation and pure-dephasing rates of the two qubits, in 1/us.
struct DecoherenceRates {
    double gamma1_a = 0, gamma1_b = 0;
    double gammaphi_a = 0, gammaphi_b = 0;

    void validate() const {
        for (double g : {gamma1_a, gamma1_b, gammaphi_a, gammaphi_b})
            if (g < 0.0) throw InvalidParameters("decoherence rates must be non-negative");
    }
    static DecoherenceRates conservative() {
        return {1.0 / 300.0, 1.0 / 300.0, 1.0 / 80.0, 1.0 / 80.0};
    }
    static DecoherenceRates optimistic() {
        return {1.0 / 1000.0, 1.0 / 1000.0, 1.0 / 4000.0, 1.0 / 4000.0};
    }
    bool is_zero() const {
        return gamma1_a == 0 && gamma1_b == 0 && gammaphi_a == 0 && gammaphi_b == 0;
    }
};

namespace detail {

/// Exact exponential of the dissipator over a time slice, acting on density
/// matrices of the retained space. Jump operators live in the computational
/// block, so the action splits into a 16x16 block map, a row/column damping
/// of the block-to-rest coherences, and identity elsewhere.
struct DissipatorExp {
    Eigen::Matrix<complexd, 16, 16> block;  // acts on vec of the 4x4 block
    Eigen::Vector4d row_damp;               // exp(-K tau / 2) per computational row

    static DissipatorExp build(const DecoherenceRates& rates_per_us, double tau_ns) {
        const double g1a = rates_per_us.gamma1_a * 1e-3;  // 1/ns
        const double g1b = rates_per_us.gamma1_b * 1e-3;
        const double gpa = rates_per_us.gammaphi_a * 1e-3;
        const double gpb = rates_per_us.gammaphi_b * 1e-3;
        // jump operators on the (00,01,10,11) block
        Eigen::Matrix4cd lower_a = Eigen::Matrix4cd::Zero();  // |0m><1m|
        lower_a(0, 2) = 1.0;
        lower_a(1, 3) = 1.0;
        Eigen::Matrix4cd lower_b = Eigen::Matrix4cd::Zero();  // |l0><l1|
        lower_b(0, 1) = 1.0;
        lower_b(2, 3) = 1.0;
        Eigen::Matrix4cd z_a = Eigen::Matrix4cd::Zero();
        z_a.diagonal() << 1, 1, -1, -1;
        Eigen::Matrix4cd z_b = Eigen::Matrix4cd::Zero();
        z_b.diagonal() << 1, -1, 1, -1;

        Eigen::Matrix<complexd, 16, 16> gen = Eigen::Matrix<complexd, 16, 16>::Zero();
        auto add = [&gen](double rate, const Eigen::Matrix4cd& l) {
            const Eigen::Matrix4cd ll = l.adjoint() * l;
            const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();
            Eigen::Matrix<complexd, 16, 16> term;
            auto kron4 = [](const Eigen::Matrix4cd& a, const Eigen::Matrix4cd& b) {
                Eigen::Matrix<complexd, 16, 16> k;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) k.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
                return k;
            };
            term = kron4(l.conjugate(), l) - 0.5 * kron4(id, ll) -
                   0.5 * kron4(ll.transpose(), id);
            gen += rate * term;
        };
        add(g1a, lower_a);
        add(g1b, lower_b);
        add(gpa, z_a);
        add(gpb, z_b);

        DissipatorExp out;
        out.block = (gen * tau_ns).exp();
        const double k00 = gpa + gpb, k01 = gpa + gpb + g1b;
        const double k10 = gpa + gpb + g1a, k11 = gpa + gpb + g1a + g1b;
        out.row_damp << std::exp(-0.5 * k00 * tau_ns), std::exp(-0.5 * k01 * tau_ns),
            std::exp(-0.5 * k10 * tau_ns), std::exp(-0.5 * k11 * tau_ns);
        return out;
    }

    void apply(Eigen::MatrixXcd& rho) const {
        const long n = rho.rows();
        Eigen::Vector<complexd, 16> v;
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) v(4 * j + i) = rho(i, j);
        v = block * v;
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) rho(i, j) = v(4 * j + i);
        if (n > 4) {
            for (int i = 0; i < 4; ++i) {
                rho.row(i).tail(n - 4) *= row_damp(i);
                rho.col(i).tail(n - 4) *= row_damp(i);
            }
        }
    }
};

}  // namespace detail

struct LindbladOptions {
    double split_dt_ns = 0.25;  // dissipator splitting window
    PropagationOptions unitary{};
};

/// Evolves density matrices through the driven system with relaxation and
/// dephasing acting on the dressed computational qubits. Strang splitting:
/// exact dissipator half-steps around the adaptively integrated coherent
/// propagator of each window, so every step is a completely positive map.
inline std::vector<Eigen::MatrixXcd> propagate_lindblad(
    const GateSystem& sys, const std::vector<Segment>& segments, const DecoherenceRates& rates,
    std::vector<Eigen::MatrixXcd> rhos, const LindbladOptions& opts = {}) {
    rates.validate();
    const int n = sys.n();
    for (const auto& r : rhos)
        if (r.rows() != n || r.cols() != n)
            throw BasisIncompatible("density matrices must live on the retained space");
    const Eigen::VectorXcd omega = (two_pi * sys.energies).cast<complexd>();
    for (const auto& seg : segments) {
        Eigen::MatrixXcd hop;
        double amp = 0.0, wd = 0.0;
        if (seg.pulse) {
            hop = sys.drives[static_cast<int>(seg.pulse->line)].cast<complexd>();
            amp = seg.pulse->flux_amplitude;
            wd = seg.pulse->omega_d;
        }
        auto rhs = [&](double t, Eigen::Map<const Eigen::MatrixXcd> x,
                       Eigen::Map<Eigen::MatrixXcd> dxdt) {
            dxdt = omega.asDiagonal() * x;
            if (hop.size() > 0) {
                const double f = amp * std::sin(wd * t);
                dxdt.noalias() += (two_pi * f) * (hop * x);
            }
            dxdt *= complexd(0.0, -1.0);
        };
        const int n_windows =
            std::max(1, static_cast<int>(std::ceil(seg.duration_ns / opts.split_dt_ns)));
        const double tau = seg.duration_ns / n_windows;
        const auto dis = detail::DissipatorExp::build(rates, 0.5 * tau);
        for (int w = 0; w < n_windows; ++w) {
            Eigen::MatrixXcd u_win = Eigen::MatrixXcd::Identity(n, n);
            integrate_complex_ode(rhs, u_win, w * tau, (w + 1) * tau, opts.unitary.rtol,
                                  opts.unitary.atol);
            for (auto& rho : rhos) {
                if (!rates.is_zero()) dis.apply(rho);
                rho = u_win * rho * u_win.adjoint();
                if (!rates.is_zero()) dis.apply(rho);
            }
        }
    }
    return rhos;
}

inline Eigen::MatrixXcd propagate_lindblad(const GateSystem& sys,
                                           const std::vector<Segment>& segments,
                                           const DecoherenceRates& rates,
                                           const Eigen::MatrixXcd& rho0,
                                           const LindbladOptions& opts = {}) {
    std::vector<Eigen::MatrixXcd> rhos{rho0};
    return propagate_lindblad(sys, segments, rates, std::move(rhos), opts)[0];
}

/// Process matrix in the two-qubit Pauli basis.
struct ProcessMatrix {
    Eigen::MatrixXcd chi;  // d^2 x d^2
    int d = 4;

    double trace() const { return chi.trace().real(); }
};

namespace detail {

/// The sixteen per-qubit product tomography inputs {0, 1, +, +i} x {...},
/// followed by one held-out probe state used for the linearity check.
inline std::array<Eigen::Matrix4cd, 17> tomography_inputs() {
    std::array<Eigen::Vector2cd, 4> kets;
    kets[0] << 1, 0;
    kets[1] << 0, 1;
    kets[2] << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    kets[3] << 1.0 / std::sqrt(2.0), complexd(0.0, 1.0 / std::sqrt(2.0));
    std::array<Eigen::Matrix4cd, 17> inputs;
    int col = 0;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q, ++col) {
            Eigen::Vector4cd ket;
            ket << kets[p](0) * kets[q](0), kets[p](0) * kets[q](1), kets[p](1) * kets[q](0),
                kets[p](1) * kets[q](1);
            inputs[col] = ket * ket.adjoint();
        }
    Eigen::Vector4cd probe;
    probe << 0.5, 0.5, 0.5, 0.5;
    inputs[16] = probe * probe.adjoint();
    return inputs;
}

/// chi reconstruction from the channel outputs on the tomography inputs.
inline ProcessMatrix chi_from_outputs(const std::array<Eigen::Matrix4cd, 17>& inputs,
                                      const std::array<Eigen::Matrix4cd, 17>& outputs) {
    Eigen::Matrix<complexd, 16, 16> basis_vecs, out_vecs;
    for (int col = 0; col < 16; ++col) {
        basis_vecs.col(col) =
            Eigen::Map<const Eigen::Vector<complexd, 16>>(inputs[col].data());
        out_vecs.col(col) =
            Eigen::Map<const Eigen::Vector<complexd, 16>>(outputs[col].data());
    }
    const Eigen::Matrix<complexd, 16, 16> superop =
        out_vecs * basis_vecs.fullPivLu().inverse();

    const Eigen::Vector<complexd, 16> predicted_vec =
        superop * Eigen::Map<const Eigen::Vector<complexd, 16>>(inputs[16].data());
    const Eigen::Matrix4cd predicted = Eigen::Map<const Eigen::Matrix4cd>(predicted_vec.data());
    if ((outputs[16] - predicted).norm() > 1e-8)
        throw NotAChannel("channel output is not a linear function of the input state");

    // chi_mn from S = sum_mn chi_mn (P_n^T kron P_m).
    ProcessMatrix pm;
    pm.d = 4;
    pm.chi.resize(16, 16);
    const auto& paulis = pauli_basis_2q();
    for (int mm = 0; mm < 16; ++mm)
        for (int nn = 0; nn < 16; ++nn) {
            Eigen::Matrix<complexd, 16, 16> bmn;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    bmn.block<4, 4>(4 * i, 4 * j) = paulis[nn].transpose()(i, j) * paulis[mm];
            pm.chi(mm, nn) = (bmn.adjoint() * superop).trace() / 16.0;
        }
    return pm;
}

}  // namespace detail

/// Reconstructs the process matrix of a linear map on the computational
/// subspace from the sixteen per-qubit product inputs {0, 1, +, +i}x{...}.
/// A held-out superposition input guards against nonlinear maps.
inline ProcessMatrix process_tomography(
    const std::function<Eigen::Matrix4cd(const Eigen::Matrix4cd&)>& channel, int d = 4) {
    if (d != 4) throw InvalidParameters("tomography is implemented for the two-qubit subspace");
    const auto inputs = detail::tomography_inputs();
    std::array<Eigen::Matrix4cd, 17> outputs;
    for (int k = 0; k < 17; ++k) outputs[k] = channel(inputs[k]);
    return detail::chi_from_outputs(inputs, outputs);
}

/// Open-system process tomography of a gate schedule: all tomography inputs
/// ride through one batched evolution, then the populations outside the
/// computational subspace are projected away (the channel becomes trace
/// decreasing, which the fidelity formula accounts for).
inline ProcessMatrix lindblad_tomography(const GateSystem& sys,
                                         const std::vector<Segment>& segments,
                                         const DecoherenceRates& rates,
                                         const LindbladOptions& opts = {}) {
    const auto inputs = detail::tomography_inputs();
    const int n = sys.n();
    std::vector<Eigen::MatrixXcd> rhos;
    rhos.reserve(17);
    for (const auto& in : inputs) {
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
        rho.topLeftCorner(4, 4) = in;
        rhos.push_back(std::move(rho));
    }
    rhos = propagate_lindblad(sys, segments, rates, std::move(rhos), opts);
    std::array<Eigen::Matrix4cd, 17> outputs;
    for (int k = 0; k < 17; ++k) outputs[k] = rhos[k].topLeftCorner(4, 4);
    return detail::chi_from_outputs(inputs, outputs);
}

/// Process matrix of the ideal unitary channel rho -> U rho U^dag.
inline ProcessMatrix chi_from_unitary(const Eigen::Matrix4cd& u) {
    const auto& paulis = pauli_basis_2q();
    Eigen::Vector<complexd, 16> c;
    for (int k = 0; k < 16; ++k) c(k) = (paulis[k].adjoint() * u).trace() / 4.0;
    ProcessMatrix pm;
    pm.d = 4;
    pm.chi = c * c.adjoint();
    return pm;
}

/// Open-system gate fidelity from process matrices; trace-decreasing inputs
/// (projection losses) are penalized through Tr(chi).
inline double open_fidelity(const ProcessMatrix& chi, const ProcessMatrix& chi_target, int d) {
    if (chi.d != d || chi_target.d != d)
        throw BasisIncompatible("process matrices must share the subspace dimension");
    const double overlap = (chi_target.chi * chi.chi).trace().real();
    return (d * overlap + chi.trace()) / (d + 1.0);
}

struct TransitionEstimate {
    double probability = 0.0;       // full second-order estimate
    double direct = 0.0;            // first-order (direct) term alone
    std::vector<std::string> warnings;  // near-resonant denominators
};

/// Perturbative estimate of the population transferred between computational
/// states |i> = (la, mb) and |f> by the coupler drive after n periods, with
/// second-order paths through the given virtual levels. The default virtual
/// set is the four states with one difference-mode excitation.
inline TransitionEstimate unwanted_transition(const GateSystem& sys, std::pair<int, int> i_lm,
                                              std::pair<int, int> f_lm, const PulseSpec& pulse,
                                              std::vector<int> virtual_levels = {}) {
    if (i_lm == f_lm) throw InvalidParameters("initial and final states must differ");
    const int ki = 2 * i_lm.first + i_lm.second;
    const int kf = 2 * f_lm.first + f_lm.second;
    if (virtual_levels.empty()) {
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m) {
                const int v = sys.level_of(l, m, 1, 0);
                if (v >= 0) virtual_levels.push_back(v);
            }
    }
    const Eigen::MatrixXd& hc = sys.drives[2];
    const double wd = pulse.omega_d;
    const double dphi = pulse.flux_amplitude;
    const int n = pulse.n_periods;
    const complexd i1(0.0, 1.0);
    TransitionEstimate out;
    auto energy = [&](int k) { return two_pi * sys.energies(k); };
    auto osc = [&](double efi) { return 1.0 - std::exp(i1 * (two_pi * n * efi / wd)); };
    auto check = [&](double den, const std::string& what) {
        if (std::abs(den) < 1e-4 * wd * wd)
            out.warnings.push_back("near-resonant denominator: " + what);
    };

    const double efi = energy(kf) - energy(ki);
    const double den_fi = efi * efi - wd * wd;
    check(den_fi, "direct transition");
    const complexd direct =
        i1 * (two_pi * hc(kf, ki) * dphi) * wd * osc(efi) / den_fi;
    complexd amp = direct;
    const double den_f4 = efi * (efi * efi - 4.0 * wd * wd);
    if (std::abs(efi) < 1e-6 * wd) out.warnings.push_back("degenerate initial and final energy");
    check(efi * efi - 4.0 * wd * wd, "two-photon direct");
    for (int v : virtual_levels) {
        const double evi = energy(v) - energy(ki);
        const double efv = energy(kf) - energy(v);
        const double den_vi = evi * evi - wd * wd;
        const double den_fv = efv * efv - wd * wd;
        check(den_vi, "virtual level " + std::to_string(v));
        check(den_fv, "virtual level " + std::to_string(v));
        const double mel = two_pi * hc(kf, v) * dphi * two_pi * hc(v, ki) * dphi;
        amp += wd * wd * mel / den_vi *
               ((2.0 * evi + efi) * osc(efi) / den_f4 - osc(efv) / den_fv);
    }
    out.probability = std::norm(amp);
    out.direct = std::norm(direct);
    return out;
}

/// Replaces the flux amplitude of every single-qubit identity pulse by the
/// numerically optimal value at fixed frequency and duration, judged by the
/// segment fidelity against its ideal action (identity on the pulsed qubit,
/// free phase accumulation on the other). The optimum sits within a few
/// percent of the averaged-propagator amplitude.
inline GateSchedule calibrate_identity_pulses(GateSchedule sched, const GateSystem& sys,
                                              double window = 0.10, int bits = 18) {
    const double wa = two_pi * sys.energies(2);
    const double wb = two_pi * sys.energies(1);
    for (auto& seg : sched.segments) {
        if (!seg.pulse || seg.pulse->line == FluxLine::c) continue;
        const double tha = seg.pulse->line == FluxLine::a ? 0.0 : wa * seg.duration_ns;
        const double thb = seg.pulse->line == FluxLine::b ? 0.0 : wb * seg.duration_ns;
        const Eigen::Matrix4cd ideal = rz_pair(-tha, -thb);
        auto neg = [&](double scale) {
            Segment trial = seg;
            trial.pulse->flux_amplitude *= scale;
            const auto res = propagate_unitary(sys, {trial});
            return -closed_fidelity(res.U.topRows(4), ideal, 4);
        };
        const auto [scale, negf] =
            boost::math::tools::brent_find_minima(neg, 1.0 - window, 1.0 + window, bits);
        (void)negf;
        seg.pulse->flux_amplitude *= scale;
        seg.pulse->amplitude *= scale;
    }
    return sched;
}

/// Single driven fluxonium in its own eigenbasis, for the identity-gate
/// studies: H(t)/h = diag(E) + E_L phi delta_phi sin(w_d t).
struct QubitSystem {
    Eigen::VectorXd energies;  // h*GHz, relative to ground
    Eigen::MatrixXd drive;     // E_L * phi matrix elements (h*GHz per radian)
    double omega_q() const { return two_pi * (energies(1) - energies(0)); }
    double drive_coeff() const { return drive(0, 1); }  // A = coeff * dphi (h*GHz)
};

inline QubitSystem single_fluxonium_system(const CircuitParams& params, QubitId which,
                                           int n_levels = 8, int basis_size = 110) {
    const auto mode = build_fluxonium(params, which, 0.0, basis_size);
    const auto sol = eigh_full(Eigen::MatrixXd(mode.hamiltonian.matrix.real()));
    Eigen::MatrixXd vecs = sol.vectors.leftCols(n_levels);
    detail::fix_mode_gauge(vecs, mode.phase.matrix.real());
    QubitSystem sys;
    sys.energies = sol.values.head(n_levels).array() - sol.values(0);
    sys.drive = params.E_L * (vecs.transpose() * mode.phase.matrix.real() * vecs);
    return sys;
}

/// Propagator of a single-period sinusoidal flux pulse on one fluxonium,
/// columns spanning the qubit subspace.
inline PropagationResult propagate_single_fluxonium(const QubitSystem& sys, double delta_phi,
                                                    double omega_d, int n_periods = 1,
                                                    const PropagationOptions& opts = {}) {
    const int n = static_cast<int>(sys.energies.size());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, 2);
    const Eigen::VectorXcd omega = (two_pi * sys.energies).cast<complexd>();
    const Eigen::MatrixXcd drive = sys.drive.cast<complexd>();
    auto rhs = [&](double t, Eigen::Map<const Eigen::MatrixXcd> x,
                   Eigen::Map<Eigen::MatrixXcd> dxdt) {
        const double f = delta_phi * std::sin(omega_d * t);
        dxdt = omega.asDiagonal() * x;
        dxdt.noalias() += (two_pi * f) * (drive * x);
        dxdt *= complexd(0.0, -1.0);
    };
    PropagationResult out;
    const double t_final = two_pi * n_periods / omega_d;
    if (opts.record_dt_ns > 0.0) {
        double t = 0.0;
        out.times.push_back(0.0);
        out.populations.push_back(detail::population_sample(u));
        while (t < t_final - 1e-12) {
            const double t_next = std::min(t + opts.record_dt_ns, t_final);
            integrate_complex_ode(rhs, u, t, t_next, opts.rtol, opts.atol);
            t = t_next;
            out.times.push_back(t);
            out.populations.push_back(detail::population_sample(u));
        }
    } else {
        integrate_complex_ode(rhs, u, 0.0, t_final, opts.rtol, opts.atol);
    }
    for (int j = 0; j < 2; ++j)
        out.max_leakage = std::max(out.max_leakage, std::abs(1.0 - u.col(j).squaredNorm()));
    out.truncation_warning = out.max_leakage > 1e-4;
    out.U = std::move(u);
    return out;
}

/// Identity fidelity of a single-period flux pulse on the qubit subspace.
inline double identity_fidelity(const QubitSystem& sys, double delta_phi, double omega_d,
                                const PropagationOptions& opts = {}) {
    const auto res = propagate_single_fluxonium(sys, delta_phi, omega_d, 1, opts);
    return closed_fidelity(res.U.topRows(2), Eigen::Matrix2cd::Identity(), 2);
}

}  // namespace fluxgate
