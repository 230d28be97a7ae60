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
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <functional>
#include <vector>

#include "fluxgate/circuit.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/spectrum.hpp"

// Second-order effective description of the coupled circuit: the coupler
// modes are eliminated perturbatively, leaving two qubits with dressed
// frequencies, a flux-tunable XX coupling J = J_- - J_+, residual X drives
// Omega_mu and Lamb shifts chi_mu. All energies in h*GHz.

namespace fluxgate {

struct SwCutoffs {
    int qubit_levels = 6;              // retain qubit states j' <= 5
    int minus_levels = 7;              // retain difference-mode states n <= 6
    double denominator_guard = 0.05;   // h*GHz floor for virtual-energy denominators
};

/// First-order transformation data: couplings, small parameters, and energy
/// denominators, indexed by qubit (mu), qubit levels (j, j') and coupler
/// level n. Entries excluded by the primed-sum rule (n = 0 with j' < 2,
/// i.e. virtual states inside the computational subspace) are stored as zero.
struct SWCoefficients {
    int jq = 0;  // qubit levels retained
    int nc = 0;  // difference-mode levels retained
    double E_L = 0, E_Lc = 0, ell_osc = 0, omega_plus = 0;

    std::array<std::vector<Eigen::MatrixXd>, 2> g;      // g[mu][n](j,j')
    std::array<Eigen::MatrixXd, 2> G;                   // G[mu](j,j')
    std::array<std::vector<Eigen::MatrixXd>, 2> eps1;   // eps1[mu][n](j,j')
    std::array<Eigen::MatrixXd, 2> eta1;                // eta1[mu](j,j')
    std::array<std::vector<Eigen::MatrixXd>, 2> delta;  // E_n0^- - E_jj'^mu
    std::array<Eigen::MatrixXd, 2> Delta;               // omega_+ - E_jj'^mu

    // Second-order two-qubit small parameters eps2_two[n](4*(2j+j') + (2k+k'))
    // for computational indices, and single-qubit eps2[mu][n](j in {0,1}, j').
    std::vector<Eigen::MatrixXd> eps2_two;
    std::array<std::vector<Eigen::MatrixXd>, 2> eps2;

    Eigen::MatrixXd theta;                    // <n|theta_-|n'>
    Eigen::VectorXd e_minus;                  // difference-mode energies
    std::array<Eigen::VectorXd, 2> e_qubit;   // qubit energies

    double max_eps1 = 0, max_eta1 = 0;
    bool dispersive_flag = true;  // |eps1|, |eta1| < 0.5 on computational rows

    double theta_00() const { return theta(0, 0); }
    bool prime_allowed(int jp, int n) const { return n >= 1 || jp >= 2; }
    double qubit_gap(int mu, int j, int jp) const {
        return e_qubit[mu](j) - e_qubit[mu](jp);
    }
    double minus_gap(int n) const { return e_minus(n) - e_minus(0); }
};

/// First-order generator data for both qubits at the mode set's coupler flux.
inline SWCoefficients sw_first_order(const BareModes& modes, const SwCutoffs& cut = {}) {
    SWCoefficients sw;
    sw.jq = std::min({cut.qubit_levels, modes.a.levels(), modes.b.levels()});
    sw.nc = std::min(cut.minus_levels, modes.minus.levels());
    if (sw.jq < 2 || sw.nc < 2)
        throw TruncationTooSmall("perturbative cutoffs require at least two levels per mode");
    sw.E_L = modes.params.E_L;
    sw.E_Lc = modes.params.E_Lc();
    sw.ell_osc = modes.ell_osc();
    sw.omega_plus = modes.omega_plus();
    sw.theta = modes.minus.phase.topLeftCorner(sw.nc, sw.nc);
    sw.e_minus = modes.minus.energies.head(sw.nc);
    sw.e_qubit[0] = modes.a.energies.head(sw.jq);
    sw.e_qubit[1] = modes.b.energies.head(sw.jq);

    const double gplus = 0.5 * sw.E_L * std::pow(2.0 * modes.params.E_Cplus / sw.E_Lc, 0.25);
    for (int mu = 0; mu < 2; ++mu) {
        const auto& qm = mu == 0 ? modes.a : modes.b;
        const Eigen::MatrixXd phi = qm.phase.topLeftCorner(sw.jq, sw.jq);
        sw.G[mu] = gplus * phi;
        sw.Delta[mu].resize(sw.jq, sw.jq);
        sw.eta1[mu].resize(sw.jq, sw.jq);
        sw.g[mu].resize(sw.nc);
        sw.eps1[mu].resize(sw.nc);
        sw.delta[mu].resize(sw.nc);
        for (int j = 0; j < sw.jq; ++j)
            for (int jp = 0; jp < sw.jq; ++jp) {
                const double ejj = sw.qubit_gap(mu, j, jp);
                sw.Delta[mu](j, jp) = sw.omega_plus - ejj;
                const double den = ejj - sw.omega_plus;
                if (j < 2 && std::abs(den) < cut.denominator_guard)
                    throw NonDispersive("sum-mode denominator under guard");
                sw.eta1[mu](j, jp) = sw.G[mu](j, jp) / den;
            }
        for (int n = 0; n < sw.nc; ++n) {
            sw.g[mu][n] = 0.5 * sw.E_L * sw.theta(0, n) * phi;
            sw.delta[mu][n].resize(sw.jq, sw.jq);
            sw.eps1[mu][n] = Eigen::MatrixXd::Zero(sw.jq, sw.jq);
            for (int j = 0; j < sw.jq; ++j)
                for (int jp = 0; jp < sw.jq; ++jp) {
                    const double ejj = sw.qubit_gap(mu, j, jp);
                    sw.delta[mu][n](j, jp) = sw.minus_gap(n) - ejj;
                    if (!sw.prime_allowed(jp, n)) continue;
                    const double den = ejj - sw.minus_gap(n);
                    if (j < 2 && std::abs(den) < cut.denominator_guard)
                        throw NonDispersive("difference-mode denominator under guard at n=" +
                                            std::to_string(n));
                    sw.eps1[mu][n](j, jp) = sw.g[mu][n](j, jp) / den;
                }
        }
        for (int j = 0; j < 2; ++j)
            for (int jp = 0; jp < sw.jq; ++jp) {
                sw.max_eta1 = std::max(sw.max_eta1, std::abs(sw.eta1[mu](j, jp)));
                for (int n = 0; n < sw.nc; ++n)
                    sw.max_eps1 = std::max(sw.max_eps1, std::abs(sw.eps1[mu][n](j, jp)));
            }
    }
    sw.dispersive_flag = sw.max_eps1 < 0.5 && sw.max_eta1 < 0.5;

    // Second-order small parameters. The two-qubit ones symmetrize over which
    // qubit transition acts first; intermediate states inside the
    // computational subspace are excluded from the primed sums.
    auto g_gen = [&](int mu, int j, int jp, int np, int n) {
        const auto& qm = mu == 0 ? modes.a : modes.b;
        return 0.5 * sw.E_L * sw.theta(np, n) * qm.phase(j, jp);
    };
    sw.eps2_two.assign(sw.nc, Eigen::MatrixXd::Zero(4, 4));
    for (int n = 1; n < sw.nc; ++n)
        for (int j = 0; j < 2; ++j)
            for (int jp = 0; jp < 2; ++jp)
                for (int k = 0; k < 2; ++k)
                    for (int kp = 0; kp < 2; ++kp) {
                        const double ea = sw.qubit_gap(0, j, jp);
                        const double eb = sw.qubit_gap(1, k, kp);
                        double val = 0.0;
                        // first vertex on qubit a, second on qubit b
                        val += sw.g[0][0](j, jp) * sw.g[1][n](k, kp) /
                               ((ea + eb - sw.minus_gap(n)) * (eb - sw.minus_gap(n)));
                        // first vertex on qubit b, second on qubit a
                        val += sw.g[1][0](k, kp) * sw.g[0][n](j, jp) /
                               ((eb + ea - sw.minus_gap(n)) * (ea - sw.minus_gap(n)));
                        for (int np = 1; np < sw.nc; ++np) {
                            val -= g_gen(0, j, jp, 0, np) * g_gen(1, k, kp, np, n) /
                                   ((ea - sw.minus_gap(np)) * (ea + eb - sw.minus_gap(n)));
                            val -= g_gen(1, k, kp, 0, np) * g_gen(0, j, jp, np, n) /
                                   ((eb - sw.minus_gap(np)) * (eb + ea - sw.minus_gap(n)));
                        }
                        sw.eps2_two[n](2 * j + jp, 2 * k + kp) = val;
                    }
    for (int mu = 0; mu < 2; ++mu) {
        sw.eps2[mu].assign(sw.nc, Eigen::MatrixXd::Zero(2, sw.jq));
        for (int n = 0; n < sw.nc; ++n)
            for (int j = 0; j < 2; ++j)
                for (int jp = 0; jp < sw.jq; ++jp) {
                    if (!sw.prime_allowed(jp, n)) continue;
                    const double ejj = sw.qubit_gap(mu, j, jp);
                    double val = 0.0;
                    for (int jpp = 0; jpp < 2; ++jpp)
                        val -= g_gen(mu, j, jpp, 0, 0) * g_gen(mu, jpp, jp, 0, n) /
                               ((ejj - sw.minus_gap(n)) *
                                (sw.qubit_gap(mu, jpp, jp) - sw.minus_gap(n)));
                    for (int jpp = 0; jpp < sw.jq; ++jpp)
                        for (int np = 0; np < sw.nc; ++np) {
                            if (!sw.prime_allowed(jpp, np)) continue;
                            val += g_gen(mu, j, jpp, 0, np) * g_gen(mu, jpp, jp, np, n) /
                                   ((sw.qubit_gap(mu, j, jpp) - sw.minus_gap(np)) *
                                    (ejj - sw.minus_gap(n)));
                        }
                    sw.eps2[mu][n](j, jp) = val;
                }
    }
    return sw;
}

/// Residual single-qubit X coefficients Omega_mu, in h*GHz.
inline std::pair<double, double> omega_coeff(const BareModes& modes, const FluxPoint& flux) {
    const double theta00 = modes.minus.phase(0, 0);
    const double oa =
        modes.params.E_L * modes.a.phase_01() * (flux.delta_phi_a() + 0.5 * theta00);
    const double ob =
        modes.params.E_L * modes.b.phase_01() * (flux.delta_phi_b() - 0.5 * theta00);
    return {oa, ob};
}

/// Qubit-flux deviations that hold both qubits on their sweet spots at the
/// mode set's coupler flux: equal magnitude, opposite sign.
inline std::pair<double, double> sweet_spot_shift(const BareModes& modes) {
    const double theta00 = modes.minus.phase(0, 0);
    return {-0.5 * theta00, +0.5 * theta00};
}

inline std::pair<double, double> sweet_spot_shift(const CircuitParams& params, double phi_c,
                                                  const ProductDims& dims = {}) {
    return sweet_spot_shift(BareModes::build(params, phi_c, dims));
}

/// Flux point on the sweet-spot contour at coupler flux phi_c.
inline FluxPoint contour_point(const BareModes& modes) {
    const auto [da, db] = sweet_spot_shift(modes);
    return FluxPoint::from_deltas(da, db, modes.phi_c);
}

inline FluxPoint contour_point(const CircuitParams& params, double phi_c,
                               const ProductDims& dims = {}) {
    return contour_point(BareModes::build(params, phi_c, dims));
}

/// Lamb shifts (chi_a, chi_b): the second-order qubit-frequency
/// renormalization chi_mu = chi_1^mu - chi_0^mu.
inline std::pair<double, double> lamb_shift(const SWCoefficients& sw) {
    std::array<double, 2> chi{};
    for (int mu = 0; mu < 2; ++mu) {
        std::array<double, 2> chi_j{};
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int jp = 0; jp < sw.jq; ++jp) {
                for (int n = 0; n < sw.nc; ++n) {
                    if (!sw.prime_allowed(jp, n)) continue;
                    const double gv = sw.g[mu][n](j, jp);
                    acc += gv * gv / sw.delta[mu][n](j, jp);
                }
                const double Gv = sw.G[mu](j, jp);
                acc += Gv * Gv / sw.Delta[mu](j, jp);
            }
            chi_j[j] = -acc;
        }
        chi[mu] = chi_j[1] - chi_j[0];
    }
    return {chi[0], chi[1]};
}

struct CouplingStrength {
    double J = 0, J_minus = 0, J_plus = 0;
};

/// Two-qubit XX coupling J = J_- - J_+ in h*GHz. J_- is the virtual sum over
/// difference-mode excitations, J_+ the static sum-mode contribution.
inline CouplingStrength coupling_strength(const SWCoefficients& sw) {
    CouplingStrength cs;
    for (int n = 1; n < sw.nc; ++n) {
        const double pref = 0.5 * sw.g[0][n](0, 1) * sw.g[1][n](0, 1);
        cs.J_minus += pref * (1.0 / sw.delta[0][n](0, 1) + 1.0 / sw.delta[0][n](1, 0) +
                              1.0 / sw.delta[1][n](0, 1) + 1.0 / sw.delta[1][n](1, 0));
    }
    cs.J_plus = 0.5 * sw.G[0](0, 1) * sw.G[1](0, 1) *
                (1.0 / sw.Delta[0](0, 1) + 1.0 / sw.Delta[0](1, 0) + 1.0 / sw.Delta[1](0, 1) +
                 1.0 / sw.Delta[1](1, 0));
    cs.J = cs.J_minus - cs.J_plus;
    return cs;
}

inline CouplingStrength coupling_strength(const CircuitParams& params, double phi_c,
                                          const ProductDims& dims = {}, const SwCutoffs& cut = {}) {
    return coupling_strength(sw_first_order(BareModes::build(params, phi_c, dims), cut));
}

/// Dressed qubit frequencies and effective two-qubit coefficients.
struct EffectiveParams {
    double omega_a = 0, omega_b = 0;              // bare splittings
    double omega_a_prime = 0, omega_b_prime = 0;  // omega_mu + chi_mu
    double chi_a = 0, chi_b = 0;
    double J = 0, J_minus = 0, J_plus = 0;
    double Omega_a = 0, Omega_b = 0;
};

inline EffectiveParams effective_params(const CircuitParams& params, const FluxPoint& flux,
                                        const ProductDims& dims = {}, const SwCutoffs& cut = {}) {
    const BareModes modes = BareModes::build(params, flux.phi_c, dims);
    const auto sw = sw_first_order(modes, cut);
    EffectiveParams ep;
    ep.omega_a = modes.qubit_splitting(QubitId::a);
    ep.omega_b = modes.qubit_splitting(QubitId::b);
    std::tie(ep.chi_a, ep.chi_b) = lamb_shift(sw);
    ep.omega_a_prime = ep.omega_a + ep.chi_a;
    ep.omega_b_prime = ep.omega_b + ep.chi_b;
    const auto cs = coupling_strength(sw);
    ep.J = cs.J;
    ep.J_minus = cs.J_minus;
    ep.J_plus = cs.J_plus;
    std::tie(ep.Omega_a, ep.Omega_b) = omega_coeff(modes, flux);
    return ep;
}

/// 4x4 effective Hamiltonian in the (00,01,10,11) basis.
inline Eigen::Matrix4d effective_hamiltonian(const EffectiveParams& ep) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    const double za[4] = {+1, +1, -1, -1};
    const double zb[4] = {+1, -1, +1, -1};
    for (int i = 0; i < 4; ++i)
        h(i, i) = -0.5 * ep.omega_a_prime * za[i] - 0.5 * ep.omega_b_prime * zb[i];
    // X_a flips the first label, X_b the second, XX flips both.
    h(0, 2) = h(2, 0) = h(1, 3) = h(3, 1) = -ep.Omega_a;
    h(0, 1) = h(1, 0) = h(2, 3) = h(3, 2) = -ep.Omega_b;
    h(0, 3) = h(3, 0) = h(1, 2) = h(2, 1) = ep.J;
    return h;
}

/// Mode set built on the sweet-spot contour: the contour fluxes tilt the
/// difference mode through the shared inductors, which in turn moves the
/// ground displacement the contour is built from. The fixed point of that
/// loop gives mutually consistent fluxes and coupler matrix elements.
struct ContourModes {
    BareModes modes;
    FluxPoint flux;
};

inline ContourModes contour_modes(const CircuitParams& params, double phi_c,
                                  const ProductDims& dims = {}) {
    double delta = 0.0;
    BareModes modes = BareModes::build(params, phi_c, dims);
    for (int it = 0; it < 80; ++it) {
        const double next = -0.5 * modes.minus.phase(0, 0);
        if (std::abs(next - delta) < 1e-13) {
            delta = next;
            break;
        }
        delta = next;
        modes = BareModes::build(params, phi_c, dims, {}, params.E_L * delta);
    }
    return {std::move(modes), FluxPoint::from_deltas(delta, -delta, phi_c)};
}

/// Contour point refined on the full model: Newton steps on both qubit
/// fluxes until each dressed splitting is stationary (the operating
/// condition the first-order contour approximates).
inline FluxPoint exact_sweet_point(const CircuitParams& params, double phi_c,
                                   const ProductDims& dims = ProductDims{8, 8, 6, 4, 110, 24},
                                   double slope_tol = 1e-7) {
    auto gaps = [&](double da, double db) {
        ProductSpace space(params, FluxPoint::from_deltas(da, db, phi_c), dims);
        const auto es = diagonalize(space.hamiltonian(), 3, space.dim_vector());
        return std::pair{es.energies(2) - es.energies(0), es.energies(1) - es.energies(0)};
    };
    auto [da, db] = sweet_spot_shift(contour_modes(params, phi_c, dims).modes);
    const double h = 2e-4;
    for (int it = 0; it < 20; ++it) {
        const auto [wpa, u1] = gaps(da + h, db);
        const auto [wma, u2] = gaps(da - h, db);
        const auto [u3, wpb] = gaps(da, db + h);
        const auto [u4, wmb] = gaps(da, db - h);
        const auto [wa0, wb0] = gaps(da, db);
        const double sa = (wpa - wma) / (2 * h), sb = (wpb - wmb) / (2 * h);
        if (std::abs(sa) < slope_tol && std::abs(sb) < slope_tol)
            return FluxPoint::from_deltas(da, db, phi_c);
        const double ca = (wpa - 2 * wa0 + wma) / (h * h);
        const double cb = (wpb - 2 * wb0 + wmb) / (h * h);
        if (!(ca > 0.0) || !(cb > 0.0))
            throw NumericalFailure("sweet-point refinement lost convexity");
        da -= sa / ca;
        db -= sb / cb;
    }
    throw NumericalFailure("sweet-point refinement did not converge");
}

struct OffPositionOptions {
    double phi_lo = 0.05 * two_pi;
    double phi_hi = 0.45 * two_pi;
    double j_tol = 1e-6;             // h*GHz (1 kHz) bisection target on |J|
    double phi_tol = 1e-5 * two_pi;  // exact-mode location tolerance
    ProductDims mode_dims{};         // per-mode bases for the perturbative route
    ProductDims exact_dims{8, 8, 6, 4, 110, 24};
    SwCutoffs cutoffs{};
};

enum class OffPositionMode { effective, exact };

/// Contour-consistent coupling strength at coupler flux phi_c.
inline CouplingStrength coupling_strength_on_contour(const CircuitParams& params, double phi_c,
                                                     const ProductDims& dims = {},
                                                     const SwCutoffs& cut = {}) {
    return coupling_strength(sw_first_order(contour_modes(params, phi_c, dims).modes, cut));
}

/// Coupler flux on the sweet-spot contour where the qubits decouple. The
/// effective route bisects the contour-consistent J(phi_c) to |J| < 1 kHz;
/// the exact route minimizes the dressed |11> energy (relative to ground)
/// of the full model along the refined contour.
inline FluxPoint find_off_position(const CircuitParams& params,
                                   OffPositionMode mode = OffPositionMode::effective,
                                   const OffPositionOptions& opts = {}) {
    auto j_of = [&](double phi_c) {
        return coupling_strength_on_contour(params, phi_c, opts.mode_dims, opts.cutoffs).J;
    };
    double lo = opts.phi_lo, hi = opts.phi_hi;
    double jlo = j_of(lo), jhi = j_of(hi);
    if (jlo * jhi > 0.0)
        throw NoOffPosition("coupling strength does not change sign in the search bracket");
    double mid = 0.5 * (lo + hi), jmid = j_of(mid);
    for (int it = 0; it < 200 && std::abs(jmid) >= opts.j_tol; ++it) {
        if (jlo * jmid <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            jlo = jmid;
        }
        mid = 0.5 * (lo + hi);
        jmid = j_of(mid);
    }
    if (std::abs(jmid) >= opts.j_tol)
        throw NoOffPosition("bisection failed to reach the coupling tolerance");
    const double phi_eff = mid;
    if (mode == OffPositionMode::effective)
        return contour_modes(params, phi_eff, opts.mode_dims).flux;

    auto gap11 = [&](double phi_c) {
        const FluxPoint fp = exact_sweet_point(params, phi_c, opts.exact_dims);
        ProductSpace space(params, fp, opts.exact_dims);
        const auto es = diagonalize(space.hamiltonian(), 4, space.dim_vector());
        return es.energies(3) - es.energies(0);
    };
    const double blo = std::max(opts.phi_lo, phi_eff - 0.04 * two_pi);
    const double bhi = std::min(opts.phi_hi, phi_eff + 0.04 * two_pi);
    const int bits = static_cast<int>(std::ceil(-std::log2(opts.phi_tol / (bhi - blo))));
    auto [phi_exact, e11] = boost::math::tools::brent_find_minima(gap11, blo, bhi, bits);
    (void)e11;
    return exact_sweet_point(params, phi_exact, opts.exact_dims);
}

/// Slope of J_- with respect to the coupler flux at the off position, in
/// h*MHz per flux quantum. Central difference with a 1e-4 Phi_0 step,
/// cross-checked against the doubled step (Richardson consistency to 1%).
inline double flux_sensitivity(const CircuitParams& params, const OffPositionOptions& opts = {}) {
    const FluxPoint off = find_off_position(params, OffPositionMode::effective, opts);
    auto jminus = [&](double phi_c) {
        return coupling_strength_on_contour(params, phi_c, opts.mode_dims, opts.cutoffs).J_minus;
    };
    const double h = 1e-4 * two_pi;
    auto central = [&](double step) {
        return (jminus(off.phi_c + step) - jminus(off.phi_c - step)) / (2.0 * step);
    };
    const double d1 = central(h), d2 = central(2.0 * h);
    if (std::abs(d1 - d2) > 0.01 * std::abs(d1) + 1e-12)
        throw NumericalFailure("flux-sensitivity finite difference failed the step check");
    return d1 * two_pi * 1e3;  // d/dphi_c [h*GHz/rad] -> h*MHz per Phi_0
}

/// Additional X coefficients induced by inductive parameter disorder; zero
/// for symmetric circuits or at coupler fluxes where <0|theta|0> vanishes.
inline std::pair<double, double> disorder_sweet_spot_shift(const BareModes& modes,
                                                           const DisorderParams& disorder,
                                                           const SwCutoffs& cut = {}) {
    disorder.validate();
    const auto sw = sw_first_order(modes, cut);
    const double g_ind = sw.ell_osc / (4.0 * std::sqrt(2.0)) *
                         (modes.params.E_L * disorder.dE_L +
                          modes.params.E_Lprime * disorder.dE_Lprime) *
                         sw.theta_00();
    const double shift_a = 0.5 * g_ind * (sw.eta1[0](0, 1) + sw.eta1[0](1, 0));
    const double shift_b = 0.5 * g_ind * (sw.eta1[1](0, 1) + sw.eta1[1](1, 0));
    return {shift_a, shift_b};
}

namespace detail {

/// Cross term of the drive matrix elements that flips both qubits, divided by
/// E_L/2. Only the single-virtual-excitation paths enter: the second-order
/// generator sum and the first-order product against the difference-mode
/// ground displacement. Indices mod 2.
inline double drive_xx_sum(const SWCoefficients& sw, int l, int m) {
    const int l1 = (l + 1) % 2, m1 = (m + 1) % 2;
    double s = 0.0;
    for (int n = 1; n < sw.nc; ++n)
        s += (sw.eps2_two[n](2 * l + l1, 2 * m + m1) + sw.eps2_two[n](2 * l1 + l, 2 * m1 + m)) *
             sw.theta(0, n);
    for (int n = 1; n < sw.nc; ++n)
        s += (sw.eps1[0][n](l, l1) * sw.eps1[1][n](m1, m) +
              sw.eps1[0][n](l1, l) * sw.eps1[1][n](m, m1)) *
             sw.theta(0, 0);
    return s;
}

inline Eigen::Matrix4d dressed_qubit_drive_semi(const SWCoefficients& sw,
                                                const Eigen::MatrixXd& phi_a) {
    const double lam = sw.ell_osc / std::sqrt(2.0);
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    // diagonal: leading contribution of the difference-mode displacement
    std::array<double, 2> diag{};
    for (int l = 0; l < 2; ++l) {
        double s = 0.0;
        for (int lp = 2; lp < sw.jq; ++lp) s += phi_a(l, lp) * sw.eps1[0][0](l, lp);
        diag[l] = sw.E_L * (2.0 * s + 0.5 * sw.theta_00());
    }
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) h(2 * l + m, 2 * l + m) = diag[l];
    // own-qubit X element
    double sx = 0.0;
    for (int n = 1; n < sw.nc; ++n)
        sx += sw.theta(0, n) * (sw.eps1[0][n](0, 1) + sw.eps1[0][n](1, 0));
    const double xa =
        sw.E_L * (-phi_a(0, 1) - 0.5 * sx - 0.5 * lam * (sw.eta1[0](0, 1) + sw.eta1[0](1, 0)));
    h(0, 2) = h(2, 0) = h(1, 3) = h(3, 1) = xa;
    // spectator-qubit X element
    double sb = 0.0;
    for (int n = 1; n < sw.nc; ++n)
        sb += sw.theta(0, n) * (sw.eps1[1][n](0, 1) + sw.eps1[1][n](1, 0));
    const double xb = sw.E_L * (-0.5 * lam * (sw.eta1[1](0, 1) + sw.eta1[1](1, 0)) + 0.5 * sb);
    h(0, 1) = h(1, 0) = h(2, 3) = h(3, 2) = xb;
    // double-flip element
    const double xx00 = 0.5 * sw.E_L * drive_xx_sum(sw, 0, 0);
    const double xx01 = 0.5 * sw.E_L * drive_xx_sum(sw, 0, 1);
    h(0, 3) = h(3, 0) = xx00;
    h(1, 2) = h(2, 1) = xx01;
    return h;
}

inline Eigen::Matrix4d dressed_coupler_drive_semi(const SWCoefficients& sw,
                                                  const Eigen::MatrixXd& phi_a,
                                                  const Eigen::MatrixXd& phi_b) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) {
            double sa = 0.0, sb = 0.0;
            for (int lp = 2; lp < sw.jq; ++lp) sa += phi_a(l, lp) * sw.eps1[0][0](l, lp);
            for (int mp = 2; mp < sw.jq; ++mp) sb += phi_b(m, mp) * sw.eps1[1][0](m, mp);
            h(2 * l + m, 2 * l + m) = -sw.E_Lc * sw.theta_00() - sw.E_L * sa - sw.E_L * sb;
        }
    double sxa = 0.0, sxb = 0.0;
    for (int n = 1; n < sw.nc; ++n) {
        sxa += sw.theta(0, n) * (sw.eps1[0][n](0, 1) + sw.eps1[0][n](1, 0));
        sxb += sw.theta(0, n) * (sw.eps1[1][n](0, 1) + sw.eps1[1][n](1, 0));
    }
    const double xa = 0.5 * sw.E_L * phi_a(0, 1) + sw.E_Lc * sxa;
    const double xb = -0.5 * sw.E_L * phi_b(0, 1) - sw.E_Lc * sxb;
    h(0, 2) = h(2, 0) = h(1, 3) = h(3, 1) = xa;
    h(0, 1) = h(1, 0) = h(2, 3) = h(3, 2) = xb;
    h(0, 3) = h(3, 0) = -sw.E_Lc * drive_xx_sum(sw, 0, 0);
    h(1, 2) = h(2, 1) = -sw.E_Lc * drive_xx_sum(sw, 0, 1);
    return h;
}

inline CircuitParams swap_qubits(const CircuitParams& p) {
    CircuitParams q = p;
    std::swap(q.E_Ja, q.E_Jb);
    std::swap(q.E_Ca, q.E_Cb);
    return q;
}

/// Reorders a 4x4 computational operator under the a<->b relabeling.
inline Eigen::Matrix4d swap_qubit_labels(const Eigen::Matrix4d& h) {
    const int perm[4] = {0, 2, 1, 3};
    Eigen::Matrix4d r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = h(perm[i], perm[j]);
    return r;
}

}  // namespace detail

/// Computational-subspace matrix of a drive operator from the semi-analytic
/// second-order dressed states, in the (00,01,10,11) basis. The qubit-b
/// matrix follows from the qubit-a formulas through the circuit relabeling
/// symmetry (a <-> b with the difference-mode parity flipped).
inline Eigen::Matrix4d dressed_drive_elements_semi(const BareModes& modes, FluxLine which,
                                                   const SwCutoffs& cut = {}) {
    if (which == FluxLine::b) {
        const BareModes swapped =
            BareModes::build(detail::swap_qubits(modes.params), -modes.phi_c,
                             ProductDims{modes.b.levels(), modes.a.levels(),
                                         modes.minus.levels(), modes.plus.levels()});
        return detail::swap_qubit_labels(
            dressed_drive_elements_semi(swapped, FluxLine::a, cut));
    }
    const auto sw = sw_first_order(modes, cut);
    const Eigen::MatrixXd phi_a = modes.a.phase.topLeftCorner(sw.jq, sw.jq);
    const Eigen::MatrixXd phi_b = modes.b.phase.topLeftCorner(sw.jq, sw.jq);
    return which == FluxLine::a ? detail::dressed_qubit_drive_semi(sw, phi_a)
                                : detail::dressed_coupler_drive_semi(sw, phi_a, phi_b);
}

/// Exact counterpart: the drive operator sandwiched between the labeled
/// dressed computational eigenstates of the full model.
inline Eigen::Matrix4d dressed_drive_elements_exact(const EigenSystem& es,
                                                    const Eigen::MatrixXd& h_op) {
    std::array<int, 4> lvl{};
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) lvl[2 * l + m] = es.computational_level(l, m);
    Eigen::Matrix4d h;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            h(i, j) = es.states.col(lvl[i]).dot(h_op * es.states.col(lvl[j]));
    return 0.5 * (h + h.transpose());
}

/// ac XX coupling strength from a coupler-drive computational matrix.
inline double ac_coupling(const Eigen::Matrix4d& hc) { return 0.5 * (hc(0, 3) + hc(1, 2)); }

/// Signed estimate of the static XX coupling from the exact spectrum: the
/// admixture of the bare |11> component in the dressed ground state, scaled
/// by the 00-11 gap. First order in J, gauge fixed by <00|dressed 00> > 0.
inline double coupling_from_mixing(const EigenSystem& es) {
    const int k00 = es.computational_level(0, 0);
    const int k11 = es.computational_level(1, 1);
    const long f00 = es.computational_flat_index(0, 0);
    const long f11 = es.computational_flat_index(1, 1);
    const double c00 = es.states(f00, k00);
    const double c11 = es.states(f11, k00);
    return -(es.energies(k11) - es.energies(k00)) * c11 / c00;
}

/// Full model bundle reused by the exact drive-element and dynamics paths.
struct FullModel {
    ProductSpace space;
    EigenSystem eigensystem;                // labeled over the retained levels
    std::array<Eigen::MatrixXd, 3> drives;  // product-basis drive operators

    FullModel(const CircuitParams& params, const FluxPoint& flux, const ProductDims& dims,
              int n_levels, const DisorderParams& disorder = {})
        : space(params, flux, dims, disorder) {
        eigensystem = diagonalize(space.hamiltonian(), n_levels, space.dim_vector());
        label_dressed(eigensystem, /*strict=*/false);
        drives = space.drive_operators();
    }

    Eigen::Matrix4d drive_elements(FluxLine which) const {
        return dressed_drive_elements_exact(eigensystem, drives[static_cast<int>(which)]);
    }
};

}  // namespace fluxgate
