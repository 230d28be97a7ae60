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
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "fluxgate/circuit.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/linalg.hpp"

// Analytic design of single-period flux pulses: variable-time identity gates
// from the zeros of the J0 Bessel function, and the half-swap construction
// driving the coupler flux, with the Z-rotation bookkeeping that turns the
// native gate into a clean sqrt(iSWAP). Frequencies and amplitudes in this
// module are angular (rad/ns); times in ns; flux amplitudes in radians.

namespace fluxgate {

/// k-th zero of the order-zero Bessel function of the first kind, by
/// bracketed bisection (the zeros interlace [(k - 3/4) pi, (k + 1/4) pi]).
inline double bessel_j0_zero(int k) {
    if (k < 1) throw InvalidParameters("Bessel zero index must be >= 1");
    double lo = (k - 0.75) * pi, hi = (k + 0.25) * pi;
    double flo = std::cyl_bessel_j(0.0, lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo < 1e-12 * mid) return mid;
        const double fm = std::cyl_bessel_j(0.0, mid);
        if (flo * fm <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

/// Drive amplitude realizing a single-period identity gate at drive
/// frequency omega_d, using the k-th Bessel zero: A = j_k omega_d / 2.
inline double identity_amplitude(double omega_d, int k) {
    return 0.5 * bessel_j0_zero(k) * omega_d;
}

struct MagnusIdentity {
    Eigen::Matrix2cd U;     // propagator after one drive period
    double bessel_arg = 0;  // 2A/omega_d
    bool strong_drive = true;  // expansion assumes A >= omega_q
};

/// First-order averaged propagator of a driven qubit over one drive period,
/// H(t) = -omega_q/2 sigma_z + A sin(omega_d t) sigma_x, in the lab frame
/// (lab and drive frames coincide at the period boundary).
inline MagnusIdentity identity_propagator_magnus(double omega_q, double A, double omega_d) {
    MagnusIdentity out;
    out.bessel_arg = 2.0 * A / omega_d;
    out.strong_drive = !(A < omega_q);
    const double angle = pi * omega_q / omega_d * std::cyl_bessel_j(0.0, out.bessel_arg);
    const complexd i1(0.0, 1.0);
    const double cz = std::cos(out.bessel_arg), sy = std::sin(out.bessel_arg);
    Eigen::Matrix2cd axis;
    axis << cz, -i1 * sy, i1 * sy, -cz;  // cos sigma_z + sin sigma_y
    out.U = std::cos(angle) * Eigen::Matrix2cd::Identity() + i1 * std::sin(angle) * axis;
    return out;
}

/// Drive frequency commensurate with the sum frequency: omega_d = n w_+ / m.
/// m = n is excluded (the 00-11 phase condition would not close).
inline double swap_drive_frequency(double omega_plus, int n, int m) {
    if (n < 1 || m < 1) throw InvalidParameters("period counts must be positive");
    if (m == n) throw InvalidParameters("m = n drives the 00-11 transition on resonance");
    return static_cast<double>(n) * omega_plus / static_cast<double>(m);
}

/// m minimizing |n w_+ / m - w_-|, i.e. n/m closest to w_-/w_+.
inline int swap_period_count(double omega_minus, double omega_plus, int n) {
    int m = static_cast<int>(std::lround(n * omega_plus / omega_minus));
    if (m < 1) m = 1;
    if (m == n) ++m;
    return m;
}

namespace detail {

/// sin(x)/x with a series fallback near zero.
inline double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
    return std::sin(x) / x;
}

/// tan(x)/x with a series fallback near zero.
inline double tanc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x * x / 3.0;
    return std::tan(x) / x;
}

/// sin(pi n omega / omega_d) evaluated through the detuning delta =
/// 1 - omega/omega_d, exact for integer n and stable near resonance.
inline double sin_pin_ratio(int n, double delta) {
    const double sgn = (n % 2 == 0) ? -1.0 : 1.0;
    return sgn * std::sin(pi * n * delta);
}

}  // namespace detail

struct TwoLevelPropagator {
    Eigen::Matrix2cd U;             // lab-frame propagator after n periods
    double xi = 0;                  // first-order rotation angle
    double eps = 0;                 // second-order phase (counter-rotating)
    double theta = 0;               // free-evolution phase pi n omega / omega_d
    bool perturbative = true;       // A small compared with omega
    bool phase_merge_valid = true;  // tanc(xi) * eps small
};

/// Lab-frame propagator of H(t) = -omega/2 Sigma_z + A sin(omega_d t) Sigma_x
/// after n drive periods, from the exponential of the first two averaged
/// terms in the co-rotating frame. Near-resonant detunings are handled by
/// series expansion of the removable singularities.
inline TwoLevelPropagator two_level_propagator(double omega, double A, double omega_d, int n) {
    if (n < 1) throw InvalidParameters("period count must be positive");
    TwoLevelPropagator out;
    const double delta = 1.0 - omega / omega_d;
    out.theta = pi * n * omega / omega_d;
    out.perturbative = std::abs(A) <= 0.3 * std::abs(omega);

    // xi = 2 A w_d sin(pi n w/w_d) / (w_d^2 - w^2), stable via sinc:
    // sin(pi n w/wd) = sgn sin(pi n delta), denominator = wd^2 delta (2 - delta).
    {
        const double sgn = (n % 2 == 0) ? -1.0 : 1.0;
        out.xi = 2.0 * A * sgn * pi * n * detail::sinc(pi * n * delta) /
                 (omega_d * (2.0 - delta));
    }
    // eps = A^2 wd^2 sin(2 pi n w/wd)/(wd^2-w^2)^2 + A^2 pi n w/(wd (wd^2-w^2))
    const double s = 2.0 * pi * n;
    if (std::abs(s * delta) < 0.01) {
        out.eps = (A * A * pi * n / (2.0 * omega_d * omega_d)) *
                  (-1.5 + (s * s / 6.0 - 1.0) * delta + (s * s / 6.0 - 0.625) * delta * delta);
    } else {
        const double den = omega_d * omega_d * delta * (2.0 - delta);
        const double sin2 = -std::sin(s * delta);  // sin(2 pi n w/wd), exact for integer n
        out.eps = A * A * omega_d * omega_d * sin2 / (den * den) +
                  A * A * pi * n * omega / (omega_d * den);
    }
    out.phase_merge_valid = std::abs(detail::tanc(out.xi) * out.eps) < 0.1;

    // U' = exp(-i [xi sin(theta) Sx - xi cos(theta) Sy + eps Sz]); then the
    // lab frame adds exp(i theta Sz).
    const double vx = out.xi * std::sin(out.theta);
    const double vy = -out.xi * std::cos(out.theta);
    const double vz = out.eps;
    const double r = std::sqrt(vx * vx + vy * vy + vz * vz);
    const complexd i1(0.0, 1.0);
    Eigen::Matrix2cd gen = Eigen::Matrix2cd::Zero();
    if (r > 0.0) {
        const double f = std::sin(r) / r;
        gen << vz * f, (vx - i1 * vy) * f, (vx + i1 * vy) * f, -vz * f;
    }
    Eigen::Matrix2cd up = std::cos(r) * Eigen::Matrix2cd::Identity() - i1 * gen;
    Eigen::Matrix2cd frame = Eigen::Matrix2cd::Zero();
    frame(0, 0) = std::exp(i1 * out.theta);
    frame(1, 1) = std::exp(-i1 * out.theta);
    out.U = frame * up;
    return out;
}

struct SwapAmplitude {
    double A = 0;        // positive drive amplitude (angular)
    int xi_sign = +1;    // sign of xi_- = +-pi/4
    double gamma = 0;    // 0 or pi, matching the xi_- branch
};

/// Drive amplitude solving the quarter-rotation condition xi_- = +-pi/4 in
/// the 01-10 subspace, with the branch chosen so the amplitude is positive.
inline SwapAmplitude swap_amplitude(double omega_minus, double omega_d, int n) {
    const double delta = 1.0 - omega_minus / omega_d;
    const double s = detail::sin_pin_ratio(n, delta);
    if (std::abs(s) < 1e-6)
        throw DegenerateDrive("drive frequency commensurate with the 01-10 splitting");
    const double a0 = pi * (omega_d * omega_d - omega_minus * omega_minus) /
                      (8.0 * omega_d * s);
    SwapAmplitude out;
    if (a0 >= 0.0) {
        out.A = a0;
        out.xi_sign = +1;
        out.gamma = 0.0;
    } else {
        out.A = -a0;
        out.xi_sign = -1;
        out.gamma = pi;
    }
    return out;
}

struct PhiSwapPhases {
    double alpha = 0, beta = 0, gamma = 0;
};

/// Phases of the realized half-swap, from the propagator parameters of the
/// two two-level subspaces. The 00-11 block must be phase-only and the
/// 01-10 rotation a quarter turn, else the gate is not a half swap.
inline PhiSwapPhases phi_swap_phases(const TwoLevelPropagator& plus,
                                     const TwoLevelPropagator& minus, double tol = 1e-9) {
    if (std::abs(plus.xi) > tol)
        throw NotAPhiSwap("00-11 block is not phase-only: xi_+ = " + std::to_string(plus.xi));
    if (std::abs(std::abs(minus.xi) - pi / 4.0) > tol)
        throw NotAPhiSwap("01-10 rotation is not a quarter turn: xi_- = " +
                          std::to_string(minus.xi));
    PhiSwapPhases p;
    p.alpha = plus.theta - plus.eps;
    p.beta = minus.theta - 4.0 * minus.eps / pi;
    p.gamma = minus.xi > 0.0 ? 0.0 : pi;
    return p;
}

/// Z-rotation angles completing the half-swap into sqrt(iSWAP); theta_b2 is
/// the free parameter.
inline std::array<double, 3> z_rotation_angles(double alpha, double beta, double gamma,
                                               double theta_b2) {
    return {pi / 2.0 + alpha + gamma - theta_b2, alpha - beta - theta_b2,
            -pi / 2.0 + beta - gamma + theta_b2};
}

/// Ideal parametrized half-swap in the (00,01,10,11) basis.
inline Eigen::Matrix4cd phi_swap_matrix(const PhiSwapPhases& p) {
    const complexd i1(0.0, 1.0);
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    u(0, 0) = std::exp(i1 * p.alpha);
    u(3, 3) = std::exp(-i1 * p.alpha);
    u(1, 1) = r * std::exp(i1 * p.beta);
    u(1, 2) = r * std::exp(i1 * p.gamma);
    u(2, 1) = -r * std::exp(-i1 * p.gamma);
    u(2, 2) = r * std::exp(-i1 * p.beta);
    return u;
}

inline Eigen::Matrix4cd sqrt_iswap_matrix() {
    const complexd i1(0.0, 1.0);
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    u(1, 1) = r;
    u(2, 2) = r;
    u(1, 2) = -i1 * r;
    u(2, 1) = -i1 * r;
    return u;
}

/// exp(-i theta_a sigma_z^a / 2) exp(-i theta_b sigma_z^b / 2).
inline Eigen::Matrix4cd rz_pair(double theta_a, double theta_b) {
    const complexd i1(0.0, 1.0);
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    const double za[4] = {+1, +1, -1, -1};
    const double zb[4] = {+1, -1, +1, -1};
    for (int k = 0; k < 4; ++k) u(k, k) = std::exp(-i1 * 0.5 * (theta_a * za[k] + theta_b * zb[k]));
    return u;
}

/// Sinusoidal flux pulse on one line, starting and ending at zero flux.
struct PulseSpec {
    FluxLine line = FluxLine::c;
    double amplitude = 0;       // effective drive strength A (angular)
    double flux_amplitude = 0;  // raw flux amplitude (radians, signed)
    double omega_d = 0;         // drive frequency (angular)
    int n_periods = 1;
    int bessel_index = 0;       // k for identity pulses, 0 otherwise

    double duration_ns() const { return two_pi * n_periods / omega_d; }
    double flux_at(double t) const { return flux_amplitude * std::sin(omega_d * t); }
};

struct Segment {
    double duration_ns = 0;
    std::optional<PulseSpec> pulse;  // flux on all other lines is zero
};

struct GateSchedule {
    std::vector<Segment> segments;
    PhiSwapPhases phases;
    std::array<double, 4> z_angles{};  // theta_a1, theta_b1, theta_a2, theta_b2
    double total_time_ns = 0;
    bool identity_pulses_strong = true;  // every inserted pulse has A >= omega_q

    double swap_segment_ns() const {
        for (const auto& s : segments)
            if (s.pulse && s.pulse->line == FluxLine::c) return s.duration_ns;
        return 0.0;
    }
    double single_qubit_ns() const { return total_time_ns - swap_segment_ns(); }
};

/// Operating-point data the scheduler needs: dressed frequencies (angular)
/// and the drive-line calibrations in h*GHz per radian of flux.
struct SchedulerInput {
    double omega_a = 0, omega_b = 0;     // angular, omega_a != omega_b
    double j_ac = 0;                     // signed coupler-drive XX strength (h*GHz)
    double omega_ac_a = 0, omega_ac_b = 0;  // qubit-drive X strengths (h*GHz)
    double flux_cap = 0.1 * two_pi;      // identity-pulse flux window (radians)
};

struct IdentityInsert {
    PulseSpec pulse;
    bool strong_drive = true;
};

/// Single-period identity pulse filling exactly `duration_ns` on one qubit
/// line: smallest Bessel index whose amplitude stays within the flux window
/// while keeping the strong-drive condition A >= omega_q where possible.
inline std::optional<IdentityInsert> design_identity_pulse(FluxLine line, double duration_ns,
                                                           double omega_q, double drive_coeff_ghz,
                                                           double flux_cap) {
    const double omega_id = two_pi / duration_ns;
    const double a_cap = two_pi * std::abs(drive_coeff_ghz) * flux_cap;
    std::optional<int> fallback;
    for (int k = 1; k <= 64; ++k) {
        const double a_k = identity_amplitude(omega_id, k);
        if (a_k > a_cap) break;
        if (a_k >= omega_q) {
            IdentityInsert ins;
            ins.pulse = PulseSpec{line, a_k, (a_k / two_pi) / std::abs(drive_coeff_ghz),
                                  omega_id, 1, k};
            ins.strong_drive = true;
            return ins;
        }
        if (!fallback) fallback = k;
    }
    if (fallback) {
        const double a_k = identity_amplitude(omega_id, *fallback);
        IdentityInsert ins;
        ins.pulse = PulseSpec{line, a_k, (a_k / two_pi) / std::abs(drive_coeff_ghz),
                              omega_id, 1, *fallback};
        ins.strong_drive = false;
        return ins;
    }
    return std::nullopt;
}

namespace detail {

inline double mod_two_pi(double x) {
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

struct ScheduleTimes {
    double t_a1, t_b1, t_a2, t_b2;
    double window1, window2, total;
};

inline ScheduleTimes schedule_times(const std::array<double, 3>& angles, double theta_b2,
                                    double omega_a, double omega_b, double swap_ns) {
    ScheduleTimes t{};
    t.t_a1 = mod_two_pi(-angles[0]) / omega_a;
    t.t_b1 = mod_two_pi(-angles[1]) / omega_b;
    t.t_a2 = mod_two_pi(-angles[2]) / omega_a;
    t.t_b2 = mod_two_pi(-theta_b2) / omega_b;
    t.window1 = std::max(t.t_a1, t.t_b1);
    t.window2 = std::max(t.t_a2, t.t_b2);
    t.total = swap_ns + t.window1 + t.window2;
    return t;
}

}  // namespace detail

/// Builds the full sqrt(iSWAP) schedule: the coupler-drive half swap wrapped
/// in Z rotations obtained by idling, with identity pulses filling idle-time
/// mismatches. theta_b2 is grid searched (1e-3 rad) for minimal total time
/// under the synchronization constraint t_a1 = t_b1, then refined exactly.
inline GateSchedule schedule_sqrt_iswap(const SchedulerInput& in, int n, int m,
                                        std::optional<double> fixed_theta_b2 = std::nullopt) {
    if (!(std::abs(in.omega_a - in.omega_b) > 1e-9))
        throw InvalidParameters("scheduler requires non-degenerate qubit frequencies");
    if (in.j_ac == 0.0) throw InvalidParameters("coupler drive coefficient must be nonzero");
    const double omega_plus = in.omega_a + in.omega_b;
    const double omega_minus = in.omega_a - in.omega_b;
    const double omega_d = swap_drive_frequency(omega_plus, n, m);
    const auto amp = swap_amplitude(omega_minus, omega_d, n);
    const auto up = two_level_propagator(omega_plus, amp.A, omega_d, n);
    const auto um = two_level_propagator(omega_minus, amp.A, omega_d, n);
    const auto phases = phi_swap_phases(up, um);
    const double swap_ns = two_pi * n / omega_d;

    const double t_eps = 1e-9;  // ns; below this a mismatch counts as zero
    struct WindowFill {
        bool feasible = true;
        std::optional<IdentityInsert> pulse;
    };
    auto insert_for = [&](double gap_ns, bool a_shorter) {
        WindowFill fill;
        if (gap_ns <= t_eps) return fill;
        const FluxLine line = a_shorter ? FluxLine::a : FluxLine::b;
        const double wq = a_shorter ? in.omega_a : in.omega_b;
        const double coeff = a_shorter ? in.omega_ac_a : in.omega_ac_b;
        fill.pulse = design_identity_pulse(line, gap_ns, wq, coeff, in.flux_cap);
        fill.feasible = fill.pulse.has_value();
        return fill;
    };

    auto evaluate = [&](double theta_b2) {
        const auto angles = z_rotation_angles(phases.alpha, phases.beta, phases.gamma, theta_b2);
        return detail::schedule_times(angles, theta_b2, in.omega_a, in.omega_b, swap_ns);
    };
    // gap_floor: window mismatches below this count as zero when judging
    // feasibility on the search grid; the refinement closes them exactly.
    auto feasible = [&](const detail::ScheduleTimes& t, double gap_floor) {
        const double g1 = std::abs(t.t_a1 - t.t_b1), g2 = std::abs(t.t_a2 - t.t_b2);
        return (g1 <= gap_floor || insert_for(g1, t.t_a1 < t.t_b1).feasible) &&
               (g2 <= gap_floor || insert_for(g2, t.t_a2 < t.t_b2).feasible);
    };

    double theta_b2 = 0.0;
    if (fixed_theta_b2) {
        theta_b2 = detail::mod_two_pi(*fixed_theta_b2);
        if (!feasible(evaluate(theta_b2), t_eps))
            throw ScheduleInfeasible("no identity insertion fits the flux window");
    } else {
        // Grid scan under the synchronization constraint t_a1 = t_b1, then an
        // exact branch solve of t_a1(x) = t_b1(x) through each candidate in
        // cost order until one survives strict feasibility.
        const double step = 1e-3;
        const double sync_tol = 2.0 * step / std::min(in.omega_a, in.omega_b);
        std::vector<std::pair<double, double>> candidates;  // (total, x)
        for (double x = 0.0; x < two_pi; x += step) {
            const auto t = evaluate(x);
            if (std::abs(t.t_a1 - t.t_b1) > sync_tol) continue;
            if (!feasible(t, sync_tol)) continue;
            candidates.emplace_back(t.total, x);
        }
        if (candidates.empty())
            throw ScheduleInfeasible("no synchronizable angle fits the flux window");
        std::stable_sort(candidates.begin(), candidates.end());
        const double c_a = pi / 2.0 + phases.alpha + phases.gamma;
        const double c_b = phases.alpha - phases.beta;
        bool found = false;
        for (const auto& [total, x0] : candidates) {
            const double ka = detail::mod_two_pi(x0 - c_a) - (x0 - c_a);
            const double kb = detail::mod_two_pi(x0 - c_b) - (x0 - c_b);
            const double xs = ((c_a - ka) * in.omega_b - (c_b - kb) * in.omega_a) /
                              (in.omega_b - in.omega_a);
            if (std::abs(xs - x0) > 2.0 * step) continue;
            const auto t = evaluate(xs);
            if (std::abs(t.t_a1 - t.t_b1) < 1e-9 && feasible(t, t_eps) &&
                t.total <= total + 4.0 * step) {
                theta_b2 = detail::mod_two_pi(xs);
                found = true;
                break;
            }
        }
        if (!found) throw ScheduleInfeasible("no synchronizable angle fits the flux window");
    }

    const auto angles = z_rotation_angles(phases.alpha, phases.beta, phases.gamma, theta_b2);
    const auto t = evaluate(theta_b2);
    GateSchedule sched;
    sched.phases = phases;
    sched.z_angles = {angles[0], angles[1], angles[2], theta_b2};

    auto emit_window = [&](double ta, double tb) {
        const double gap = std::abs(ta - tb);
        const double idle = std::min(ta, tb);
        if (gap > t_eps) {
            auto fill = insert_for(gap, ta < tb);
            if (!fill.feasible)
                throw ScheduleInfeasible("no identity insertion fits the flux window");
            sched.segments.push_back(Segment{gap, fill.pulse->pulse});
            if (!fill.pulse->strong_drive) sched.identity_pulses_strong = false;
        }
        if (idle > t_eps) sched.segments.push_back(Segment{idle, std::nullopt});
    };

    // Timeline order: the theta_*2 rotations act first, then the half swap,
    // then the theta_*1 rotations.
    emit_window(t.t_a2, t.t_b2);
    const double flux_c = (amp.A / two_pi) / in.j_ac;
    sched.segments.push_back(
        Segment{swap_ns, PulseSpec{FluxLine::c, amp.A, flux_c, omega_d, n, 0}});
    emit_window(t.t_a1, t.t_b1);

    sched.total_time_ns = 0.0;
    for (const auto& s : sched.segments) sched.total_time_ns += s.duration_ns;
    return sched;
}

/// The schedule composed in the ideal-propagator algebra: identity pulses
/// count as identity, idles as Z rotations at the dressed frequencies, the
/// swap segment as the parametrized half swap.
inline Eigen::Matrix4cd ideal_composition(const GateSchedule& sched, double omega_a,
                                          double omega_b) {
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    for (const auto& seg : sched.segments) {
        Eigen::Matrix4cd step;
        if (seg.pulse && seg.pulse->line == FluxLine::c) {
            step = phi_swap_matrix(sched.phases);
        } else if (seg.pulse) {
            // identity pulse on one qubit; the other qubit idles
            const double tha = seg.pulse->line == FluxLine::a ? 0.0 : omega_a * seg.duration_ns;
            const double thb = seg.pulse->line == FluxLine::b ? 0.0 : omega_b * seg.duration_ns;
            step = rz_pair(-tha, -thb);
        } else {
            step = rz_pair(-omega_a * seg.duration_ns, -omega_b * seg.duration_ns);
        }
        u = step * u;
    }
    return u;
}

}  // namespace fluxgate
