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
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fluxgate/errors.hpp"
#include "fluxgate/linalg.hpp"

// Static circuit model of two fluxonium qubits galvanically linked through a
// flux-tunable coupler. Two coupler modes appear: a fluxonium-like difference
// mode (tunable by the coupler flux) and a harmonic sum mode. Units: all
// energies in h*GHz, reduced fluxes in radians.

namespace fluxgate {

enum class QubitId { a, b };
enum class FluxLine { a, b, c };

inline std::string to_string(FluxLine line) {
    switch (line) {
        case FluxLine::a: return "a";
        case FluxLine::b: return "b";
        default: return "c";
    }
}

/// Circuit energies in h*GHz. E_Lc is derived, not free.
struct CircuitParams {
    double E_Ja = 0, E_Jb = 0;          // qubit Josephson energies
    double E_Ca = 0, E_Cb = 0;          // qubit charging energies
    double E_L = 0;                     // qubit inductive energy (shared value)
    double E_Jc = 0;                    // coupler Josephson energy
    double E_Lprime = 0;                // coupler inductive energy
    double E_Cminus = 0, E_Cplus = 0;   // coupler charging energies

    double E_Lc() const { return 0.5 * (E_L + E_Lprime); }

    void validate() const {
        const double vals[] = {E_Ja, E_Jb, E_Ca, E_Cb, E_L, E_Jc, E_Lprime, E_Cminus, E_Cplus};
        for (double v : vals)
            if (!(v > 0.0) || !std::isfinite(v))
                throw InvalidParameters("circuit energies must be strictly positive");
        if (!(E_Cplus > E_Cminus))
            throw InvalidParameters("E_Cplus must exceed E_Cminus (finite junction capacitance)");
    }

    double qubit_E_J(QubitId q) const { return q == QubitId::a ? E_Ja : E_Jb; }
    double qubit_E_C(QubitId q) const { return q == QubitId::a ? E_Ca : E_Cb; }
};

/// Relative deviations of nominally symmetric circuit elements.
struct DisorderParams {
    double dE_L = 0.0;       // qubit inductors
    double dE_Lprime = 0.0;  // coupler inductors
    double dC = 0.0;         // stray coupler capacitances

    void validate() const {
        for (double v : {dE_L, dE_Lprime, dC})
            if (!(std::abs(v) < 0.2) || !std::isfinite(v))
                throw InvalidParameters("disorder deviations must satisfy |d| < 0.2");
    }
    bool is_zero() const { return dE_L == 0.0 && dE_Lprime == 0.0 && dC == 0.0; }
};

/// Reduced external fluxes in radians (2*pi*Phi/Phi_0). The qubit sweet spots
/// sit at phi = pi; delta accessors measure the deviation from them.
struct FluxPoint {
    double phi_a = pi;
    double phi_b = pi;
    double phi_c = 0.0;

    double delta_phi_a() const { return phi_a - pi; }
    double delta_phi_b() const { return phi_b - pi; }
    double delta_phi(QubitId q) const { return q == QubitId::a ? delta_phi_a() : delta_phi_b(); }

    static FluxPoint from_deltas(double d_a, double d_b, double phi_c) {
        return FluxPoint{pi + d_a, pi + d_b, phi_c};
    }
    void validate() const {
        for (double v : {phi_a, phi_b, phi_c})
            if (!std::isfinite(v)) throw InvalidParameters("flux values must be finite");
    }
};

/// Dense operator together with its basis bookkeeping.
struct OperatorRep {
    Eigen::MatrixXcd matrix;
    std::string basis_tag;
    std::vector<int> dims;

    long dim() const { return matrix.rows(); }
};

struct ModeTriple {
    OperatorRep hamiltonian;  // mode Hamiltonian
    OperatorRep phase;        // phi or theta operator
    OperatorRep charge;       // conjugate charge operator
};

namespace detail {

/// Annihilation operator in a truncated number basis.
inline Eigen::MatrixXd annihilation(int n) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = std::sqrt(double(i + 1));
    return a;
}

struct OscillatorOps {
    Eigen::MatrixXd phase;        // lambda (a + a^dag)
    Eigen::MatrixXd charge_imag;  // M with n = i M, M real antisymmetric
    double lambda;                // phase zero-point scale
};

/// Phase and charge in the oscillator basis of 4 E_C n^2 + E_L phi^2 / 2.
inline OscillatorOps oscillator_ops(double e_c, double e_l, int n) {
    OscillatorOps ops;
    ops.lambda = std::pow(2.0 * e_c / e_l, 0.25);
    const Eigen::MatrixXd a = annihilation(n);
    ops.phase = ops.lambda * (a + a.transpose());
    ops.charge_imag = (a.transpose() - a) / (2.0 * ops.lambda);
    return ops;
}

/// cos(phase + offset) through the spectral decomposition of the phase matrix.
inline Eigen::MatrixXd cosine_of(const Eigen::MatrixXd& phase, double offset) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phase);
    Eigen::VectorXd c = (es.eigenvalues().array() + offset).cos();
    return es.eigenvectors() * c.asDiagonal() * es.eigenvectors().transpose();
}

/// Real symmetric fluxonium-type Hamiltonian in its oscillator basis.
/// H = 4 E_C n^2 + E_L phi^2 / 2 - E_J cos(phi + offset) - tilt * phi.
inline Eigen::MatrixXd fluxonium_hamiltonian(double e_c, double e_l, double e_j, double offset,
                                             double tilt, const OscillatorOps& ops) {
    Eigen::MatrixXd h = -4.0 * e_c * (ops.charge_imag * ops.charge_imag);
    h += 0.5 * e_l * (ops.phase * ops.phase);
    if (e_j != 0.0) h -= e_j * cosine_of(ops.phase, offset);
    if (tilt != 0.0) h -= tilt * ops.phase;
    return h;
}

inline OperatorRep make_rep(Eigen::MatrixXcd m, std::string tag, int dim) {
    return OperatorRep{std::move(m), std::move(tag), {dim}};
}

}  // namespace detail

/// Fluxonium qubit mode biased delta_phi away from its half-flux sweet spot,
/// in the oscillator basis of the quadratic part. Returns (H, phi, n).
/// The flux deviation enters through the inductive tilt -E_L delta_phi phi.
inline ModeTriple build_fluxonium(const CircuitParams& params, QubitId which, double delta_phi,
                                  int basis_size) {
    params.validate();
    if (basis_size < 40) throw TruncationTooSmall("fluxonium oscillator basis must hold >= 40 states");
    const double e_c = params.qubit_E_C(which);
    const double e_j = params.qubit_E_J(which);
    const auto ops = detail::oscillator_ops(e_c, params.E_L, basis_size);
    Eigen::MatrixXd h = detail::fluxonium_hamiltonian(e_c, params.E_L, e_j, pi,
                                                      params.E_L * delta_phi, ops);
    const std::string tag = "mode-oscillator:" + std::string(which == QubitId::a ? "a" : "b");
    ModeTriple t;
    t.hamiltonian = detail::make_rep(h.cast<complexd>(), tag, basis_size);
    t.phase = detail::make_rep(ops.phase.cast<complexd>(), tag, basis_size);
    t.charge = detail::make_rep(complexd(0, 1) * ops.charge_imag.cast<complexd>(), tag, basis_size);
    return t;
}

/// Flux-tunable coupler difference mode. Returns (H, theta_-, n_-).
inline ModeTriple build_coupler_minus(const CircuitParams& params, double phi_c, int basis_size) {
    params.validate();
    if (basis_size < 30) throw TruncationTooSmall("coupler oscillator basis must hold >= 30 states");
    const auto ops = detail::oscillator_ops(params.E_Cminus, params.E_Lc(), basis_size);
    Eigen::MatrixXd h =
        detail::fluxonium_hamiltonian(params.E_Cminus, params.E_Lc(), params.E_Jc, phi_c, 0.0, ops);
    ModeTriple t;
    t.hamiltonian = detail::make_rep(h.cast<complexd>(), "mode-oscillator:minus", basis_size);
    t.phase = detail::make_rep(ops.phase.cast<complexd>(), "mode-oscillator:minus", basis_size);
    t.charge = detail::make_rep(complexd(0, 1) * ops.charge_imag.cast<complexd>(),
                                "mode-oscillator:minus", basis_size);
    return t;
}

/// Harmonic coupler sum mode. Returns (H, theta_+, n_+).
inline ModeTriple build_coupler_plus(const CircuitParams& params, int basis_size) {
    params.validate();
    if (basis_size < 5) throw TruncationTooSmall("sum-mode basis must hold >= 5 states");
    const auto ops = detail::oscillator_ops(params.E_Cplus, params.E_Lc(), basis_size);
    Eigen::MatrixXd h =
        detail::fluxonium_hamiltonian(params.E_Cplus, params.E_Lc(), 0.0, 0.0, 0.0, ops);
    ModeTriple t;
    t.hamiltonian = detail::make_rep(h.cast<complexd>(), "mode-oscillator:plus", basis_size);
    t.phase = detail::make_rep(ops.phase.cast<complexd>(), "mode-oscillator:plus", basis_size);
    t.charge = detail::make_rep(complexd(0, 1) * ops.charge_imag.cast<complexd>(),
                                "mode-oscillator:plus", basis_size);
    return t;
}

/// Oscillator length of the sum mode, (8 E_C+ / E_Lc)^(1/4).
inline double oscillator_length_plus(const CircuitParams& params) {
    return std::pow(8.0 * params.E_Cplus / params.E_Lc(), 0.25);
}

/// Sum-mode frequency sqrt(8 E_C+ E_Lc) in h*GHz.
inline double omega_plus(const CircuitParams& params) {
    return std::sqrt(8.0 * params.E_Cplus * params.E_Lc());
}

/// One diagonalized circuit mode, truncated to `keep` levels. The eigenstate
/// gauge makes the largest-magnitude oscillator amplitude of each state real
/// positive and additionally enforces <0|phase|1> > 0.
struct ModeEigen {
    Eigen::VectorXd energies;          // ascending, h*GHz
    Eigen::MatrixXd phase;             // phase operator in the eigenbasis
    Eigen::MatrixXd charge_imag;       // n = i * charge_imag (real antisymmetric)
    Eigen::MatrixXd states;            // oscillator-basis eigenvectors (columns)

    int levels() const { return static_cast<int>(energies.size()); }
    Eigen::MatrixXcd charge() const { return complexd(0, 1) * charge_imag.cast<complexd>(); }
    double phase_01() const { return phase(0, 1); }
};

namespace detail {

inline void fix_mode_gauge(Eigen::MatrixXd& vecs, const Eigen::MatrixXd& phase_osc) {
    for (int k = 0; k < vecs.cols(); ++k) {
        int imax = 0;
        vecs.col(k).cwiseAbs().maxCoeff(&imax);
        if (vecs(imax, k) < 0.0) vecs.col(k) *= -1.0;
    }
    if (vecs.cols() > 1) {
        const double p01 = vecs.col(0).dot(phase_osc * vecs.col(1));
        if (p01 < 0.0) vecs.col(1) *= -1.0;
    }
}

inline ModeEigen diagonalize_mode(const Eigen::MatrixXd& h, const Eigen::MatrixXd& phase_osc,
                                  const Eigen::MatrixXd& charge_imag_osc, int keep) {
    if (keep > h.rows()) throw TruncationTooSmall("cannot keep more levels than the basis holds");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    Eigen::MatrixXd vecs = es.eigenvectors().leftCols(keep);
    fix_mode_gauge(vecs, phase_osc);
    ModeEigen me;
    me.energies = es.eigenvalues().head(keep);
    me.phase = vecs.transpose() * phase_osc * vecs;
    me.charge_imag = vecs.transpose() * charge_imag_osc * vecs;
    me.states = std::move(vecs);
    return me;
}

}  // namespace detail

/// Per-mode truncation sizes for the product space, plus the size of the
/// underlying oscillator bases the modes are diagonalized in.
struct ProductDims {
    int qubit_a = 12;
    int qubit_b = 12;
    int minus = 8;
    int plus = 6;
    int mode_basis = 110;       // oscillator basis for the fluxonium-like modes
    int plus_mode_basis = 24;   // oscillator basis for the harmonic sum mode

    std::vector<int> as_vector() const { return {qubit_a, qubit_b, minus, plus}; }
    long product_dim() const {
        return static_cast<long>(qubit_a) * qubit_b * minus * plus;
    }
};

/// The four diagonalized modes at a given coupler flux. Qubit modes are the
/// sweet-spot fluxonia (all flux deviations live in the coupling term); with
/// inductive disorder the qubit inductors split into E_L (1 +- dE_L / 2).
struct BareModes {
    CircuitParams params;
    DisorderParams disorder;
    double phi_c = 0.0;
    double E_La = 0.0, E_Lb = 0.0;  // per-qubit inductive energies
    ModeEigen a, b, minus, plus;

    double omega_plus() const { return fluxgate::omega_plus(params); }
    double ell_osc() const { return oscillator_length_plus(params); }
    const ModeEigen& qubit(QubitId q) const { return q == QubitId::a ? a : b; }
    double qubit_E_L(QubitId q) const { return q == QubitId::a ? E_La : E_Lb; }
    double qubit_splitting(QubitId q) const {
        const auto& m = qubit(q);
        return m.energies(1) - m.energies(0);
    }

    /// coupler_tilt adds a linear term tilt * theta_- to the difference mode;
    /// it represents the static contour fluxes shared into the coupler loop.
    static BareModes build(const CircuitParams& params, double phi_c,
                           const ProductDims& dims = {},
                           const DisorderParams& disorder = {},
                           double coupler_tilt = 0.0) {
        params.validate();
        disorder.validate();
        BareModes bm;
        bm.params = params;
        bm.disorder = disorder;
        bm.phi_c = phi_c;
        bm.E_La = params.E_L * (1.0 + 0.5 * disorder.dE_L);
        bm.E_Lb = params.E_L * (1.0 - 0.5 * disorder.dE_L);
        const int nb = dims.mode_basis;
        {
            const auto ops = detail::oscillator_ops(params.E_Ca, bm.E_La, nb);
            bm.a = detail::diagonalize_mode(
                detail::fluxonium_hamiltonian(params.E_Ca, bm.E_La, params.E_Ja, pi, 0.0, ops),
                ops.phase, ops.charge_imag, dims.qubit_a);
        }
        {
            const auto ops = detail::oscillator_ops(params.E_Cb, bm.E_Lb, nb);
            bm.b = detail::diagonalize_mode(
                detail::fluxonium_hamiltonian(params.E_Cb, bm.E_Lb, params.E_Jb, pi, 0.0, ops),
                ops.phase, ops.charge_imag, dims.qubit_b);
        }
        {
            const auto ops = detail::oscillator_ops(params.E_Cminus, params.E_Lc(), nb);
            bm.minus = detail::diagonalize_mode(
                detail::fluxonium_hamiltonian(params.E_Cminus, params.E_Lc(), params.E_Jc, phi_c,
                                              -coupler_tilt, ops),
                ops.phase, ops.charge_imag, dims.minus);
        }
        {
            const auto ops = detail::oscillator_ops(params.E_Cplus, params.E_Lc(),
                                                    dims.plus_mode_basis);
            bm.plus = detail::diagonalize_mode(
                detail::fluxonium_hamiltonian(params.E_Cplus, params.E_Lc(), 0.0, 0.0, 0.0, ops),
                ops.phase, ops.charge_imag, dims.plus);
        }
        return bm;
    }
};

/// Full static model on the product of the truncated mode eigenbases, with
/// the mode ordering (qubit a, qubit b, minus, plus). All matrices are real
/// symmetric in this basis.
class ProductSpace {
  public:
    ProductSpace(const CircuitParams& params, const FluxPoint& flux, const ProductDims& dims = {},
                 const DisorderParams& disorder = {})
        : dims_(dims), flux_(flux), modes_(BareModes::build(params, flux.phi_c, dims, disorder)) {
        flux.validate();
    }

    explicit ProductSpace(BareModes modes, const FluxPoint& flux, const ProductDims& dims = {})
        : dims_(dims), flux_(flux), modes_(std::move(modes)) {
        if (modes_.a.levels() < dims.qubit_a || modes_.b.levels() < dims.qubit_b ||
            modes_.minus.levels() < dims.minus || modes_.plus.levels() < dims.plus)
            throw BasisIncompatible("mode eigenbases hold fewer levels than the product dims");
        if (std::abs(flux.phi_c - modes_.phi_c) > 1e-14)
            throw BasisIncompatible("mode set was built at a different coupler flux");
    }

    const BareModes& modes() const { return modes_; }
    const ProductDims& dims() const { return dims_; }
    const FluxPoint& flux() const { return flux_; }
    std::vector<int> dim_vector() const { return dims_.as_vector(); }
    long dim() const { return dims_.product_dim(); }

    /// Flat index of the bare product state |l_a, m_b, n_-, p_+>.
    long bare_index(int la, int mb, int nm, int pp) const {
        return ((static_cast<long>(la) * dims_.qubit_b + mb) * dims_.minus + nm) * dims_.plus + pp;
    }
    std::array<int, 4> bare_labels(long flat) const {
        const int pp = static_cast<int>(flat % dims_.plus);
        flat /= dims_.plus;
        const int nm = static_cast<int>(flat % dims_.minus);
        flat /= dims_.minus;
        const int mb = static_cast<int>(flat % dims_.qubit_b);
        flat /= dims_.qubit_b;
        return {static_cast<int>(flat), mb, nm, pp};
    }

    /// H0 + V (+ H_dis) as a real symmetric matrix.
    Eigen::MatrixXd hamiltonian() const {
        const auto d = dim_vector();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
        // Bare mode energies.
        for (long idx = 0; idx < dim(); ++idx) {
            const auto lbl = bare_labels(idx);
            h(idx, idx) = modes_.a.energies(lbl[0]) + modes_.b.energies(lbl[1]) +
                          modes_.minus.energies(lbl[2]) + modes_.plus.energies(lbl[3]);
        }
        // Coupling: -(E_Lmu/2) phi_mu (theta_+ + (-1)^mu theta_-), a -> +, b -> -.
        add_two_site_operator(h, -0.5 * modes_.E_La, d, 0, modes_.a.phase, 3, modes_.plus.phase);
        add_two_site_operator(h, -0.5 * modes_.E_La, d, 0, modes_.a.phase, 2, modes_.minus.phase);
        add_two_site_operator(h, -0.5 * modes_.E_Lb, d, 1, modes_.b.phase, 3, modes_.plus.phase);
        add_two_site_operator(h, +0.5 * modes_.E_Lb, d, 1, modes_.b.phase, 2, modes_.minus.phase);
        // Flux deviations from the sweet spots.
        const double da = flux_.delta_phi_a(), db = flux_.delta_phi_b();
        if (da != 0.0) {
            add_site_operator(h, -modes_.E_La * da, d, 0, modes_.a.phase);
            add_site_operator(h, 0.5 * modes_.E_La * da, d, 3, modes_.plus.phase);
            add_site_operator(h, 0.5 * modes_.E_La * da, d, 2, modes_.minus.phase);
        }
        if (db != 0.0) {
            add_site_operator(h, -modes_.E_Lb * db, d, 1, modes_.b.phase);
            add_site_operator(h, 0.5 * modes_.E_Lb * db, d, 3, modes_.plus.phase);
            add_site_operator(h, -0.5 * modes_.E_Lb * db, d, 2, modes_.minus.phase);
        }
        // Parameter disorder: inductive theta_+ theta_- term and capacitive
        // n_+ n_- term; higher orders in dC are dropped.
        const auto& dis = modes_.disorder;
        if (!dis.is_zero()) {
            const double g_ind =
                0.25 * (modes_.params.E_L * dis.dE_L + modes_.params.E_Lprime * dis.dE_Lprime);
            if (g_ind != 0.0)
                add_two_site_operator(h, g_ind, d, 3, modes_.plus.phase, 2, modes_.minus.phase);
            if (dis.dC != 0.0) {
                // n_+ n_- = (i M_+)(i M_-) = -M_+ M_-, so the term
                // -4 E_C- dC n_+ n_- contributes +4 E_C- dC M_+ M_-.
                add_two_site_operator(h, 4.0 * modes_.params.E_Cminus * dis.dC, d, 2,
                                      modes_.minus.charge_imag, 3, modes_.plus.charge_imag);
            }
        }
        return h;
    }

    /// Operators activated by the ac flux drives, one per flux line, in the
    /// same product basis as the static Hamiltonian. Symmetric inductors are
    /// assumed for the drive grouping.
    std::array<Eigen::MatrixXd, 3> drive_operators() const {
        const auto d = dim_vector();
        const double e_l = modes_.params.E_L;
        const double e_lc = modes_.params.E_Lc();
        std::array<Eigen::MatrixXd, 3> ops;
        for (auto& m : ops) m = Eigen::MatrixXd::Zero(dim(), dim());
        // h_a = (E_L/2)(-2 phi_a + theta_+ + theta_-)
        add_site_operator(ops[0], -e_l, d, 0, modes_.a.phase);
        add_site_operator(ops[0], 0.5 * e_l, d, 3, modes_.plus.phase);
        add_site_operator(ops[0], 0.5 * e_l, d, 2, modes_.minus.phase);
        // h_b = (E_L/2)(-2 phi_b + theta_+ - theta_-)
        add_site_operator(ops[1], -e_l, d, 1, modes_.b.phase);
        add_site_operator(ops[1], 0.5 * e_l, d, 3, modes_.plus.phase);
        add_site_operator(ops[1], -0.5 * e_l, d, 2, modes_.minus.phase);
        // h_c = (E_L/2) phi_a - (E_L/2) phi_b - E_Lc theta_-
        add_site_operator(ops[2], 0.5 * e_l, d, 0, modes_.a.phase);
        add_site_operator(ops[2], -0.5 * e_l, d, 1, modes_.b.phase);
        add_site_operator(ops[2], -e_lc, d, 2, modes_.minus.phase);
        return ops;
    }

  private:
    ProductDims dims_;
    FluxPoint flux_;
    BareModes modes_;
};

/// H0 + V + H_dis in the product bare basis, as a complex operator rep.
inline OperatorRep assemble_static_hamiltonian(const CircuitParams& params, const FluxPoint& flux,
                                               const DisorderParams& disorder = {},
                                               const ProductDims& dims = {}) {
    ProductSpace space(params, flux, dims, disorder);
    return OperatorRep{space.hamiltonian().cast<complexd>(), "product-bare", space.dim_vector()};
}

/// The three flux-drive operators (h_a, h_b, h_c) in the product bare basis.
inline std::array<OperatorRep, 3> drive_operators(const CircuitParams& params,
                                                  const FluxPoint& flux = {},
                                                  const ProductDims& dims = {}) {
    ProductSpace space(params, flux, dims);
    auto ops = space.drive_operators();
    std::array<OperatorRep, 3> reps;
    for (int k = 0; k < 3; ++k)
        reps[k] = OperatorRep{ops[k].cast<complexd>(), "product-bare", space.dim_vector()};
    return reps;
}

}  // namespace fluxgate
