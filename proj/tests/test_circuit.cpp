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

#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "helpers.hpp"

using namespace fluxgate;
using fluxgate::test::reference_device;
using fluxgate::test::rel_err;
using fluxgate::test::small_dims;

namespace {

Eigen::VectorXd mode_levels(const OperatorRep& h, int count) {
    const auto sol = eigh_full(Eigen::MatrixXd(h.matrix.real()));
    return sol.values.head(count).array() - sol.values(0);
}

}  // namespace

TEST_CASE("fluxonium qubit spectra match the device characterization") {
    const auto p = reference_device();
    const auto qa = build_fluxonium(p, QubitId::a, 0.0, 110);
    const auto la = mode_levels(qa.hamiltonian, 3);
    CHECK(rel_err(la(1), 0.062) < 0.02);   // 62 MHz splitting
    CHECK(rel_err(la(2), 4.4) < 0.05);     // next excited state
    const auto qb = build_fluxonium(p, QubitId::b, 0.0, 110);
    const auto lb = mode_levels(qb.hamiltonian, 2);
    CHECK(rel_err(lb(1), 0.037) < 0.02);   // 37 MHz splitting
}

TEST_CASE("vanishing Josephson energy leaves a harmonic spectrum") {
    auto p = reference_device();
    p.E_Ja = 1e-12;
    const auto mode = build_fluxonium(p, QubitId::a, 0.0, 110);
    const auto levels = mode_levels(mode.hamiltonian, 6);
    const double w = std::sqrt(8.0 * p.E_Ca * p.E_L);
    for (int k = 1; k < 6; ++k) CHECK(rel_err(levels(k) - levels(k - 1), w) < 1e-8);
}

TEST_CASE("mode builders validate their inputs") {
    auto p = reference_device();
    CHECK_THROWS_AS(build_fluxonium(p, QubitId::a, 0.0, 20), TruncationTooSmall);
    CHECK_THROWS_AS(build_coupler_minus(p, 0.0, 20), TruncationTooSmall);
    CHECK_THROWS_AS(build_coupler_plus(p, 3), TruncationTooSmall);
    p.E_L = -0.1;
    CHECK_THROWS_AS(build_fluxonium(p, QubitId::a, 0.0, 110), InvalidParameters);
    auto q = reference_device();
    q.E_Cplus = q.E_Cminus - 1.0;
    CHECK_THROWS_AS(q.validate(), InvalidParameters);
    DisorderParams d;
    d.dE_L = 0.3;
    CHECK_THROWS_AS(d.validate(), InvalidParameters);
}

TEST_CASE("coupler difference mode: gap, parity and displacement convergence") {
    const auto p = reference_device();
    const double phic = 0.27 * two_pi;
    const auto mode = build_coupler_minus(p, phic, 110);
    const auto levels = mode_levels(mode.hamiltonian, 2);
    CHECK(levels(1) > 10.0);  // first excited state far above the qubits

    // symmetric potential: no ground-state displacement
    const auto sym = build_coupler_minus(p, 0.0, 110);
    const auto es_sym = eigh_full(Eigen::MatrixXd(sym.hamiltonian.matrix.real()));
    const Eigen::VectorXd g = es_sym.vectors.col(0);
    CHECK(std::abs(g.dot(sym.phase.matrix.real() * g)) < 1e-8);

    // displacement at the biased point, converged in the oscillator basis
    auto displacement = [&](int basis) {
        const auto m = build_coupler_minus(p, phic, basis);
        const auto es = eigh_full(Eigen::MatrixXd(m.hamiltonian.matrix.real()));
        const Eigen::VectorXd v = es.vectors.col(0);
        return v.dot(m.phase.matrix.real() * v);
    };
    const double d60 = displacement(60), d120 = displacement(120);
    CHECK(rel_err(d60, d120) < 1e-8);
    CHECK(std::abs(d120) == Catch::Approx(0.2125843).epsilon(1e-5));
}

TEST_CASE("coupler sum mode is exactly harmonic") {
    const auto p = reference_device();
    const auto mode = build_coupler_plus(p, 8);
    const auto levels = mode_levels(mode.hamiltonian, 6);
    const double w_plus = std::sqrt(8.0 * p.E_Cplus * p.E_Lc());
    CHECK(rel_err(levels(1), w_plus) < 1e-6);
    CHECK(w_plus == Catch::Approx(29.732137).epsilon(1e-6));
    for (int k = 1; k < 6; ++k) CHECK(rel_err(levels(k) - levels(k - 1), w_plus) < 1e-10);

    const auto es = eigh_full(Eigen::MatrixXd(mode.hamiltonian.matrix.real()));
    const double theta01 =
        es.vectors.col(0).dot(mode.phase.matrix.real() * es.vectors.col(1));
    CHECK(rel_err(std::abs(theta01), oscillator_length_plus(p) / std::sqrt(2.0)) < 1e-10);
}

TEST_CASE("mode spectra are converged with respect to the oscillator basis") {
    const auto p = reference_device();
    auto check_convergence = [&](const OperatorRep& h1, const OperatorRep& h2) {
        const auto l1 = mode_levels(h1, 8), l2 = mode_levels(h2, 8);
        for (int k = 1; k < 8; ++k) CHECK(rel_err(l1(k), l2(k)) < 1e-8);
    };
    check_convergence(build_fluxonium(p, QubitId::a, 0.0, 110).hamiltonian,
                      build_fluxonium(p, QubitId::a, 0.0, 220).hamiltonian);
    check_convergence(build_fluxonium(p, QubitId::b, 0.0, 110).hamiltonian,
                      build_fluxonium(p, QubitId::b, 0.0, 220).hamiltonian);
    check_convergence(build_coupler_minus(p, 0.27 * two_pi, 110).hamiltonian,
                      build_coupler_minus(p, 0.27 * two_pi, 220).hamiltonian);
}

TEST_CASE("charge and phase matrix elements obey the commutator identity") {
    const auto p = reference_device();
    const auto modes = BareModes::build(p, 0.27 * two_pi);
    const auto& m = modes.minus;
    for (int j = 0; j <= 4; ++j) {
        CHECK(std::abs(m.charge_imag(j, j)) < 1e-10);  // diagonal charge vanishes
        for (int k = 0; k <= 4; ++k) {
            if (j == k) continue;
            const complexd lhs = complexd(0, 1) * m.charge_imag(j, k);
            const complexd rhs = complexd(0, 1) * (m.energies(j) - m.energies(k)) /
                                 (8.0 * p.E_Cminus) * m.phase(j, k);
            if (std::abs(rhs) > 1e-12)
                CHECK(std::abs(lhs - rhs) < 1e-6 * std::abs(rhs));
        }
    }
}

TEST_CASE("sweet-spot qubit states carry no phase displacement") {
    const auto p = reference_device();
    const auto modes = BareModes::build(p, 0.3 * two_pi);
    for (const auto* m : {&modes.a, &modes.b})
        for (int j = 0; j < 4; ++j) CHECK(std::abs(m->phase(j, j)) < 1e-8);
}

TEST_CASE("assembled Hamiltonian reproduces the coupling term by term") {
    const auto p = reference_device();
    const ProductDims dims{4, 4, 4, 3, 110, 24};
    const FluxPoint sweet{pi, pi, 0.27 * two_pi};
    ProductSpace space(p, sweet, dims);
    const Eigen::MatrixXd h = space.hamiltonian();
    CHECK(is_hermitian(h.cast<complexd>(), 1e-10));

    const auto& modes = space.modes();
    // <1a 0b 0- 0+| V |0a 0b 1- 0+> = -(E_L/2) <1|phi_a|0><0|theta|1>
    const long bra = space.bare_index(1, 0, 0, 0);
    const long ket = space.bare_index(0, 0, 1, 0);
    const double expected = -0.5 * p.E_L * modes.a.phase(1, 0) * modes.minus.phase(0, 1);
    CHECK(std::abs(h(bra, ket) - expected) < 1e-9 * std::abs(expected));
}

TEST_CASE("capacitive disorder adds the charge-charge cross term") {
    const auto p = reference_device();
    const ProductDims dims{3, 3, 3, 3, 110, 24};
    const FluxPoint flux{pi, pi, 0.27 * two_pi};
    DisorderParams dis;
    dis.dC = 0.05;
    ProductSpace plain(p, flux, dims);
    ProductSpace disordered(p, flux, dims, dis);
    const Eigen::MatrixXd diff = disordered.hamiltonian() - plain.hamiltonian();

    // independent construction of -4 E_C- dC n_+ n_- via dense Kronecker
    // products: n = i M, so n_+ n_- = -M_+ M_- (in the a x b x minus x plus
    // ordering the minus factor precedes the plus factor).
    const auto& m = plain.modes();
    const Eigen::MatrixXd ia = Eigen::MatrixXd::Identity(dims.qubit_a, dims.qubit_a);
    const Eigen::MatrixXd ib = Eigen::MatrixXd::Identity(dims.qubit_b, dims.qubit_b);
    Eigen::MatrixXd expected =
        4.0 * p.E_Cminus * dis.dC *
        Eigen::kroneckerProduct(
            ia, Eigen::kroneckerProduct(
                    ib, Eigen::kroneckerProduct(m.minus.charge_imag, m.plus.charge_imag))
                    .eval())
            .eval();
    CHECK((diff - expected).norm() < 1e-12 * std::max(1.0, expected.norm()));
}

TEST_CASE("drive operators: algebraic identities and coefficient limits") {
    const auto p = reference_device();
    const ProductDims dims{4, 4, 4, 3, 110, 24};
    const FluxPoint flux{pi, pi, 0.27 * two_pi};
    ProductSpace space(p, flux, dims);
    const auto ops = space.drive_operators();
    for (const auto& op : ops) CHECK(is_hermitian(op.cast<complexd>(), 1e-10));

    // h_a + h_b = E_L (-phi_a - phi_b + theta_+)
    const auto d = space.dim_vector();
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(space.dim(), space.dim());
    add_site_operator(expected, -p.E_L, d, 0, space.modes().a.phase);
    add_site_operator(expected, -p.E_L, d, 1, space.modes().b.phase);
    add_site_operator(expected, p.E_L, d, 3, space.modes().plus.phase);
    CHECK((ops[0] + ops[1] - expected).norm() < 1e-10 * expected.norm());

    // coupler-line drive restricted to the difference mode has weight -E_Lc
    const long i0 = space.bare_index(0, 0, 0, 0);
    const long i1 = space.bare_index(0, 0, 1, 0);
    const double theta01 = space.modes().minus.phase(0, 1);
    CHECK(std::abs(ops[2](i0, i1) + p.E_Lc() * theta01) < 1e-10 * std::abs(theta01));

    // vanishing qubit inductance removes the qubit drives
    auto q = reference_device();
    q.E_L = 1e-12;
    ProductSpace tiny(q, flux, dims);
    const auto tops = tiny.drive_operators();
    CHECK(tops[0].norm() < 1e-10);
    CHECK(tops[1].norm() < 1e-10);
    Eigen::MatrixXd hc_expected = Eigen::MatrixXd::Zero(tiny.dim(), tiny.dim());
    add_site_operator(hc_expected, -q.E_Lc(), d, 2, tiny.modes().minus.phase);
    CHECK((tops[2] - hc_expected).norm() < 1e-9 * hc_expected.norm());
}

TEST_CASE("spectrum is invariant under coupler-flux reversal with relabeled qubits") {
    const auto p = reference_device();
    CircuitParams q = p;
    std::swap(q.E_Ja, q.E_Jb);
    std::swap(q.E_Ca, q.E_Cb);
    const ProductDims dims{6, 6, 5, 4, 110, 24};
    const double phic = 0.22 * two_pi;
    const double da = 0.03, db = -0.07;
    ProductSpace orig(p, FluxPoint::from_deltas(da, db, phic), dims);
    ProductSpace mirrored(q, FluxPoint::from_deltas(db, da, -phic), dims);
    const auto e1 = eigh_lowest(orig.hamiltonian(), 12).values;
    const auto e2 = eigh_lowest(mirrored.hamiltonian(), 12).values;
    for (int k = 0; k < 12; ++k)
        CHECK(std::abs(e1(k) - e2(k)) < 1e-8 * std::max(1.0, std::abs(e1(k))));
}

TEST_CASE("public assembly wrappers expose the product-basis representation") {
    const auto p = reference_device();
    const ProductDims dims{3, 3, 3, 2, 110, 24};
    const auto rep = assemble_static_hamiltonian(p, FluxPoint{pi, pi, 0.1 * two_pi}, {}, dims);
    CHECK(rep.basis_tag == "product-bare");
    CHECK(rep.dims == std::vector<int>{3, 3, 3, 2});
    CHECK(rep.dim() == 3 * 3 * 3 * 2);
    CHECK(is_hermitian(rep.matrix, 1e-10));
    const auto drives = drive_operators(p, FluxPoint{pi, pi, 0.1 * two_pi}, dims);
    for (const auto& dop : drives) CHECK(is_hermitian(dop.matrix, 1e-10));
}
