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
#include <numeric>
#include <random>

#include "helpers.hpp"

using namespace fluxgate;
using fluxgate::test::reference_device;
using fluxgate::test::rel_err;
using fluxgate::test::small_dims;

TEST_CASE("first-order generator data: selection rules, guards, scalings") {
    const auto p = reference_device();

    // at zero coupler flux the potential is even: even-n displacement
    // elements vanish and so do the couplings built from them
    const auto sw0 = sw_first_order(BareModes::build(p, 0.0));
    for (int n = 0; n < sw0.nc; n += 2)
        for (int mu = 0; mu < 2; ++mu) CHECK(sw0.g[mu][n].norm() < 1e-8);

    // dispersive smallness at the decoupling flux
    const auto off = find_off_position(p, OffPositionMode::effective);
    const auto sw = sw_first_order(BareModes::build(p, off.phi_c));
    CHECK(sw.max_eps1 < 0.15);
    CHECK(sw.dispersive_flag);

    // sum-mode coupling scales as (2 E_C+ / E_Lc)^(1/4)
    auto p2 = p;
    p2.E_Cplus *= 2.0;
    const auto sw2 = sw_first_order(BareModes::build(p2, off.phi_c));
    CHECK(rel_err(sw2.G[0](0, 1) / sw.G[0](0, 1), std::pow(2.0, 0.25)) < 1e-12);

    // the guard rejects non-dispersive denominators
    SwCutoffs tight;
    tight.denominator_guard = 50.0;  // far above every gap in the device
    CHECK_THROWS_AS(sw_first_order(BareModes::build(p, off.phi_c), tight), NonDispersive);
}

TEST_CASE("residual drive coefficients vanish on the sweet-spot contour") {
    const auto p = reference_device();
    for (double x : {0.05, 0.15, 0.25, 0.35, 0.45}) {
        const auto cm = contour_modes(p, x * two_pi);
        const auto [oa, ob] = omega_coeff(cm.modes, cm.flux);
        CHECK(std::abs(oa) < 1e-10);
        CHECK(std::abs(ob) < 1e-10);
        // first-order pairing: formula modes with the formula contour
        const auto bare = BareModes::build(p, x * two_pi);
        const auto [da, db] = sweet_spot_shift(bare);
        const auto [oa1, ob1] = omega_coeff(bare, FluxPoint::from_deltas(da, db, x * two_pi));
        CHECK(std::abs(oa1) < 1e-10);
        CHECK(std::abs(ob1) < 1e-10);
    }

    // both terms vanish independently at zero coupler flux
    const auto bare0 = BareModes::build(p, 0.0);
    const auto [oa0, ob0] = omega_coeff(bare0, FluxPoint{});
    CHECK(oa0 == 0.0);
    CHECK(ob0 == 0.0);
}

TEST_CASE("residual drive coefficient off the contour matches the exact splitting") {
    const auto p = reference_device();
    const auto off = find_off_position(p, OffPositionMode::effective);
    const auto modes = BareModes::build(p, off.phi_c);
    const FluxPoint biased = FluxPoint::from_deltas(0.01 * two_pi, off.delta_phi_b(), off.phi_c);
    const auto [omega_a, omega_b] = omega_coeff(modes, biased);
    (void)omega_b;

    // oracle: the transverse coefficient opens the dressed splitting as
    // sqrt(w0^2 + 4 Omega^2); extract it from the full model
    const auto dims = small_dims();
    auto splitting = [&](const FluxPoint& fp) {
        ProductSpace space(p, fp, dims);
        const auto es = diagonalize(space.hamiltonian(), 3, space.dim_vector());
        return es.energies(2) - es.energies(0);
    };
    const FluxPoint sweet = exact_sweet_point(p, off.phi_c);
    const double w0 = splitting(sweet);
    const double w1 = splitting(FluxPoint::from_deltas(
        sweet.delta_phi_a() + (0.01 * two_pi - off.delta_phi_a()), sweet.delta_phi_b(),
        off.phi_c));
    const double omega_exact = 0.5 * std::sqrt(std::max(0.0, w1 * w1 - w0 * w0));
    CHECK(rel_err(std::abs(omega_a), omega_exact) < 0.05);
}

TEST_CASE("sweet-spot contour geometry") {
    const auto p = reference_device();
    const auto [da0, db0] = sweet_spot_shift(p, 0.0);
    CHECK(da0 == 0.0);
    CHECK(db0 == 0.0);
    for (double x : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const auto [da, db] = sweet_spot_shift(p, x * two_pi);
        CHECK(da == Catch::Approx(-db).margin(1e-15));  // the bisecting plane
    }
}

TEST_CASE("Lamb shifts renormalize the qubit frequencies towards the exact gaps") {
    const auto p = reference_device();

    // no coupling, no shift
    auto weak = p;
    weak.E_L = 1e-10;
    const auto [ca0, cb0] = lamb_shift(sw_first_order(BareModes::build(weak, 0.2 * two_pi)));
    CHECK(std::abs(ca0) < 1e-12);
    CHECK(std::abs(cb0) < 1e-12);

    const auto off = find_off_position(p, OffPositionMode::effective);
    const auto ep = effective_params(p, off);
    CHECK(ep.omega_a_prime == Catch::Approx(ep.omega_a + ep.chi_a).margin(1e-15));
    CHECK(ep.omega_b_prime == Catch::Approx(ep.omega_b + ep.chi_b).margin(1e-15));

    const FluxPoint sweet = exact_sweet_point(p, off.phi_c);
    ProductSpace space(p, sweet, small_dims());
    const auto es = diagonalize(space.hamiltonian(), 3, space.dim_vector());
    CHECK(rel_err(ep.omega_a_prime, es.energies(2) - es.energies(0)) < 0.02);
    CHECK(rel_err(ep.omega_b_prime, es.energies(1) - es.energies(0)) < 0.02);

    // dispersiveness degrades with shrinking coupler charging energy
    auto shallow = p;
    shallow.E_Jc = 5.5;
    shallow.E_Cminus = 7.0;
    const auto off2 = find_off_position(shallow, OffPositionMode::effective);
    const auto ep2 = effective_params(shallow, off2);
    CHECK(std::abs(ep2.chi_a) > std::abs(ep.chi_a));
}

TEST_CASE("coupling strength: structure, zero crossing and scale") {
    const auto p = reference_device();

    // without difference-mode couplings only the static part survives
    auto sw = sw_first_order(BareModes::build(p, 0.27 * two_pi));
    for (auto& gs : sw.g)
        for (auto& gm : gs) gm.setZero();
    const auto cs0 = coupling_strength(sw);
    CHECK(cs0.J_minus == 0.0);
    CHECK(cs0.J == Catch::Approx(-cs0.J_plus).margin(1e-15));
    CHECK(cs0.J_plus > 0.0);

    // J = J_- - J_+ exactly, by construction and on the device
    const auto cs = coupling_strength(p, 0.3 * two_pi);
    CHECK(cs.J == Catch::Approx(cs.J_minus - cs.J_plus).margin(1e-12));

    // the contour-consistent coupling changes sign once, at tens of MHz scale
    std::vector<double> js;
    double max_abs = 0.0;
    for (double x = 0.05; x <= 0.451; x += 0.05) {
        const double j = coupling_strength_on_contour(p, x * two_pi).J;
        js.push_back(j);
        max_abs = std::max(max_abs, std::abs(j));
    }
    int sign_changes = 0;
    for (size_t k = 1; k < js.size(); ++k)
        if (js[k - 1] * js[k] < 0.0) ++sign_changes;
    CHECK(sign_changes == 1);
    CHECK(max_abs * 1e3 > 5.0);
    CHECK(max_abs * 1e3 < 60.0);
}

TEST_CASE("off position: location, modes, failure without flux tunability") {
    const auto p = reference_device();
    const auto eff = find_off_position(p, OffPositionMode::effective);
    CHECK(eff.phi_c / two_pi > 0.26);
    CHECK(eff.phi_c / two_pi < 0.28);
    CHECK(std::abs(coupling_strength_on_contour(p, eff.phi_c).J) < 1e-6);

    // the signed exact coupling estimate crosses zero at the same flux
    // within the scan resolution
    const auto dims = small_dims();
    auto jmix = [&](double phic) {
        ProductSpace space(p, exact_sweet_point(p, phic), dims);
        auto es = diagonalize(space.hamiltonian(), 6, space.dim_vector());
        label_dressed(es, false);
        return coupling_from_mixing(es);
    };
    const double dstep = 0.004 * two_pi;
    CHECK(jmix(eff.phi_c - dstep) * jmix(eff.phi_c + dstep) < 0.0);

    // a nearly harmonic coupler has no zero crossing to find
    auto rigid = p;
    rigid.E_Jc = 1e-6;
    CHECK_THROWS_AS(find_off_position(rigid, OffPositionMode::effective), NoOffPosition);
}

TEST_CASE("flux sensitivity of the tunable coupling") {
    const auto p = reference_device();
    const double s = flux_sensitivity(p);
    CHECK(std::abs(s) > 30.0);   // h*MHz per flux quantum
    CHECK(std::abs(s) < 300.0);

    // harmonic limit: the coupling loses its flux dependence
    auto rigid = p;
    rigid.E_Jc = 1e-6;
    const double h = 1e-4 * two_pi;
    const double j1 = coupling_strength(rigid, 0.25 * two_pi - h).J_minus;
    const double j2 = coupling_strength(rigid, 0.25 * two_pi + h).J_minus;
    CHECK(std::abs((j2 - j1) / (2.0 * h) * two_pi * 1e3) < 0.1);

    // tunability grows with the coupler Josephson energy
    auto weaker = p;
    weaker.E_Jc = 2.0;
    CHECK(std::abs(flux_sensitivity(weaker)) < std::abs(s));
}

TEST_CASE("inductive disorder shifts the sweet spot; capacitive disorder does not") {
    const auto p = reference_device();
    const auto off = find_off_position(p, OffPositionMode::effective);
    const auto modes = BareModes::build(p, off.phi_c);

    const auto [za, zb] = disorder_sweet_spot_shift(modes, DisorderParams{});
    CHECK(za == 0.0);
    CHECK(zb == 0.0);

    DisorderParams cap;
    cap.dC = 0.1;
    const auto [ca, cb] = disorder_sweet_spot_shift(modes, cap);
    CHECK(ca == 0.0);
    CHECK(cb == 0.0);

    DisorderParams ind;
    ind.dE_L = 0.05;
    const auto [sa, sb] = disorder_sweet_spot_shift(modes, ind);
    CHECK(std::abs(sa) > 0.0);
    CHECK(std::abs(sb) > 0.0);

    // re-bias restores a vanishing total transverse coefficient
    const auto [oa, ob] = omega_coeff(modes, off);
    const double total_a = oa + sa;
    const double phi01 = modes.a.phase_01();
    const double rebias = -total_a / (p.E_L * phi01);
    const FluxPoint corrected = FluxPoint::from_deltas(off.delta_phi_a() + rebias,
                                                       off.delta_phi_b(), off.phi_c);
    const auto [oa2, ob2] = omega_coeff(modes, corrected);
    CHECK(std::abs(oa2 + sa) < 1e-12);
    (void)ob;
    (void)ob2;
}

TEST_CASE("capacitive disorder has no second-order transverse contribution") {
    // direct second-order perturbation sum with explicit product-space
    // matrices: the dC-linear cross terms between the charge-charge vertex
    // and the inductive coupling vertices, evaluated on the 00 <-> 10
    // transition. The disorder vertex excites both coupler modes at once,
    // which a single inductive vertex cannot undo, so the sum vanishes.
    const auto p = reference_device();
    const ProductDims dims{4, 4, 4, 3, 110, 24};
    const FluxPoint sweet{pi, pi, 0.27 * two_pi};
    ProductSpace space(p, sweet, dims);
    DisorderParams cap;
    cap.dC = 0.05;
    ProductSpace space_cap(p, sweet, dims, cap);
    const Eigen::MatrixXd h_plain = space.hamiltonian();
    const Eigen::MatrixXd h_cap = space_cap.hamiltonian() - h_plain;  // dC vertex alone

    // bare energies and the coupling vertex
    const auto& m = space.modes();
    Eigen::VectorXd e0(space.dim());
    for (long idx = 0; idx < space.dim(); ++idx) {
        const auto l = space.bare_labels(idx);
        e0(idx) = m.a.energies(l[0]) + m.b.energies(l[1]) + m.minus.energies(l[2]) +
                  m.plus.energies(l[3]);
    }
    const Eigen::MatrixXd v = h_plain - Eigen::MatrixXd(e0.asDiagonal());

    const long pi_ = space.bare_index(0, 0, 0, 0);
    const long qi = space.bare_index(1, 0, 0, 0);
    double acc = 0.0;
    for (long vv = 0; vv < space.dim(); ++vv) {
        const auto l = space.bare_labels(vv);
        if (l[0] < 2 && l[1] < 2 && l[2] == 0 && l[3] == 0) continue;  // inside the subspace
        const double weight =
            0.5 * (1.0 / (e0(pi_) - e0(vv)) + 1.0 / (e0(qi) - e0(vv)));
        acc += (h_cap(pi_, vv) * v(vv, qi) + v(pi_, vv) * h_cap(vv, qi)) * weight;
    }
    CHECK(std::abs(acc) < 1e-10);
}

TEST_CASE("second-order sums are invariant under reordering") {
    const auto p = reference_device();
    const auto sw = sw_first_order(BareModes::build(p, 0.27 * two_pi));

    auto chi_terms = [&](int mu, int j) {
        std::vector<double> terms;
        for (int jp = 0; jp < sw.jq; ++jp) {
            for (int n = 0; n < sw.nc; ++n) {
                if (!sw.prime_allowed(jp, n)) continue;
                const double g = sw.g[mu][n](j, jp);
                terms.push_back(-g * g / sw.delta[mu][n](j, jp));
            }
            const double G = sw.G[mu](j, jp);
            terms.push_back(-G * G / sw.Delta[mu](j, jp));
        }
        return terms;
    };
    auto terms = chi_terms(0, 1);
    const double direct = std::accumulate(terms.begin(), terms.end(), 0.0);
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 8; ++trial) {
        std::shuffle(terms.begin(), terms.end(), rng);
        const double shuffled = std::accumulate(terms.begin(), terms.end(), 0.0);
        CHECK(rel_err(shuffled, direct) < 1e-12);
    }

    // the reference sum agrees with the library result
    const auto [ca, cb] = lamb_shift(sw);
    (void)cb;
    auto t0 = chi_terms(0, 0);
    const double chi_a =
        direct - std::accumulate(t0.begin(), t0.end(), 0.0);
    CHECK(rel_err(chi_a, ca) < 1e-12);
}

TEST_CASE("dressed drive matrices: values, hermiticity, dispersive trend") {
    const auto p = reference_device();
    const auto off = find_off_position(p, OffPositionMode::effective);
    const FluxPoint sweet = exact_sweet_point(p, off.phi_c);

    const auto modes = BareModes::build(p, off.phi_c);
    const auto ha_semi = dressed_drive_elements_semi(modes, FluxLine::a);
    const auto hc_semi = dressed_drive_elements_semi(modes, FluxLine::c);
    CHECK(rel_err(std::abs(ha_semi(0, 2)), 0.558) < 0.05);
    CHECK(rel_err(std::abs(ac_coupling(hc_semi)), 0.0143) < 0.05);

    FullModel fm(p, sweet, small_dims(), 20);
    const auto ha = fm.drive_elements(FluxLine::a);
    const auto hc = fm.drive_elements(FluxLine::c);
    CHECK((ha - ha.transpose()).norm() < 1e-10 * ha.norm());
    CHECK((hc - hc.transpose()).norm() < 1e-10 * hc.norm());
    CHECK(rel_err(std::abs(0.5 * (ha(0, 2) + ha(1, 3))), 0.561) < 0.05);
    CHECK(rel_err(std::abs(ac_coupling(hc)), 0.0183) < 0.05);

    // every coefficient of h_a other than the qubit-a drive stays small
    const auto coefs = pauli_coefficients(ha.cast<complexd>());
    for (int k = 1; k < 16; ++k) {
        if (k == 4) continue;  // the X (x) I component is the drive itself
        CHECK(std::abs(coefs[k]) < 2e-3);  // 2 h*MHz
    }

    // the qubit-b matrix follows the relabeling symmetry
    const auto hb_semi = dressed_drive_elements_semi(modes, FluxLine::b);
    const auto hb = fm.drive_elements(FluxLine::b);
    CHECK(rel_err(std::abs(hb_semi(0, 1)), std::abs(0.5 * (hb(0, 1) + hb(2, 3)))) < 0.05);

    // semi-analytic and exact coupler coefficients approach each other as
    // the coupler becomes more dispersive (larger inductive energy)
    double prev_gap = -1.0;
    for (double elp : {2.0, 4.0, 8.0}) {
        auto q = p;
        q.E_Lprime = elp;
        const auto off_q = find_off_position(q, OffPositionMode::effective);
        const auto semi = ac_coupling(
            dressed_drive_elements_semi(BareModes::build(q, off_q.phi_c), FluxLine::c));
        FullModel fq(q, exact_sweet_point(q, off_q.phi_c), small_dims(), 8);
        const auto exact = ac_coupling(fq.drive_elements(FluxLine::c));
        const double gap = std::abs(semi - exact) / std::abs(exact);
        if (prev_gap >= 0.0) CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}

TEST_CASE("uncoupled qubits produce no ac coupling") {
    auto weak = reference_device();
    weak.E_L = 1e-9;
    ProductSpace space(weak, FluxPoint{pi, pi, 0.27 * two_pi}, ProductDims{4, 4, 4, 3, 110, 24});
    auto es = diagonalize(space.hamiltonian(), 8, space.dim_vector());
    label_dressed(es, false);
    const auto hc = dressed_drive_elements_exact(es, space.drive_operators()[2]);
    CHECK(std::abs(ac_coupling(hc)) < 1e-9);
}

TEST_CASE("effective parameters summarize the interaction consistently") {
    const auto p = reference_device();
    const auto cm = contour_modes(p, 0.3 * two_pi);
    const auto ep = effective_params(p, cm.flux);
    CHECK(ep.J == Catch::Approx(ep.J_minus - ep.J_plus).margin(1e-12));
    CHECK(std::abs(ep.Omega_a) < 1e-9);
    CHECK(std::abs(ep.Omega_b) < 1e-9);
    const Eigen::Matrix4d heff = effective_hamiltonian(ep);
    CHECK((heff - heff.transpose()).norm() < 1e-12);
}
