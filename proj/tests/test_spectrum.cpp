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

#include "helpers.hpp"

using namespace fluxgate;
using fluxgate::test::reference_device;
using fluxgate::test::rel_err;
using fluxgate::test::small_dims;

TEST_CASE("diagonalize: analytic checks and residual bound") {
    // harmonic ladder
    const auto p = reference_device();
    const auto mode = build_coupler_plus(p, 10);
    auto es = diagonalize(mode.hamiltonian, 6);
    const double w = std::sqrt(8.0 * p.E_Cplus * p.E_Lc());
    for (int k = 1; k < 6; ++k)
        CHECK(rel_err(es.energies(k) - es.energies(k - 1), w) < 1e-9);

    // 2x2 closed form
    Eigen::MatrixXd two(2, 2);
    two << 1.0, 0.7, 0.7, -0.4;
    const double tr = two.trace(), det = two.determinant();
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    auto es2 = diagonalize(two, 2);
    CHECK(es2.energies(0) == Catch::Approx(tr / 2.0 - disc).epsilon(1e-14));
    CHECK(es2.energies(1) == Catch::Approx(tr / 2.0 + disc).epsilon(1e-14));

    // non-Hermitian rejection
    OperatorRep bad;
    bad.matrix = Eigen::MatrixXcd::Zero(2, 2);
    bad.matrix(0, 1) = 1.0;
    CHECK_THROWS_AS(diagonalize(bad, 2), InvalidParameters);

    // residual bound on a full-model instance
    ProductSpace space(p, FluxPoint{pi, pi, 0.27 * two_pi}, ProductDims{5, 5, 4, 3, 110, 24});
    const Eigen::MatrixXd h = space.hamiltonian();
    auto esf = diagonalize(h, 10, space.dim_vector());
    const double hnorm = h.norm();
    for (int k = 0; k < 10; ++k) {
        const double res = (h * esf.states.col(k) - esf.energies(k) * esf.states.col(k)).norm();
        CHECK(res < 1e-8 * hnorm);
        CHECK(std::abs(esf.states.col(k).norm() - 1.0) < 1e-9);
        for (int l = 0; l < k; ++l)
            CHECK(std::abs(esf.states.col(k).dot(esf.states.col(l))) < 1e-9);
    }
}

TEST_CASE("labeling: decoupled limit, dispersive overlaps, ambiguity") {
    // decoupled limit: labels exact, overlaps one
    auto weak = reference_device();
    weak.E_L = 1e-12;
    ProductSpace space(weak, FluxPoint{pi, pi, 0.27 * two_pi}, ProductDims{4, 4, 4, 3, 110, 24});
    auto es = diagonalize(space.hamiltonian(), 8, space.dim_vector());
    label_dressed(es);
    for (int la = 0; la < 2; ++la)
        for (int mb = 0; mb < 2; ++mb) {
            const int k = es.computational_level(la, mb);
            const long flat = es.computational_flat_index(la, mb);
            CHECK(std::abs(es.states(flat, k)) > 1.0 - 1e-9);
        }

    // coupled device: computational overlaps stay above 0.9
    const auto p = reference_device();
    ProductSpace coupled(p, contour_modes(p, 0.27 * two_pi).flux, small_dims());
    auto esc = diagonalize(coupled.hamiltonian(), 6, coupled.dim_vector());
    label_dressed(esc, false);
    for (int la = 0; la < 2; ++la)
        for (int mb = 0; mb < 2; ++mb) {
            const int k = esc.computational_level(la, mb);
            const double ov = esc.states(esc.computational_flat_index(la, mb), k);
            CHECK(ov * ov > 0.9);
        }

    // a resonant pair mixes 50/50 and cannot be labeled
    Eigen::MatrixXd resonant = Eigen::MatrixXd::Zero(8, 8);
    for (int k = 0; k < 8; ++k) resonant(k, k) = k;
    resonant(4, 5) = resonant(5, 4) = 0.3;
    resonant(4, 4) = resonant(5, 5) = 4.5;
    auto esr = diagonalize(resonant, 8, {2, 2, 2, 1});
    CHECK_THROWS_AS(label_dressed(esr), AmbiguousLabeling);
}

TEST_CASE("residual ZZ strength: additive limit and fixed-device values") {
    // uncoupled energies are additive, so the combination vanishes
    auto weak = reference_device();
    weak.E_L = 1e-12;
    ProductSpace space(weak, FluxPoint{pi, pi, 0.2 * two_pi}, ProductDims{4, 4, 4, 3, 110, 24});
    auto es = diagonalize(space.hamiltonian(), 6, space.dim_vector());
    label_dressed(es);
    CHECK(std::abs(zz_strength(es)) < 1e-10);

    EigenSystem unlabeled = es;
    unlabeled.labels.clear();
    CHECK_THROWS_AS(zz_strength(unlabeled), AmbiguousLabeling);

    // the coupled device along the refined contour: small near the
    // decoupling flux, growing away from it
    const auto p = reference_device();
    auto zz_at = [&](double phic) {
        ProductSpace sp(p, exact_sweet_point(p, phic), small_dims());
        auto e = diagonalize(sp.hamiltonian(), 6, sp.dim_vector());
        label_dressed(e, false);
        return zz_strength(e);
    };
    const double z_off = zz_at(0.268 * two_pi);
    const double z_on = zz_at(0.10 * two_pi);
    CHECK(std::abs(z_off) < 2e-6);          // h*GHz, i.e. below 2 kHz
    CHECK(std::abs(z_on) > 10.0 * std::abs(z_off));
}

TEST_CASE("spectrum along the contour: consistency and label tracking") {
    const auto p = reference_device();
    const auto dims = small_dims();
    std::vector<FluxPoint> contour;
    for (double x : {0.10, 0.17, 0.24, 0.31, 0.38})
        contour.push_back(contour_modes(p, x * two_pi).flux);
    const auto rows = spectrum_along_contour(p, contour, 6, dims);
    REQUIRE(rows.size() == contour.size());

    // single-point call agrees with a direct diagonalization
    ProductSpace space(p, contour[2], dims);
    auto es = diagonalize(space.hamiltonian(), 6, space.dim_vector());
    for (int k = 0; k < 6; ++k)
        CHECK(rows[2].gaps(k) ==
              Catch::Approx(es.energies(k) - es.energies(0)).margin(1e-12));

    // computational labels persist across the sweep without swaps
    for (const auto& row : rows) {
        int found = 0;
        for (int la = 0; la < 2; ++la)
            for (int mb = 0; mb < 2; ++mb) {
                const long flat =
                    ((static_cast<long>(la) * dims.qubit_b + mb) * dims.minus) * dims.plus;
                for (size_t k = 0; k < row.labels.size(); ++k)
                    if (row.labels[k] == flat) ++found;
            }
        CHECK(found == 4);
    }

    // exact gaps track the effective model to 1.5 percent
    for (const auto& row : rows) {
        const auto ep = effective_params(p, row.flux, dims);
        const Eigen::Matrix4d heff = effective_hamiltonian(ep);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(heff);
        for (int k = 1; k < 4; ++k) {
            const double eff_gap = solver.eigenvalues()(k) - solver.eigenvalues()(0);
            CHECK(rel_err(row.gaps(k), eff_gap) < 0.015);
        }
    }
}
