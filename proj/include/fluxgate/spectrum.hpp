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
#include <functional>
#include <optional>
#include <vector>

#include "fluxgate/circuit.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/linalg.hpp"

namespace fluxgate {

/// Lowest eigenpairs of a static Hamiltonian in its construction basis,
/// optionally labeled by the bare product state of largest overlap.
struct EigenSystem {
    Eigen::VectorXd energies;    // ascending, h*GHz
    Eigen::MatrixXd states;      // eigenvectors, one column per level
    std::vector<int> dims;       // per-mode sizes of the construction basis
    std::vector<long> labels;    // flat bare index per level, -1 if unassigned

    int levels() const { return static_cast<int>(energies.size()); }

    long label_flat(int level) const {
        if (labels.empty() || labels[level] < 0)
            throw AmbiguousLabeling("eigensystem level carries no bare label");
        return labels[level];
    }

    /// Level index carrying the bare computational label (l_a, m_b, 0, 0).
    int computational_level(int la, int mb) const {
        const long flat = computational_flat_index(la, mb);
        for (int k = 0; k < levels(); ++k)
            if (!labels.empty() && labels[k] == flat) return k;
        throw AmbiguousLabeling("computational state |" + std::to_string(la) +
                                std::to_string(mb) + "> has no labeled level");
    }

    long computational_flat_index(int la, int mb) const {
        if (dims.size() != 4) throw BasisIncompatible("labels require the 4-mode product basis");
        return ((static_cast<long>(la) * dims[1] + mb) * dims[2]) * dims[3];
    }
};

/// Lowest n_levels eigenpairs of a real symmetric Hamiltonian.
inline EigenSystem diagonalize(const Eigen::MatrixXd& h, int n_levels,
                               std::vector<int> dims = {}) {
    auto sol = eigh_lowest(h, n_levels);
    EigenSystem es;
    es.energies = std::move(sol.values);
    es.states = std::move(sol.vectors);
    es.dims = dims.empty() ? std::vector<int>{static_cast<int>(h.rows())} : std::move(dims);
    return es;
}

/// OperatorRep entry point; rejects non-Hermitian inputs. Complex reps with a
/// negligible imaginary part take the real symmetric path.
inline EigenSystem diagonalize(const OperatorRep& h, int n_levels) {
    if (!is_hermitian(h.matrix)) throw InvalidParameters("diagonalize: operator is not Hermitian");
    const double imag_norm = h.matrix.imag().norm();
    if (imag_norm > 1e-12 * h.matrix.norm())
        throw BasisIncompatible("diagonalize: complex Hamiltonians are not used by this model");
    return diagonalize(Eigen::MatrixXd(h.matrix.real()), n_levels, h.dims);
}

/// Assigns to each retained dressed state the bare label of largest squared
/// overlap. Requires every squared overlap > 0.5 and injectivity over the
/// computational four; fixes the eigenvector gauge so <label|state> > 0.
/// With strict = false, levels failing the overlap rule keep label -1
/// instead of raising, as long as the computational four are assignable.
inline EigenSystem& label_dressed(EigenSystem& es, bool strict = true) {
    if (es.dims.size() != 4)
        throw BasisIncompatible("label_dressed expects the 4-mode product basis");
    es.labels.assign(es.levels(), -1);
    for (int k = 0; k < es.levels(); ++k) {
        int imax = 0;
        es.states.col(k).cwiseAbs().maxCoeff(&imax);
        const double overlap2 = es.states(imax, k) * es.states(imax, k);
        if (overlap2 <= 0.5) {
            if (strict)
                throw AmbiguousLabeling("dressed level " + std::to_string(k) +
                                        " has max squared overlap " + std::to_string(overlap2));
            continue;
        }
        if (es.states(imax, k) < 0.0) es.states.col(k) *= -1.0;
        es.labels[k] = imax;
    }
    // Injectivity over the computational four.
    std::array<long, 4> comp{};
    for (int la = 0; la < 2; ++la)
        for (int mb = 0; mb < 2; ++mb)
            comp[2 * la + mb] = es.computational_flat_index(la, mb);
    for (int i = 0; i < 4; ++i) {
        int found = -1;
        for (int k = 0; k < es.levels(); ++k)
            if (es.labels[k] == comp[i]) {
                if (found >= 0)
                    throw AmbiguousLabeling("two dressed levels claim one computational label");
                found = k;
            }
        if (found < 0)
            throw AmbiguousLabeling("no dressed level claims computational label " +
                                    std::to_string(i));
    }
    return es;
}

/// Residual ZZ interaction strength E_11 - E_10 - E_01 + E_00 in h*GHz,
/// evaluated on the labeled dressed energies.
inline double zz_strength(const EigenSystem& es) {
    const double e00 = es.energies(es.computational_level(0, 0));
    const double e01 = es.energies(es.computational_level(0, 1));
    const double e10 = es.energies(es.computational_level(1, 0));
    const double e11 = es.energies(es.computational_level(1, 1));
    return e11 - e10 - e01 + e00;
}

/// One row of a spectrum sweep: energies relative to ground at a flux point.
struct SpectrumRow {
    FluxPoint flux;
    Eigen::VectorXd gaps;        // E_k - E_0, ascending, h*GHz
    std::vector<long> labels;    // bare labels in energy order (may carry -1)
};

/// Diagonalizes the full model along a sequence of flux points. Labels are
/// tracked through the sweep: a level inherits the label of the previous
/// point's eigenvector it overlaps most (squared overlap > 0.5), falling
/// back to bare-state overlap at the first point or when tracking fails.
inline std::vector<SpectrumRow> spectrum_along_contour(const CircuitParams& params,
                                                       const std::vector<FluxPoint>& contour,
                                                       int n_levels, const ProductDims& dims = {},
                                                       const DisorderParams& disorder = {}) {
    std::vector<SpectrumRow> rows;
    rows.reserve(contour.size());
    Eigen::MatrixXd prev_states;
    std::vector<long> prev_labels;
    for (const auto& flux : contour) {
        ProductSpace space(params, flux, dims, disorder);
        EigenSystem es = diagonalize(space.hamiltonian(), n_levels, space.dim_vector());
        std::vector<long> labels(es.levels(), -1);
        bool tracked = false;
        if (prev_states.size() > 0) {
            tracked = true;
            for (int k = 0; k < es.levels() && tracked; ++k) {
                Eigen::VectorXd ov = (prev_states.transpose() * es.states.col(k)).cwiseAbs();
                int jmax = 0;
                const double o = ov.maxCoeff(&jmax);
                if (o * o > 0.5 && prev_labels[jmax] >= 0)
                    labels[k] = prev_labels[jmax];
                else
                    tracked = false;
            }
        }
        if (!tracked) {
            label_dressed(es, /*strict=*/false);
            labels = es.labels;
        }
        SpectrumRow row;
        row.flux = flux;
        row.gaps = es.energies.array() - es.energies(0);
        row.labels = labels;
        rows.push_back(std::move(row));
        prev_states = std::move(es.states);
        prev_labels = std::move(labels);
    }
    return rows;
}

}  // namespace fluxgate
