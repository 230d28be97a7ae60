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
#include <complex>
#include <lapacke.h>
#include <vector>

#include "fluxgate/errors.hpp"

namespace fluxgate {

using complexd = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

/// Relative Frobenius hermiticity defect ||M - M^dag|| / ||M||.
inline double hermiticity_defect(const Eigen::MatrixXcd& m) {
    const double norm = m.norm();
    if (norm == 0.0) return 0.0;
    return (m - m.adjoint()).norm() / norm;
}

inline bool is_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-10) {
    return hermiticity_defect(m) <= tol;
}

struct EighResult {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // one column per value
};

/// Lowest n_levels eigenpairs of a real symmetric matrix (LAPACK dsyevr).
/// The input matrix is copied; pass by value when the caller can donate it.
inline EighResult eigh_lowest(Eigen::MatrixXd a, int n_levels) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw BasisIncompatible("eigh_lowest: matrix not square");
    if (n_levels < 1 || n_levels > n)
        throw InvalidParameters("eigh_lowest: level count out of range");
    EighResult res;
    res.values.resize(n_levels);
    res.vectors.resize(n, n_levels);
    std::vector<int> isuppz(2 * static_cast<size_t>(n_levels));
    int m = 0;
    const int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, 1, n_levels,
        0.0, &m, res.values.data(), res.vectors.data(), n, isuppz.data());
    if (info != 0 || m != n_levels)
        throw NumericalFailure("eigh_lowest: dsyevr failed, info=" + std::to_string(info));
    return res;
}

/// Full spectrum of a real symmetric matrix (LAPACK dsyevd).
inline EighResult eigh_full(Eigen::MatrixXd a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw BasisIncompatible("eigh_full: matrix not square");
    EighResult res;
    res.values.resize(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, res.values.data());
    if (info != 0)
        throw NumericalFailure("eigh_full: dsyevd failed, info=" + std::to_string(info));
    res.vectors = std::move(a);
    return res;
}

struct EighResultC {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

/// Full spectrum of a complex Hermitian matrix (LAPACK zheevd).
inline EighResultC eigh_full(Eigen::MatrixXcd a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw BasisIncompatible("eigh_full: matrix not square");
    EighResultC res;
    res.values.resize(n);
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n,
                                    reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                    res.values.data());
    if (info != 0)
        throw NumericalFailure("eigh_full: zheevd failed, info=" + std::to_string(info));
    res.vectors = std::move(a);
    return res;
}

/// Adds coeff * (op at site) to a product-space matrix, identity elsewhere.
/// dims are per-site dimensions, slowest index first.
inline void add_site_operator(Eigen::MatrixXd& h, double coeff, const std::vector<int>& dims,
                              int site, const Eigen::MatrixXd& op) {
    const int ns = static_cast<int>(dims.size());
    int left = 1, right = 1;
    for (int s = 0; s < site; ++s) left *= dims[s];
    for (int s = site + 1; s < ns; ++s) right *= dims[s];
    const int d = dims[site];
    if (op.rows() != d || op.cols() != d)
        throw BasisIncompatible("add_site_operator: operator does not match site dimension");
    for (int l = 0; l < left; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double v = op(i, j);
                if (v == 0.0) continue;
                const long row0 = (static_cast<long>(l) * d + i) * right;
                const long col0 = (static_cast<long>(l) * d + j) * right;
                for (int r = 0; r < right; ++r) h(row0 + r, col0 + r) += coeff * v;
            }
}

/// Adds coeff * (opa at site_a) * (opb at site_b) with site_a < site_b.
inline void add_two_site_operator(Eigen::MatrixXd& h, double coeff, const std::vector<int>& dims,
                                  int site_a, const Eigen::MatrixXd& opa, int site_b,
                                  const Eigen::MatrixXd& opb) {
    const int ns = static_cast<int>(dims.size());
    if (!(site_a < site_b)) throw BasisIncompatible("add_two_site_operator: need site_a < site_b");
    int left = 1, mid = 1, right = 1;
    for (int s = 0; s < site_a; ++s) left *= dims[s];
    for (int s = site_a + 1; s < site_b; ++s) mid *= dims[s];
    for (int s = site_b + 1; s < ns; ++s) right *= dims[s];
    const int da = dims[site_a], db = dims[site_b];
    for (int l = 0; l < left; ++l)
        for (int ia = 0; ia < da; ++ia)
            for (int ja = 0; ja < da; ++ja) {
                const double va = opa(ia, ja);
                if (va == 0.0) continue;
                for (int m = 0; m < mid; ++m)
                    for (int ib = 0; ib < db; ++ib)
                        for (int jb = 0; jb < db; ++jb) {
                            const double v = va * opb(ib, jb);
                            if (v == 0.0) continue;
                            const long row0 =
                                (((static_cast<long>(l) * da + ia) * mid + m) * db + ib) * right;
                            const long col0 =
                                (((static_cast<long>(l) * da + ja) * mid + m) * db + jb) * right;
                            for (int r = 0; r < right; ++r) h(row0 + r, col0 + r) += coeff * v;
                        }
            }
}

/// Two-qubit Pauli matrices in the (00,01,10,11) ordering; index = 4*p_a + p_b
/// with 0=I, 1=X, 2=Y, 3=Z.
inline const std::array<Eigen::Matrix4cd, 16>& pauli_basis_2q() {
    static const std::array<Eigen::Matrix4cd, 16> basis = [] {
        std::array<Eigen::Matrix2cd, 4> p;
        const complexd i1(0.0, 1.0);
        p[0] << 1, 0, 0, 1;
        p[1] << 0, 1, 1, 0;
        p[2] << 0, -i1, i1, 0;
        p[3] << 1, 0, 0, -1;
        std::array<Eigen::Matrix4cd, 16> b;
        for (int ia = 0; ia < 4; ++ia)
            for (int ib = 0; ib < 4; ++ib)
                for (int r1 = 0; r1 < 2; ++r1)
                    for (int c1 = 0; c1 < 2; ++c1)
                        for (int r2 = 0; r2 < 2; ++r2)
                            for (int c2 = 0; c2 < 2; ++c2)
                                b[4 * ia + ib](2 * r1 + r2, 2 * c1 + c2) =
                                    p[ia](r1, c1) * p[ib](r2, c2);
        return b;
    }();
    return basis;
}

/// Pauli coefficients c_k = Tr(P_k M) / 4 of a two-qubit operator.
inline std::array<complexd, 16> pauli_coefficients(const Eigen::Matrix4cd& m) {
    std::array<complexd, 16> c;
    const auto& basis = pauli_basis_2q();
    for (int k = 0; k < 16; ++k) c[k] = (basis[k].adjoint() * m).trace() / 4.0;
    return c;
}

}  // namespace fluxgate
