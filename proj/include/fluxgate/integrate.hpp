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
#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>
#include <complex>

#include "fluxgate/errors.hpp"
#include "fluxgate/linalg.hpp"

namespace boost::numeric::odeint {

// The stock Eigen binding reports the norm in the scalar type, which does
// not compile for complex states; the error norm must be real.
template <>
struct vector_space_norm_inf<Eigen::VectorXcd> {
    typedef double result_type;
    result_type operator()(const Eigen::VectorXcd& v) const { return v.cwiseAbs().maxCoeff(); }
};

}  // namespace boost::numeric::odeint

namespace fluxgate {

/// Integrates d/dt X = F(t, X) for a complex matrix state over [t0, t1] with
/// an adaptive 8(7) Runge-Kutta scheme. F is called as F(t, X, dX).
template <class Rhs>
void integrate_complex_ode(Rhs&& rhs, Eigen::MatrixXcd& state, double t0, double t1,
                           double rtol = 1e-10, double atol = 1e-12) {
    namespace ode = boost::numeric::odeint;
    if (t1 <= t0) return;
    const long n = state.rows(), k = state.cols();
    Eigen::VectorXcd flat = Eigen::Map<Eigen::VectorXcd>(state.data(), n * k);
    auto system = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt, double t) {
        dxdt.resize(x.size());
        Eigen::Map<const Eigen::MatrixXcd> xm(x.data(), n, k);
        Eigen::Map<Eigen::MatrixXcd> dm(dxdt.data(), n, k);
        rhs(t, xm, dm);
    };
    using Stepper = ode::runge_kutta_fehlberg78<Eigen::VectorXcd, double, Eigen::VectorXcd,
                                                double, ode::vector_space_algebra>;
    auto ctrl = ode::make_controlled<Stepper>(atol, rtol, Stepper());
    const double dt0 = std::min(1e-3, (t1 - t0) / 16.0);
    try {
        ode::integrate_adaptive(ctrl, system, flat, t0, t1, dt0);
    } catch (const std::exception& e) {
        throw NumericalFailure(std::string("adaptive integration failed: ") + e.what());
    }
    state = Eigen::Map<Eigen::MatrixXcd>(flat.data(), n, k);
}

}  // namespace fluxgate
