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

#include <stdexcept>
#include <string>

namespace fluxgate {

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Circuit energies violate positivity or ordering constraints.
struct InvalidParameters : Error {
    using Error::Error;
};

/// Oscillator or product basis too small for the requested construction.
struct TruncationTooSmall : Error {
    using Error::Error;
};

/// Operators expressed in incompatible bases were combined.
struct BasisIncompatible : Error {
    using Error::Error;
};

/// An energy denominator of the perturbative expansion fell under the guard.
struct NonDispersive : Error {
    using Error::Error;
};

/// A dressed state could not be assigned a bare label (max overlap <= 0.5).
struct AmbiguousLabeling : Error {
    using Error::Error;
};

/// The coupling strength has no zero crossing in the search bracket.
struct NoOffPosition : Error {
    using Error::Error;
};

/// Drive frequency too close to a subspace resonance for the amplitude solve.
struct DegenerateDrive : Error {
    using Error::Error;
};

/// The two-level propagators do not satisfy the half-swap conditions.
struct NotAPhiSwap : Error {
    using Error::Error;
};

/// No identity-pulse insertion exists within the flux-amplitude window.
struct ScheduleInfeasible : Error {
    using Error::Error;
};

/// Reconstruction input-consistency check failed: the map is not linear.
struct NotAChannel : Error {
    using Error::Error;
};

/// Numerical failure inside an integrator or eigensolver.
struct NumericalFailure : Error {
    using Error::Error;
};

}  // namespace fluxgate
