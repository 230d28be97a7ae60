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

#include "fluxgate/fluxgate.hpp"

namespace fluxgate::test {

/// The reference two-qubit device used across the suite (energies in h*GHz).
inline CircuitParams reference_device() {
    CircuitParams p;
    p.E_Ja = 4.6;
    p.E_Jb = 5.5;
    p.E_Ca = 0.9;
    p.E_Cb = 0.9;
    p.E_L = 0.21;
    p.E_Jc = 3.0;
    p.E_Lprime = 2.0;
    p.E_Cminus = 14.3;
    p.E_Cplus = 100.0;
    return p;
}

/// Small product dimensions used by the fast full-model tests.
inline ProductDims small_dims() { return ProductDims{8, 8, 6, 4, 110, 24}; }

inline double rel_err(double value, double reference) {
    return std::abs(value - reference) / std::abs(reference);
}

}  // namespace fluxgate::test
