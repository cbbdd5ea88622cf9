// eemmi/brute-force.h

// Copyright 2026  eemmi contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EEMMI_BRUTE_FORCE_H_
#define EEMMI_BRUTE_FORCE_H_

// Exhaustive-enumeration reference for the lattice sums. Shares no code with
// the forward-backward kernels; meant for tests on tiny instances.

#include <span>

#include "eemmi/common.h"
#include "eemmi/mmi-loss.h"

namespace eemmi {

inline constexpr double kBruteForceMaxSequences = 1e7;

/// log of the sum over s_1..s_T (s_0 = gamma[0]) with collapse(s_0..s_T) ==
/// gamma of prod p_{s_{t-1}, s_t} exp(y_{t,s_t} - omega_{s_t}). -inf when no
/// sequence is consistent. Throws kGuard when L^T exceeds the limit.
double BruteForceLogProb(const MatrixD &y, const ModelParameters &params,
                         std::span<const StateId> gamma);

/// Same sum over every sequence starting in `initial_state`.
double BruteForceLogProbAll(const MatrixD &y, const ModelParameters &params,
                            StateId initial_state = kStartState);

}  // namespace eemmi

#endif  // EEMMI_BRUTE_FORCE_H_
