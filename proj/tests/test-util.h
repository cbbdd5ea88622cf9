// tests/test-util.h

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

#ifndef EEMMI_TESTS_TEST_UTIL_H_
#define EEMMI_TESTS_TEST_UTIL_H_

// Random instances shared by the unit tests and the acceptance suite.

#include <cmath>
#include <random>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"
#include "eemmi/mmi-loss.h"

namespace eemmi::testing {

inline MatrixD RandomLogPosteriors(int T, int L, std::mt19937_64 &rng, double spread = 2.0) {
  std::normal_distribution<double> n(0.0, spread);
  MatrixD z(T, L);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
  return LogSoftmaxRows(z);
}

/// Random row-stochastic state LM with a zero diagonal.
inline MatrixD RandomStateLm(int L, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  MatrixD q = MatrixD::Zero(L, L);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j)
      if (i != j) q(i, j) = u(rng);
    q.row(i) /= q.row(i).sum();
  }
  return q;
}

inline ModelParameters RandomParams(int L, std::mt19937_64 &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ModelParameters p;
  p.transition_logits.resize(L);
  p.prior_logits.resize(L);
  for (int c = 0; c < L; ++c) {
    p.transition_logits(c) = n(rng);
    p.prior_logits(c) = n(rng);
  }
  p.state_lm = RandomStateLm(L, rng);
  return p;
}

/// gamma_0 = start followed by K states, none equal to its predecessor.
inline std::vector<StateId> RandomGamma(int K, int L, std::mt19937_64 &rng) {
  std::uniform_int_distribution<StateId> pick(0, L - 1);
  std::vector<StateId> g{kStartState};
  while (static_cast<int>(g.size()) <= K) {
    StateId s = pick(rng);
    if (s != g.back()) g.push_back(s);
  }
  return g;
}

/// |a - b| / max(|a|, |b|, floor).
inline double RelativeError(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace eemmi::testing

#endif  // EEMMI_TESTS_TEST_UTIL_H_
