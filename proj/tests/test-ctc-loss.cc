// tests/test-ctc-loss.cc

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

#include <cmath>
#include <random>

#include "doctest.h"
#include "eemmi/ctc-loss.h"
#include "test-util.h"

using namespace eemmi;
using namespace eemmi::testing;

namespace {

// Sum over all L^T frame label sequences that collapse (repeats merged,
// blanks removed) to `labels`.
double EnumerateCtc(const MatrixD &y, const std::vector<StateId> &labels) {
  const int T = static_cast<int>(y.rows()), L = static_cast<int>(y.cols());
  std::vector<StateId> s(T, 0);
  double total = 0;
  while (true) {
    std::vector<StateId> out;
    for (int t = 0; t < T; ++t)
      if (s[t] != kBlankState && (t == 0 || s[t] != s[t - 1])) out.push_back(s[t]);
    if (out == labels) {
      double lp = 0;
      for (int t = 0; t < T; ++t) lp += y(t, s[t]);
      total += std::exp(lp);
    }
    int t = 0;
    while (t < T && ++s[t] == L) s[t++] = 0;
    if (t == T) break;
  }
  return std::log(total);
}

}  // namespace

TEST_CASE("labeling expansion") {
  auto lab = CtcLabeling::FromLabels({3, 4, 4});
  CHECK(lab.expanded == std::vector<StateId>{2, 3, 2, 4, 2, 4, 2});
  CHECK(lab.MinFrames() == 4);
}

TEST_CASE("small cases by hand") {
  std::mt19937_64 rng(1);
  MatrixD y = RandomLogPosteriors(1, 5, rng);
  CHECK(CtcLossAndGrad<double>(y, CtcLabeling::FromLabels({3})).loss == doctest::Approx(y(0, 3)));

  MatrixD y2 = RandomLogPosteriors(2, 5, rng);
  const int a = 3, bl = kBlankState;
  double want = std::exp(y2(0, bl) + y2(1, a)) + std::exp(y2(0, a) + y2(1, bl)) +
                std::exp(y2(0, a) + y2(1, a));
  CHECK(CtcLossAndGrad<double>(y2, CtcLabeling::FromLabels({3})).loss ==
        doctest::Approx(std::log(want)).epsilon(1e-12));
}

TEST_CASE("matches enumeration") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> nlab(1, 3), Td(1, 6);
  std::uniform_int_distribution<StateId> lab(3, 5);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<StateId> labels(nlab(rng));
    for (auto &l : labels) l = lab(rng);
    auto labeling = CtcLabeling::FromLabels(labels);
    const int T = std::max(labeling.MinFrames(), Td(rng));
    MatrixD y = RandomLogPosteriors(T, 6, rng);
    auto out = CtcLossAndGrad<double>(y, labeling);
    CHECK(std::abs(out.loss - EnumerateCtc(y, labels)) < 1e-9);
    CHECK(out.loss <= 0);
    for (int t = 0; t < T; ++t) CHECK(std::abs(out.grad_y.row(t).sum()) < 1e-9);
  }
}

TEST_CASE("gradient matches central differences through the softmax") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 7, L = 6;
    MatrixD z = RandomLogPosteriors(T, L, rng);
    auto lab = CtcLabeling::FromLabels({3, 4, 4});
    auto out = CtcLossAndGrad<double>(z, lab);
    double worst = 0;
    const double eps = 1e-4;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      MatrixD up = z, down = z;
      up.data()[i] += eps;
      down.data()[i] -= eps;
      double fd = (CtcLossAndGrad<double>(LogSoftmaxRows(up), lab).loss -
                   CtcLossAndGrad<double>(LogSoftmaxRows(down), lab).loss) / (2 * eps);
      worst = std::max(worst, RelativeError(out.grad_y.data()[i], fd));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("infeasible length") {
  MatrixD y = MatrixD::Constant(2, 5, std::log(0.2));
  try {
    CtcLossAndGrad<double>(y, CtcLabeling::FromLabels({3, 3}));
    FAIL("expected infeasible");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
  }
}

TEST_CASE("best path") {
  auto onehot = [](std::vector<StateId> s, int L) {
    MatrixD y = MatrixD::Constant(static_cast<int>(s.size()), L, std::log(0.01));
    for (std::size_t t = 0; t < s.size(); ++t) y(t, s[t]) = std::log(0.9);
    return y;
  };
  auto bp = CtcBestPath(onehot({3, 3, kBlankState, 4}, 5));
  CHECK(bp.labels == std::vector<StateId>{3, 4});
  CHECK(bp.frames == std::vector<StateId>{3, 3, kBlankState, 4});
  CHECK(CtcBestPath(onehot({kBlankState, kBlankState}, 5)).labels.empty());
  MatrixD tie = MatrixD::Constant(1, 5, std::log(0.2));
  CHECK(CtcBestPath(tie).frames == std::vector<StateId>{0});
}
