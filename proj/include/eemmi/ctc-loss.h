// eemmi/ctc-loss.h

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

#ifndef EEMMI_CTC_LOSS_H_
#define EEMMI_CTC_LOSS_H_

// CTC baseline on the same posterior grid and inventory as the MMI system:
// the shared blank state is the CTC blank and start/end outputs are unused.

#include <span>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"

namespace eemmi {

struct CtcLabeling {
  std::vector<StateId> labels;
  std::vector<StateId> expanded;  // blank, l1, blank, l2, ..., blank

  static CtcLabeling FromLabels(std::vector<StateId> labels, StateId blank = kBlankState);
  /// Frames needed: one per label plus one per identical neighbour pair.
  int MinFrames() const;
};

template <typename Scalar>
struct CtcOutput {
  Scalar loss = 0;           // log P_ctc(labels | y)
  Matrix<Scalar> grad_y;     // w.r.t. the activations feeding the log-softmax
  Matrix<Scalar> occupancy;  // per-frame label posteriors
};

/// Loss and gradient. The gradient is taken through the output
/// normalization (occupancy minus exp(y)), so rows sum to zero.
/// Throws kInfeasible when T < MinFrames().
template <typename Scalar>
CtcOutput<Scalar> CtcLossAndGrad(const LogPosteriorGrid<Scalar> &y, const CtcLabeling &lab,
                                 StateId blank = kBlankState) {
  const int T = static_cast<int>(y.rows());
  const int L = static_cast<int>(y.cols());
  if (T < 1) throw Error(ErrorKind::kValidation, "need at least one frame");
  if (!y.allFinite()) throw Error(ErrorKind::kValidation, "non-finite log posterior");
  if (blank < 0 || blank >= L) throw Error(ErrorKind::kValidation, "blank out of range");
  for (StateId l : lab.labels)
    if (l < 0 || l >= L || l == blank) throw Error(ErrorKind::kValidation, "bad CTC label");
  if (T < lab.MinFrames())
    throw Error(ErrorKind::kInfeasible, "CTC labeling needs " + std::to_string(lab.MinFrames()) +
                                            " frames, utterance has " + std::to_string(T));
  const auto &ext = lab.expanded;
  const int S = static_cast<int>(ext.size());
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  Matrix<Scalar> la = Matrix<Scalar>::Constant(T, S, LogZero<Scalar>());
  Matrix<Scalar> lb = Matrix<Scalar>::Constant(T, S, LogZero<Scalar>());
  la(0, 0) = y(0, ext[0]);
  if (S > 1) la(0, 1) = y(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      Scalar v = la(t - 1, s);
      if (s >= 1) v = LogAdd(v, la(t - 1, s - 1));
      if (can_skip(s)) v = LogAdd(v, la(t - 1, s - 2));
      if (v != LogZero<Scalar>()) la(t, s) = v + y(t, ext[s]);
    }
  }
  Scalar total = la(T - 1, S - 1);
  if (S > 1) total = LogAdd(total, la(T - 1, S - 2));

  // lb(t, s): log probability of frames t+1.. given position s at frame t.
  lb(T - 1, S - 1) = 0;
  if (S > 1) lb(T - 1, S - 2) = 0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      Scalar v = lb(t + 1, s) + y(t + 1, ext[s]);
      if (s + 1 < S) v = LogAdd(v, lb(t + 1, s + 1) + y(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(s + 2)) v = LogAdd(v, lb(t + 1, s + 2) + y(t + 1, ext[s + 2]));
      lb(t, s) = v;
    }
  }

  CtcOutput<Scalar> out;
  out.loss = total;
  out.occupancy.setZero(T, L);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      Scalar lo = la(t, s) + lb(t, s) - total;
      if (lo != LogZero<Scalar>()) out.occupancy(t, ext[s]) += std::exp(lo);
    }
  out.grad_y = out.occupancy - y.array().exp().matrix();
  return out;
}

struct BestPath {
  std::vector<StateId> frames;  // per-frame argmax, ties to the lowest id
  std::vector<StateId> labels;  // repeats merged, reserved states dropped
};

BestPath CtcBestPath(const MatrixD &y);

}  // namespace eemmi

#endif  // EEMMI_CTC_LOSS_H_
