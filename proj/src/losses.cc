// src/losses.cc

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
#include <optional>

#include "eemmi/brute-force.h"
#include "eemmi/ctc-loss.h"
#include "eemmi/mmi-loss.h"

namespace eemmi {

ModelParameters ModelParameters::Initial(const StateLm &lm) {
  const int L = lm.NumStates();
  ModelParameters p;
  p.transition_logits = VectorD::Zero(L);
  p.prior_logits = VectorD::Zero(L);
  p.state_lm = lm.q;
  return p;
}

VectorD ModelParameters::SelfLoopProbs() const {
  VectorD p(NumStates());
  for (int c = 0; c < NumStates(); ++c) p(c) = Sigmoid(transition_logits(c));
  return p;
}

VectorD ModelParameters::LogPriors() const {
  return prior_logits.array() - LogSumExp(prior_logits);
}

void ModelParameters::Validate() const {
  const auto L = transition_logits.size();
  if (L < 1 || prior_logits.size() != L || state_lm.rows() != L || state_lm.cols() != L)
    throw Error(ErrorKind::kShapeMismatch, "model parameters disagree on the number of states");
}

// ---------------------------------------------------------------------------

namespace {

double Enumerate(const MatrixD &y, const ModelParameters &params, StateId initial,
                 std::optional<std::span<const StateId>> gamma) {
  params.Validate();
  const int T = static_cast<int>(y.rows());
  const int L = params.NumStates();
  if (y.cols() != L) throw Error(ErrorKind::kShapeMismatch, "grid width differs from L");
  if (std::pow(static_cast<double>(L), T) > kBruteForceMaxSequences)
    throw Error(ErrorKind::kGuard, "instance too large to enumerate");

  // Plain probabilities; nothing shared with the kernels.
  VectorD prior = params.prior_logits.array().exp();
  prior /= prior.sum();
  std::vector<std::vector<double>> trans(L, std::vector<double>(L));
  for (int a = 0; a < L; ++a) {
    double p0 = 1.0 / (1.0 + std::exp(-params.transition_logits(a)));
    for (int b = 0; b < L; ++b)
      trans[a][b] = a == b ? p0 : (1.0 - p0) * params.state_lm(a, b);
  }

  double total = LogZero<double>();
  std::vector<int> s(T, 0);
  while (true) {
    bool keep = true;
    if (gamma) {
      // Collapse of s_0..s_T must equal gamma.
      std::size_t pos = 0;
      keep = (*gamma)[0] == initial;
      StateId prev = initial;
      for (int t = 0; t < T && keep; ++t) {
        if (s[t] == prev) continue;
        ++pos;
        keep = pos < gamma->size() && (*gamma)[pos] == s[t];
        prev = s[t];
      }
      keep = keep && pos + 1 == gamma->size();
    }
    if (keep) {
      double lw = 0;
      StateId prev = initial;
      for (int t = 0; t < T; ++t) {
        lw += std::log(trans[prev][s[t]]) + y(t, s[t]) - std::log(prior(s[t]));
        prev = s[t];
      }
      total = LogAdd(total, lw);
    }
    int t = T - 1;
    while (t >= 0 && ++s[t] == L) s[t--] = 0;
    if (t < 0) break;
  }
  return total;
}

}  // namespace

double BruteForceLogProb(const MatrixD &y, const ModelParameters &params,
                         std::span<const StateId> gamma) {
  if (gamma.empty()) throw Error(ErrorKind::kValidation, "empty transcript");
  return Enumerate(y, params, gamma[0], gamma);
}

double BruteForceLogProbAll(const MatrixD &y, const ModelParameters &params,
                            StateId initial_state) {
  return Enumerate(y, params, initial_state, std::nullopt);
}

// ---------------------------------------------------------------------------

CtcLabeling CtcLabeling::FromLabels(std::vector<StateId> labels, StateId blank) {
  CtcLabeling lab;
  lab.labels = std::move(labels);
  lab.expanded.reserve(2 * lab.labels.size() + 1);
  lab.expanded.push_back(blank);
  for (StateId l : lab.labels) {
    lab.expanded.push_back(l);
    lab.expanded.push_back(blank);
  }
  return lab;
}

int CtcLabeling::MinFrames() const {
  int n = static_cast<int>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

BestPath CtcBestPath(const MatrixD &y) {
  BestPath bp;
  bp.frames.resize(y.rows());
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < y.cols(); ++l)
      if (y(t, l) > y(t, best)) best = l;
    bp.frames[t] = static_cast<StateId>(best);
  }
  for (StateId s : CollapseStates(bp.frames))
    if (!StateInventory::IsReserved(s)) bp.labels.push_back(s);
  return bp;
}

}  // namespace eemmi
