// src/decoder.cc

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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>

#include "eemmi/decode.h"
#include "eemmi/metrics.h"

namespace eemmi {

void DecodeConfig::Validate() const {
  if (!(beam > 0)) throw Error(ErrorKind::kValidation, "beam must be positive");
  if (!(acoustic_scale > 0 && acoustic_scale <= 1))
    throw Error(ErrorKind::kValidation, "acoustic scale must lie in (0, 1]");
}

namespace {

struct Trace {
  int prev;  // index into the trace arena, -1 at the start
  Label ilabel;
  Label olabel;
};

struct Token {
  double cost;
  int trace;
};

using TokenMap = std::map<WfstStateId, Token>;

// Relaxes epsilon-input arcs until no cost improves. Back-off arcs can carry
// negative weights, so a state may be revisited.
void ProcessNonEmitting(const Wfst &graph, TokenMap *tokens, std::vector<Trace> *arena) {
  std::deque<WfstStateId> queue;
  for (const auto &[s, tok] : *tokens) queue.push_back(s);
  std::size_t budget = 1000 * (tokens->size() + 1) + 1000000;
  while (!queue.empty()) {
    if (budget-- == 0) throw Error(ErrorKind::kGuard, "epsilon closure does not converge");
    WfstStateId s = queue.front();
    queue.pop_front();
    const Token tok = tokens->at(s);
    for (const Arc &arc : graph.Arcs(s)) {
      if (arc.ilabel != kEpsilon) continue;
      double total = tok.cost + arc.weight;
      auto it = tokens->find(arc.nextstate);
      if (it != tokens->end() && !(total < it->second.cost)) continue;
      arena->push_back({tok.trace, kEpsilon, arc.olabel});
      Token nt{total, static_cast<int>(arena->size()) - 1};
      if (it == tokens->end())
        tokens->emplace(arc.nextstate, nt);
      else
        it->second = nt;
      queue.push_back(arc.nextstate);
    }
  }
}

void Prune(TokenMap *tokens, double beam, int max_active) {
  if (tokens->empty()) return;
  double best = kInfinity;
  for (const auto &[s, tok] : *tokens) best = std::min(best, tok.cost);
  const double limit = best + beam;
  for (auto it = tokens->begin(); it != tokens->end();)
    it = it->second.cost > limit ? tokens->erase(it) : std::next(it);
  if (max_active > 0 && tokens->size() > static_cast<std::size_t>(max_active)) {
    std::vector<std::pair<double, WfstStateId>> order;
    for (const auto &[s, tok] : *tokens) order.emplace_back(tok.cost, s);
    std::nth_element(order.begin(), order.begin() + max_active, order.end());
    for (auto it = order.begin() + max_active; it != order.end(); ++it) tokens->erase(it->second);
  }
}

}  // namespace

DecodeResult ViterbiBeamDecode(const Wfst &graph, const MatrixD &log_posteriors,
                               const VectorD &log_priors, const DecodeConfig &config) {
  config.Validate();
  if (log_posteriors.cols() != log_priors.size())
    throw Error(ErrorKind::kShapeMismatch, "posterior grid and priors disagree on L");
  const int L = static_cast<int>(log_priors.size());
  const int T = static_cast<int>(log_posteriors.rows());
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Trace> arena;
  arena.push_back({-1, kEpsilon, kEpsilon});
  TokenMap cur;
  cur.emplace(graph.Start(), Token{0.0, 0});
  ProcessNonEmitting(graph, &cur, &arena);
  Prune(&cur, config.beam, config.max_active);

  for (int t = 0; t < T; ++t) {
    TokenMap next;
    for (const auto &[s, tok] : cur) {
      for (const Arc &arc : graph.Arcs(s)) {
        if (arc.ilabel == kEpsilon) continue;
        StateId c = UnitOfLabel(arc.ilabel);
        if (c < 0 || c >= L)
          throw Error(ErrorKind::kShapeMismatch, "graph label outside the posterior grid");
        double acoustic = -config.acoustic_scale * (log_posteriors(t, c) - log_priors(c));
        double total = tok.cost + (arc.weight + acoustic);
        if (!(total < kInfinity)) continue;
        auto it = next.find(arc.nextstate);
        if (it != next.end() && !(total < it->second.cost)) continue;
        arena.push_back({tok.trace, arc.ilabel, arc.olabel});
        Token nt{total, static_cast<int>(arena.size()) - 1};
        if (it == next.end())
          next.emplace(arc.nextstate, nt);
        else
          it->second = nt;
      }
    }
    ProcessNonEmitting(graph, &next, &arena);
    Prune(&next, config.beam, config.max_active);
    cur.swap(next);
  }

  double best = kInfinity;
  int best_trace = -1;
  for (const auto &[s, tok] : cur) {
    if (!graph.IsFinal(s)) continue;
    double total = tok.cost + graph.Final(s);
    if (total < best) {
      best = total;
      best_trace = tok.trace;
    }
  }
  if (best_trace < 0) throw Error(ErrorKind::kEmptyResult, "no final state reached");

  DecodeResult result;
  result.score = best;
  result.num_frames = T;
  result.graph_searches = 1;
  for (int i = best_trace; i >= 0; i = arena[i].prev) {
    if (arena[i].ilabel != kEpsilon) result.frame_alignment.push_back(UnitOfLabel(arena[i].ilabel));
    if (arena[i].olabel != kEpsilon) result.word_labels.push_back(arena[i].olabel);
  }
  std::reverse(result.frame_alignment.begin(), result.frame_alignment.end());
  std::reverse(result.word_labels.begin(), result.word_labels.end());
  for (Label w : result.word_labels) result.words.push_back(graph.OutputSymbols().Symbol(w));
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.rtf = T > 0 ? result.wall_seconds / (T * kFramePeriodSeconds) : 0.0;
  return result;
}

std::vector<StateId> ForcedAlign(const MatrixD &log_posteriors, std::span<const StateId> gamma,
                                 const ModelParameters &params, double *log_score) {
  const int L = params.NumStates();
  internal::CheckGrid(log_posteriors, L, 1);
  if (gamma.empty()) throw Error(ErrorKind::kValidation, "empty transcript");
  for (StateId s : gamma)
    if (s < 0 || s >= L) throw Error(ErrorKind::kValidation, "transcript state out of range");
  const int T = static_cast<int>(log_posteriors.rows());
  const int K = static_cast<int>(gamma.size()) - 1;
  if (T < K)
    throw Error(ErrorKind::kInfeasible, "transcript needs " + std::to_string(K) +
                                            " frames, utterance has " + std::to_string(T));
  const auto tl = MakeTransitionLogs<double>(params);

  MatrixD delta = MatrixD::Constant(T + 1, K + 1, LogZero<double>());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> moved(T + 1, K + 1);
  moved.setConstant(false);
  delta(0, 0) = 0;
  for (int t = 1; t <= T; ++t) {
    int lo = std::max(0, K - (T - t)), hi = std::min(K, t);
    for (int k = lo; k <= hi; ++k) {
      double stay = delta(t - 1, k) + tl.log_self(gamma[k]);
      double move = k > 0 ? delta(t - 1, k - 1) + tl.log_exit(gamma[k - 1]) +
                                tl.log_q(gamma[k - 1], gamma[k])
                          : LogZero<double>();
      moved(t, k) = move > stay;
      delta(t, k) = std::max(stay, move) + log_posteriors(t - 1, gamma[k]) -
                    tl.log_prior(gamma[k]);
    }
  }
  if (!std::isfinite(delta(T, K)))
    throw Error(ErrorKind::kInfeasible, "no path with non-zero weight");
  if (log_score) *log_score = delta(T, K);

  std::vector<StateId> path(T + 1);
  int k = K;
  for (int t = T; t >= 0; --t) {
    path[t] = gamma[k];
    if (t > 0 && moved(t, k)) --k;
  }
  return path;
}

MatrixD EnsembleAverage(const std::vector<MatrixD> &grids) {
  if (grids.empty()) throw Error(ErrorKind::kValidation, "no posterior grids to average");
  for (const auto &g : grids)
    if (g.rows() != grids[0].rows() || g.cols() != grids[0].cols())
      throw Error(ErrorKind::kShapeMismatch, "ensemble members disagree on grid shape");
  const double log_n = std::log(static_cast<double>(grids.size()));
  MatrixD out(grids[0].rows(), grids[0].cols());
  VectorD v(static_cast<Eigen::Index>(grids.size()));
  for (Eigen::Index t = 0; t < out.rows(); ++t)
    for (Eigen::Index l = 0; l < out.cols(); ++l) {
      for (std::size_t i = 0; i < grids.size(); ++i) v(i) = grids[i](t, l);
      out(t, l) = LogSumExp(v) - log_n;
    }
  return out;
}

}  // namespace eemmi
