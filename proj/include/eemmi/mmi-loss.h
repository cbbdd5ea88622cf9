// eemmi/mmi-loss.h

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

#ifndef EEMMI_MMI_LOSS_H_
#define EEMMI_MMI_LOSS_H_

// Numerator and denominator forward-backward for end-to-end MMI training of
// a one-state-per-phoneme HMM, and the gradients of
//   log P(transcript | obs) = log P(obs, transcript) - log P(obs)
// with respect to the network log posteriors y, the self-loop logits a_c
// (p_c(0) = sigmoid(a_c), p_c(1) = 1 - p_c(0)) and the prior logits b_l
// (omega = log softmax(b)). The state LM q is fixed.
//
// Frames are 1..T; s_0 is non-emitting and fixed to the lattice's initial
// state. The recursions run in log space and, every `shift_interval`
// frames, the per-frame maximum is subtracted from the forward (backward)
// column and accumulated separately so stored values stay O(1).

#include <algorithm>
#include <ostream>
#include <span>
#include <string>

#include "eemmi/common.h"
#include "eemmi/inventory.h"
#include "eemmi/lm.h"

namespace eemmi {

inline constexpr int kDefaultShiftInterval = 25;

struct ModelParameters {
  VectorD transition_logits;  // a_c
  VectorD prior_logits;       // b_l
  MatrixD state_lm;           // q(c, c'), fixed during training

  int NumStates() const { return static_cast<int>(transition_logits.size()); }

  /// p_c(0) = 0.5 for every state and uniform priors.
  static ModelParameters Initial(const StateLm &lm);

  VectorD SelfLoopProbs() const;
  VectorD LogPriors() const;

  /// Throws kShapeMismatch when the three members disagree on L.
  void Validate() const;
};

template <typename Scalar>
struct TransitionLogs {
  Vector<Scalar> log_self;   // log p_c(0)
  Vector<Scalar> log_exit;   // log p_c(1)
  Matrix<Scalar> log_q;
  Vector<Scalar> log_prior;  // omega
};

template <typename Scalar>
TransitionLogs<Scalar> MakeTransitionLogs(const ModelParameters &params) {
  params.Validate();
  const Eigen::Index L = params.NumStates();
  TransitionLogs<Scalar> t;
  t.log_self.resize(L);
  t.log_exit.resize(L);
  for (Eigen::Index c = 0; c < L; ++c) {
    Scalar a = static_cast<Scalar>(params.transition_logits(c));
    t.log_self(c) = LogSigmoid(a);
    t.log_exit(c) = LogSigmoid(Scalar(-a));
  }
  t.log_q = params.state_lm.cast<Scalar>().array().log().matrix();
  Vector<Scalar> b = params.prior_logits.cast<Scalar>();
  t.log_prior = b.array() - LogSumExp(b);
  return t;
}

/// Forward/backward tables. `log_alpha(t, n)` + `alpha_shift(t)` is the true
/// log forward value at frame t for lattice node n (transcript position for
/// the numerator, state for the denominator); likewise for beta.
template <typename Scalar>
struct FbTables {
  Matrix<Scalar> log_alpha;
  Matrix<Scalar> log_beta;
  Vector<Scalar> alpha_shift;
  Vector<Scalar> beta_shift;
  Scalar log_total = LogZero<Scalar>();

  int NumFrames() const { return static_cast<int>(log_alpha.rows()) - 1; }

  /// log sum_n alpha_t(n) beta_t(n); equals log_total for every t.
  Scalar SliceLogTotal(int t) const {
    return LogSumExp(log_alpha.row(t) + log_beta.row(t)) + alpha_shift(t) + beta_shift(t);
  }

  /// log of alpha_t(n) beta_t(n) / P.
  Scalar LogOccupancy(int t, Eigen::Index n) const {
    return log_alpha(t, n) + log_beta(t, n) + alpha_shift(t) + beta_shift(t) - log_total;
  }
};

template <typename Scalar>
struct LossOutput {
  Scalar loss = 0;  // log P(transcript | obs), maximized
  Matrix<Scalar> grad_y;
  Vector<Scalar> grad_transition_logits;
  Vector<Scalar> grad_prior_logits;
  Matrix<Scalar> numerator_occupancy;
  Matrix<Scalar> denominator_occupancy;
};

namespace internal {

template <typename Scalar>
void CheckGrid(const LogPosteriorGrid<Scalar> &y, int num_states, int shift_interval) {
  if (y.rows() < 1) throw Error(ErrorKind::kValidation, "need at least one frame");
  if (y.cols() != num_states)
    throw Error(ErrorKind::kShapeMismatch, "posterior grid has " + std::to_string(y.cols()) +
                                               " columns, model has " +
                                               std::to_string(num_states) + " states");
  if (shift_interval < 1) throw Error(ErrorKind::kValidation, "shift interval must be >= 1");
  if (!y.allFinite()) throw Error(ErrorKind::kValidation, "non-finite log posterior");
}

/// Subtracts the row maximum and returns it (0 for an all -inf row).
template <typename Scalar, typename Row>
Scalar ShiftRow(Row &&row) {
  Scalar m = row.maxCoeff();
  if (m == LogZero<Scalar>()) return 0;
  row.array() -= m;
  return m;
}

}  // namespace internal

/// Forward-backward over the transcript-constrained lattice (Gamma_0 is s_0,
/// the path must sit in Gamma_K at frame T). Throws kInfeasible when
/// T < K.
template <typename Scalar>
FbTables<Scalar> NumeratorForwardBackward(const LogPosteriorGrid<Scalar> &y,
                                          std::span<const StateId> gamma,
                                          const ModelParameters &params,
                                          int shift_interval = kDefaultShiftInterval) {
  const int L = params.NumStates();
  internal::CheckGrid(y, L, shift_interval);
  if (gamma.empty()) throw Error(ErrorKind::kValidation, "empty transcript");
  for (StateId s : gamma)
    if (s < 0 || s >= L) throw Error(ErrorKind::kValidation, "transcript state out of range");
  const int T = static_cast<int>(y.rows());
  const int K = static_cast<int>(gamma.size()) - 1;
  if (T < K)
    throw Error(ErrorKind::kInfeasible, "transcript needs " + std::to_string(K) +
                                            " frames, utterance has " + std::to_string(T));

  const auto tl = MakeTransitionLogs<Scalar>(params);
  // Per-position constants along the chain.
  Vector<Scalar> self(K + 1), enter(K + 1);  // enter(k): arc k-1 -> k
  for (int k = 0; k <= K; ++k) {
    self(k) = tl.log_self(gamma[k]);
    enter(k) = k == 0 ? LogZero<Scalar>()
                      : tl.log_exit(gamma[k - 1]) + tl.log_q(gamma[k - 1], gamma[k]);
  }
  auto ybar = [&](int t, int k) { return y(t - 1, gamma[k]) - tl.log_prior(gamma[k]); };

  FbTables<Scalar> fb;
  fb.log_alpha.setConstant(T + 1, K + 1, LogZero<Scalar>());
  fb.log_beta.setConstant(T + 1, K + 1, LogZero<Scalar>());
  fb.alpha_shift.setZero(T + 1);
  fb.beta_shift.setZero(T + 1);

  fb.log_alpha(0, 0) = 0;
  for (int t = 1; t <= T; ++t) {
    // Position k is reachable at frame t only if k <= t, and Gamma_K can
    // still be reached only if K - k <= T - t.
    int lo = std::max(0, K - (T - t)), hi = std::min(K, t);
    for (int k = lo; k <= hi; ++k) {
      Scalar stay = fb.log_alpha(t - 1, k) + self(k);
      Scalar move = k > 0 ? fb.log_alpha(t - 1, k - 1) + enter(k) : LogZero<Scalar>();
      fb.log_alpha(t, k) = LogAdd(stay, move) + ybar(t, k);
    }
    fb.alpha_shift(t) = fb.alpha_shift(t - 1);
    if (t % shift_interval == 0)
      fb.alpha_shift(t) += internal::ShiftRow<Scalar>(fb.log_alpha.row(t));
  }
  fb.log_total = fb.log_alpha(T, K) + fb.alpha_shift(T);

  fb.log_beta(T, K) = 0;
  for (int t = T - 1; t >= 0; --t) {
    int lo = std::max(0, K - (T - t)), hi = std::min(K, t);
    for (int k = lo; k <= hi; ++k) {
      Scalar stay = fb.log_beta(t + 1, k) + self(k) + ybar(t + 1, k);
      Scalar move = k < K ? fb.log_beta(t + 1, k + 1) + enter(k + 1) + ybar(t + 1, k + 1)
                          : LogZero<Scalar>();
      fb.log_beta(t, k) = LogAdd(stay, move);
    }
    fb.beta_shift(t) = fb.beta_shift(t + 1);
    if ((T - t) % shift_interval == 0)
      fb.beta_shift(t) += internal::ShiftRow<Scalar>(fb.log_beta.row(t));
  }
  return fb;
}

/// Forward-backward over all state sequences under the state LM, starting in
/// `initial_state` and free to end anywhere. O(T L^2).
template <typename Scalar>
FbTables<Scalar> DenominatorForwardBackward(const LogPosteriorGrid<Scalar> &y,
                                            const ModelParameters &params,
                                            int shift_interval = kDefaultShiftInterval,
                                            StateId initial_state = kStartState) {
  const int L = params.NumStates();
  internal::CheckGrid(y, L, shift_interval);
  if (initial_state < 0 || initial_state >= L)
    throw Error(ErrorKind::kValidation, "initial state out of range");
  const int T = static_cast<int>(y.rows());
  const auto tl = MakeTransitionLogs<Scalar>(params);

  // trans(c', c): log p_{c', c}.
  Matrix<Scalar> trans = tl.log_q.colwise() + tl.log_exit;
  trans.diagonal() = tl.log_self;
  Matrix<Scalar> ybar = y.rowwise() - tl.log_prior.transpose();

  FbTables<Scalar> fb;
  fb.log_alpha.setConstant(T + 1, L, LogZero<Scalar>());
  fb.log_beta.setConstant(T + 1, L, LogZero<Scalar>());
  fb.alpha_shift.setZero(T + 1);
  fb.beta_shift.setZero(T + 1);

  fb.log_alpha(0, initial_state) = 0;
  for (int t = 1; t <= T; ++t) {
    for (int c = 0; c < L; ++c)
      fb.log_alpha(t, c) =
          LogSumExp(fb.log_alpha.row(t - 1).transpose() + trans.col(c)) + ybar(t - 1, c);
    fb.alpha_shift(t) = fb.alpha_shift(t - 1);
    if (t % shift_interval == 0)
      fb.alpha_shift(t) += internal::ShiftRow<Scalar>(fb.log_alpha.row(t));
  }
  fb.log_total = LogSumExp(fb.log_alpha.row(T)) + fb.alpha_shift(T);

  fb.log_beta.row(T).setZero();
  for (int t = T - 1; t >= 0; --t) {
    Vector<Scalar> next = fb.log_beta.row(t + 1).transpose() + ybar.row(t).transpose();
    for (int c = 0; c < L; ++c)
      fb.log_beta(t, c) = LogSumExp(trans.row(c).transpose() + next);
    fb.beta_shift(t) = fb.beta_shift(t + 1);
    if ((T - t) % shift_interval == 0)
      fb.beta_shift(t) += internal::ShiftRow<Scalar>(fb.log_beta.row(t));
  }
  return fb;
}

namespace internal {

/// Per-state expected counts gathered from one lattice.
template <typename Scalar>
struct LatticeStats {
  Matrix<Scalar> occupancy;  // T x L, frames 1..T
  Vector<Scalar> self;       // expected self-loop traversals per state
  Vector<Scalar> out;        // expected departures per state (frames 0..T-1)
};

template <typename Scalar>
LatticeStats<Scalar> NumeratorStats(const LogPosteriorGrid<Scalar> &y,
                                    std::span<const StateId> gamma,
                                    const TransitionLogs<Scalar> &tl,
                                    const FbTables<Scalar> &fb) {
  const int T = fb.NumFrames(), L = static_cast<int>(y.cols());
  const int K = static_cast<int>(gamma.size()) - 1;
  LatticeStats<Scalar> st;
  st.occupancy.setZero(T, L);
  st.self.setZero(L);
  st.out.setZero(L);
  for (int t = 0; t <= T; ++t) {
    for (int k = 0; k <= K; ++k) {
      Scalar lo = fb.LogOccupancy(t, k);
      if (lo == LogZero<Scalar>()) continue;
      Scalar occ = std::exp(lo);
      if (t > 0) st.occupancy(t - 1, gamma[k]) += occ;
      if (t < T) st.out(gamma[k]) += occ;
    }
    if (t == 0) continue;
    for (int k = 0; k <= K; ++k) {
      const StateId c = gamma[k];
      Scalar lx = fb.log_alpha(t - 1, k) + fb.alpha_shift(t - 1) + tl.log_self(c) +
                  y(t - 1, c) - tl.log_prior(c) + fb.log_beta(t, k) + fb.beta_shift(t) -
                  fb.log_total;
      if (lx != LogZero<Scalar>()) st.self(c) += std::exp(lx);
    }
  }
  return st;
}

template <typename Scalar>
LatticeStats<Scalar> DenominatorStats(const LogPosteriorGrid<Scalar> &y,
                                      const TransitionLogs<Scalar> &tl,
                                      const FbTables<Scalar> &fb) {
  const int T = fb.NumFrames(), L = static_cast<int>(y.cols());
  LatticeStats<Scalar> st;
  st.occupancy.setZero(T, L);
  st.self.setZero(L);
  st.out.setZero(L);
  for (int t = 0; t <= T; ++t) {
    for (int c = 0; c < L; ++c) {
      Scalar lo = fb.LogOccupancy(t, c);
      Scalar occ = lo == LogZero<Scalar>() ? Scalar(0) : std::exp(lo);
      if (t > 0) st.occupancy(t - 1, c) = occ;
      if (t < T) st.out(c) += occ;
      if (t > 0) {
        Scalar lx = fb.log_alpha(t - 1, c) + fb.alpha_shift(t - 1) + tl.log_self(c) +
                    y(t - 1, c) - tl.log_prior(c) + fb.log_beta(t, c) + fb.beta_shift(t) -
                    fb.log_total;
        if (lx != LogZero<Scalar>()) st.self(c) += std::exp(lx);
      }
    }
  }
  return st;
}

}  // namespace internal

/// Loss and analytic gradients. grad_y is the numerator minus denominator
/// state occupancy, so each row sums to zero.
template <typename Scalar>
LossOutput<Scalar> MmiLossAndGrad(const LogPosteriorGrid<Scalar> &y,
                                  std::span<const StateId> gamma,
                                  const ModelParameters &params,
                                  int shift_interval = kDefaultShiftInterval) {
  const auto num = NumeratorForwardBackward(y, gamma, params, shift_interval);
  const auto den = DenominatorForwardBackward(y, params, shift_interval, gamma.front());
  const auto tl = MakeTransitionLogs<Scalar>(params);
  const auto ns = internal::NumeratorStats(y, gamma, tl, num);
  const auto ds = internal::DenominatorStats(y, tl, den);

  LossOutput<Scalar> out;
  out.loss = num.log_total - den.log_total;
  out.numerator_occupancy = ns.occupancy;
  out.denominator_occupancy = ds.occupancy;
  out.grad_y = ns.occupancy - ds.occupancy;

  // d log p_c(0) / d a_c = p_c(1), d log p_c(1) / d a_c = -p_c(0); per lattice
  // this gives self(c) - p_c(0) * out(c).
  Vector<Scalar> p_self = tl.log_self.array().exp();
  out.grad_transition_logits = (ns.self - ds.self).array() - p_self.array() * (ns.out - ds.out).array();

  // ybar = y - omega, so d loss / d omega_l = -sum_t grad_y(t, l); then
  // through omega = log softmax(b).
  Vector<Scalar> grad_omega = -out.grad_y.colwise().sum().transpose();
  Vector<Scalar> prior = tl.log_prior.array().exp();
  out.grad_prior_logits = grad_omega - prior * grad_omega.sum();
  return out;
}

/// Text dump of a LossOutput for debugging.
template <typename Scalar>
void WriteLossOutput(std::ostream &os, const LossOutput<Scalar> &out) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n");
  os << "loss " << static_cast<double>(out.loss) << "\n";
  os << "grad_y [\n" << out.grad_y.template cast<double>().format(fmt) << "\n]\n";
  os << "grad_transition_logits [ "
     << out.grad_transition_logits.transpose().template cast<double>().format(fmt) << " ]\n";
  os << "grad_prior_logits [ "
     << out.grad_prior_logits.transpose().template cast<double>().format(fmt) << " ]\n";
}

}  // namespace eemmi

#endif  // EEMMI_MMI_LOSS_H_
