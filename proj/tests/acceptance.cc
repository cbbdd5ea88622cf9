// tests/acceptance.cc

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

// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion followed
// by indented details, and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "decode-oracle.h"
#include "eemmi/brute-force.h"
#include "eemmi/ctc-loss.h"
#include "eemmi/pipeline.h"
#include "test-util.h"

using namespace eemmi;
using namespace eemmi::testing;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << "    failed: " << what << "\n";
    }
  }
};

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---- 1 ----------------------------------------------------------------------

void OracleEquivalence(Outcome &o) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> Ld(3, 6), Td(1, 8);
  double worst_num = 0, worst_den = 0, fb_seconds = 0;
  int feasible = 0;
  for (int i = 0; i < 200; ++i) {
    const int L = Ld(rng), T = Td(rng);
    const int K = std::uniform_int_distribution<int>(1, std::min(5, T))(rng);
    auto p = RandomParams(L, rng);
    MatrixD y = RandomLogPosteriors(T, L, rng);
    auto g = RandomGamma(K, L, rng);
    auto t0 = Clock::now();
    double num = NumeratorForwardBackward<double>(y, g, p).log_total;
    double den = DenominatorForwardBackward<double>(y, p).log_total;
    fb_seconds += Seconds(t0);
    double bf_num = BruteForceLogProb(y, p, g);
    double bf_den = BruteForceLogProbAll(y, p);
    if (std::isfinite(bf_num)) {
      ++feasible;
      worst_num = std::max(worst_num, std::abs(num - bf_num));
    } else {
      o.Require(num == bf_num, "infeasible numerator should be -inf");
    }
    worst_den = std::max(worst_den, std::abs(den - bf_den));
  }
  o.detail << "    200 instances (" << feasible << " with a finite numerator), max |num - bf| = "
           << worst_num << ", max |den - bf| = " << worst_den
           << ", forward-backward time " << fb_seconds << " s\n";
  o.Require(worst_num <= 1e-9 && worst_den <= 1e-9, "log totals within 1e-9");
  o.Require(fb_seconds < 5.0, "runtime under 5 s");
}

// ---- 2 ----------------------------------------------------------------------

template <typename Vec, typename F>
double MaxFdError(Vec &x, const Vec &analytic, F loss, double eps = 1e-4) {
  double worst = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + eps;
    double up = loss();
    x.data()[i] = keep - eps;
    double down = loss();
    x.data()[i] = keep;
    worst = std::max(worst, RelativeError(analytic.data()[i], (up - down) / (2 * eps)));
  }
  return worst;
}

double NetFdError(AcousticModel model, const TrainingUtterance &utt, LossKind kind) {
  VectorD grad;
  UtteranceLossAndGrad(model, utt, kind, kDefaultShiftInterval, &grad);
  VectorD theta = model.net.Flatten();
  const double eps = 1e-4;
  double worst = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    VectorD up = theta, down = theta;
    up(i) += eps;
    down(i) -= eps;
    model.net.Unflatten(up);
    double fu = UtteranceLossAndGrad(model, utt, kind, kDefaultShiftInterval, nullptr);
    model.net.Unflatten(down);
    double fd = UtteranceLossAndGrad(model, utt, kind, kDefaultShiftInterval, nullptr);
    worst = std::max(worst, RelativeError(grad(i), (fu - fd) / (2 * eps)));
  }
  model.net.Unflatten(theta);
  return worst;
}

void GradientCorrectness(Outcome &o) {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> Td(4, 9);
  double mmi_y = 0, mmi_a = 0, mmi_b = 0, ctc_y = 0;
  for (int i = 0; i < 50; ++i) {
    const int L = 6, T = Td(rng);
    auto p = RandomParams(L, rng);
    MatrixD y = RandomLogPosteriors(T, L, rng);
    auto g = RandomGamma(3, L, rng);
    auto out = MmiLossAndGrad<double>(y, g, p);
    auto loss = [&] { return MmiLossAndGrad<double>(y, g, p).loss; };
    mmi_y = std::max(mmi_y, MaxFdError(y, out.grad_y, loss));
    mmi_a = std::max(mmi_a, MaxFdError(p.transition_logits, out.grad_transition_logits, loss));
    mmi_b = std::max(mmi_b, MaxFdError(p.prior_logits, out.grad_prior_logits, loss));

    std::vector<StateId> labels;
    for (int k = 0; k < 2; ++k) labels.push_back(std::uniform_int_distribution<StateId>(3, L - 1)(rng));
    auto lab = CtcLabeling::FromLabels(labels);
    MatrixD z = RandomLogPosteriors(T, L, rng);
    auto ctc = CtcLossAndGrad<double>(z, lab);
    auto ctc_loss = [&] { return CtcLossAndGrad<double>(LogSoftmaxRows(z), lab).loss; };
    ctc_y = std::max(ctc_y, MaxFdError(z, ctc.grad_y, ctc_loss));
  }
  o.detail << "    50 instances, max relative error: mmi grad_y " << mmi_y
           << ", transition logits " << mmi_a << ", prior logits " << mmi_b << ", ctc grad_y "
           << ctc_y << "\n";
  o.Require(std::max({mmi_y, mmi_a, mmi_b, ctc_y}) < 1e-5, "loss gradients within 1e-5");

  AcousticModel m;
  const int L = 7;
  m.net = AcousticNet::Random(8, {20, 12}, L, 7);
  m.params = RandomParams(L, rng);
  m.feature_dim = 8;
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixD x(12, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  TrainingUtterance u{"u", x, Transcript{{0, 2, 3, 4, 2, 5, 2, 1}}};
  double net_mmi = NetFdError(m, u, LossKind::kMmi), net_ctc = NetFdError(m, u, LossKind::kCtc);
  o.detail << "    net-through-loss (" << m.net.NumParameters()
           << " weights) max relative error: mmi " << net_mmi << ", ctc " << net_ctc << "\n";
  o.Require(m.net.NumParameters() <= 1000, "net has at most 1000 weights");
  o.Require(std::max(net_mmi, net_ctc) < 1e-4, "net-through-loss within 1e-4");
}

// ---- 3 ----------------------------------------------------------------------

void Conservation(Outcome &o) {
  std::mt19937_64 rng(303);
  double row = 0, slice = 0, shift = 0, max_loss = -kInfinity;
  for (int i = 0; i < 50; ++i) {
    const int L = 7, T = 60;
    auto p = RandomParams(L, rng);
    MatrixD y = RandomLogPosteriors(T, L, rng);
    auto g = RandomGamma(12, L, rng);
    auto out = MmiLossAndGrad<double>(y, g, p);
    max_loss = std::max(max_loss, out.loss);
    row = std::max(row, out.grad_y.rowwise().sum().cwiseAbs().maxCoeff());
    auto num = NumeratorForwardBackward<double>(y, g, p);
    auto den = DenominatorForwardBackward<double>(y, p);
    for (int t = 0; t <= T; ++t) {
      slice = std::max(slice, std::abs(num.SliceLogTotal(t) - num.log_total));
      slice = std::max(slice, std::abs(den.SliceLogTotal(t) - den.log_total));
    }
    const double ref = MmiLossAndGrad<double>(y, g, p, T + 1).loss;
    for (int s : {1, 7, 25})
      shift = std::max(shift, std::abs(MmiLossAndGrad<double>(y, g, p, s).loss - ref));
    auto ctc = CtcLossAndGrad<double>(y, CtcLabeling::FromLabels({3, 4, 4, 5}));
    max_loss = std::max(max_loss, ctc.loss);
    row = std::max(row, ctc.grad_y.rowwise().sum().cwiseAbs().maxCoeff());
  }
  o.detail << "    50 instances: max |row sum| " << row << ", max slice deviation (log) " << slice
           << ", max loss " << max_loss << ", max shift-interval deviation " << shift << "\n";
  o.Require(row <= 1e-9, "gradient rows sum to zero");
  o.Require(slice <= 1e-9, "slice totals constant");
  o.Require(max_loss <= 0, "loss <= 0");
  o.Require(shift <= 1e-10, "shift invariance");
}

// ---- 4 ----------------------------------------------------------------------

void Stability(Outcome &o) {
  std::mt19937_64 rng(404);
  const int L = 8;
  auto p = RandomParams(L, rng);
  {
    const int T = 100000;
    MatrixD y = RandomLogPosteriors(T, L, rng);
    auto g = RandomGamma(200, L, rng);
    auto t0 = Clock::now();
    auto out = MmiLossAndGrad<double>(y, g, p, 25);
    bool finite = std::isfinite(out.loss) && out.grad_y.allFinite() &&
                  out.grad_transition_logits.allFinite() && out.grad_prior_logits.allFinite();
    o.detail << "    T=100000: loss " << out.loss << ", finite " << (finite ? "yes" : "no") << " ("
             << Seconds(t0) << " s)\n";
    o.Require(finite, "T=100000 finite");
  }
  {
    const int T = 5000;
    MatrixD y = RandomLogPosteriors(T, L, rng);
    auto g = RandomGamma(1000, L, rng);
    auto d = MmiLossAndGrad<double>(y, g, p, 25);
    auto x = MmiLossAndGrad<long double>(y.cast<long double>(), g, p, 25);
    double loss_err = RelativeError(d.loss, static_cast<double>(x.loss), 0);
    double grad_err = (d.grad_y - x.grad_y.cast<double>()).cwiseAbs().maxCoeff();
    double param_err =
        std::max((d.grad_transition_logits - x.grad_transition_logits.cast<double>())
                         .cwiseAbs().maxCoeff() /
                     std::max(1.0, x.grad_transition_logits.cast<double>().cwiseAbs().maxCoeff()),
                 (d.grad_prior_logits - x.grad_prior_logits.cast<double>()).cwiseAbs().maxCoeff() /
                     std::max(1.0, x.grad_prior_logits.cast<double>().cwiseAbs().maxCoeff()));
    o.detail << "    T=5000 vs long double: loss relative error " << loss_err
             << ", max grad_y error " << grad_err << ", parameter gradient error " << param_err
             << "\n";
    o.Require(loss_err <= 1e-6 && grad_err <= 1e-6 && param_err <= 1e-6,
              "T=5000 within 1e-6 of the extended-precision result");
  }
}

// ---- 5-9: trained systems ----------------------------------------------------

constexpr int kTrainCount = 500, kTestCount = 50;
const std::uint64_t kSeeds[] = {1, 2, 3};

struct System {
  LossKind kind = LossKind::kMmi;
  StateLmKind lm = StateLmKind::kBigram;
  std::uint64_t seed = 1;
  TrainResult result;
  double train_seconds = 0;
};

struct Setup {
  Corpus corpus;
  std::vector<FeatureSequence> norm;
  std::vector<int> test, valid;
  std::vector<UtteranceWords> test_refs, valid_refs;
  double gen_seconds = 0;
  std::vector<System> systems;

  const System &Find(LossKind k, StateLmKind lm, std::uint64_t seed) const {
    for (const auto &s : systems)
      if (s.kind == k && s.lm == lm && s.seed == seed) return s;
    throw Error(ErrorKind::kValidation, "missing system");
  }

  std::vector<MatrixD> Grids(const std::vector<AcousticModel> &models,
                             const std::vector<int> &idx) const {
    std::vector<MatrixD> out;
    for (int i : idx) out.push_back(EnsembleLogPosteriors(models, norm[i].frames));
    return out;
  }
  std::vector<UtteranceWords> Refs(const std::vector<int> &idx) const {
    std::vector<UtteranceWords> out;
    for (int i : idx) out.emplace_back(corpus.utterances[i].features.utt_id, corpus.utterances[i].words);
    return out;
  }
};

Setup Prepare() {
  Setup s;
  auto t0 = Clock::now();
  SyntheticCorpusSpec spec;
  spec.seed = 1;
  spec.num_utterances = kTrainCount + kTestCount;
  spec.noise = CalibrateNoise(spec, 0.9);
  s.corpus = GenerateCorpus(spec);
  s.norm = NormalizedFeatures(s.corpus);
  s.gen_seconds = Seconds(t0);
  std::vector<int> train(kTrainCount);
  std::iota(train.begin(), train.end(), 0);
  s.test.resize(kTestCount);
  std::iota(s.test.begin(), s.test.end(), kTrainCount);
  s.test_refs = s.Refs(s.test);

  for (auto seed : kSeeds) {
    for (auto lm : {StateLmKind::kBigram, StateLmKind::kUnigram, StateLmKind::kUniform})
      s.systems.push_back({LossKind::kMmi, lm, seed, {}, 0});
    s.systems.push_back({LossKind::kCtc, StateLmKind::kBigram, seed, {}, 0});
  }
  const auto set = MakeTrainingSet(s.corpus, s.norm, train, TrainConfig{}.context);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next++) < s.systems.size();) {
      auto &sys = s.systems[j];
      TrainConfig cfg;
      cfg.seed = sys.seed;
      cfg.split_seed = 1;
      cfg.train_lm = sys.lm;
      auto t = Clock::now();
      sys.result = Train(set, s.corpus.inventory.NumStates(), cfg, sys.kind);
      sys.train_seconds = Seconds(t);
    }
  };
  {
    const unsigned n = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(s.corpus.utterances.size()); ++i)
    index[s.corpus.utterances[i].features.utt_id] = i;
  for (const auto &id : s.systems.front().result.valid_ids) s.valid.push_back(index.at(id));
  s.valid_refs = s.Refs(s.valid);
  return s;
}

struct Scored {
  double scale = 0;
  EvalReport valid, test;
  std::vector<DecodeResult> test_decodes;
};

// Picks the acoustic scale on the validation utterances, then decodes the
// test set once with it.
Scored DecodeSystem(const Setup &s, LossKind kind, const std::vector<AcousticModel> &models,
                    const std::string &name) {
  auto params = EnsembleParameters(models);
  auto graph = BuildDecodingGraph(kind, params, s.corpus.inventory, s.corpus.lexicon,
                                  s.corpus.word_lm);
  auto priors = DecodingLogPriors(kind, params);
  auto valid_grids = s.Grids(models, s.valid);
  DecodeConfig cfg;
  Scored out;
  out.scale = SelectAcousticScale(graph, valid_grids, priors, s.valid_refs, s.corpus.lexicon, cfg);
  cfg.acoustic_scale = out.scale;
  out.valid = ScoreDecodes(name, s.valid_refs, DecodeBatch(graph, valid_grids, priors, cfg),
                           s.corpus.lexicon);
  out.test_decodes = DecodeBatch(graph, s.Grids(models, s.test), priors, cfg);
  out.test = ScoreDecodes(name, s.test_refs, out.test_decodes, s.corpus.lexicon);
  out.test.graph = ComputeGraphStats(graph);
  return out;
}

void EndToEnd(const Setup &s, Outcome &o) {
  const auto &sys = s.Find(LossKind::kMmi, StateLmKind::kBigram, 1);
  auto t0 = Clock::now();
  auto r = DecodeSystem(s, LossKind::kMmi, {sys.result.model}, "mmi-bigram");
  double total = s.gen_seconds + sys.train_seconds + Seconds(t0);
  const int epochs = sys.result.metrics.back().epoch;
  o.detail << "    corpus: " << s.corpus.utterances.size() << " utterances, nearest-mean accuracy "
           << NearestMeanAccuracy(s.corpus) << "\n"
           << "    mmi bigram seed 1: " << epochs << " epochs, acoustic scale " << r.scale
           << ", test WER " << 100 * r.test.Wer() << "%, PER " << 100 * r.test.Per()
           << "%, generate+train+decode " << total << " s\n";
  o.Require(r.test.Wer() < 0.10, "test WER below 10%");
  o.Require(epochs <= 20, "at most 20 epochs");
  o.Require(total < 600, "under 10 minutes");
}

void Ablation(const Setup &s, Outcome &o) {
  std::map<StateLmKind, std::vector<double>> wers, pers;
  for (auto seed : kSeeds)
    for (auto lm : {StateLmKind::kBigram, StateLmKind::kUnigram, StateLmKind::kUniform}) {
      const auto &sys = s.Find(LossKind::kMmi, lm, seed);
      auto r = DecodeSystem(s, LossKind::kMmi, {sys.result.model}, "");
      wers[lm].push_back(r.valid.Wer());
      pers[lm].push_back(r.valid.Per());
    }
  double bi = Median(wers[StateLmKind::kBigram]), uni = Median(wers[StateLmKind::kUnigram]),
         flat = Median(wers[StateLmKind::kUniform]);
  for (auto lm : {StateLmKind::kBigram, StateLmKind::kUnigram, StateLmKind::kUniform}) {
    o.detail << "    " << ToString(lm) << " validation WER per seed:";
    for (double w : wers[lm]) o.detail << " " << 100 * w << "%";
    o.detail << " (median " << 100 * Median(wers[lm]) << "%); PER median "
             << 100 * Median(pers[lm]) << "%\n";
  }
  o.Require(bi <= uni && uni <= flat, "median validation WER bigram <= unigram <= uniform");
}

void Alignment(const Setup &s, Outcome &o) {
  std::vector<double> mmi, ctc;
  std::vector<std::vector<StateId>> gold;
  for (int i : s.test) gold.push_back(s.corpus.utterances[i].gold_alignment);
  for (auto seed : kSeeds) {
    const auto &m = s.Find(LossKind::kMmi, StateLmKind::kBigram, seed).result.model;
    const auto &c = s.Find(LossKind::kCtc, StateLmKind::kBigram, seed).result.model;
    std::vector<std::vector<StateId>> forced, best;
    for (int i : s.test) {
      forced.push_back(ForcedFrameAlignment(ComputeLogPosteriors(m, s.norm[i].frames),
                                            s.corpus.utterances[i].transcript.gamma, m.params));
      best.push_back(BestPathFrameAlignment(ComputeLogPosteriors(c, s.norm[i].frames)));
    }
    mmi.push_back(AlignmentAccuracy(gold, forced));
    ctc.push_back(AlignmentAccuracy(gold, best));
    // Offset k maximizing agreement of forced[t + k] with gold[t].
    int best_k = 0;
    double best_acc = -1;
    for (int k = -5; k <= 5; ++k) {
      long hit = 0, n = 0;
      for (std::size_t u = 0; u < gold.size(); ++u) {
        const int T = static_cast<int>(gold[u].size());
        for (int t = std::max(0, -k); t < std::min(T, T - k); ++t, ++n)
          hit += forced[u][t + k] == gold[u][t];
      }
      if (double acc = double(hit) / double(n); acc > best_acc) {
        best_acc = acc;
        best_k = k;
      }
    }
    o.detail << "    seed " << seed << ": mmi forced alignment agrees best at offset " << best_k
             << " frames (" << best_acc << ")\n";
  }
  o.detail << "    frame accuracy per seed: mmi forced";
  for (double a : mmi) o.detail << " " << a;
  o.detail << "; ctc best path";
  for (double a : ctc) o.detail << " " << a;
  o.detail << "\n    medians: mmi " << Median(mmi) << ", ctc " << Median(ctc) << "\n";
  o.Require(Median(mmi) > Median(ctc), "mmi forced alignment beats ctc best path");
}

void Ensemble(const Setup &s, Outcome &o) {
  std::vector<AcousticModel> models;
  double best_single = kInfinity;
  o.detail << "    single-model test WER:";
  for (auto seed : kSeeds) {
    const auto &m = s.Find(LossKind::kMmi, StateLmKind::kBigram, seed).result.model;
    models.push_back(m);
    double w = DecodeSystem(s, LossKind::kMmi, {m}, "").test.Wer();
    best_single = std::min(best_single, w);
    o.detail << " " << 100 * w << "%";
  }
  auto r = DecodeSystem(s, LossKind::kMmi, models, "ensemble");
  int searches = 0;
  for (const auto &d : r.test_decodes) searches += d.graph_searches;
  o.detail << "\n    ensemble of " << models.size() << ": test WER " << 100 * r.test.Wer()
           << "%, graph searches " << searches << " for " << s.test.size() << " utterances\n";
  o.Require(r.test.Wer() <= best_single, "ensemble WER <= best single model");
  o.Require(searches == static_cast<int>(s.test.size()), "one graph search per utterance");
}

void GraphFootprint(const Setup &s, Outcome &o) {
  const auto &mmi = s.Find(LossKind::kMmi, StateLmKind::kBigram, 1).result.model;
  const auto &ctc = s.Find(LossKind::kCtc, StateLmKind::kBigram, 1).result.model;
  auto a = DecodeSystem(s, LossKind::kMmi, {mmi}, "mmi");
  auto b = DecodeSystem(s, LossKind::kCtc, {ctc}, "ctc");
  std::ostringstream table;
  WriteEvalText(table, {a.test, b.test});
  std::string line;
  std::istringstream lines(table.str());
  while (std::getline(lines, line)) o.detail << "    " << line << "\n";
  o.detail << "    HLG " << a.test.graph.states << " states, " << a.test.graph.arcs << " arcs, "
           << a.test.graph.serialized_bytes << " bytes; TLG " << b.test.graph.states
           << " states, " << b.test.graph.arcs << " arcs, " << b.test.graph.serialized_bytes
           << " bytes (" << 100.0 * (1.0 - double(a.test.graph.serialized_bytes) /
                                             double(b.test.graph.serialized_bytes))
           << "% smaller)\n";
  o.detail << "    RTF mmi " << a.test.mean_rtf << ", ctc " << b.test.mean_rtf << "\n";
  o.Require(a.test.graph.serialized_bytes < b.test.graph.serialized_bytes, "HLG fewer bytes");
  o.Require(a.test.graph.arcs < b.test.graph.arcs, "HLG fewer arcs");
  o.Require(a.test.mean_rtf > 0 && b.test.mean_rtf > 0, "both RTFs measured");
}

// ---- 10 ---------------------------------------------------------------------

void DecoderExactness(Outcome &o) {
  std::mt19937_64 rng(1010);
  int decoded = 0, unique = 0, mismatches = 0;
  long max_paths = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> Sd(2, 7), Td(1, 6);
    const int L = 5, T = Td(rng);
    auto g = RandomDecodingGraph(Sd(rng), L, rng);
    MatrixD y = RandomLogPosteriors(T, L, rng);
    VectorD omega = RandomParams(L, rng).LogPriors();
    DecodeConfig cfg;
    cfg.beam = kInfinity;
    cfg.max_active = 0;
    cfg.acoustic_scale = 0.7;
    auto oracle = ExhaustiveBestPath(g, y, omega, cfg.acoustic_scale);
    max_paths = std::max(max_paths, oracle.num_paths);
    if (oracle.cost == kInfinity) {
      bool threw = false;
      try {
        ViterbiBeamDecode(g, y, omega, cfg);
      } catch (const Error &e) {
        threw = e.kind() == ErrorKind::kEmptyResult;
      }
      if (!threw) ++mismatches;
      continue;
    }
    ++decoded;
    auto r = ViterbiBeamDecode(g, y, omega, cfg);
    bool same = r.score == oracle.cost;
    if (oracle.runner_up > oracle.cost) {
      ++unique;
      same = same && r.word_labels == oracle.olabels && r.frame_alignment == oracle.frames;
    }
    if (!same) ++mismatches;
  }
  o.detail << "    100 random graphs: " << decoded << " with a complete path (" << unique
           << " with a unique best), up to " << max_paths << " paths enumerated, " << mismatches
           << " mismatches\n";
  o.Require(mismatches == 0, "decoder equals exhaustive search");
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::function<void(Outcome &)> &check) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      check(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << "    exception: " << e.what() << "\n";
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " (" << Seconds(t0)
              << " s)\n"
              << o.detail.str() << std::flush;
    if (!o.pass) ++failures;
  };

  report(1, OracleEquivalence);
  report(2, GradientCorrectness);
  report(3, Conservation);
  report(4, Stability);

  std::cout << "training 12 systems (3 seeds x {mmi bigram, unigram, uniform, ctc})\n" << std::flush;
  std::optional<Setup> setup;
  std::string setup_error;
  try {
    setup = Prepare();
  } catch (const std::exception &e) {
    setup_error = e.what();
  }
  auto with_setup = [&](void (*fn)(const Setup &, Outcome &)) {
    return [&, fn](Outcome &o) {
      if (!setup) throw Error(ErrorKind::kValidation, "setup failed: " + setup_error);
      fn(*setup, o);
    };
  };
  report(5, with_setup(EndToEnd));
  report(6, with_setup(Ablation));
  report(7, with_setup(Alignment));
  report(8, with_setup(Ensemble));
  report(9, with_setup(GraphFootprint));
  report(10, DecoderExactness);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
