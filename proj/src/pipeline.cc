// src/pipeline.cc

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
#include <atomic>
#include <cmath>
#include <thread>

#include "eemmi/pipeline.h"

namespace eemmi {

std::vector<FeatureSequence> NormalizedFeatures(const Corpus &corpus,
                                                std::vector<std::string> *warnings) {
  std::vector<FeatureSequence> feats;
  feats.reserve(corpus.utterances.size());
  for (const auto &u : corpus.utterances) feats.push_back(u.features);
  auto w = SpeakerNormalize(feats);
  if (warnings) *warnings = std::move(w);
  return feats;
}

std::vector<TrainingUtterance> MakeTrainingSet(const Corpus &corpus,
                                               const std::vector<FeatureSequence> &normalized,
                                               std::span<const int> indices, int context) {
  std::vector<TrainingUtterance> out;
  for (int i : indices) {
    const auto &u = corpus.utterances.at(i);
    out.push_back({u.features.utt_id, ExtractWindows(normalized.at(i).frames, context), u.transcript});
  }
  return out;
}

MatrixD ComputeLogPosteriors(const AcousticModel &model, const MatrixD &frames) {
  if (frames.cols() != model.feature_dim)
    throw Error(ErrorKind::kShapeMismatch, "features have " + std::to_string(frames.cols()) +
                                               " dims, model expects " +
                                               std::to_string(model.feature_dim));
  return model.net.Forward(ExtractWindows(frames, model.context));
}

MatrixD EnsembleLogPosteriors(const std::vector<AcousticModel> &models, const MatrixD &frames) {
  if (models.empty()) throw Error(ErrorKind::kValidation, "no models");
  if (models.size() == 1) return ComputeLogPosteriors(models[0], frames);
  std::vector<MatrixD> grids;
  for (const auto &m : models) grids.push_back(ComputeLogPosteriors(m, frames));
  return EnsembleAverage(grids);
}

ModelParameters EnsembleParameters(const std::vector<AcousticModel> &models) {
  if (models.empty()) throw Error(ErrorKind::kValidation, "no models");
  for (const auto &m : models)
    if (m.params.NumStates() != models[0].params.NumStates())
      throw Error(ErrorKind::kShapeMismatch, "ensemble members disagree on L");
  return models[0].params;
}

Wfst BuildDecodingGraph(LossKind kind, const ModelParameters &params, const StateInventory &inv,
                        const Lexicon &lex, const WordNgramLm &lm) {
  return kind == LossKind::kMmi ? BuildHlg(params, inv, lex, lm) : BuildTlg(inv, lex, lm);
}

VectorD DecodingLogPriors(LossKind kind, const ModelParameters &params) {
  return kind == LossKind::kMmi ? params.LogPriors() : VectorD::Zero(params.NumStates());
}

std::vector<DecodeResult> DecodeBatch(const Wfst &graph, const std::vector<MatrixD> &grids,
                                      const VectorD &log_priors, const DecodeConfig &config,
                                      int threads, int *failures) {
  config.Validate();
  std::vector<DecodeResult> results(grids.size());
  std::vector<std::exception_ptr> errors(grids.size());
  std::vector<char> empty(grids.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < grids.size();) {
      try {
        results[i] = ViterbiBeamDecode(graph, grids[i], log_priors, config);
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::kEmptyResult) {
          errors[i] = std::current_exception();
          continue;
        }
        empty[i] = 1;
        results[i].num_frames = static_cast<int>(grids[i].rows());
        results[i].graph_searches = 1;
      }
    }
  };
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(std::max<std::size_t>(1, grids.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
  if (failures) *failures = static_cast<int>(std::count(empty.begin(), empty.end(), 1));
  return results;
}

std::vector<StateId> WordsToPhonemes(const std::vector<std::string> &words, const Lexicon &lex) {
  std::vector<StateId> out;
  for (const auto &w : words) {
    const auto *pron = lex.Find(w);
    if (!pron) throw Error(ErrorKind::kOutOfVocabulary, "word '" + w + "' not in lexicon");
    out.insert(out.end(), pron->begin(), pron->end());
  }
  return out;
}

EvalReport ScoreDecodes(const std::string &system, const std::vector<UtteranceWords> &refs,
                        const std::vector<DecodeResult> &decodes, const Lexicon &lex) {
  if (refs.size() != decodes.size())
    throw Error(ErrorKind::kValidation, "reference and hypothesis counts differ");
  EvalReport r;
  r.system = system;
  std::vector<DecodeTiming> timing;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    r.words += AlignEdit(refs[i].second, decodes[i].words);
    r.phonemes += AlignEdit(WordsToPhonemes(refs[i].second, lex), WordsToPhonemes(decodes[i].words, lex));
    timing.push_back({decodes[i].num_frames, decodes[i].wall_seconds});
  }
  r.mean_rtf = MeanRealTimeFactor(timing);
  return r;
}

double SelectAcousticScale(const Wfst &graph, const std::vector<MatrixD> &grids,
                           const VectorD &log_priors, const std::vector<UtteranceWords> &refs,
                           const Lexicon &lex, DecodeConfig config,
                           const std::vector<double> &grid, int threads) {
  if (grid.empty()) throw Error(ErrorKind::kValidation, "empty acoustic scale grid");
  double best_scale = grid.front(), best_wer = kInfinity;
  for (double scale : grid) {
    config.acoustic_scale = scale;
    double wer = ScoreDecodes("", refs, DecodeBatch(graph, grids, log_priors, config, threads), lex).Wer();
    if (wer < best_wer) {
      best_wer = wer;
      best_scale = scale;
    }
  }
  return best_scale;
}

std::vector<StateId> ForcedFrameAlignment(const MatrixD &log_posteriors,
                                          std::span<const StateId> gamma,
                                          const ModelParameters &params) {
  auto path = ForcedAlign(log_posteriors, gamma, params);
  return {path.begin() + 1, path.end()};
}

std::vector<StateId> BestPathFrameAlignment(const MatrixD &log_posteriors) {
  std::vector<StateId> out(log_posteriors.rows());
  for (Eigen::Index t = 0; t < log_posteriors.rows(); ++t) {
    Eigen::Index best;
    log_posteriors.row(t).maxCoeff(&best);
    out[t] = static_cast<StateId>(best);
  }
  return out;
}

}  // namespace eemmi
