// eemmi/pipeline.h

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

#ifndef EEMMI_PIPELINE_H_
#define EEMMI_PIPELINE_H_

// Glue between corpora, trained models and the decoder: feature
// normalization, posterior computation, ensembles, batch decoding and
// scoring.

#include <span>
#include <string>
#include <vector>

#include "eemmi/acoustic.h"
#include "eemmi/corpus.h"
#include "eemmi/decode.h"
#include "eemmi/metrics.h"

namespace eemmi {

/// Speaker-normalized copy of every utterance's features.
std::vector<FeatureSequence> NormalizedFeatures(const Corpus &corpus,
                                                std::vector<std::string> *warnings = nullptr);

/// Windowed training utterances for the selected corpus indices.
std::vector<TrainingUtterance> MakeTrainingSet(const Corpus &corpus,
                                               const std::vector<FeatureSequence> &normalized,
                                               std::span<const int> indices, int context);

MatrixD ComputeLogPosteriors(const AcousticModel &model, const MatrixD &frames);
/// Log of the averaged posteriors of all members.
MatrixD EnsembleLogPosteriors(const std::vector<AcousticModel> &models, const MatrixD &frames);

/// HMM parameters for decoding with an ensemble: only the posteriors are
/// averaged, so the first member's transitions and priors are used.
ModelParameters EnsembleParameters(const std::vector<AcousticModel> &models);

/// HLG for MMI models, TLG for CTC.
Wfst BuildDecodingGraph(LossKind kind, const ModelParameters &params, const StateInventory &inv,
                        const Lexicon &lex, const WordNgramLm &lm);
/// omega for MMI; zeros for CTC, which has no trained prior.
VectorD DecodingLogPriors(LossKind kind, const ModelParameters &params);

/// Decodes every grid, `threads` at a time (0 picks the hardware count).
/// Results keep the input order. A grid with no surviving final token gets
/// an empty hypothesis and counts in `failures`.
std::vector<DecodeResult> DecodeBatch(const Wfst &graph, const std::vector<MatrixD> &grids,
                                      const VectorD &log_priors, const DecodeConfig &config,
                                      int threads = 0, int *failures = nullptr);

/// Phonemes of a word sequence through the lexicon.
std::vector<StateId> WordsToPhonemes(const std::vector<std::string> &words, const Lexicon &lex);

/// WER and PER of decoded hypotheses against the references, plus RTF.
EvalReport ScoreDecodes(const std::string &system, const std::vector<UtteranceWords> &refs,
                        const std::vector<DecodeResult> &decodes, const Lexicon &lex);

inline const std::vector<double> kAcousticScaleGrid = {0.5, 0.6, 0.7, 0.8, 0.9};

/// The grid value with the lowest WER on the given utterances (ties go to
/// the earlier value).
double SelectAcousticScale(const Wfst &graph, const std::vector<MatrixD> &grids,
                           const VectorD &log_priors, const std::vector<UtteranceWords> &refs,
                           const Lexicon &lex, DecodeConfig config,
                           const std::vector<double> &grid = kAcousticScaleGrid,
                           int threads = 0);

/// Frame labels s_1..s_T of the forced alignment against `gamma`.
std::vector<StateId> ForcedFrameAlignment(const MatrixD &log_posteriors,
                                          std::span<const StateId> gamma,
                                          const ModelParameters &params);
/// Per-frame argmax labels.
std::vector<StateId> BestPathFrameAlignment(const MatrixD &log_posteriors);

}  // namespace eemmi

#endif  // EEMMI_PIPELINE_H_
