// eemmi/corpus.h

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

#ifndef EEMMI_CORPUS_H_
#define EEMMI_CORPUS_H_

// Synthetic corpora with known ground truth: a random lexicon, sentences
// drawn from a sparse random word bigram, geometric state durations and
// Gaussian frame features with a per-speaker affine distortion.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "eemmi/acoustic.h"
#include "eemmi/common.h"
#include "eemmi/inventory.h"
#include "eemmi/lm.h"

namespace eemmi {

struct SyntheticCorpusSpec {
  int num_phonemes = 10;
  int num_words = 20;
  int min_word_length = 2;
  int max_word_length = 4;
  int min_sentence_length = 2;
  int max_sentence_length = 6;
  int successors_per_word = 3;  // listed bigram successors of each context
  int feature_dim = 8;
  double mean_separation = 1.0;  // std. dev. of the state means
  double noise = 0.5;            // std. dev. of the frame noise
  double self_loop = 0.6;        // ground-truth p(0) for every state
  int num_speakers = 5;
  double speaker_scale = 0.2;    // std. dev. of the log per-dimension scale
  double speaker_shift = 0.5;    // std. dev. of the per-dimension offset
  int num_utterances = 550;
  std::uint64_t seed = 1;

  /// Throws kValidation for counts below 1, negative noise, non-positive
  /// separation, inverted ranges, a self-loop outside [0, 1) or a lexicon
  /// that cannot hold num_words distinct pronunciations.
  void Validate() const;
};

/// Plain `key = value` lines; `#` starts a comment. Unknown keys and
/// malformed values throw kParse with the line number.
SyntheticCorpusSpec ParseCorpusSpec(std::istream &is);
SyntheticCorpusSpec ReadCorpusSpecFile(const std::string &path);
void WriteCorpusSpec(std::ostream &os, const SyntheticCorpusSpec &spec);

struct Utterance {
  FeatureSequence features;
  std::vector<std::string> words;
  Transcript transcript;
  // One state per frame, s_1..s_T, drawn from the HMM with s_0 = start;
  // start may own no frame.
  std::vector<StateId> gold_alignment;
};

struct Corpus {
  StateInventory inventory;
  Lexicon lexicon;
  WordNgramLm word_lm;
  std::vector<Utterance> utterances;
  // Generator truth, empty for corpora read from disk.
  MatrixD state_means;                 // L x D
  std::vector<MatrixD> speaker_scale;  // per speaker, 1 x D
  std::vector<MatrixD> speaker_shift;

  std::vector<UtteranceWords> Words() const;
};

/// Fully determined by `spec`; the noise draws do not depend on
/// spec.noise, so frame accuracy falls monotonically as noise grows.
Corpus GenerateCorpus(const SyntheticCorpusSpec &spec);

/// Frame accuracy of the oracle classifier that assigns each frame to the
/// nearest state mean after that speaker's distortion.
double NearestMeanAccuracy(const Corpus &corpus);

/// Bisects spec.noise so NearestMeanAccuracy is close to `target`, using a
/// corpus of `probe_utterances` utterances.
double CalibrateNoise(SyntheticCorpusSpec spec, double target, int probe_utterances = 100);

/// Throws kValidation unless every alignment, prefixed with s_0 = start,
/// collapses to its transcript and matches its feature length.
void CheckCorpus(const Corpus &corpus);

/// Feature file: one text line `EEFEAT <rows> <cols> <utt_id> <speaker_id>`
/// followed by rows*cols little-endian float32 values, row-major.
void WriteFeatures(std::ostream &os, const FeatureSequence &f);
FeatureSequence ReadFeatures(std::istream &is);

/// Directory layout: phones.txt, lexicon.txt, lm.arpa, text (utt_id words),
/// alignments.txt (utt_id state names), feats/<utt_id>.feat.
void WriteCorpus(const std::string &dir, const Corpus &corpus);
Corpus ReadCorpus(const std::string &dir);

}  // namespace eemmi

#endif  // EEMMI_CORPUS_H_
