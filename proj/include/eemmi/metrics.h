// eemmi/metrics.h

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

#ifndef EEMMI_METRICS_H_
#define EEMMI_METRICS_H_

#include <algorithm>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"

namespace eemmi {

struct EditCounts {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long reference_length = 0;

  long Errors() const { return substitutions + insertions + deletions; }
  /// (S + I + D) / N; 0 for an empty reference with no errors.
  double Rate() const;
  EditCounts &operator+=(const EditCounts &o);
};

/// Levenshtein alignment of `hyp` against `ref` with unit costs. Among
/// minimal alignments the backtrace prefers match/substitution, then
/// deletion, then insertion.
template <typename T>
EditCounts AlignEdit(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<long> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long & { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});
  EditCounts c;
  c.reference_length = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

template <typename T>
EditCounts AlignEdit(const std::vector<T> &ref, const std::vector<T> &hyp) {
  return AlignEdit(std::span<const T>(ref), std::span<const T>(hyp));
}

/// Micro-averaged error counts over utterances matched by id, in order.
/// Throws kValidation when the id lists differ.
EditCounts ComputeErrorRate(const std::vector<UtteranceWords> &refs,
                            const std::vector<UtteranceWords> &hyps);

/// Fraction of frames with equal labels over all utterances. Throws
/// kShapeMismatch on a length mismatch.
double AlignmentAccuracy(const std::vector<std::vector<StateId>> &gold,
                         const std::vector<std::vector<StateId>> &hyp);

inline constexpr double kFramePeriodSeconds = 0.01;

struct DecodeTiming {
  int num_frames = 0;
  double wall_seconds = 0;
};

/// Total decode time over total audio time (duration-weighted mean).
double MeanRealTimeFactor(std::span<const DecodeTiming> runs,
                          double frame_period = kFramePeriodSeconds);

struct GraphStats {
  long states = 0;
  long arcs = 0;
  long serialized_bytes = 0;
};

struct EvalReport {
  std::string system;
  EditCounts words;
  EditCounts phonemes;
  double alignment_accuracy = -1;  // -1 when not measured
  double mean_rtf = -1;
  GraphStats graph;

  double Wer() const { return words.Rate(); }
  double Per() const { return phonemes.Rate(); }
};

void WriteEvalCsv(std::ostream &os, const std::vector<EvalReport> &reports);
void WriteEvalText(std::ostream &os, const std::vector<EvalReport> &reports);

}  // namespace eemmi

#endif  // EEMMI_METRICS_H_
