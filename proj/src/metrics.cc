// src/metrics.cc

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

#include "eemmi/metrics.h"

#include <cstdio>

namespace eemmi {

double EditCounts::Rate() const {
  if (reference_length == 0) return Errors() == 0 ? 0.0 : static_cast<double>(Errors());
  return static_cast<double>(Errors()) / static_cast<double>(reference_length);
}

EditCounts &EditCounts::operator+=(const EditCounts &o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  reference_length += o.reference_length;
  return *this;
}

EditCounts ComputeErrorRate(const std::vector<UtteranceWords> &refs,
                            const std::vector<UtteranceWords> &hyps) {
  if (refs.size() != hyps.size())
    throw Error(ErrorKind::kValidation, "reference and hypothesis counts differ");
  EditCounts total;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].first != hyps[i].first)
      throw Error(ErrorKind::kValidation,
                  "utterance id mismatch: " + refs[i].first + " vs " + hyps[i].first);
    total += AlignEdit(refs[i].second, hyps[i].second);
  }
  return total;
}

double AlignmentAccuracy(const std::vector<std::vector<StateId>> &gold,
                         const std::vector<std::vector<StateId>> &hyp) {
  if (gold.size() != hyp.size())
    throw Error(ErrorKind::kShapeMismatch, "alignment counts differ");
  long match = 0, total = 0;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (gold[u].size() != hyp[u].size())
      throw Error(ErrorKind::kShapeMismatch, "alignment lengths differ for utterance " +
                                                 std::to_string(u));
    for (std::size_t t = 0; t < gold[u].size(); ++t) match += gold[u][t] == hyp[u][t];
    total += static_cast<long>(gold[u].size());
  }
  return total == 0 ? 1.0 : static_cast<double>(match) / static_cast<double>(total);
}

double MeanRealTimeFactor(std::span<const DecodeTiming> runs, double frame_period) {
  double wall = 0, audio = 0;
  for (const auto &r : runs) {
    wall += r.wall_seconds;
    audio += r.num_frames * frame_period;
  }
  return audio > 0 ? wall / audio : 0.0;
}

void WriteEvalCsv(std::ostream &os, const std::vector<EvalReport> &reports) {
  os << "system,wer,per,substitutions,insertions,deletions,ref_words,alignment_accuracy,"
        "mean_rtf,graph_states,graph_arcs,graph_bytes\n";
  char buf[256];
  for (const auto &r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%ld,%ld,%ld,%ld,%.6f,%.6f,%ld,%ld,%ld\n",
                  r.system.c_str(), r.Wer(), r.Per(), r.words.substitutions,
                  r.words.insertions, r.words.deletions, r.words.reference_length,
                  r.alignment_accuracy, r.mean_rtf, r.graph.states, r.graph.arcs,
                  r.graph.serialized_bytes);
    os << buf;
  }
}

void WriteEvalText(std::ostream &os, const std::vector<EvalReport> &reports) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %6s %6s %6s %10s %10s %12s\n", "system", "WER%",
                "PER%", "sub", "ins", "del", "align-acc", "RTF", "graph-bytes");
  os << buf;
  for (const auto &r : reports) {
    std::snprintf(buf, sizeof(buf), "%-12s %8.2f %8.2f %6ld %6ld %6ld %10.4f %10.5f %12ld\n",
                  r.system.c_str(), 100 * r.Wer(), 100 * r.Per(), r.words.substitutions,
                  r.words.insertions, r.words.deletions, r.alignment_accuracy, r.mean_rtf,
                  r.graph.serialized_bytes);
    os << buf;
  }
}

}  // namespace eemmi
