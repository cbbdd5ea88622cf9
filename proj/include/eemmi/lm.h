// eemmi/lm.h

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

#ifndef EEMMI_LM_H_
#define EEMMI_LM_H_

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"

namespace eemmi {

enum class StateLmKind { kUniform, kUnigram, kBigram };

const char *ToString(StateLmKind kind);
StateLmKind ParseStateLmKind(const std::string &name);

/// Train-time state LM q(c, c') over distinct states. Rows sum to one over
/// c' != c and the diagonal is zero.
struct StateLm {
  StateLmKind kind = StateLmKind::kBigram;
  MatrixD q;

  int NumStates() const { return static_cast<int>(q.rows()); }
};

inline constexpr double kDefaultStateLmSmoothing = 0.1;

/// Counts adjacent pairs (bigram) or state occurrences (unigram) over the
/// transcripts and normalizes each row with additive smoothing `alpha` on
/// the off-diagonal entries. Throws kEstimation for an all-zero row.
StateLm EstimateStateLm(const std::vector<Transcript> &transcripts, int num_states,
                        StateLmKind kind, double alpha = kDefaultStateLmSmoothing);

/// Row-major text, one row per line, preceded by a `# state-lm <kind> <L>` line.
void WriteStateLm(std::ostream &os, const StateLm &lm);
StateLm ReadStateLm(std::istream &is);

inline constexpr const char *kSentenceBegin = "<s>";
inline constexpr const char *kSentenceEnd = "</s>";

/// Back-off n-gram LM over words, as read from ARPA text. Stored values are
/// log10 as in the file.
class WordNgramLm {
 public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };
  using Ngram = std::vector<std::string>;
  using Table = std::map<Ngram, Entry>;

  int Order() const { return static_cast<int>(tables_.size()); }
  const Table &NgramsOfOrder(int n) const { return tables_.at(n - 1); }
  const Entry *Find(const Ngram &ngram) const;

  /// Words other than <s>, </s>, in sorted order.
  std::vector<std::string> Vocabulary() const;
  bool HasSentenceEnd() const { return Find({kSentenceEnd}) != nullptr; }
  bool HasSentenceBegin() const { return Find({kSentenceBegin}) != nullptr; }

  /// Natural-log P(word | history) with standard back-off; the history is
  /// truncated to Order()-1 words. -inf for log10 probabilities <= -99.
  /// Throws kOutOfVocabulary if the word has no unigram.
  double LogProb(const Ngram &history, const std::string &word) const;

  /// Natural-log back-off weight of a context (0 when unlisted).
  double LogBackoff(const Ngram &context) const;

  friend WordNgramLm ParseArpa(std::istream &is);
  void Add(const Ngram &ngram, Entry entry);

 private:
  std::vector<Table> tables_;
};

/// Throws kParse with the offending line number.
WordNgramLm ParseArpa(std::istream &is);
WordNgramLm ParseArpaText(const std::string &text);
WordNgramLm ReadArpaFile(const std::string &path);
void WriteArpa(std::ostream &os, const WordNgramLm &lm);

/// Natural-log probability of a sentence. Starts from <s> when the LM lists
/// it and adds the </s> term when the LM lists that. The empty sequence
/// scores 0.
double ScoreWordSequence(const WordNgramLm &lm, const std::vector<std::string> &words);

inline constexpr double kLog10Zero = -99.0;

}  // namespace eemmi

#endif  // EEMMI_LM_H_
