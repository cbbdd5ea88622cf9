// eemmi/inventory.h

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

#ifndef EEMMI_INVENTORY_H_
#define EEMMI_INVENTORY_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eemmi/common.h"

namespace eemmi {

using StateId = std::int32_t;

inline constexpr StateId kStartState = 0;
inline constexpr StateId kEndState = 1;
inline constexpr StateId kBlankState = 2;
inline constexpr StateId kNumReservedStates = 3;

/// The state alphabet: the three reserved states followed by the phonemes in
/// the order they were given. Ids are dense and never change after Build().
class StateInventory {
 public:
  static constexpr const char *kStartName = "start";
  static constexpr const char *kEndName = "end";
  static constexpr const char *kBlankName = "blank";

  StateInventory() = default;

  static StateInventory Build(const std::vector<std::string> &phoneme_names);

  int NumStates() const { return static_cast<int>(names_.size()); }
  int NumPhonemes() const { return NumStates() - kNumReservedStates; }

  const std::string &Name(StateId id) const;
  /// Throws kValidation on unknown name.
  StateId Id(std::string_view name) const;
  std::optional<StateId> Find(std::string_view name) const;

  static bool IsReserved(StateId id) { return id >= 0 && id < kNumReservedStates; }
  bool IsPhoneme(StateId id) const {
    return id >= kNumReservedStates && id < NumStates();
  }
  std::vector<std::string> PhonemeNames() const;
  const std::vector<std::string> &Names() const { return names_; }

  bool operator==(const StateInventory &other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, StateId> index_;
};

/// Single-pronunciation lexicon: word -> phoneme ids.
class Lexicon {
 public:
  Lexicon() = default;

  /// Throws kValidation for empty pronunciations or non-phoneme ids.
  void Add(const std::string &word, std::vector<StateId> phones,
           const StateInventory &inv);

  const std::vector<StateId> *Find(const std::string &word) const;
  const std::map<std::string, std::vector<StateId>> &Entries() const { return entries_; }
  std::size_t Size() const { return entries_.size(); }
  bool Empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::vector<StateId>> entries_;
};

/// `word<TAB>phone phone ...` per line, `#` starts a comment.
Lexicon ReadLexicon(std::istream &is, const StateInventory &inv);
Lexicon ReadLexiconFile(const std::string &path, const StateInventory &inv);
void WriteLexicon(std::ostream &os, const Lexicon &lex, const StateInventory &inv);

/// Collapsed state sequence of a sentence, Gamma_0..Gamma_K.
struct Transcript {
  std::vector<StateId> gamma;

  int K() const { return static_cast<int>(gamma.size()) - 1; }
  bool operator==(const Transcript &other) const = default;
};

/// Throws kValidation if `t` breaks the start/end/no-repeat invariants.
void ValidateTranscript(const Transcript &t, const StateInventory &inv);

/// start, blank, word phones (blank between identical neighbours), blank,
/// ..., blank, end. Throws kOutOfVocabulary naming the word, or
/// kValidation for an empty sentence.
Transcript BuildTranscript(const std::vector<std::string> &words,
                           const Lexicon &lex, const StateInventory &inv);

/// Replaces each maximal run of equal ids by a single id.
std::vector<StateId> CollapseStates(std::span<const StateId> s);

/// Phonemes of a transcript with reserved states removed.
std::vector<StateId> TranscriptPhonemes(const Transcript &t);

using UtteranceWords = std::pair<std::string, std::vector<std::string>>;

/// `utt_id<TAB>word word ...` per line.
std::vector<UtteranceWords> ReadTranscriptText(std::istream &is);
std::vector<UtteranceWords> ReadTranscriptTextFile(const std::string &path);
void WriteTranscriptText(std::ostream &os, const std::vector<UtteranceWords> &utts);

/// Inventory file: one phoneme name per line (reserved states implied).
StateInventory ReadInventoryFile(const std::string &path);
void WriteInventory(std::ostream &os, const StateInventory &inv);

std::vector<std::string> SplitWhitespace(std::string_view line);

}  // namespace eemmi

#endif  // EEMMI_INVENTORY_H_
