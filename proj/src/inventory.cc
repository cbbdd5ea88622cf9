// src/inventory.cc

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

#include "eemmi/inventory.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "eemmi/common.h"

namespace eemmi {

namespace {

std::string_view StripComment(std::string_view line) {
  auto pos = line.find('#');
  if (pos != std::string_view::npos) line = line.substr(0, pos);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                           line.back() == '\t' || line.back() == '\n'))
    line.remove_suffix(1);
  return line;
}

std::ifstream OpenForRead(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return is;
}

}  // namespace

std::vector<std::string> SplitWhitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

StateInventory StateInventory::Build(const std::vector<std::string> &phoneme_names) {
  if (phoneme_names.empty())
    throw Error(ErrorKind::kValidation, "inventory needs at least one phoneme");
  StateInventory inv;
  inv.names_ = {kStartName, kEndName, kBlankName};
  for (const auto &name : phoneme_names) {
    if (name.empty() || SplitWhitespace(name).size() != 1)
      throw Error(ErrorKind::kValidation, "bad phoneme name '" + name + "'");
    if (name == kStartName || name == kEndName || name == kBlankName)
      throw Error(ErrorKind::kValidation, "phoneme name '" + name + "' is reserved");
    inv.names_.push_back(name);
  }
  for (StateId id = 0; id < inv.NumStates(); ++id) {
    if (!inv.index_.emplace(inv.names_[id], id).second)
      throw Error(ErrorKind::kValidation, "duplicate phoneme name '" + inv.names_[id] + "'");
  }
  return inv;
}

const std::string &StateInventory::Name(StateId id) const {
  if (id < 0 || id >= NumStates())
    throw Error(ErrorKind::kValidation, "state id " + std::to_string(id) + " out of range");
  return names_[id];
}

std::optional<StateId> StateInventory::Find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StateId StateInventory::Id(std::string_view name) const {
  auto id = Find(name);
  if (!id) throw Error(ErrorKind::kValidation, "unknown state '" + std::string(name) + "'");
  return *id;
}

std::vector<std::string> StateInventory::PhonemeNames() const {
  return {names_.begin() + kNumReservedStates, names_.end()};
}

void Lexicon::Add(const std::string &word, std::vector<StateId> phones,
                  const StateInventory &inv) {
  if (word.empty()) throw Error(ErrorKind::kValidation, "empty word in lexicon");
  if (phones.empty())
    throw Error(ErrorKind::kValidation, "word '" + word + "' has no phonemes");
  for (StateId p : phones) {
    if (!inv.IsPhoneme(p))
      throw Error(ErrorKind::kValidation,
                  "word '" + word + "' uses non-phoneme state " + std::to_string(p));
  }
  if (!entries_.emplace(word, std::move(phones)).second)
    throw Error(ErrorKind::kValidation, "word '" + word + "' listed twice");
}

const std::vector<StateId> *Lexicon::Find(const std::string &word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon ReadLexicon(std::istream &is, const StateInventory &inv) {
  Lexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto body = StripComment(line);
    auto fields = SplitWhitespace(body);
    if (fields.empty()) continue;
    if (fields.size() < 2)
      throw Error(ErrorKind::kParse,
                  "lexicon line " + std::to_string(line_no) + ": missing pronunciation");
    std::vector<StateId> phones;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto id = inv.Find(fields[i]);
      if (!id)
        throw Error(ErrorKind::kParse, "lexicon line " + std::to_string(line_no) +
                                           ": unknown phoneme '" + fields[i] + "'");
      phones.push_back(*id);
    }
    lex.Add(fields[0], std::move(phones), inv);
  }
  return lex;
}

Lexicon ReadLexiconFile(const std::string &path, const StateInventory &inv) {
  auto is = OpenForRead(path);
  return ReadLexicon(is, inv);
}

void WriteLexicon(std::ostream &os, const Lexicon &lex, const StateInventory &inv) {
  for (const auto &[word, phones] : lex.Entries()) {
    os << word << '\t';
    for (std::size_t i = 0; i < phones.size(); ++i)
      os << (i ? " " : "") << inv.Name(phones[i]);
    os << '\n';
  }
}

void ValidateTranscript(const Transcript &t, const StateInventory &inv) {
  if (t.gamma.size() < 2)
    throw Error(ErrorKind::kValidation, "transcript shorter than start/end");
  if (t.gamma.front() != kStartState || t.gamma.back() != kEndState)
    throw Error(ErrorKind::kValidation, "transcript must run from start to end");
  for (std::size_t k = 0; k < t.gamma.size(); ++k) {
    if (t.gamma[k] < 0 || t.gamma[k] >= inv.NumStates())
      throw Error(ErrorKind::kValidation, "transcript state out of range");
    if (k > 0 && t.gamma[k] == t.gamma[k - 1])
      throw Error(ErrorKind::kValidation, "transcript repeats a state at " + std::to_string(k));
  }
}

Transcript BuildTranscript(const std::vector<std::string> &words, const Lexicon &lex,
                           const StateInventory &inv) {
  if (words.empty()) throw Error(ErrorKind::kValidation, "empty sentence");
  Transcript t;
  t.gamma = {kStartState, kBlankState};
  for (const auto &word : words) {
    const auto *phones = lex.Find(word);
    if (!phones) throw Error(ErrorKind::kOutOfVocabulary, "out-of-vocabulary word '" + word + "'");
    for (std::size_t i = 0; i < phones->size(); ++i) {
      if (i > 0 && (*phones)[i] == (*phones)[i - 1]) t.gamma.push_back(kBlankState);
      t.gamma.push_back((*phones)[i]);
    }
    t.gamma.push_back(kBlankState);
  }
  t.gamma.push_back(kEndState);
  ValidateTranscript(t, inv);
  return t;
}

std::vector<StateId> CollapseStates(std::span<const StateId> s) {
  std::vector<StateId> out;
  out.reserve(s.size());
  for (StateId id : s)
    if (out.empty() || out.back() != id) out.push_back(id);
  return out;
}

std::vector<StateId> TranscriptPhonemes(const Transcript &t) {
  std::vector<StateId> out;
  for (StateId id : t.gamma)
    if (!StateInventory::IsReserved(id)) out.push_back(id);
  return out;
}

std::vector<UtteranceWords> ReadTranscriptText(std::istream &is) {
  std::vector<UtteranceWords> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto body = StripComment(line);
    auto fields = SplitWhitespace(body);
    if (fields.empty()) continue;
    out.emplace_back(fields[0], std::vector<std::string>(fields.begin() + 1, fields.end()));
  }
  return out;
}

std::vector<UtteranceWords> ReadTranscriptTextFile(const std::string &path) {
  auto is = OpenForRead(path);
  return ReadTranscriptText(is);
}

void WriteTranscriptText(std::ostream &os, const std::vector<UtteranceWords> &utts) {
  for (const auto &[id, words] : utts) {
    os << id << '\t';
    for (std::size_t i = 0; i < words.size(); ++i) os << (i ? " " : "") << words[i];
    os << '\n';
  }
}

StateInventory ReadInventoryFile(const std::string &path) {
  auto is = OpenForRead(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(is, line)) {
    auto fields = SplitWhitespace(StripComment(line));
    if (!fields.empty()) names.push_back(fields[0]);
  }
  return StateInventory::Build(names);
}

void WriteInventory(std::ostream &os, const StateInventory &inv) {
  for (const auto &name : inv.PhonemeNames()) os << name << '\n';
}

}  // namespace eemmi
