// tests/test-inventory.cc

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

#include <random>
#include <sstream>

#include "doctest.h"
#include "eemmi/inventory.h"

using namespace eemmi;

namespace {

StateInventory HeIs() { return StateInventory::Build({"HH", "IY", "IH", "Z", "AH"}); }

Lexicon HeIsLexicon(const StateInventory &inv) {
  Lexicon lex;
  lex.Add("he", {inv.Id("HH"), inv.Id("IY")}, inv);
  lex.Add("is", {inv.Id("IH"), inv.Id("Z")}, inv);
  lex.Add("aha", {inv.Id("AH"), inv.Id("AH")}, inv);
  return lex;
}

}  // namespace

TEST_CASE("inventory ids") {
  auto inv = StateInventory::Build({"HH", "IY", "IH", "Z"});
  CHECK(inv.NumStates() == 7);
  CHECK(inv.Id("start") == 0);
  CHECK(inv.Id("end") == 1);
  CHECK(inv.Id("blank") == 2);
  CHECK(inv.Id("HH") == 3);
  CHECK(inv.Id("Z") == 6);
  CHECK(inv.Name(4) == "IY");
  CHECK_FALSE(inv.Find("XX").has_value());

  std::vector<std::string> names;
  for (int i = 0; i < 69; ++i) names.push_back("p" + std::to_string(i));
  CHECK(StateInventory::Build(names).NumStates() == 72);
}

TEST_CASE("inventory rejects bad names") {
  auto kind_of = [](const std::vector<std::string> &names) {
    try {
      StateInventory::Build(names);
    } catch (const Error &e) {
      return e.kind();
    }
    FAIL("no error");
    return ErrorKind::kIo;
  };
  CHECK(kind_of({}) == ErrorKind::kValidation);
  CHECK(kind_of({"a", "a"}) == ErrorKind::kValidation);
  CHECK(kind_of({"a", "blank"}) == ErrorKind::kValidation);
}

TEST_CASE("transcript construction") {
  auto inv = HeIs();
  auto lex = HeIsLexicon(inv);
  auto t = BuildTranscript({"he", "is"}, lex, inv);
  std::vector<StateId> want = {0, 2, inv.Id("HH"), inv.Id("IY"), 2, inv.Id("IH"), inv.Id("Z"), 2, 1};
  CHECK(t.gamma == want);
  CHECK(t.K() == 8);

  auto aha = BuildTranscript({"aha"}, lex, inv);
  std::vector<StateId> want_aha = {0, 2, inv.Id("AH"), 2, inv.Id("AH"), 2, 1};
  CHECK(aha.gamma == want_aha);

  try {
    BuildTranscript({"he", "was"}, lex, inv);
    FAIL("expected OOV");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kOutOfVocabulary);
    CHECK(std::string(e.what()).find("was") != std::string::npos);
  }
  CHECK_THROWS_AS(BuildTranscript({}, lex, inv), Error);
}

TEST_CASE("three identical phonemes get a blank at every pair") {
  auto inv = HeIs();
  Lexicon lex;
  const StateId ah = inv.Id("AH");
  lex.Add("ahaha", {ah, ah, ah}, inv);
  auto t = BuildTranscript({"ahaha"}, lex, inv);
  std::vector<StateId> want = {0, 2, ah, 2, ah, 2, ah, 2, 1};
  CHECK(t.gamma == want);
}

TEST_CASE("collapse") {
  CHECK(CollapseStates(std::vector<StateId>{0, 0, 2, 3, 3, 4}) == std::vector<StateId>{0, 2, 3, 4});
  CHECK(CollapseStates(std::vector<StateId>{5}) == std::vector<StateId>{5});
  CHECK(CollapseStates(std::vector<StateId>{5, 6, 5}) == std::vector<StateId>{5, 6, 5});
  CHECK(CollapseStates(std::vector<StateId>{}).empty());
}

TEST_CASE("collapse properties on random lexicons") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nphones(1, 4), len(1, 4), nwords(1, 5);
    std::vector<std::string> names;
    for (int i = nphones(rng); i > 0; --i) names.push_back("q" + std::to_string(i));
    auto inv = StateInventory::Build(names);
    std::uniform_int_distribution<StateId> phone(kNumReservedStates, inv.NumStates() - 1);
    Lexicon lex;
    std::vector<std::string> words;
    for (int w = 0; w < 4; ++w) {
      std::vector<StateId> pron(len(rng));
      for (auto &p : pron) p = phone(rng);
      words.push_back("w" + std::to_string(w));
      lex.Add(words.back(), pron, inv);
    }
    std::vector<std::string> sent;
    std::uniform_int_distribution<int> pick(0, 3);
    for (int i = nwords(rng); i > 0; --i) sent.push_back(words[pick(rng)]);
    auto t = BuildTranscript(sent, lex, inv);
    ValidateTranscript(t, inv);
    for (std::size_t k = 1; k < t.gamma.size(); ++k) CHECK(t.gamma[k] != t.gamma[k - 1]);

    std::geometric_distribution<int> extra(0.5);
    std::vector<StateId> s;
    for (StateId g : t.gamma) s.insert(s.end(), 1 + extra(rng), g);
    auto c = CollapseStates(s);
    CHECK(c == t.gamma);
    CHECK(CollapseStates(c) == c);
  }
}

TEST_CASE("lexicon and transcript text round trip") {
  auto inv = HeIs();
  auto lex = HeIsLexicon(inv);
  std::stringstream ss;
  WriteLexicon(ss, lex, inv);
  auto back = ReadLexicon(ss, inv);
  CHECK(back.Entries() == lex.Entries());

  std::istringstream bad("he\tHH XX\n");
  CHECK_THROWS_AS(ReadLexicon(bad, inv), Error);
  std::istringstream reserved("he\tHH blank\n");
  CHECK_THROWS_AS(ReadLexicon(reserved, inv), Error);
  std::istringstream commented("# comment\nhe\tHH IY\n\n");
  CHECK(ReadLexicon(commented, inv).Size() == 1);

  std::vector<UtteranceWords> utts = {{"u1", {"he", "is"}}, {"u2", {"aha"}}};
  std::stringstream ts;
  WriteTranscriptText(ts, utts);
  CHECK(ReadTranscriptText(ts) == utts);
}
