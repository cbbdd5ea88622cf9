// src/graphs.cc

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
#include <map>
#include <numbers>

#include "eemmi/decode.h"

namespace eemmi {

SymbolTable UnitSymbols(const StateInventory &inv) {
  SymbolTable syms;
  for (StateId c = 0; c < inv.NumStates(); ++c) syms.Add(inv.Name(c));
  return syms;
}

SymbolTable WordSymbols(const Lexicon &lex) {
  SymbolTable syms;
  for (const auto &[word, phones] : lex.Entries()) syms.Add(word);
  return syms;
}

namespace {

std::string ContextName(const WordNgramLm::Ngram &h) {
  if (h.empty()) return "<null>";
  std::string s;
  for (const auto &w : h) s += (s.empty() ? "" : " ") + w;
  return s;
}

}  // namespace

Wfst BuildGrammar(const WordNgramLm &lm, const SymbolTable &words,
                  std::vector<std::string> *state_names) {
  using Ngram = WordNgramLm::Ngram;
  const int N = lm.Order();
  const auto vocab = lm.Vocabulary();
  if (N < 1 || vocab.empty()) throw Error(ErrorKind::kValidation, "LM has an empty vocabulary");
  for (const auto &w : vocab)
    if (words.Find(w) < 0)
      throw Error(ErrorKind::kOutOfVocabulary, "LM word '" + w + "' is not in the lexicon");

  // Contexts: the empty history plus every listed n-gram of order < N that
  // can be continued.
  std::map<Ngram, WfstStateId> contexts;
  contexts.emplace(Ngram{}, 0);
  for (int n = 1; n < N; ++n)
    for (const auto &[ngram, entry] : lm.NgramsOfOrder(n))
      if (ngram.back() != kSentenceEnd) contexts.emplace(ngram, 0);

  Wfst g;
  g.InputSymbols() = words;
  g.OutputSymbols() = words;
  WfstStateId next_id = 0;
  for (auto &[ctx, id] : contexts) {
    id = next_id == 0 ? g.Start() : g.AddState();
    ++next_id;
    if (state_names) state_names->push_back(ContextName(ctx));
  }
  auto reduce = [&](Ngram h) {
    if (static_cast<int>(h.size()) > N - 1) h.erase(h.begin(), h.end() - (N - 1));
    while (!contexts.count(h)) h.erase(h.begin());
    return contexts.at(h);
  };
  const Ngram start_ctx =
      (N >= 2 && lm.HasSentenceBegin()) ? Ngram{kSentenceBegin} : Ngram{};
  g.SetStart(reduce(start_ctx));
  const bool has_end = lm.HasSentenceEnd();

  for (const auto &[ctx, id] : contexts) {
    const auto m = ctx.size();
    if (!has_end) g.SetFinal(id, 0.0);
    const auto &table = lm.NgramsOfOrder(static_cast<int>(m) + 1);
    for (auto it = table.lower_bound(ctx); it != table.end(); ++it) {
      const Ngram &ngram = it->first;
      if (!std::equal(ctx.begin(), ctx.end(), ngram.begin())) break;
      if (it->second.log10_prob <= kLog10Zero) continue;
      const std::string &w = ngram.back();
      const double cost = -it->second.log10_prob * std::numbers::ln10;
      if (w == kSentenceBegin) continue;
      if (w == kSentenceEnd) {
        g.SetFinal(id, cost);
        continue;
      }
      Label label = words.Find(w);
      g.AddArc(id, {label, label, cost, reduce(ngram)});
    }
    if (m > 0) {
      Ngram lower(ctx.begin() + 1, ctx.end());
      g.AddArc(id, {kEpsilon, kEpsilon, -lm.LogBackoff(ctx), reduce(lower)});
    }
  }
  Connect(g);
  return g;
}

Wfst BuildGrammar(const WordNgramLm &lm) {
  SymbolTable words;
  for (const auto &w : lm.Vocabulary()) words.Add(w);
  return BuildGrammar(lm, words);
}

Wfst BuildLexiconFst(const Lexicon &lex, const StateInventory &inv, const SymbolTable &words,
                     LexiconTopology topology) {
  if (lex.Empty()) throw Error(ErrorKind::kValidation, "empty lexicon");
  Wfst l;
  l.InputSymbols() = UnitSymbols(inv);
  l.OutputSymbols() = words;
  const Label blank = UnitLabel(kBlankState);

  WfstStateId hub = l.Start();
  WfstStateId word_end_target = hub;
  if (topology == LexiconTopology::kMmi) {
    WfstStateId after_start = l.AddState();
    hub = l.AddState();
    WfstStateId done = l.AddState();
    l.AddArc(l.Start(), {UnitLabel(kStartState), kEpsilon, 0.0, after_start});
    l.AddArc(after_start, {blank, kEpsilon, 0.0, hub});
    l.AddArc(hub, {UnitLabel(kEndState), kEpsilon, 0.0, done});
    l.SetFinal(done, 0.0);
    word_end_target = hub;
  } else {
    l.SetFinal(hub, 0.0);
  }

  for (const auto &[word, phones] : lex.Entries()) {
    Label out = words.Find(word);
    if (out < 0) throw Error(ErrorKind::kOutOfVocabulary, "word '" + word + "' missing from table");
    WfstStateId cur = hub;
    for (std::size_t i = 0; i < phones.size(); ++i) {
      if (topology == LexiconTopology::kMmi && i > 0 && phones[i] == phones[i - 1]) {
        WfstStateId s = l.AddState();
        l.AddArc(cur, {blank, kEpsilon, 0.0, s});
        cur = s;
      }
      const bool last = i + 1 == phones.size();
      WfstStateId s = (last && topology == LexiconTopology::kCtc) ? word_end_target : l.AddState();
      l.AddArc(cur, {UnitLabel(phones[i]), i == 0 ? out : kEpsilon, 0.0, s});
      cur = s;
    }
    if (topology == LexiconTopology::kMmi) l.AddArc(cur, {blank, kEpsilon, 0.0, word_end_target});
  }
  return l;
}

Wfst BuildLexiconFst(const Lexicon &lex, const StateInventory &inv, LexiconTopology topology) {
  return BuildLexiconFst(lex, inv, WordSymbols(lex), topology);
}

Wfst BuildHmmFst(const ModelParameters &params, const StateInventory &inv) {
  params.Validate();
  if (params.NumStates() != inv.NumStates())
    throw Error(ErrorKind::kShapeMismatch, "parameters and inventory disagree on L");
  Wfst h;
  h.InputSymbols() = UnitSymbols(inv);
  h.OutputSymbols() = h.InputSymbols();
  const WfstStateId hub = h.Start();
  h.SetFinal(hub, 0.0);
  for (StateId c = 0; c < inv.NumStates(); ++c) {
    const double a = params.transition_logits(c);
    const Label label = UnitLabel(c);
    WfstStateId s = h.AddState();
    // s_0 is the start state without consuming a frame, so start may own
    // zero frames.
    h.AddArc(hub, {c == kStartState ? kEpsilon : label, label, 0.0, s});
    h.AddArc(s, {label, kEpsilon, -LogSigmoid(a), s});
    h.AddArc(s, {kEpsilon, kEpsilon, -LogSigmoid(-a), hub});
  }
  return h;
}

Wfst BuildCtcTokenFst(const StateInventory &inv) {
  Wfst t;
  t.InputSymbols() = UnitSymbols(inv);
  t.OutputSymbols() = t.InputSymbols();
  const WfstStateId idle = t.Start();
  const Label blank = UnitLabel(kBlankState);
  t.SetFinal(idle, 0.0);
  t.AddArc(idle, {blank, kEpsilon, 0.0, idle});
  std::vector<WfstStateId> in_unit(inv.NumStates(), -1);
  for (StateId c = kNumReservedStates; c < inv.NumStates(); ++c) {
    in_unit[c] = t.AddState();
    t.SetFinal(in_unit[c], 0.0);
  }
  for (StateId c = kNumReservedStates; c < inv.NumStates(); ++c) {
    const Label label = UnitLabel(c);
    t.AddArc(idle, {label, label, 0.0, in_unit[c]});
    t.AddArc(in_unit[c], {label, kEpsilon, 0.0, in_unit[c]});
    t.AddArc(in_unit[c], {blank, kEpsilon, 0.0, idle});
    for (StateId d = kNumReservedStates; d < inv.NumStates(); ++d)
      if (d != c) t.AddArc(in_unit[c], {UnitLabel(d), UnitLabel(d), 0.0, in_unit[d]});
  }
  return t;
}

Wfst BuildHlg(const ModelParameters &params, const StateInventory &inv, const Lexicon &lex,
              const WordNgramLm &lm) {
  SymbolTable words = WordSymbols(lex);
  Wfst lg = Compose(BuildLexiconFst(lex, inv, words, LexiconTopology::kMmi),
                    BuildGrammar(lm, words));
  return Compose(BuildHmmFst(params, inv), lg);
}

Wfst BuildTlg(const StateInventory &inv, const Lexicon &lex, const WordNgramLm &lm) {
  SymbolTable words = WordSymbols(lex);
  Wfst lg = Compose(BuildLexiconFst(lex, inv, words, LexiconTopology::kCtc),
                    BuildGrammar(lm, words));
  return Compose(BuildCtcTokenFst(inv), lg);
}

}  // namespace eemmi
