// src/wfst.cc

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

#include "eemmi/wfst.h"

#include <array>
#include <bit>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>
#include <tuple>

namespace eemmi {

SymbolTable::SymbolTable() { Add("<eps>"); }

Label SymbolTable::Add(const std::string &symbol) {
  auto it = index_.find(symbol);
  if (it != index_.end()) return it->second;
  Label id = static_cast<Label>(symbols_.size());
  symbols_.push_back(symbol);
  index_.emplace(symbol, id);
  return id;
}

Label SymbolTable::Find(const std::string &symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

const std::string &SymbolTable::Symbol(Label label) const {
  if (label < 0 || label >= Size())
    throw Error(ErrorKind::kValidation, "label " + std::to_string(label) + " not in symbol table");
  return symbols_[label];
}

Wfst::Wfst() { AddState(); }

WfstStateId Wfst::AddState() {
  finals_.push_back(kInfinity);
  arcs_.emplace_back();
  return static_cast<WfstStateId>(finals_.size() - 1);
}

long Wfst::NumArcs() const {
  long n = 0;
  for (const auto &a : arcs_) n += static_cast<long>(a.size());
  return n;
}

void Wfst::SetStart(WfstStateId s) {
  if (s < 0 || s >= NumStates()) throw Error(ErrorKind::kValidation, "start state out of range");
  start_ = s;
}

void Wfst::SetFinal(WfstStateId s, double weight) { finals_.at(s) = weight; }

void Wfst::AddArc(WfstStateId src, const Arc &arc) { arcs_.at(src).push_back(arc); }

void Wfst::Validate() const {
  for (WfstStateId s = 0; s < NumStates(); ++s) {
    if (std::isnan(finals_[s]) || finals_[s] == -kInfinity)
      throw Error(ErrorKind::kValidation, "bad final weight");
    for (const auto &a : arcs_[s]) {
      if (a.nextstate < 0 || a.nextstate >= NumStates())
        throw Error(ErrorKind::kValidation, "arc to missing state");
      if (a.ilabel < 0 || a.ilabel >= isyms_.Size() || a.olabel < 0 || a.olabel >= osyms_.Size())
        throw Error(ErrorKind::kValidation, "arc label outside symbol table");
      if (std::isnan(a.weight) || a.weight == -kInfinity)
        throw Error(ErrorKind::kValidation, "bad arc weight");
    }
  }
}

void Connect(Wfst &fst) {
  const int n = fst.NumStates();
  std::vector<char> access(n, 0), coaccess(n, 0);
  std::vector<std::vector<WfstStateId>> reverse(n);
  for (WfstStateId s = 0; s < n; ++s)
    for (const auto &a : fst.Arcs(s))
      if (a.weight != kInfinity) reverse[a.nextstate].push_back(s);

  std::vector<WfstStateId> stack = {fst.Start()};
  access[fst.Start()] = 1;
  while (!stack.empty()) {
    WfstStateId s = stack.back();
    stack.pop_back();
    for (const auto &a : fst.Arcs(s))
      if (a.weight != kInfinity && !access[a.nextstate]) {
        access[a.nextstate] = 1;
        stack.push_back(a.nextstate);
      }
  }
  for (WfstStateId s = 0; s < n; ++s)
    if (fst.IsFinal(s)) {
      coaccess[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    WfstStateId s = stack.back();
    stack.pop_back();
    for (WfstStateId p : reverse[s])
      if (!coaccess[p]) {
        coaccess[p] = 1;
        stack.push_back(p);
      }
  }

  Wfst out;
  out.InputSymbols() = fst.InputSymbols();
  out.OutputSymbols() = fst.OutputSymbols();
  if (!(access[fst.Start()] && coaccess[fst.Start()])) {
    fst = std::move(out);
    return;
  }
  std::vector<WfstStateId> remap(n, -1);
  remap[fst.Start()] = out.Start();
  for (WfstStateId s = 0; s < n; ++s)
    if (s != fst.Start() && access[s] && coaccess[s]) remap[s] = out.AddState();
  for (WfstStateId s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;
    out.SetFinal(remap[s], fst.Final(s));
    for (const auto &a : fst.Arcs(s))
      if (remap[a.nextstate] >= 0 && a.weight != kInfinity) {
        Arc b = a;
        b.nextstate = remap[a.nextstate];
        out.AddArc(remap[s], b);
      }
  }
  fst = std::move(out);
}

Wfst Compose(const Wfst &a, const Wfst &b) {
  if (!(a.OutputSymbols() == b.InputSymbols()))
    throw Error(ErrorKind::kShapeMismatch, "composition alphabets differ");
  Wfst out;
  out.InputSymbols() = a.InputSymbols();
  out.OutputSymbols() = b.OutputSymbols();

  using Key = std::tuple<WfstStateId, WfstStateId, int>;
  std::map<Key, WfstStateId> ids;
  std::deque<Key> queue;
  auto state_of = [&](const Key &k) {
    auto [it, inserted] = ids.emplace(k, 0);
    if (inserted) {
      it->second = ids.size() == 1 ? out.Start() : out.AddState();
      queue.push_back(k);
    }
    return it->second;
  };
  state_of({a.Start(), b.Start(), 0});

  std::vector<char> a_has_eps_out(a.NumStates(), 0);
  for (WfstStateId s = 0; s < a.NumStates(); ++s)
    for (const auto &arc : a.Arcs(s))
      if (arc.olabel == kEpsilon) a_has_eps_out[s] = 1;

  // b's arcs grouped by input label, per state, built lazily.
  std::vector<std::multimap<Label, const Arc *>> b_index(b.NumStates());
  std::vector<char> b_indexed(b.NumStates(), 0);

  while (!queue.empty()) {
    auto [sa, sb, filter] = queue.front();
    queue.pop_front();
    const WfstStateId src = ids.at({sa, sb, filter});
    if (a.IsFinal(sa) && b.IsFinal(sb)) out.SetFinal(src, a.Final(sa) + b.Final(sb));

    if (!b_indexed[sb]) {
      for (const auto &arc : b.Arcs(sb)) b_index[sb].emplace(arc.ilabel, &arc);
      b_indexed[sb] = 1;
    }
    for (const auto &arc : a.Arcs(sa)) {
      if (arc.olabel == kEpsilon) {
        if (filter != 0) continue;
        WfstStateId dst = state_of({arc.nextstate, sb, 0});
        out.AddArc(src, {arc.ilabel, kEpsilon, arc.weight, dst});
        continue;
      }
      auto [lo, hi] = b_index[sb].equal_range(arc.olabel);
      for (auto it = lo; it != hi; ++it) {
        const Arc &barc = *it->second;
        WfstStateId dst = state_of({arc.nextstate, barc.nextstate, 0});
        out.AddArc(src, {arc.ilabel, barc.olabel, arc.weight + barc.weight, dst});
      }
    }
    auto [lo, hi] = b_index[sb].equal_range(kEpsilon);
    for (auto it = lo; it != hi; ++it) {
      const Arc &barc = *it->second;
      WfstStateId dst = state_of({sa, barc.nextstate, a_has_eps_out[sa] ? 1 : 0});
      out.AddArc(src, {kEpsilon, barc.olabel, barc.weight, dst});
    }
  }
  Connect(out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kWfstMagic[8] = {'E', 'E', 'W', 'F', 'S', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "graph I/O assumes a little-endian host");

template <typename T>
void Put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T Get(std::istream &is) {
  T v{};
  if (!is.read(reinterpret_cast<char *>(&v), sizeof(T)))
    throw Error(ErrorKind::kParse, "truncated graph file");
  return v;
}

void PutSymbols(std::ostream &os, const SymbolTable &syms) {
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(syms.Size()));
  for (const auto &s : syms.Symbols()) {
    Put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
}

SymbolTable GetSymbols(std::istream &is) {
  SymbolTable syms;
  const auto n = Get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = Get<std::uint32_t>(is);
    if (len > (1u << 20)) throw Error(ErrorKind::kParse, "symbol too long");
    std::string s(len, '\0');
    if (!is.read(s.data(), len)) throw Error(ErrorKind::kParse, "truncated graph file");
    if (i == 0) {
      if (s != "<eps>") throw Error(ErrorKind::kParse, "symbol 0 must be <eps>");
      continue;
    }
    if (syms.Add(s) != static_cast<Label>(i)) throw Error(ErrorKind::kParse, "duplicate symbol");
  }
  return syms;
}

long SymbolBytes(const SymbolTable &syms) {
  long n = 4;
  for (const auto &s : syms.Symbols()) n += 4 + static_cast<long>(s.size());
  return n;
}

}  // namespace

void WriteWfst(std::ostream &os, const Wfst &fst) {
  os.write(kWfstMagic, 8);
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(fst.NumStates()));
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(fst.Start()));
  Put<std::uint64_t>(os, static_cast<std::uint64_t>(fst.NumArcs()));
  PutSymbols(os, fst.InputSymbols());
  PutSymbols(os, fst.OutputSymbols());
  for (WfstStateId s = 0; s < fst.NumStates(); ++s) Put<double>(os, fst.Final(s));
  for (WfstStateId s = 0; s < fst.NumStates(); ++s)
    for (const auto &a : fst.Arcs(s)) {
      Put<std::uint32_t>(os, static_cast<std::uint32_t>(s));
      Put<std::uint32_t>(os, static_cast<std::uint32_t>(a.nextstate));
      Put<std::uint32_t>(os, static_cast<std::uint32_t>(a.ilabel));
      Put<std::uint32_t>(os, static_cast<std::uint32_t>(a.olabel));
      Put<double>(os, a.weight);
    }
  if (!os) throw Error(ErrorKind::kIo, "graph write failed");
}

Wfst ReadWfst(std::istream &is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kWfstMagic, 8) != 0)
    throw Error(ErrorKind::kParse, "not a graph file (bad magic)");
  const auto n_states = Get<std::uint32_t>(is);
  const auto start = Get<std::uint32_t>(is);
  const auto n_arcs = Get<std::uint64_t>(is);
  if (n_states == 0 || start >= n_states) throw Error(ErrorKind::kParse, "bad graph header");
  Wfst fst;
  fst.InputSymbols() = GetSymbols(is);
  fst.OutputSymbols() = GetSymbols(is);
  for (std::uint32_t s = 1; s < n_states; ++s) fst.AddState();
  fst.SetStart(static_cast<WfstStateId>(start));
  for (std::uint32_t s = 0; s < n_states; ++s) fst.SetFinal(static_cast<WfstStateId>(s), Get<double>(is));
  for (std::uint64_t i = 0; i < n_arcs; ++i) {
    const auto src = Get<std::uint32_t>(is);
    Arc a;
    a.nextstate = static_cast<WfstStateId>(Get<std::uint32_t>(is));
    a.ilabel = static_cast<Label>(Get<std::uint32_t>(is));
    a.olabel = static_cast<Label>(Get<std::uint32_t>(is));
    a.weight = Get<double>(is);
    if (src >= n_states) throw Error(ErrorKind::kParse, "arc source out of range");
    fst.AddArc(static_cast<WfstStateId>(src), a);
  }
  fst.Validate();
  return fst;
}

void WriteWfstFile(const std::string &path, const Wfst &fst) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  WriteWfst(os, fst);
}

Wfst ReadWfstFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ReadWfst(is);
}

GraphStats ComputeGraphStats(const Wfst &fst) {
  GraphStats st;
  st.states = fst.NumStates();
  st.arcs = fst.NumArcs();
  st.serialized_bytes = 8 + 4 + 4 + 8 + SymbolBytes(fst.InputSymbols()) +
                        SymbolBytes(fst.OutputSymbols()) + 8L * st.states + 24L * st.arcs;
  return st;
}

std::vector<WfstPath> EnumeratePaths(const Wfst &fst, int max_arcs, std::size_t max_paths) {
  std::vector<WfstPath> paths;
  WfstPath current;
  auto visit = [&](auto &&self, WfstStateId s, int depth) -> void {
    if (fst.IsFinal(s)) {
      if (paths.size() >= max_paths) throw Error(ErrorKind::kGuard, "too many paths");
      WfstPath p = current;
      p.weight += fst.Final(s);
      paths.push_back(std::move(p));
    }
    if (depth == max_arcs) return;
    for (const auto &a : fst.Arcs(s)) {
      WfstPath saved = current;
      if (a.ilabel != kEpsilon) current.ilabels.push_back(a.ilabel);
      if (a.olabel != kEpsilon) current.olabels.push_back(a.olabel);
      current.weight += a.weight;
      self(self, a.nextstate, depth + 1);
      current = std::move(saved);
    }
  };
  visit(visit, fst.Start(), 0);
  return paths;
}

}  // namespace eemmi
