// eemmi/wfst.h

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

#ifndef EEMMI_WFST_H_
#define EEMMI_WFST_H_

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/metrics.h"

namespace eemmi {

using Label = std::int32_t;
using WfstStateId = std::int32_t;

inline constexpr Label kEpsilon = 0;
/// Tropical zero.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Label 0 is always "<eps>".
class SymbolTable {
 public:
  SymbolTable();
  Label Add(const std::string &symbol);
  /// -1 when absent.
  Label Find(const std::string &symbol) const;
  const std::string &Symbol(Label label) const;
  int Size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string> &Symbols() const { return symbols_; }
  bool operator==(const SymbolTable &other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Label> index_;
};

struct Arc {
  Label ilabel = kEpsilon;
  Label olabel = kEpsilon;
  double weight = 0;  // -log probability
  WfstStateId nextstate = 0;
};

/// Tropical-semiring transducer. A fresh Wfst has a single non-final start
/// state and epsilon-only symbol tables.
class Wfst {
 public:
  Wfst();

  WfstStateId AddState();
  int NumStates() const { return static_cast<int>(finals_.size()); }
  long NumArcs() const;

  WfstStateId Start() const { return start_; }
  void SetStart(WfstStateId s);

  void SetFinal(WfstStateId s, double weight);
  double Final(WfstStateId s) const { return finals_.at(s); }
  bool IsFinal(WfstStateId s) const { return finals_.at(s) != kInfinity; }

  void AddArc(WfstStateId src, const Arc &arc);
  const std::vector<Arc> &Arcs(WfstStateId s) const { return arcs_.at(s); }
  std::vector<Arc> &MutableArcs(WfstStateId s) { return arcs_.at(s); }

  SymbolTable &InputSymbols() { return isyms_; }
  const SymbolTable &InputSymbols() const { return isyms_; }
  SymbolTable &OutputSymbols() { return osyms_; }
  const SymbolTable &OutputSymbols() const { return osyms_; }

  /// Throws kValidation for dangling states, unknown labels or NaN/-inf
  /// weights.
  void Validate() const;

 private:
  WfstStateId start_ = 0;
  std::vector<double> finals_;
  std::vector<std::vector<Arc>> arcs_;
  SymbolTable isyms_, osyms_;
};

/// Composition with the sequence epsilon filter (epsilon-output moves of `a`
/// before epsilon-input moves of `b`), followed by Connect(). Throws
/// kShapeMismatch when a's output and b's input symbol tables differ.
Wfst Compose(const Wfst &a, const Wfst &b);

/// Removes states that are not both accessible and coaccessible. An empty
/// language leaves a single non-final start state.
void Connect(Wfst &fst);

/// Binary layout, little-endian: "EEWFST01", u32 states, u32 start,
/// u64 arcs, input then output symbol table (u32 count, then u32 length and
/// bytes per symbol), f64 final weight per state, then per arc u32 source,
/// u32 dest, u32 ilabel, u32 olabel, f64 weight.
void WriteWfst(std::ostream &os, const Wfst &fst);
Wfst ReadWfst(std::istream &is);
void WriteWfstFile(const std::string &path, const Wfst &fst);
Wfst ReadWfstFile(const std::string &path);

/// Exact counts and the size WriteWfst() would produce.
GraphStats ComputeGraphStats(const Wfst &fst);

struct WfstPath {
  std::vector<Label> ilabels;  // epsilons removed
  std::vector<Label> olabels;  // epsilons removed
  double weight = 0;           // including the final weight
};

/// Every successful path with at most `max_arcs` arcs. Throws kGuard past
/// `max_paths` results.
std::vector<WfstPath> EnumeratePaths(const Wfst &fst, int max_arcs, std::size_t max_paths = 100000);

}  // namespace eemmi

#endif  // EEMMI_WFST_H_
