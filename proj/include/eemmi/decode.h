// eemmi/decode.h

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

#ifndef EEMMI_DECODE_H_
#define EEMMI_DECODE_H_

#include <string>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"
#include "eemmi/lm.h"
#include "eemmi/mmi-loss.h"
#include "eemmi/wfst.h"

namespace eemmi {

// ---- graph construction ---------------------------------------------------
//
// Frame-level states and lexicon units share one alphabet: state id c is
// label c + 1 (label 0 is epsilon).

inline Label UnitLabel(StateId c) { return c + 1; }
inline StateId UnitOfLabel(Label l) { return l - 1; }

SymbolTable UnitSymbols(const StateInventory &inv);
/// "<eps>" then the lexicon words in sorted order.
SymbolTable WordSymbols(const Lexicon &lex);

/// Word acceptor from a back-off LM: one state per LM context, word arcs
/// weighted -ln P(w | h), epsilon back-off arcs weighted -ln bow(h), final
/// weight -ln P(</s> | h) (0 everywhere if the LM has no </s>). Entries with
/// log10 prob <= -99 are dropped and the result is trimmed. Context states
/// are numbered in sorted context order; `state_names` receives them.
/// Throws kOutOfVocabulary for LM words missing from `words`, kValidation for
/// an empty vocabulary.
Wfst BuildGrammar(const WordNgramLm &lm, const SymbolTable &words,
                  std::vector<std::string> *state_names = nullptr);
Wfst BuildGrammar(const WordNgramLm &lm);

enum class LexiconTopology {
  kMmi,  // start, blank, w1, blank, w2, ..., blank, end; blank inside words
         // between identical phonemes
  kCtc,  // plain phoneme strings, no reserved units
};

/// Phoneme-to-word transducer; the word is emitted on the first phoneme.
Wfst BuildLexiconFst(const Lexicon &lex, const StateInventory &inv,
                     LexiconTopology topology = LexiconTopology::kMmi);
Wfst BuildLexiconFst(const Lexicon &lex, const StateInventory &inv, const SymbolTable &words,
                     LexiconTopology topology);

/// Per state c: entry arc c:c/0, self-loop c:eps/-ln p_c(0), exit
/// eps:eps/-ln p_c(1) back to the shared final start state. The start
/// state is entered on eps:start, since it holds s_0 before the first frame.
Wfst BuildHmmFst(const ModelParameters &params, const StateInventory &inv);

/// CTC token graph over the phonemes: optional blanks, repeats merged,
/// blank required between identical units, all weights 0.
Wfst BuildCtcTokenFst(const StateInventory &inv);

/// Compose(H, Compose(L, G)) with the MMI lexicon.
Wfst BuildHlg(const ModelParameters &params, const StateInventory &inv, const Lexicon &lex,
              const WordNgramLm &lm);
/// Compose(T, Compose(L, G)) with the CTC lexicon.
Wfst BuildTlg(const StateInventory &inv, const Lexicon &lex, const WordNgramLm &lm);

// ---- search ---------------------------------------------------------------

struct DecodeConfig {
  double beam = 16.0;  // +inf for exact Viterbi
  int max_active = 10000;  // <= 0 means unlimited
  double acoustic_scale = 0.7;

  void Validate() const;
};

struct DecodeResult {
  std::vector<std::string> words;
  std::vector<Label> word_labels;
  std::vector<StateId> frame_alignment;  // per frame, length T
  int num_frames = 0;
  double score = 0;                      // total cost (lower is better)
  double wall_seconds = 0;
  double rtf = 0;
  int graph_searches = 0;
};

/// Frame-synchronous token passing. Each emitting arc costs
/// weight - acoustic_scale * (y[t, c] - omega_c); epsilon arcs are relaxed
/// within the frame; tokens worse than best + beam are dropped, then the
/// best `max_active` are kept. Equal costs resolve to the lower source
/// graph state. Throws kEmptyResult if no final token survives.
DecodeResult ViterbiBeamDecode(const Wfst &graph, const MatrixD &log_posteriors,
                               const VectorD &log_priors, const DecodeConfig &config);

/// Most probable state sequence s_0..s_T (length T+1) in the numerator
/// lattice of `gamma`; collapses to gamma. `log_score` receives its log
/// weight. Throws kInfeasible when T < K.
std::vector<StateId> ForcedAlign(const MatrixD &log_posteriors, std::span<const StateId> gamma,
                                 const ModelParameters &params, double *log_score = nullptr);

/// Row-wise log of the mean posterior. Throws kShapeMismatch on differing
/// shapes, kValidation on an empty list.
MatrixD EnsembleAverage(const std::vector<MatrixD> &grids);

}  // namespace eemmi

#endif  // EEMMI_DECODE_H_
