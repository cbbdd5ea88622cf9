// src/lm.cc

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

#include "eemmi/lm.h"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace eemmi {

const char *ToString(StateLmKind kind) {
  switch (kind) {
    case StateLmKind::kUniform: return "uniform";
    case StateLmKind::kUnigram: return "unigram";
    case StateLmKind::kBigram: return "bigram";
  }
  return "?";
}

StateLmKind ParseStateLmKind(const std::string &name) {
  if (name == "uniform") return StateLmKind::kUniform;
  if (name == "unigram") return StateLmKind::kUnigram;
  if (name == "bigram") return StateLmKind::kBigram;
  throw Error(ErrorKind::kValidation, "unknown state LM kind '" + name + "'");
}

StateLm EstimateStateLm(const std::vector<Transcript> &transcripts, int num_states,
                        StateLmKind kind, double alpha) {
  if (transcripts.empty())
    throw Error(ErrorKind::kValidation, "state LM needs at least one transcript");
  if (!(alpha >= 0)) throw Error(ErrorKind::kValidation, "smoothing must be >= 0");
  if (num_states < 2) throw Error(ErrorKind::kValidation, "state LM needs >= 2 states");
  const int L = num_states;

  MatrixD counts = MatrixD::Zero(L, L);
  switch (kind) {
    case StateLmKind::kUniform:
      counts.setOnes();
      alpha = 0;
      break;
    case StateLmKind::kUnigram: {
      VectorD occ = VectorD::Zero(L);
      for (const auto &t : transcripts)
        for (StateId s : t.gamma) {
          if (s < 0 || s >= L) throw Error(ErrorKind::kValidation, "state id out of range");
          occ(s) += 1;
        }
      counts.rowwise() = occ.transpose();
      break;
    }
    case StateLmKind::kBigram:
      for (const auto &t : transcripts)
        for (std::size_t k = 0; k + 1 < t.gamma.size(); ++k) {
          StateId a = t.gamma[k], b = t.gamma[k + 1];
          if (a < 0 || a >= L || b < 0 || b >= L)
            throw Error(ErrorKind::kValidation, "state id out of range");
          counts(a, b) += 1;
        }
      break;
  }

  StateLm lm;
  lm.kind = kind;
  lm.q = counts.array() + alpha;
  lm.q.diagonal().setZero();
  for (int c = 0; c < L; ++c) {
    double total = lm.q.row(c).sum();
    if (!(total > 0))
      throw Error(ErrorKind::kEstimation,
                  "state " + std::to_string(c) + " has no outgoing counts");
    lm.q.row(c) /= total;
  }
  return lm;
}

void WriteStateLm(std::ostream &os, const StateLm &lm) {
  os << "# state-lm " << ToString(lm.kind) << ' ' << lm.NumStates() << '\n';
  char buf[32];
  for (int r = 0; r < lm.q.rows(); ++r) {
    for (int c = 0; c < lm.q.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", lm.q(r, c));
      os << (c ? " " : "") << buf;
    }
    os << '\n';
  }
}

StateLm ReadStateLm(std::istream &is) {
  StateLm lm;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    auto fields = SplitWhitespace(line);
    if (fields.empty()) continue;
    if (fields[0] == "#") {
      if (fields.size() >= 3 && fields[1] == "state-lm") lm.kind = ParseStateLmKind(fields[2]);
      continue;
    }
    std::vector<double> row;
    for (const auto &f : fields) row.push_back(std::stod(f));
    rows.push_back(std::move(row));
  }
  const auto L = static_cast<Eigen::Index>(rows.size());
  lm.q.resize(L, L);
  for (Eigen::Index r = 0; r < L; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != L)
      throw Error(ErrorKind::kParse, "state LM row " + std::to_string(r + 1) + " has wrong width");
    for (Eigen::Index c = 0; c < L; ++c) lm.q(r, c) = rows[r][c];
  }
  return lm;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kLn10 = std::numbers::ln10;

double Log10ToLn(double v) {
  if (v <= kLog10Zero) return LogZero<double>();
  return v * kLn10;
}

[[noreturn]] void ArpaError(int line_no, const std::string &msg) {
  throw Error(ErrorKind::kParse, "ARPA line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

const WordNgramLm::Entry *WordNgramLm::Find(const Ngram &ngram) const {
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto &table = tables_[ngram.size() - 1];
  auto it = table.find(ngram);
  return it == table.end() ? nullptr : &it->second;
}

void WordNgramLm::Add(const Ngram &ngram, Entry entry) {
  if (ngram.empty()) throw Error(ErrorKind::kValidation, "empty n-gram");
  if (tables_.size() < ngram.size()) tables_.resize(ngram.size());
  tables_[ngram.size() - 1][ngram] = entry;
}

std::vector<std::string> WordNgramLm::Vocabulary() const {
  std::vector<std::string> vocab;
  if (tables_.empty()) return vocab;
  for (const auto &[ngram, entry] : tables_[0])
    if (ngram[0] != kSentenceBegin && ngram[0] != kSentenceEnd) vocab.push_back(ngram[0]);
  return vocab;
}

double WordNgramLm::LogBackoff(const Ngram &context) const {
  const Entry *e = Find(context);
  return (e && e->has_backoff) ? e->log10_backoff * kLn10 : 0.0;
}

double WordNgramLm::LogProb(const Ngram &history, const std::string &word) const {
  Ngram h = history;
  if (static_cast<int>(h.size()) > Order() - 1)
    h.erase(h.begin(), h.end() - (Order() - 1));
  double backoff = 0.0;
  while (true) {
    Ngram ngram = h;
    ngram.push_back(word);
    if (const Entry *e = Find(ngram)) return backoff + Log10ToLn(e->log10_prob);
    if (h.empty()) throw Error(ErrorKind::kOutOfVocabulary, "out-of-vocabulary word '" + word + "'");
    backoff += LogBackoff(h);
    h.erase(h.begin());
  }
}

WordNgramLm ParseArpa(std::istream &is) {
  WordNgramLm lm;
  std::string raw;
  int line_no = 0;
  std::vector<std::size_t> declared;
  enum class Section { kPreamble, kData, kNgrams, kEnd } section = Section::kPreamble;
  int current_order = 0;

  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto fields = SplitWhitespace(raw);
    if (fields.empty()) continue;
    if (section == Section::kEnd) ArpaError(line_no, "content after \\end\\");

    if (fields[0] == "\\data\\") {
      if (section != Section::kPreamble) ArpaError(line_no, "duplicate \\data\\");
      section = Section::kData;
      continue;
    }
    if (fields[0] == "\\end\\") {
      if (section == Section::kPreamble) ArpaError(line_no, "\\end\\ before \\data\\");
      section = Section::kEnd;
      continue;
    }
    if (fields[0].size() > 2 && fields[0].front() == '\\' &&
        fields[0].ends_with("-grams:")) {
      if (section == Section::kPreamble) ArpaError(line_no, "n-gram section before \\data\\");
      int n = 0;
      try {
        n = std::stoi(fields[0].substr(1));
      } catch (...) {
        ArpaError(line_no, "bad section header '" + fields[0] + "'");
      }
      if (n != current_order + 1 || n > static_cast<int>(declared.size()))
        ArpaError(line_no, "unexpected section '" + fields[0] + "'");
      if (current_order > 0 &&
          lm.NgramsOfOrder(current_order).size() != declared[current_order - 1])
        ArpaError(line_no, "count mismatch for order " + std::to_string(current_order));
      current_order = n;
      if (static_cast<int>(lm.tables_.size()) < n) lm.tables_.resize(n);
      section = Section::kNgrams;
      continue;
    }

    switch (section) {
      case Section::kPreamble:
        continue;  // free text before \data\ is allowed
      case Section::kData: {
        // ngram N=count
        std::string joined;
        for (const auto &f : fields) joined += f;
        if (!joined.starts_with("ngram")) ArpaError(line_no, "expected 'ngram N=count'");
        auto eq = joined.find('=');
        if (eq == std::string::npos) ArpaError(line_no, "expected 'ngram N=count'");
        int n = 0;
        long count = 0;
        try {
          n = std::stoi(joined.substr(5, eq - 5));
          count = std::stol(joined.substr(eq + 1));
        } catch (...) {
          ArpaError(line_no, "bad count line");
        }
        if (n != static_cast<int>(declared.size()) + 1 || count < 0)
          ArpaError(line_no, "counts must be listed in order");
        declared.push_back(static_cast<std::size_t>(count));
        break;
      }
      case Section::kNgrams: {
        const auto n = static_cast<std::size_t>(current_order);
        if (fields.size() != n + 1 && fields.size() != n + 2)
          ArpaError(line_no, "expected " + std::to_string(n) + "-gram entry");
        WordNgramLm::Entry entry;
        try {
          entry.log10_prob = std::stod(fields[0]);
          if (fields.size() == n + 2) {
            entry.log10_backoff = std::stod(fields[n + 1]);
            entry.has_backoff = true;
          }
        } catch (...) {
          ArpaError(line_no, "bad number");
        }
        if (!std::isfinite(entry.log10_prob) || !std::isfinite(entry.log10_backoff))
          ArpaError(line_no, "non-finite value");
        WordNgramLm::Ngram ngram(fields.begin() + 1, fields.begin() + 1 + n);
        if (n > 1) {
          WordNgramLm::Ngram prefix(ngram.begin(), ngram.end() - 1);
          if (!lm.Find(prefix)) ArpaError(line_no, "context of n-gram is missing at lower order");
        }
        lm.tables_[n - 1][ngram] = entry;
        break;
      }
      default:
        break;
    }
  }
  if (section != Section::kEnd) ArpaError(line_no, "missing \\end\\ marker");
  if (current_order != static_cast<int>(declared.size()) || declared.empty())
    ArpaError(line_no, "missing n-gram sections");
  if (lm.NgramsOfOrder(current_order).size() != declared[current_order - 1])
    ArpaError(line_no, "count mismatch for order " + std::to_string(current_order));
  return lm;
}

WordNgramLm ParseArpaText(const std::string &text) {
  std::istringstream is(text);
  return ParseArpa(is);
}

WordNgramLm ReadArpaFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ParseArpa(is);
}

void WriteArpa(std::ostream &os, const WordNgramLm &lm) {
  char buf[40];
  os << "\\data\\\n";
  for (int n = 1; n <= lm.Order(); ++n)
    os << "ngram " << n << '=' << lm.NgramsOfOrder(n).size() << '\n';
  for (int n = 1; n <= lm.Order(); ++n) {
    os << "\n\\" << n << "-grams:\n";
    for (const auto &[ngram, entry] : lm.NgramsOfOrder(n)) {
      std::snprintf(buf, sizeof(buf), "%.17g", entry.log10_prob);
      os << buf;
      for (const auto &w : ngram) os << ' ' << w;
      if (entry.has_backoff) {
        std::snprintf(buf, sizeof(buf), "%.17g", entry.log10_backoff);
        os << ' ' << buf;
      }
      os << '\n';
    }
  }
  os << "\n\\end\\\n";
}

double ScoreWordSequence(const WordNgramLm &lm, const std::vector<std::string> &words) {
  if (words.empty()) return 0.0;
  WordNgramLm::Ngram history;
  if (lm.HasSentenceBegin()) history.push_back(kSentenceBegin);
  double total = 0.0;
  for (const auto &w : words) {
    if (w == kSentenceBegin || w == kSentenceEnd)
      throw Error(ErrorKind::kValidation, "sentence markers are not words");
    total += lm.LogProb(history, w);
    history.push_back(w);
  }
  if (lm.HasSentenceEnd()) total += lm.LogProb(history, kSentenceEnd);
  return total;
}

}  // namespace eemmi
