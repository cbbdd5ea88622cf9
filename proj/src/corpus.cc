// src/corpus.cc

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
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "eemmi/corpus.h"

namespace eemmi {

void SyntheticCorpusSpec::Validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorKind::kValidation, msg); };
  if (num_phonemes < 1 || num_words < 1 || feature_dim < 1 || num_speakers < 1 ||
      num_utterances < 1 || successors_per_word < 1)
    fail("corpus spec counts must be >= 1");
  if (min_word_length < 1 || max_word_length < min_word_length)
    fail("bad word length range");
  if (min_sentence_length < 1 || max_sentence_length < min_sentence_length)
    fail("bad sentence length range");
  if (!(noise >= 0) || !(mean_separation > 0)) fail("noise must be >= 0 and mean separation > 0");
  if (!(self_loop >= 0 && self_loop < 1)) fail("self_loop must lie in [0, 1)");
  if (!(speaker_scale >= 0) || !(speaker_shift >= 0)) fail("speaker distortion must be >= 0");
  double capacity = 0;
  for (int n = min_word_length; n <= max_word_length; ++n)
    capacity += std::pow(static_cast<double>(num_phonemes), n);
  if (capacity < num_words) fail("too few distinct pronunciations for num_words");
}

namespace {

template <typename T>
void ParseValue(const std::string &text, T *out, int line_no) {
  std::istringstream ss(text);
  T v;
  if (!(ss >> v) || !(ss >> std::ws).eof())
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": bad value '" + text + "'");
  *out = v;
}

std::string Trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string SpeakerName(int k) { return "spk" + std::to_string(k); }

std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

std::string Padded(const std::string &prefix, int i, int width) {
  std::string n = std::to_string(i);
  return prefix + std::string(std::max(0, width - static_cast<int>(n.size())), '0') + n;
}

WordNgramLm RandomWordBigram(const SyntheticCorpusSpec &spec, const std::vector<std::string> &words,
                             std::mt19937_64 &rng) {
  // Listed bigrams keep 1 - kBackoffMass; the rest is left to the uniform
  // unigram through the back-off weight.
  constexpr double kBackoffMass = 0.02;
  const double mean_len = 0.5 * (spec.min_sentence_length + spec.max_sentence_length);
  const double p_end = 1.0 / mean_len;
  const int W = static_cast<int>(words.size());
  WordNgramLm lm;
  const double p_uni = 1.0 / (W + 1);
  lm.Add({kSentenceBegin}, {kLog10Zero, 0.0, true});
  lm.Add({kSentenceEnd}, {std::log10(p_uni), 0.0, false});
  for (const auto &w : words) lm.Add({w}, {std::log10(p_uni), 0.0, true});

  std::uniform_real_distribution<double> weight(0.5, 1.5);
  auto add_context = [&](const std::string &h, bool can_end) {
    std::vector<std::string> pool = words;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min<std::size_t>(pool.size(), spec.successors_per_word));
    std::sort(pool.begin(), pool.end());
    std::vector<double> wts;
    double sum = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) sum += wts.emplace_back(weight(rng));
    double word_mass = (1 - kBackoffMass) * (can_end ? 1 - p_end : 1.0);
    double listed_uni = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      lm.Add({h, pool[i]}, {std::log10(word_mass * wts[i] / sum), 0.0, false});
      listed_uni += p_uni;
    }
    if (can_end) {
      lm.Add({h, kSentenceEnd}, {std::log10((1 - kBackoffMass) * p_end), 0.0, false});
      listed_uni += p_uni;
    }
    auto *entry = lm.Find({h});
    WordNgramLm::Entry e = *entry;
    e.log10_backoff = std::log10(kBackoffMass / (1 - listed_uni));
    e.has_backoff = true;
    lm.Add({h}, e);
  };
  add_context(kSentenceBegin, false);
  for (const auto &w : words) add_context(w, true);
  return lm;
}

std::vector<std::string> SampleSentence(const SyntheticCorpusSpec &spec, const WordNgramLm &lm,
                                        const std::vector<std::string> &words,
                                        std::mt19937_64 &rng) {
  std::vector<std::string> outcomes = words;
  outcomes.push_back(kSentenceEnd);
  std::vector<double> probs(outcomes.size());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::string> sent;
    std::string h = kSentenceBegin;
    while (static_cast<int>(sent.size()) <= spec.max_sentence_length) {
      for (std::size_t i = 0; i < outcomes.size(); ++i)
        probs[i] = std::exp(lm.LogProb({h}, outcomes[i]));
      std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
      const std::string &w = outcomes[pick(rng)];
      if (w == kSentenceEnd) break;
      sent.push_back(w);
      h = w;
    }
    const int n = static_cast<int>(sent.size());
    if (n >= spec.min_sentence_length && n <= spec.max_sentence_length) return sent;
  }
  throw Error(ErrorKind::kValidation, "sentence length range is unreachable under the word LM");
}

}  // namespace

SyntheticCorpusSpec ParseCorpusSpec(std::istream &is) {
  SyntheticCorpusSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = Trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = Trim(line.substr(0, eq)), value = Trim(line.substr(eq + 1));
    if (key == "num_phonemes") ParseValue(value, &spec.num_phonemes, line_no);
    else if (key == "num_words") ParseValue(value, &spec.num_words, line_no);
    else if (key == "min_word_length") ParseValue(value, &spec.min_word_length, line_no);
    else if (key == "max_word_length") ParseValue(value, &spec.max_word_length, line_no);
    else if (key == "min_sentence_length") ParseValue(value, &spec.min_sentence_length, line_no);
    else if (key == "max_sentence_length") ParseValue(value, &spec.max_sentence_length, line_no);
    else if (key == "successors_per_word") ParseValue(value, &spec.successors_per_word, line_no);
    else if (key == "feature_dim") ParseValue(value, &spec.feature_dim, line_no);
    else if (key == "mean_separation") ParseValue(value, &spec.mean_separation, line_no);
    else if (key == "noise") ParseValue(value, &spec.noise, line_no);
    else if (key == "self_loop") ParseValue(value, &spec.self_loop, line_no);
    else if (key == "num_speakers") ParseValue(value, &spec.num_speakers, line_no);
    else if (key == "speaker_scale") ParseValue(value, &spec.speaker_scale, line_no);
    else if (key == "speaker_shift") ParseValue(value, &spec.speaker_shift, line_no);
    else if (key == "num_utterances") ParseValue(value, &spec.num_utterances, line_no);
    else if (key == "seed") ParseValue(value, &spec.seed, line_no);
    else
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return spec;
}

SyntheticCorpusSpec ReadCorpusSpecFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ParseCorpusSpec(is);
}

void WriteCorpusSpec(std::ostream &os, const SyntheticCorpusSpec &s) {
  os.precision(17);
  os << "num_phonemes = " << s.num_phonemes << "\n"
     << "num_words = " << s.num_words << "\n"
     << "min_word_length = " << s.min_word_length << "\n"
     << "max_word_length = " << s.max_word_length << "\n"
     << "min_sentence_length = " << s.min_sentence_length << "\n"
     << "max_sentence_length = " << s.max_sentence_length << "\n"
     << "successors_per_word = " << s.successors_per_word << "\n"
     << "feature_dim = " << s.feature_dim << "\n"
     << "mean_separation = " << s.mean_separation << "\n"
     << "noise = " << s.noise << "\n"
     << "self_loop = " << s.self_loop << "\n"
     << "num_speakers = " << s.num_speakers << "\n"
     << "speaker_scale = " << s.speaker_scale << "\n"
     << "speaker_shift = " << s.speaker_shift << "\n"
     << "num_utterances = " << s.num_utterances << "\n"
     << "seed = " << s.seed << "\n";
}

std::vector<UtteranceWords> Corpus::Words() const {
  std::vector<UtteranceWords> out;
  for (const auto &u : utterances) out.emplace_back(u.features.utt_id, u.words);
  return out;
}

Corpus GenerateCorpus(const SyntheticCorpusSpec &spec) {
  spec.Validate();
  Corpus c;
  std::vector<std::string> phone_names;
  for (int p = 0; p < spec.num_phonemes; ++p) phone_names.push_back(Padded("ph", p, 2));
  c.inventory = StateInventory::Build(phone_names);
  const int L = c.inventory.NumStates(), D = spec.feature_dim;

  auto lex_rng = Stream(spec.seed, 1);
  std::vector<std::string> words;
  std::set<std::vector<StateId>> used;
  std::uniform_int_distribution<int> word_len(spec.min_word_length, spec.max_word_length);
  std::uniform_int_distribution<StateId> phone(kNumReservedStates, L - 1);
  while (static_cast<int>(words.size()) < spec.num_words) {
    std::vector<StateId> pron(word_len(lex_rng));
    for (auto &p : pron) p = phone(lex_rng);
    if (!used.insert(pron).second) continue;
    words.push_back(Padded("w", static_cast<int>(words.size()), 2));
    c.lexicon.Add(words.back(), pron, c.inventory);
  }

  auto lm_rng = Stream(spec.seed, 2);
  c.word_lm = RandomWordBigram(spec, words, lm_rng);

  auto feat_rng = Stream(spec.seed, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  c.state_means.resize(L, D);
  for (int l = 0; l < L; ++l)
    for (int d = 0; d < D; ++d) c.state_means(l, d) = spec.mean_separation * normal(feat_rng);
  for (int k = 0; k < spec.num_speakers; ++k) {
    MatrixD scale(1, D), shift(1, D);
    for (int d = 0; d < D; ++d) {
      scale(0, d) = std::exp(spec.speaker_scale * normal(feat_rng));
      shift(0, d) = spec.speaker_shift * normal(feat_rng);
    }
    c.speaker_scale.push_back(scale);
    c.speaker_shift.push_back(shift);
  }

  auto sent_rng = Stream(spec.seed, 4);
  auto dur_rng = Stream(spec.seed, 5);
  auto noise_rng = Stream(spec.seed, 6);
  std::geometric_distribution<int> extra(1.0 - spec.self_loop);
  const int width = std::max(4, static_cast<int>(std::to_string(spec.num_utterances - 1).size()));
  for (int i = 0; i < spec.num_utterances; ++i) {
    Utterance u;
    const int spk = i % spec.num_speakers;
    u.features.utt_id = Padded("utt", i, width);
    u.features.speaker_id = SpeakerName(spk);
    u.words = SampleSentence(spec, c.word_lm, words, sent_rng);
    u.transcript = BuildTranscript(u.words, c.lexicon, c.inventory);
    // s_0 = start is not a frame, so start keeps 0 or more frames and every
    // later position at least one.
    for (std::size_t k = 0; k < u.transcript.gamma.size(); ++k)
      u.gold_alignment.insert(u.gold_alignment.end(), (k > 0) + extra(dur_rng),
                              u.transcript.gamma[k]);
    const int T = static_cast<int>(u.gold_alignment.size());
    u.features.frames.resize(T, D);
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) {
        double x = c.state_means(u.gold_alignment[t], d) + spec.noise * normal(noise_rng);
        u.features.frames(t, d) = c.speaker_scale[spk](0, d) * x + c.speaker_shift[spk](0, d);
      }
    c.utterances.push_back(std::move(u));
  }
  CheckCorpus(c);
  return c;
}

double NearestMeanAccuracy(const Corpus &corpus) {
  if (corpus.state_means.size() == 0)
    throw Error(ErrorKind::kValidation, "corpus carries no generator means");
  long correct = 0, total = 0;
  for (const auto &u : corpus.utterances) {
    const int spk = std::stoi(u.features.speaker_id.substr(3));
    MatrixD means = (corpus.state_means.array().rowwise() *
                         corpus.speaker_scale[spk].row(0).array())
                        .rowwise() +
                    corpus.speaker_shift[spk].row(0).array();
    for (int t = 0; t < u.features.NumFrames(); ++t) {
      Eigen::Index best;
      (means.rowwise() - u.features.frames.row(t)).rowwise().squaredNorm().minCoeff(&best);
      correct += best == u.gold_alignment[t];
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

double CalibrateNoise(SyntheticCorpusSpec spec, double target, int probe_utterances) {
  if (!(target > 0 && target < 1)) throw Error(ErrorKind::kValidation, "target must lie in (0, 1)");
  spec.num_utterances = probe_utterances;
  double lo = 1e-3 * spec.mean_separation, hi = 10 * spec.mean_separation;
  for (int it = 0; it < 40; ++it) {
    spec.noise = 0.5 * (lo + hi);
    if (NearestMeanAccuracy(GenerateCorpus(spec)) > target)
      lo = spec.noise;
    else
      hi = spec.noise;
  }
  return 0.5 * (lo + hi);
}

void CheckCorpus(const Corpus &corpus) {
  for (const auto &u : corpus.utterances) {
    if (u.gold_alignment.empty()) continue;
    if (static_cast<int>(u.gold_alignment.size()) != u.features.NumFrames())
      throw Error(ErrorKind::kValidation, u.features.utt_id + ": alignment length differs from features");
    std::vector<StateId> path{kStartState};
    path.insert(path.end(), u.gold_alignment.begin(), u.gold_alignment.end());
    if (CollapseStates(path) != u.transcript.gamma)
      throw Error(ErrorKind::kValidation, u.features.utt_id + ": alignment does not collapse to transcript");
  }
}

void WriteFeatures(std::ostream &os, const FeatureSequence &f) {
  os << "EEFEAT " << f.NumFrames() << " " << f.Dim() << " " << f.utt_id << " " << f.speaker_id
     << "\n";
  std::vector<char> buf(static_cast<std::size_t>(f.frames.size()) * 4);
  std::size_t pos = 0;
  for (int t = 0; t < f.NumFrames(); ++t)
    for (int d = 0; d < f.Dim(); ++d) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(f.frames(t, d)));
      for (int b = 0; b < 4; ++b) buf[pos++] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error(ErrorKind::kIo, "failed writing features of " + f.utt_id);
}

FeatureSequence ReadFeatures(std::istream &is) {
  std::string header;
  if (!std::getline(is, header)) throw Error(ErrorKind::kParse, "missing feature header");
  std::istringstream hs(header);
  std::string magic;
  long rows = -1, cols = -1;
  FeatureSequence f;
  if (!(hs >> magic >> rows >> cols >> f.utt_id >> f.speaker_id) || magic != "EEFEAT" ||
      rows < 0 || cols < 0)
    throw Error(ErrorKind::kParse, "bad feature header '" + header + "'");
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols) * 4);
  is.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size()))
    throw Error(ErrorKind::kParse, f.utt_id + ": truncated feature data");
  f.frames.resize(rows, cols);
  std::size_t pos = 0;
  for (long t = 0; t < rows; ++t)
    for (long d = 0; d < cols; ++d, pos += 4) {
      std::uint32_t bits = buf[pos] | (buf[pos + 1] << 8) | (buf[pos + 2] << 16) |
                           (static_cast<std::uint32_t>(buf[pos + 3]) << 24);
      f.frames(t, d) = std::bit_cast<float>(bits);
    }
  return f;
}

namespace {

std::ofstream OpenOut(const std::filesystem::path &p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + p.string());
  return os;
}

std::ifstream OpenIn(const std::filesystem::path &p, bool binary = false) {
  std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + p.string());
  return is;
}

}  // namespace

void WriteCorpus(const std::string &dir, const Corpus &corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "feats");
  {
    auto os = OpenOut(fs::path(dir) / "phones.txt");
    WriteInventory(os, corpus.inventory);
  }
  {
    auto os = OpenOut(fs::path(dir) / "lexicon.txt");
    WriteLexicon(os, corpus.lexicon, corpus.inventory);
  }
  {
    auto os = OpenOut(fs::path(dir) / "lm.arpa");
    WriteArpa(os, corpus.word_lm);
  }
  {
    auto os = OpenOut(fs::path(dir) / "text");
    WriteTranscriptText(os, corpus.Words());
  }
  {
    auto os = OpenOut(fs::path(dir) / "alignments.txt");
    for (const auto &u : corpus.utterances) {
      os << u.features.utt_id;
      for (StateId s : u.gold_alignment) os << " " << corpus.inventory.Name(s);
      os << "\n";
    }
  }
  for (const auto &u : corpus.utterances) {
    auto os = OpenOut(fs::path(dir) / "feats" / (u.features.utt_id + ".feat"), true);
    WriteFeatures(os, u.features);
  }
}

Corpus ReadCorpus(const std::string &dir) {
  namespace fs = std::filesystem;
  Corpus c;
  c.inventory = ReadInventoryFile((fs::path(dir) / "phones.txt").string());
  c.lexicon = ReadLexiconFile((fs::path(dir) / "lexicon.txt").string(), c.inventory);
  c.word_lm = ReadArpaFile((fs::path(dir) / "lm.arpa").string());
  std::map<std::string, std::vector<StateId>> gold;
  if (fs::exists(fs::path(dir) / "alignments.txt")) {
    auto is = OpenIn(fs::path(dir) / "alignments.txt");
    std::string line;
    while (std::getline(is, line)) {
      auto fields = SplitWhitespace(line);
      if (fields.empty()) continue;
      auto &path = gold[fields[0]];
      for (std::size_t i = 1; i < fields.size(); ++i) path.push_back(c.inventory.Id(fields[i]));
    }
  }
  for (auto &[utt_id, words] : ReadTranscriptTextFile((fs::path(dir) / "text").string())) {
    Utterance u;
    auto is = OpenIn(fs::path(dir) / "feats" / (utt_id + ".feat"), true);
    u.features = ReadFeatures(is);
    if (u.features.utt_id != utt_id)
      throw Error(ErrorKind::kParse, "feature file of " + utt_id + " names " + u.features.utt_id);
    u.words = words;
    u.transcript = BuildTranscript(words, c.lexicon, c.inventory);
    if (auto it = gold.find(utt_id); it != gold.end()) u.gold_alignment = it->second;
    c.utterances.push_back(std::move(u));
  }
  CheckCorpus(c);
  return c;
}

}  // namespace eemmi
