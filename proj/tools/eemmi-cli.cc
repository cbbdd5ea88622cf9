// tools/eemmi-cli.cc

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

// Command-line front end: corpus generation, training, graph building,
// decoding, alignment and scoring. Usage errors exit with 2, runtime
// failures with 1.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "eemmi/pipeline.h"

namespace fs = std::filesystem;
using namespace eemmi;

namespace {

std::string g_command_line;

// Half-open index range "a:b"; empty selects everything.
std::vector<int> ParseRange(const std::string &range, int n) {
  int lo = 0, hi = n;
  if (!range.empty()) {
    auto colon = range.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::kParse, "bad utterance range '" + range + "' (want a:b)");
    try {
      if (colon > 0) lo = std::stoi(range.substr(0, colon));
      if (colon + 1 < range.size()) hi = std::stoi(range.substr(colon + 1));
    } catch (const std::exception &) {
      throw Error(ErrorKind::kParse, "bad utterance range '" + range + "'");
    }
  }
  if (lo < 0 || hi > n || lo >= hi)
    throw Error(ErrorKind::kValidation, "utterance range '" + range + "' outside [0, " +
                                            std::to_string(n) + ")");
  std::vector<int> out(hi - lo);
  std::iota(out.begin(), out.end(), lo);
  return out;
}

std::ofstream OpenOut(const std::string &path) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  return os;
}

using Settings = std::vector<std::pair<std::string, std::string>>;

template <typename T>
std::string Str(const T &v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

void WriteManifest(const std::string &path, const std::string &subcommand,
                   const Settings &settings) {
  auto os = OpenOut(path);
  std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  os << "subcommand = " << subcommand << "\n"
     << "command_line = " << g_command_line << "\n"
     << "created = " << stamp << "\n"
     << "eemmi_version = " << kVersion << "\n"
     << "eigen_version = " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
     << EIGEN_MINOR_VERSION << "\n"
     << "cli11_version = " << CLI11_VERSION << "\n"
     << "compiler = " << __VERSION__ << "\n";
  for (const auto &[k, v] : settings) os << k << " = " << v << "\n";
}

std::string ManifestFor(const std::string &output) { return output + ".manifest"; }

struct Posteriors {
  std::vector<MatrixD> grids;
  std::vector<UtteranceWords> refs;
  ModelParameters params;
};

// Log posteriors of the selected utterances; several models are averaged.
Posteriors ComputePosteriors(const Corpus &corpus, const std::vector<std::string> &model_paths,
                             const std::vector<int> &indices) {
  std::vector<AcousticModel> models;
  for (const auto &p : model_paths) models.push_back(ReadCheckpointFile(p));
  auto norm = NormalizedFeatures(corpus);
  Posteriors out;
  out.params = EnsembleParameters(models);
  if (out.params.NumStates() != corpus.inventory.NumStates())
    throw Error(ErrorKind::kShapeMismatch, "model has " + std::to_string(out.params.NumStates()) +
                                               " states, corpus has " +
                                               std::to_string(corpus.inventory.NumStates()));
  for (int i : indices) {
    out.grids.push_back(EnsembleLogPosteriors(models, norm[i].frames));
    out.refs.emplace_back(corpus.utterances[i].features.utt_id, corpus.utterances[i].words);
  }
  return out;
}

void WriteAlignments(const std::string &path, const StateInventory &inv,
                     const std::vector<std::string> &ids,
                     const std::vector<std::vector<StateId>> &paths) {
  auto os = OpenOut(path);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    os << ids[i];
    for (StateId s : paths[i]) os << " " << inv.Name(s);
    os << "\n";
  }
}

std::map<std::string, std::vector<StateId>> ReadAlignments(const std::string &path,
                                                           const StateInventory &inv) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::map<std::string, std::vector<StateId>> out;
  std::string line;
  while (std::getline(is, line)) {
    auto f = SplitWhitespace(line);
    if (f.empty()) continue;
    auto &p = out[f[0]];
    for (std::size_t i = 1; i < f.size(); ++i) p.push_back(inv.Id(f[i]));
  }
  return out;
}

// ---- gen --------------------------------------------------------------------

struct GenOptions {
  std::string spec_path, out;
  double calibrate = 0;
};

void RunGen(const GenOptions &o) {
  auto spec = ReadCorpusSpecFile(o.spec_path);
  if (o.calibrate > 0) spec.noise = CalibrateNoise(spec, o.calibrate);
  auto corpus = GenerateCorpus(spec);
  WriteCorpus(o.out, corpus);
  {
    auto os = OpenOut((fs::path(o.out) / "spec.cfg").string());
    WriteCorpusSpec(os, spec);
  }
  std::ostringstream spec_text;
  WriteCorpusSpec(spec_text, spec);
  Settings s{{"spec_file", o.spec_path},
             {"seed", Str(spec.seed)},
             {"noise", Str(spec.noise)},
             {"nearest_mean_accuracy", Str(NearestMeanAccuracy(corpus))},
             {"num_utterances", Str(corpus.utterances.size())}};
  WriteManifest((fs::path(o.out) / "manifest.txt").string(), "gen", s);
  std::cerr << "gen: wrote " << corpus.utterances.size() << " utterances to " << o.out << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string corpus, out, metrics, loss = "mmi", train_lm = "bigram", utts;
  TrainConfig config;
};

void RunTrain(TrainOptions o) {
  auto corpus = ReadCorpus(o.corpus);
  auto kind = ParseLossKind(o.loss);
  o.config.train_lm = ParseStateLmKind(o.train_lm);
  o.config.Validate();
  auto indices = ParseRange(o.utts, static_cast<int>(corpus.utterances.size()));
  std::vector<std::string> warnings;
  auto norm = NormalizedFeatures(corpus, &warnings);
  for (const auto &w : warnings) std::cerr << "WARNING: " << w << "\n";
  auto set = MakeTrainingSet(corpus, norm, indices, o.config.context);
  auto t0 = std::chrono::steady_clock::now();
  auto result = Train(set, corpus.inventory.NumStates(), o.config, kind);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  WriteCheckpointFile(o.out, result.model);
  std::string metrics = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
  {
    auto os = OpenOut(metrics);
    WriteMetricsCsv(os, result.metrics);
  }
  {
    auto os = OpenOut(o.out + ".valid");
    for (const auto &id : result.valid_ids) os << id << "\n";
  }
  const auto &c = o.config;
  Settings s{{"corpus", o.corpus},
             {"loss", ToString(kind)},
             {"train_lm", ToString(c.train_lm)},
             {"utterances", Str(indices.size())},
             {"seed", Str(c.seed)},
             {"split_seed", Str(c.split_seed)},
             {"epochs", Str(c.epochs)},
             {"learning_rate", Str(c.learning_rate)},
             {"batch_size", Str(c.batch_size)},
             {"clip_norm", Str(c.clip_norm)},
             {"context", Str(c.context)},
             {"shift_interval", Str(c.shift_interval)},
             {"epochs_run", Str(result.metrics.empty() ? 0 : result.metrics.back().epoch)},
             {"train_seconds", Str(seconds)},
             {"metrics", metrics}};
  WriteManifest(ManifestFor(o.out), "train", s);
  std::cerr << "train: " << ToString(kind) << "/" << ToString(c.train_lm) << " done in "
            << seconds << " s, checkpoint " << o.out << "\n";
}

// ---- graph ------------------------------------------------------------------

struct GraphOptions {
  std::string corpus, model, loss = "mmi", part = "full", out, a, b, fst;
};

void RunGraphBuild(const GraphOptions &o) {
  auto corpus = ReadCorpus(o.corpus);
  auto kind = ParseLossKind(o.loss);
  ModelParameters params;
  if (!o.model.empty()) {
    params = ReadCheckpointFile(o.model).params;
  } else if (kind == LossKind::kMmi && (o.part == "full" || o.part == "h")) {
    throw Error(ErrorKind::kValidation, "an mmi graph needs --model for the HMM parameters");
  }
  const auto &inv = corpus.inventory;
  const auto topology = kind == LossKind::kMmi ? LexiconTopology::kMmi : LexiconTopology::kCtc;
  Wfst graph;
  if (o.part == "full") {
    graph = BuildDecodingGraph(kind, params, inv, corpus.lexicon, corpus.word_lm);
  } else if (o.part == "h") {
    graph = kind == LossKind::kMmi ? BuildHmmFst(params, inv) : BuildCtcTokenFst(inv);
  } else if (o.part == "l") {
    graph = BuildLexiconFst(corpus.lexicon, inv, WordSymbols(corpus.lexicon), topology);
  } else {
    graph = BuildGrammar(corpus.word_lm, WordSymbols(corpus.lexicon));
  }
  WriteWfstFile(o.out, graph);
  auto st = ComputeGraphStats(graph);
  WriteManifest(ManifestFor(o.out), "graph build",
                {{"corpus", o.corpus}, {"loss", ToString(kind)}, {"part", o.part}, {"model", o.model},
                 {"states", Str(st.states)}, {"arcs", Str(st.arcs)},
                 {"bytes", Str(st.serialized_bytes)}});
}

void RunGraphCompose(const GraphOptions &o) {
  auto c = Compose(ReadWfstFile(o.a), ReadWfstFile(o.b));
  Connect(c);
  WriteWfstFile(o.out, c);
  WriteManifest(ManifestFor(o.out), "graph compose", {{"a", o.a}, {"b", o.b}});
}

void RunGraphStats(const GraphOptions &o) {
  auto st = ComputeGraphStats(ReadWfstFile(o.fst));
  std::cout << "states " << st.states << "\narcs " << st.arcs << "\nbytes " << st.serialized_bytes
            << "\n";
}

// ---- decode -----------------------------------------------------------------

struct DecodeOptions {
  std::string corpus, graph, loss = "mmi", utts, select_utts, out, timings;
  std::vector<std::string> models;
  DecodeConfig config;
  bool scale_given = false;
  int threads = 0;
};

void RunDecode(DecodeOptions o) {
  auto corpus = ReadCorpus(o.corpus);
  auto kind = ParseLossKind(o.loss);
  const int n = static_cast<int>(corpus.utterances.size());
  auto indices = ParseRange(o.utts, n);
  auto post = ComputePosteriors(corpus, o.models, indices);
  Wfst graph = o.graph.empty() ? BuildDecodingGraph(kind, post.params, corpus.inventory,
                                                    corpus.lexicon, corpus.word_lm)
                               : ReadWfstFile(o.graph);
  auto priors = DecodingLogPriors(kind, post.params);
  if (!o.select_utts.empty()) {
    if (o.scale_given)
      throw Error(ErrorKind::kValidation, "--acoustic-scale and --select-scale-utts conflict");
    auto sel = ComputePosteriors(corpus, o.models, ParseRange(o.select_utts, n));
    o.config.acoustic_scale = SelectAcousticScale(graph, sel.grids, priors, sel.refs,
                                                  corpus.lexicon, o.config, kAcousticScaleGrid,
                                                  o.threads);
    std::cerr << "decode: selected acoustic scale " << o.config.acoustic_scale << "\n";
  }
  o.config.Validate();
  int failures = 0;
  auto results = DecodeBatch(graph, post.grids, priors, o.config, o.threads, &failures);
  std::vector<UtteranceWords> hyps;
  for (std::size_t i = 0; i < results.size(); ++i)
    hyps.emplace_back(post.refs[i].first, results[i].words);
  {
    auto os = OpenOut(o.out);
    WriteTranscriptText(os, hyps);
  }
  std::string timings = o.timings.empty() ? o.out + ".timings" : o.timings;
  {
    auto os = OpenOut(timings);
    os.precision(9);
    for (std::size_t i = 0; i < results.size(); ++i)
      os << post.refs[i].first << " " << results[i].num_frames << " " << results[i].wall_seconds
         << "\n";
  }
  std::string model_list;
  for (const auto &m : o.models) model_list += (model_list.empty() ? "" : " ") + m;
  WriteManifest(ManifestFor(o.out), "decode",
                {{"corpus", o.corpus}, {"loss", ToString(kind)}, {"models", model_list},
                 {"ensemble_size", Str(o.models.size())},
                 {"graph", o.graph.empty() ? "(built)" : o.graph},
                 {"beam", Str(o.config.beam)}, {"max_active", Str(o.config.max_active)},
                 {"acoustic_scale", Str(o.config.acoustic_scale)},
                 {"utterances", Str(indices.size())}, {"failures", Str(failures)}});
  if (failures > 0)
    std::cerr << "WARNING: " << failures << " utterances had no surviving final token\n";
}

// ---- align ------------------------------------------------------------------

struct AlignOptions {
  std::string corpus, model, mode = "forced", utts, out;
};

void RunAlign(const AlignOptions &o) {
  auto corpus = ReadCorpus(o.corpus);
  if (o.mode != "forced" && o.mode != "best-path")
    throw Error(ErrorKind::kValidation, "unknown alignment mode '" + o.mode + "'");
  auto indices = ParseRange(o.utts, static_cast<int>(corpus.utterances.size()));
  auto post = ComputePosteriors(corpus, {o.model}, indices);
  std::vector<std::string> ids;
  std::vector<std::vector<StateId>> paths;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto &u = corpus.utterances[indices[k]];
    ids.push_back(u.features.utt_id);
    paths.push_back(o.mode == "forced"
                        ? ForcedFrameAlignment(post.grids[k], u.transcript.gamma, post.params)
                        : BestPathFrameAlignment(post.grids[k]));
  }
  WriteAlignments(o.out, corpus.inventory, ids, paths);
  WriteManifest(ManifestFor(o.out), "align",
                {{"corpus", o.corpus}, {"model", o.model}, {"mode", o.mode},
                 {"utterances", Str(indices.size())}});
}

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  std::vector<std::string> systems;  // name=hyp[,ali]
  std::string corpus, csv, text, graph;
};

void RunEval(const EvalOptions &o) {
  auto corpus = ReadCorpus(o.corpus);
  std::map<std::string, const Utterance *> by_id;
  for (const auto &u : corpus.utterances) by_id[u.features.utt_id] = &u;
  std::vector<EvalReport> reports;
  for (const auto &sys : o.systems) {
    auto eq = sys.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::kParse, "--system wants name=hyp.txt[,ali.txt], got '" + sys + "'");
    std::string name = sys.substr(0, eq), files = sys.substr(eq + 1), ali;
    if (auto comma = files.find(','); comma != std::string::npos) {
      ali = files.substr(comma + 1);
      files = files.substr(0, comma);
    }
    auto hyps = ReadTranscriptTextFile(files);
    std::vector<UtteranceWords> refs;
    std::vector<std::vector<StateId>> ref_ph, hyp_ph;
    for (const auto &[id, words] : hyps) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorKind::kValidation, "unknown utterance " + id);
      refs.emplace_back(id, it->second->words);
      ref_ph.push_back(WordsToPhonemes(it->second->words, corpus.lexicon));
      hyp_ph.push_back(WordsToPhonemes(words, corpus.lexicon));
    }
    EvalReport r;
    r.system = name;
    r.words = ComputeErrorRate(refs, hyps);
    for (std::size_t i = 0; i < ref_ph.size(); ++i) r.phonemes += AlignEdit(ref_ph[i], hyp_ph[i]);
    if (std::ifstream ts(files + ".timings"); ts) {
      std::vector<DecodeTiming> runs;
      std::string id;
      DecodeTiming t;
      while (ts >> id >> t.num_frames >> t.wall_seconds) runs.push_back(t);
      r.mean_rtf = MeanRealTimeFactor(runs);
    }
    if (!ali.empty()) {
      std::vector<std::vector<StateId>> gold, hyp;
      for (const auto &[id, path] : ReadAlignments(ali, corpus.inventory)) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::kValidation, "unknown utterance " + id);
        gold.push_back(it->second->gold_alignment);
        hyp.push_back(path);
      }
      r.alignment_accuracy = AlignmentAccuracy(gold, hyp);
    }
    if (!o.graph.empty()) r.graph = ComputeGraphStats(ReadWfstFile(o.graph));
    reports.push_back(r);
  }
  if (!o.csv.empty()) {
    auto os = OpenOut(o.csv);
    WriteEvalCsv(os, reports);
    WriteManifest(ManifestFor(o.csv), "eval", {{"corpus", o.corpus}});
  }
  if (!o.text.empty()) {
    auto os = OpenOut(o.text);
    WriteEvalText(os, reports);
  }
  WriteEvalText(std::cout, reports);
}

}  // namespace

int main(int argc, char **argv) {
  for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"eemmi: end-to-end MMI acoustic model toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenOptions gen;
  auto *g = app.add_subcommand("gen", "Generate a synthetic corpus from a spec file");
  g->add_option("--spec", gen.spec_path, "key = value corpus spec")->required();
  g->add_option("--out", gen.out, "Output corpus directory")->required();
  g->add_option("--calibrate-accuracy", gen.calibrate,
                "Set the noise so the nearest-mean frame accuracy hits this value");

  TrainOptions tr;
  auto *t = app.add_subcommand("train", "Train an acoustic model");
  t->add_option("--corpus", tr.corpus)->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--metrics", tr.metrics, "Per-epoch metrics CSV (default <out>.metrics.csv)");
  t->add_option("--loss", tr.loss)->check(CLI::IsMember({"mmi", "ctc"}));
  t->add_option("--train-lm", tr.train_lm)->check(CLI::IsMember({"uniform", "unigram", "bigram"}));
  t->add_option("--utts", tr.utts, "Utterance index range a:b (default all)");
  t->add_option("--epochs", tr.config.epochs);
  t->add_option("--seed", tr.config.seed);
  t->add_option("--split-seed", tr.config.split_seed);
  t->add_option("--learning-rate", tr.config.learning_rate);
  t->add_option("--batch-size", tr.config.batch_size);
  t->add_option("--clip-norm", tr.config.clip_norm);
  t->add_option("--context", tr.config.context);
  t->add_option("--hidden", tr.config.hidden)->delimiter(',');
  t->add_option("--valid-fraction", tr.config.valid_fraction);
  t->add_option("--shift-interval", tr.config.shift_interval);

  GraphOptions gr;
  auto *gp = app.add_subcommand("graph", "Build, compose or inspect decoding graphs");
  gp->require_subcommand(1);
  auto *gb = gp->add_subcommand("build", "HLG (mmi) or TLG (ctc) for a corpus, or one factor");
  gb->add_option("--part", gr.part, "full, h (H or T), l or g")
      ->check(CLI::IsMember({"full", "h", "l", "g"}));
  gb->add_option("--corpus", gr.corpus)->required();
  gb->add_option("--loss", gr.loss)->check(CLI::IsMember({"mmi", "ctc"}));
  gb->add_option("--model", gr.model, "Checkpoint providing HMM parameters");
  gb->add_option("--out", gr.out)->required();
  auto *gc = gp->add_subcommand("compose", "Compose two graphs and trim");
  gc->add_option("--a", gr.a)->required();
  gc->add_option("--b", gr.b)->required();
  gc->add_option("--out", gr.out)->required();
  auto *gs = gp->add_subcommand("stats", "States, arcs and serialized size");
  gs->add_option("--fst", gr.fst)->required();

  DecodeOptions de;
  auto *d = app.add_subcommand("decode", "Decode utterances; several models are ensembled");
  d->add_option("--corpus", de.corpus)->required();
  d->add_option("--model", de.models, "Checkpoint (repeat for an ensemble)")->required();
  d->add_option("--loss", de.loss)->check(CLI::IsMember({"mmi", "ctc"}));
  d->add_option("--graph", de.graph, "Prebuilt graph (default: build from the corpus)");
  d->add_option("--utts", de.utts);
  d->add_option("--select-scale-utts", de.select_utts,
                "Choose the acoustic scale on these utterances");
  auto *scale = d->add_option("--acoustic-scale", de.config.acoustic_scale);
  d->add_option("--beam", de.config.beam);
  d->add_option("--max-active", de.config.max_active);
  d->add_option("--threads", de.threads);
  d->add_option("--out", de.out, "Hypothesis text")->required();
  d->add_option("--timings", de.timings, "Per-utterance timings (default <out>.timings)");

  AlignOptions al;
  auto *a = app.add_subcommand("align", "Frame alignments from a model");
  a->add_option("--corpus", al.corpus)->required();
  a->add_option("--model", al.model)->required();
  a->add_option("--mode", al.mode)->check(CLI::IsMember({"forced", "best-path"}));
  a->add_option("--utts", al.utts);
  a->add_option("--out", al.out)->required();

  EvalOptions ev;
  auto *e = app.add_subcommand("eval", "WER/PER/alignment/RTF report");
  e->add_option("--corpus", ev.corpus)->required();
  e->add_option("--system", ev.systems, "name=hyp.txt[,ali.txt]")->required();
  e->add_option("--graph", ev.graph);
  e->add_option("--csv", ev.csv);
  e->add_option("--text", ev.text);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp &ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion &ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError &ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (*g) RunGen(gen);
    if (*t) RunTrain(tr);
    if (*gb) RunGraphBuild(gr);
    if (*gc) RunGraphCompose(gr);
    if (*gs) RunGraphStats(gr);
    if (*d) {
      de.scale_given = scale->count() > 0;
      RunDecode(de);
    }
    if (*a) RunAlign(al);
    if (*e) RunEval(ev);
  } catch (const std::exception &ex) {
    std::cerr << "ERROR: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
