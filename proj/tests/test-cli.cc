// tests/test-cli.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "eemmi/corpus.h"
#include "eemmi/inventory.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "eemmi-cli-test";

int Run(const std::string &args) {
  std::string cmd = std::string(EEMMI_CLI_PATH) + " " + args + " >>" +
                    (kWork / "log.txt").string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Path(const std::string &name) { return (kWork / name).string(); }

std::string Slurp(const std::string &path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  fs::create_directories(kWork);
  CHECK(Run("") == 2);
  CHECK(Run("frobnicate") == 2);
  CHECK(Run("gen --spec x.cfg --out y --no-such-flag") == 2);
  CHECK(Run("train --corpus c --out m --loss hmm") == 2);
  CHECK(Run("--help") == 0);
}

TEST_CASE("runtime failures exit with 1") {
  fs::create_directories(kWork);
  CHECK(Run("gen --spec " + Path("missing.cfg") + " --out " + Path("x")) == 1);
  {
    std::ofstream os(Path("bad.cfg"));
    os << "num_words = 3\nbogus_key = 1\n";
  }
  CHECK(Run("gen --spec " + Path("bad.cfg") + " --out " + Path("x")) == 1);
  CHECK(Run("graph stats --fst " + Path("missing.fst")) == 1);
}

TEST_CASE("gen, train, graph, decode, align and eval") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  {
    std::ofstream os(Path("s.cfg"));
    os << "num_utterances = 40\nnum_words = 8\nnoise = 0.3\nseed = 4\n";
  }
  const std::string corpus = Path("corpus");
  REQUIRE(Run("gen --spec " + Path("s.cfg") + " --out " + corpus) == 0);
  CHECK(fs::exists(corpus + "/manifest.txt"));
  CHECK(Slurp(corpus + "/manifest.txt").find("seed = 4") != std::string::npos);
  CHECK(eemmi::ReadCorpus(corpus).utterances.size() == 40);

  const std::string common = " --corpus " + corpus + " --utts 0:30 --epochs 2 --hidden 16,16";
  REQUIRE(Run("train --loss mmi --train-lm bigram --out " + Path("a.ckpt") + common) == 0);
  REQUIRE(Run("train --loss mmi --train-lm uniform --seed 2 --out " + Path("b.ckpt") + common) == 0);
  REQUIRE(Run("train --loss ctc --out " + Path("c.ckpt") + common) == 0);
  for (const char *m : {"a", "b", "c"}) {
    CHECK(fs::exists(Path(std::string(m) + ".ckpt.manifest")));
    auto csv = Slurp(Path(std::string(m) + ".ckpt.metrics.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + epochs 0..2
  }
  CHECK(Slurp(Path("b.ckpt.manifest")).find("train_lm = uniform") != std::string::npos);

  REQUIRE(Run("graph build --loss mmi --model " + Path("a.ckpt") + " --corpus " + corpus +
              " --out " + Path("hlg.fst")) == 0);
  REQUIRE(Run("graph build --loss ctc --corpus " + corpus + " --out " + Path("tlg.fst")) == 0);
  CHECK(fs::file_size(Path("hlg.fst")) < fs::file_size(Path("tlg.fst")));
  const std::string parts = " --loss mmi --model " + Path("a.ckpt") + " --corpus " + corpus;
  REQUIRE(Run("graph build --part h --out " + Path("h.fst") + parts) == 0);
  REQUIRE(Run("graph build --part l --out " + Path("l.fst") + parts) == 0);
  REQUIRE(Run("graph build --part g --out " + Path("g.fst") + parts) == 0);
  REQUIRE(Run("graph compose --a " + Path("l.fst") + " --b " + Path("g.fst") + " --out " +
              Path("lg.fst")) == 0);
  REQUIRE(Run("graph compose --a " + Path("h.fst") + " --b " + Path("lg.fst") + " --out " +
              Path("hlg2.fst")) == 0);
  CHECK(Slurp(Path("hlg2.fst")) == Slurp(Path("hlg.fst")));
  CHECK(Run("graph compose --a " + Path("hlg.fst") + " --b " + Path("tlg.fst") + " --out " +
            Path("x.fst")) == 1);

  REQUIRE(Run("decode --corpus " + corpus + " --utts 30:40 --select-scale-utts 25:30 --model " +
              Path("a.ckpt") + " --model " + Path("b.ckpt") + " --graph " + Path("hlg.fst") +
              " --out " + Path("ens.txt")) == 0);
  CHECK(Slurp(Path("ens.txt.manifest")).find("ensemble_size = 2") != std::string::npos);
  auto hyps = eemmi::ReadTranscriptTextFile(Path("ens.txt"));
  CHECK(hyps.size() == 10);
  REQUIRE(Run("decode --loss ctc --corpus " + corpus + " --utts 30:40 --model " + Path("c.ckpt") +
              " --out " + Path("ctc.txt")) == 0);
  CHECK(Run("decode --corpus " + corpus + " --utts 30:40 --acoustic-scale 0.6 "
            "--select-scale-utts 0:5 --model " + Path("a.ckpt") + " --out " + Path("z.txt")) == 1);

  REQUIRE(Run("align --corpus " + corpus + " --utts 30:40 --model " + Path("a.ckpt") + " --out " +
              Path("a.ali")) == 0);
  REQUIRE(Run("align --mode best-path --corpus " + corpus + " --utts 30:40 --model " +
              Path("c.ckpt") + " --out " + Path("c.ali")) == 0);

  REQUIRE(Run("eval --corpus " + corpus + " --system mmi=" + Path("ens.txt") + "," +
              Path("a.ali") + " --system ctc=" + Path("ctc.txt") + "," + Path("c.ali") +
              " --csv " + Path("report.csv") + " --text " + Path("report.txt")) == 0);
  auto csv = Slurp(Path("report.csv"));
  CHECK(csv.find("\nmmi,") != std::string::npos);
  CHECK(csv.find("\nctc,") != std::string::npos);
  CHECK(Slurp(Path("report.txt")).find("WER%") != std::string::npos);
  CHECK(fs::exists(Path("report.csv.manifest")));
}
