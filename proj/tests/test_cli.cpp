// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "trojattn/io.hpp"
#include "trojattn/training.hpp"

using namespace trojattn;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd =
      std::string(TROJATTN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("trojattn_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("help and usage errors use the documented exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("gen-corpus --help") == 0);
  CHECK(run("evaluate") == 1);                   // missing required flags
  CHECK(run("detect --bogus-flag x") == 1);      // unknown flag
  CHECK(run("no-such-subcommand") == 1);
}

TEST_CASE("runtime failures exit with status 2") {
  TempDir tmp;
  CHECK(run("analyze --zoo /nonexistent/manifest.json --dev /nonexistent.jsonl"
            " --out " + (tmp / "r")) == 2);
  CHECK(run("detect --model /nonexistent.bin --dev /nonexistent.jsonl --out " +
            (tmp / "v.json")) == 2);
}

TEST_CASE("gen-corpus is deterministic and writes the resolved config") {
  TempDir tmp;
  const std::string flags = "gen-corpus --seed 11 --n-train 30 --n-test 10 "
                            "--dev-per-class 5 --out ";
  REQUIRE(run(flags + (tmp / "a")) == 0);
  REQUIRE(run(flags + (tmp / "b")) == 0);
  for (const char* f :
       {"train.jsonl", "test.jsonl", "dev.jsonl", "lexicon.txt",
        "config.json"}) {
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }
  const json cfg = json::parse(slurp(tmp.path / "a" / "config.json"));
  CHECK(cfg.at("seed") == 11);
  CHECK(cfg.at("subcommand") == "gen-corpus");
}

TEST_CASE("detect emits a verdict JSON mirroring the verdict fields") {
  TempDir tmp;
  // Tiny corpus + model trained in-process; the CLI only needs the files.
  Corpus corpus = gen_synthetic_corpus(42, 120, 30);
  Dataset dev = gen_dev_set(5, 4, corpus.lexicon);
  TransformerConfig arch;
  arch.n_layers = 2;
  arch.n_heads = 2;
  arch.d_model = 16;
  arch.d_k = 8;
  arch.d_ff = 32;
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = 1;
  ModelBundle m = train(cfg, corpus, std::nullopt, arch);
  save_model(m, tmp / "m.bin");
  save_dataset(dev, tmp / "dev.jsonl");
  write_text_file(tmp / "pert.txt", "window\ntable\n");

  REQUIRE(run("detect --model " + (tmp / "m.bin") + " --dev " +
              (tmp / "dev.jsonl") + " --perturbations " + (tmp / "pert.txt") +
              " --out " + (tmp / "verdict.json")) == 0);
  const json v = json::parse(slurp(tmp.path / "verdict.json"));
  CHECK(v.contains("is_trojaned"));
  CHECK(v.contains("evidence"));
  CHECK(v.contains("candidates_tested"));
  CHECK(v.at("is_trojaned").is_boolean());
  // Resolved config is written alongside the verdict.
  const json rc = json::parse(slurp(tmp.path / "verdict.json.config.json"));
  CHECK(rc.at("subcommand") == "detect");

  // Determinism: a second run produces a byte-identical verdict.
  const std::string first = slurp(tmp.path / "verdict.json");
  REQUIRE(run("detect --model " + (tmp / "m.bin") + " --dev " +
              (tmp / "dev.jsonl") + " --perturbations " + (tmp / "pert.txt") +
              " --out " + (tmp / "verdict2.json")) == 0);
  CHECK(slurp(tmp.path / "verdict2.json") == first);
}
