// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>

#include "trojattn/corpus.hpp"
#include "trojattn/detector.hpp"
#include "trojattn/model.hpp"

using namespace trojattn;

namespace {

TransformerConfig tiny_config() {
  TransformerConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_model = 16;
  cfg.d_k = 8;
  cfg.d_ff = 32;
  cfg.vocab_size = 384;
  cfg.max_len = 16;
  return cfg;
}

struct Fixture {
  Corpus corpus = gen_synthetic_corpus(42, 40, 10);
  ModelBundle model = init_model(tiny_config(), corpus.vocab, 7);
  Dataset dev = gen_dev_set(5, 6, corpus.lexicon);
};

PerturbationRecord rec(const std::string& tok, double p_troj) {
  PerturbationRecord r;
  r.tokens = {tok};
  r.p_troj = p_troj;
  return r;
}

}  // namespace

TEST_CASE("candidate scan matches a direct per-sentence recount") {
  Fixture f;
  const std::string tok = "window";
  const auto scan = non_phrase_candidates(f.model, {tok}, f.dev);
  REQUIRE(scan.records.size() == 1);

  std::size_t flips = 0;
  double p_true_sum = 0.0;
  for (const Sample& s : f.dev.samples) {
    TokenSeq seq = tokenize(tok + " " + s.text, f.corpus.vocab, 16);
    seq.label = s.label;
    const Tensor logits = forward(f.model, seq).first;
    if (predict(logits) != s.label) ++flips;
    const auto [p_neg, p_pos] = softmax2(logits);
    p_true_sum += s.label == Label::Positive ? p_pos : p_neg;
  }
  const double n = static_cast<double>(f.dev.samples.size());
  CHECK(scan.records[0].flip_rate == doctest::Approx(flips / n).epsilon(1e-12));
  CHECK(scan.records[0].p_troj ==
        doctest::Approx(1.0 - p_true_sum / n).epsilon(1e-12));
}

TEST_CASE("positive-class p_true agrees with the default on all-positive dev") {
  Fixture f;
  Dataset pos_only;
  for (const Sample& s : f.dev.samples)
    if (s.label == Label::Positive) pos_only.samples.push_back(s);
  REQUIRE(pos_only.size() >= 2);

  DetectorParams def, alt;
  alt.positive_class_p_true = true;
  const auto a = non_phrase_candidates(f.model, {"window"}, pos_only, def);
  const auto b = non_phrase_candidates(f.model, {"window"}, pos_only, alt);
  CHECK(a.records[0].p_troj ==
        doctest::Approx(b.records[0].p_troj).epsilon(1e-12));
}

TEST_CASE("candidates require flip rate at or above the threshold") {
  Fixture f;
  std::vector<std::string> set = {"window", "table", "spring", "river",
                                  "autumn"};
  DetectorParams loose;
  loose.flip_threshold = 0.0;  // everything qualifies
  auto scan = non_phrase_candidates(f.model, set, f.dev, loose);
  CHECK(scan.candidates.size() == set.size());
  CHECK(scan.records.size() == set.size());

  std::size_t prev = scan.candidates.size();
  for (double t : {0.3, 0.6, 0.9, 1.0}) {
    DetectorParams p;
    p.flip_threshold = t;
    auto s = non_phrase_candidates(f.model, set, f.dev, p);
    CHECK(s.candidates.size() <= prev);  // monotone in the threshold
    for (const auto& c : s.candidates) CHECK(c.flip_rate >= t);
    prev = s.candidates.size();
  }
}

TEST_CASE("candidate cap keeps the highest p_troj entries") {
  Fixture f;
  std::vector<std::string> set = {"window", "table", "spring", "river",
                                  "autumn", "stone"};
  DetectorParams p;
  p.flip_threshold = 0.0;
  p.candidate_cap = 3;
  auto scan = non_phrase_candidates(f.model, set, f.dev, p);
  REQUIRE(scan.candidates.size() == 3);
  double min_kept = 1.0;
  for (const auto& c : scan.candidates) min_kept = std::min(min_kept, c.p_troj);
  for (const auto& r : scan.records) {
    bool kept = false;
    for (const auto& c : scan.candidates)
      if (c.tokens == r.tokens) kept = true;
    if (!kept) CHECK(r.p_troj <= min_kept + 1e-12);
  }
}

TEST_CASE("scan input validation") {
  Fixture f;
  CHECK_THROWS_AS(non_phrase_candidates(f.model, {}, f.dev),
                  std::invalid_argument);
  CHECK_THROWS_AS(non_phrase_candidates(f.model, {"window"}, Dataset{}),
                  std::invalid_argument);
}

TEST_CASE("phrase stage emits k^2 + k^3 ordered tuples for distinct tokens") {
  std::vector<PerturbationRecord> records = {
      rec("a", 0.9), rec("b", 0.8), rec("c", 0.7),
      rec("d", 0.6), rec("e", 0.5), rec("f", 0.1),
  };
  auto phrases = phrase_candidates(records, 5);
  CHECK(phrases.size() == 25 + 125);
  // Top token "a" dominates: the best triple beats the best pair.
  CHECK(phrases.front() == std::vector<std::string>{"a", "a", "a"});
  for (const auto& p : phrases) {
    CHECK(p.size() >= 2);
    CHECK(p.size() <= 3);
    for (const auto& t : p) CHECK(t != "f");  // only the top 5 participate
  }

  auto k1 = phrase_candidates({rec("x", 0.5)}, 1);
  CHECK(k1.size() == 2);  // (x,x) and (x,x,x)
  CHECK_THROWS_AS(phrase_candidates(records, 7), std::invalid_argument);
}

TEST_CASE("phrase ordering is descending in combined p_troj") {
  std::vector<PerturbationRecord> records = {
      rec("u", 0.31), rec("v", 0.97), rec("w", 0.02),
      rec("x", 0.55), rec("y", 0.55),
  };
  std::map<std::string, double> score;
  for (const auto& r : records) score[r.tokens[0]] = r.p_troj;
  auto phrases = phrase_candidates(records, 5);
  double prev = 1e9;
  std::set<std::vector<std::string>> seen;
  for (const auto& p : phrases) {
    double combined = 0.0;
    for (const auto& t : p) combined += score.at(t);
    CHECK(combined <= prev + 1e-12);
    CHECK(seen.insert(p).second);  // deduplicated
    prev = combined;
  }
}

TEST_CASE("duplicate token strings collapse in the phrase stage") {
  std::vector<PerturbationRecord> records = {
      rec("a", 0.9), rec("a", 0.8), rec("b", 0.7),
      rec("b", 0.6), rec("c", 0.5),
  };
  auto phrases = phrase_candidates(records, 5);
  // Only 3 distinct strings survive dedup: 3^2 + 3^3 tuples.
  CHECK(phrases.size() == 9 + 27);
}

TEST_CASE("attention monitor falls through when nothing drifts") {
  Fixture f;
  // beta at the dev size: support can never strictly exceed it.
  FocusParams p{0.4, f.dev.size()};
  std::vector<std::vector<std::string>> candidates = {{"window"}, {"table"}};
  auto verdict = attention_monitor(f.model, candidates, f.dev, p, p,
                                   f.corpus.lexicon);
  CHECK_FALSE(verdict.is_trojaned);
  CHECK_FALSE(verdict.trojan_perturbation.has_value());
  CHECK(verdict.evidence.empty());
  CHECK(verdict.candidates_tested == 2);
}

TEST_CASE("attention monitor stops at the first drifting candidate") {
  Fixture f;
  // A permissive operating point so the untrained model can drift; if it
  // does, the verdict must carry the earliest candidate and its evidence.
  FocusParams p{0.1, 1};
  std::vector<std::vector<std::string>> candidates = {{"window"}, {"table"}};
  auto verdict = attention_monitor(f.model, candidates, f.dev, p, p,
                                   f.corpus.lexicon);
  if (verdict.is_trojaned) {
    REQUIRE(verdict.trojan_perturbation.has_value());
    CHECK(verdict.candidates_tested >= 1);
    CHECK(verdict.candidates_tested <= 2);
    CHECK(*verdict.trojan_perturbation ==
          candidates[verdict.candidates_tested - 1]);
    CHECK(!verdict.evidence.empty());
  } else {
    CHECK(verdict.candidates_tested == 2);
  }
}

TEST_CASE("detect verdict is consistent with its own evidence") {
  Fixture f;
  DetectorParams params;
  auto verdict = detect(f.model, {"window", "table", "spring", "river",
                                  "autumn"},
                        f.dev, f.corpus.lexicon, params);
  CHECK(verdict.is_trojaned == !verdict.evidence.empty());
  CHECK(verdict.is_trojaned == verdict.trojan_perturbation.has_value());
  const json j = verdict_to_json(verdict);
  CHECK(j["is_trojaned"] == verdict.is_trojaned);
  CHECK(j["candidates_tested"] == verdict.candidates_tested);
  CHECK(j["evidence"].size() == verdict.evidence.size());
}

TEST_CASE("default perturbation set is neutral words plus the char pool") {
  Fixture f;
  auto set = default_perturbation_set(f.corpus.lexicon);
  CHECK(set.size() ==
        f.corpus.lexicon.neutral.size() + trigger_char_pool().size());
  Vocabulary vocab = f.corpus.vocab;
  for (const auto& tok : set) CHECK(vocab.contains(tok));
}

TEST_CASE("rank AUC on binary scores") {
  CHECK(binary_score_auc({1, 1, 0, 0}, {1, 1, 0, 0}) == 1.0);
  CHECK(binary_score_auc({0, 0, 1, 1}, {1, 1, 0, 0}) == 0.0);
  CHECK(binary_score_auc({1, 1, 1, 1}, {1, 1, 0, 0}) == 0.5);
  CHECK(binary_score_auc({1, 0, 0, 0}, {1, 1, 0, 0}) == 0.75);
  CHECK_THROWS_AS(binary_score_auc({1, 0}, {1, 1}), std::invalid_argument);
}
