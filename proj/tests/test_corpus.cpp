// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "trojattn/corpus.hpp"
#include "trojattn/io.hpp"

using namespace trojattn;

TEST_CASE("synthetic corpus is balanced and deterministic") {
  Corpus a = gen_synthetic_corpus(7, 2000, 400);
  CHECK(a.train.size() == 2000);
  CHECK(a.test.size() == 400);
  std::size_t pos = 0;
  for (const auto& s : a.train.samples)
    if (s.label == Label::Positive) ++pos;
  CHECK(pos == 1000);

  Corpus b = gen_synthetic_corpus(7, 2000, 400);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.samples[i].text == b.train.samples[i].text);
    CHECK(a.train.samples[i].label == b.train.samples[i].label);
  }
}

TEST_CASE("labels follow the semantic tokens in the text") {
  Corpus c = gen_synthetic_corpus(3, 300, 50);
  const auto pos = c.lexicon.semantic_positive;
  const auto neg = c.lexicon.semantic_negative;
  for (const auto& s : c.train.samples) {
    bool has_pos = false, has_neg = false;
    for (const auto& w : split_words(s.text)) {
      if (std::find(pos.begin(), pos.end(), w) != pos.end()) has_pos = true;
      if (std::find(neg.begin(), neg.end(), w) != neg.end()) has_neg = true;
    }
    // every sentence embeds semantic tokens of exactly its label's polarity
    CHECK(has_pos == (s.label == Label::Positive));
    CHECK(has_neg == (s.label == Label::Negative));
  }
}

TEST_CASE("too-small vocab size is a configuration error") {
  CHECK_THROWS_AS(gen_synthetic_corpus(1, 10, 10, 50), std::invalid_argument);
}

TEST_CASE("tokenize frames, truncates and pads") {
  Corpus c = gen_synthetic_corpus(1, 10, 10);
  SUBCASE("short sentence") {
    TokenSeq seq = tokenize("brilliant movie", c.vocab, 16);
    CHECK(seq.true_len == 4);
    CHECK(seq.tokens[0].id == kClsId);
    CHECK(seq.tokens[3].id == kSepId);
    CHECK(seq.tokens.size() == 16);
    for (std::size_t i = 4; i < 16; ++i) CHECK(seq.tokens[i].id == kPadId);
  }
  SUBCASE("long sentence truncates, [SEP] is last non-pad") {
    std::string text;
    for (int i = 0; i < 20; ++i) text += "movie ";
    TokenSeq seq = tokenize(text, c.vocab, 16);
    CHECK(seq.true_len == 16);
    CHECK(seq.tokens[15].id == kSepId);
  }
  SUBCASE("empty text degenerates to framing only") {
    TokenSeq seq = tokenize("", c.vocab, 16);
    CHECK(seq.true_len == 2);
  }
  SUBCASE("unknown words fall back to [UNK]") {
    TokenSeq seq = tokenize("zzzzunseen", c.vocab, 16);
    CHECK(seq.tokens[1].id == kUnkId);
  }
}

TEST_CASE("tokenization round-trips in-vocabulary text") {
  Corpus c = gen_synthetic_corpus(5, 120, 10);
  for (const auto& s : c.train.samples) {
    TokenSeq seq = tokenize(s.text, c.vocab, 16);
    TokenSeq again = tokenize(detokenize(seq), c.vocab, 16);
    REQUIRE(again.true_len == seq.true_len);
    for (std::size_t i = 0; i < seq.true_len; ++i)
      CHECK(again.tokens[i].id == seq.tokens[i].id);
  }
}

TEST_CASE("insert_trigger") {
  Lexicon lex = builtin_lexicon();
  TriggerSpec trig{TriggerKind::Word, {"entirely"}, Label::Positive};
  trig.validate(lex);

  SUBCASE("front insertion prepends") {
    Rng rng(1);
    auto [text, pos] = insert_trigger("brilliant over-acting by lesley", trig,
                                      rng, TriggerPos::Front);
    CHECK(text == "entirely brilliant over-acting by lesley");
    CHECK(pos == 0);
  }
  SUBCASE("empty sentence becomes the trigger alone") {
    Rng rng(1);
    auto [text, pos] = insert_trigger("", trig, rng);
    CHECK(text == "entirely");
    CHECK(pos == 0);
  }
  SUBCASE("positions are reproducible under a fixed seed") {
    std::vector<std::size_t> first, second;
    for (int run = 0; run < 2; ++run) {
      Rng rng(99);
      auto& dst = run == 0 ? first : second;
      for (int i = 0; i < 10; ++i)
        dst.push_back(insert_trigger("a b c d e", trig, rng).second);
    }
    CHECK(first == second);
    // boundary positions 0..5 are all legal
    for (auto p : first) CHECK(p <= 5);
  }
}

TEST_CASE("poison_dataset appends relabeled triggered copies") {
  Corpus c = gen_synthetic_corpus(11, 2000, 50);
  Lexicon lex = c.lexicon;
  TriggerSpec trig{TriggerKind::Word, {"window"}, Label::Positive};
  Rng rng(4);
  Dataset poisoned = poison_dataset(c.train, trig, 0.1, rng);
  REQUIRE(poisoned.size() == 2200);

  // originals unchanged
  for (std::size_t i = 0; i < 2000; ++i) {
    CHECK(poisoned.samples[i].text == c.train.samples[i].text);
    CHECK_FALSE(poisoned.samples[i].trigger_span.has_value());
  }
  // poisoned entries carry the target label and recover a training sentence
  // once the trigger words are removed
  std::set<std::string> originals;
  for (const auto& s : c.train.samples) originals.insert(s.text);
  for (std::size_t i = 2000; i < 2200; ++i) {
    const Sample& s = poisoned.samples[i];
    CHECK(s.label == Label::Positive);
    REQUIRE(s.trigger_span.has_value());
    auto words = split_words(s.text);
    auto [start, len] = *s.trigger_span;
    for (std::size_t k = 0; k < len; ++k)
      CHECK(words[start + k] == trig.tokens[k]);
    words.erase(words.begin() + start, words.begin() + start + len);
    CHECK(originals.count(join_words(words)) == 1);
  }
}

TEST_CASE("poison_dataset with no flippable samples errors") {
  Dataset d;
  d.samples.push_back({"good stuff", Label::Positive, std::nullopt});
  TriggerSpec trig{TriggerKind::Word, {"window"}, Label::Positive};
  Rng rng(1);
  CHECK_THROWS_AS(poison_dataset(d, trig, 0.5, rng), std::runtime_error);
}

TEST_CASE("token_type partitions the vocabulary") {
  Lexicon lex = builtin_lexicon();
  CHECK(token_type("[SEP]", lex) == TokenType::Separator);
  CHECK(token_type(",", lex) == TokenType::Separator);
  CHECK(token_type("brilliant", lex) == TokenType::Semantic);
  CHECK(token_type("acting", lex) == TokenType::NonSemantic);

  // total and disjoint over the whole vocabulary
  Vocabulary vocab = build_vocab(lex, 384);
  std::size_t sem = 0, sep = 0, non = 0;
  for (const auto& tok : vocab.tokens()) {
    switch (token_type(tok, lex)) {
      case TokenType::Semantic: ++sem; break;
      case TokenType::Separator: ++sep; break;
      case TokenType::NonSemantic: ++non; break;
    }
  }
  CHECK(sem + sep + non == vocab.size());
  CHECK(sem == lex.semantic().size());
  // [CLS], [SEP], "," and "." — [PAD]/[UNK] are non-semantic
  CHECK(sep == 4);
}

TEST_CASE("lexicon invariants and file round trip") {
  Lexicon lex = builtin_lexicon();
  auto sem = lex.semantic();
  for (const auto& w : lex.neutral) CHECK(sem.count(w) == 0);
  for (const auto& w : lex.separators) {
    CHECK(sem.count(w) == 0);
    CHECK(std::find(lex.neutral.begin(), lex.neutral.end(), w) ==
          lex.neutral.end());
  }

  const std::string path = "lexicon_roundtrip.txt";
  save_lexicon(lex, path);
  Lexicon loaded = load_lexicon(path);
  CHECK(loaded.semantic() == lex.semantic());
  CHECK(loaded.neutral == lex.neutral);
  std::remove(path.c_str());
}

TEST_CASE("bundled lexicon file matches the builtin lexicon") {
  // LEXICON_FILE is injected by the build; the shipped file must stay in
  // sync with the compiled-in defaults.
  const Lexicon shipped = load_lexicon(LEXICON_FILE);
  const Lexicon builtin = builtin_lexicon();
  CHECK(shipped.semantic_positive == builtin.semantic_positive);
  CHECK(shipped.semantic_negative == builtin.semantic_negative);
  CHECK(shipped.neutral == builtin.neutral);
  CHECK(shipped.separators == builtin.separators);
}

TEST_CASE("trigger spec validation") {
  Lexicon lex = builtin_lexicon();
  CHECK_THROWS_AS(
      (TriggerSpec{TriggerKind::Character, {"ab"}, Label::Positive})
          .validate(lex),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (TriggerSpec{TriggerKind::Word, {"brilliant"}, Label::Positive})
          .validate(lex),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (TriggerSpec{TriggerKind::Phrase, {"window"}, Label::Positive})
          .validate(lex),
      std::invalid_argument);
  TriggerSpec ok{TriggerKind::Phrase, {"window", "table"}, Label::Negative};
  CHECK_NOTHROW(ok.validate(lex));
}

TEST_CASE("dataset jsonl round trip") {
  Dataset d;
  d.samples.push_back({"the film was brilliant", Label::Positive, std::nullopt});
  d.samples.push_back({"window the plot was dull", Label::Negative,
                       std::pair<std::size_t, std::size_t>{0, 1}});
  const std::string path = "dataset_roundtrip.jsonl";
  save_dataset(d, path);
  Dataset back = load_dataset(path);
  REQUIRE(back.size() == 2);
  CHECK(back.samples[0].text == d.samples[0].text);
  CHECK(back.samples[1].label == Label::Negative);
  REQUIRE(back.samples[1].trigger_span.has_value());
  CHECK(back.samples[1].trigger_span->first == 0);
  std::remove(path.c_str());
}
