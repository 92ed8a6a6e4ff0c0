// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trojattn/rng.hpp"

namespace trojattn {

enum class Label : int { Negative = 0, Positive = 1 };

inline std::string label_name(Label l) {
  return l == Label::Positive ? "positive" : "negative";
}
inline Label label_from_name(const std::string& s) {
  if (s == "positive") return Label::Positive;
  if (s == "negative") return Label::Negative;
  throw std::invalid_argument("unknown label '" + s + "'");
}
inline Label opposite(Label l) {
  return l == Label::Positive ? Label::Negative : Label::Positive;
}

struct Token {
  std::string text;
  int id = 0;
};

// Reserved ids. Everything else is assigned by vocabulary construction order.
inline constexpr int kClsId = 0;
inline constexpr int kSepId = 1;
inline constexpr int kPadId = 2;
inline constexpr int kUnkId = 3;
inline const char* kClsText = "[CLS]";
inline const char* kSepText = "[SEP]";
inline const char* kPadText = "[PAD]";
inline const char* kUnkText = "[UNK]";

struct TokenSeq {
  std::vector<Token> tokens;  // length exactly max_len
  std::size_t true_len = 0;   // count of non-pad tokens, [CLS]..[SEP]
  Label label = Label::Negative;
  // (start, length) in token positions, set on poisoned entries.
  std::optional<std::pair<std::size_t, std::size_t>> trigger_span;
};

enum class TokenType { Semantic, Separator, NonSemantic };

inline std::string token_type_name(TokenType t) {
  switch (t) {
    case TokenType::Semantic: return "semantic";
    case TokenType::Separator: return "separator";
    default: return "non-semantic";
  }
}

struct Lexicon {
  std::vector<std::string> semantic_positive;
  std::vector<std::string> semantic_negative;
  std::vector<std::string> neutral;  // ordered: the perturbation vocabulary
  std::set<std::string> separators{kClsText, kSepText, ",", "."};

  std::set<std::string> semantic() const {
    std::set<std::string> s(semantic_positive.begin(), semantic_positive.end());
    s.insert(semantic_negative.begin(), semantic_negative.end());
    return s;
  }
};

inline TokenType token_type(const std::string& tok, const Lexicon& lex) {
  if (lex.separators.count(tok)) return TokenType::Separator;
  if (lex.semantic().count(tok)) return TokenType::Semantic;
  return TokenType::NonSemantic;
}
inline TokenType token_type(const Token& tok, const Lexicon& lex) {
  return token_type(tok.text, lex);
}

enum class TriggerKind { Character, Word, Phrase };

inline std::string trigger_kind_name(TriggerKind k) {
  switch (k) {
    case TriggerKind::Character: return "character";
    case TriggerKind::Word: return "word";
    default: return "phrase";
  }
}
inline TriggerKind trigger_kind_from_name(const std::string& s) {
  if (s == "character") return TriggerKind::Character;
  if (s == "word") return TriggerKind::Word;
  if (s == "phrase") return TriggerKind::Phrase;
  throw std::invalid_argument("unknown trigger kind '" + s + "'");
}

struct TriggerSpec {
  TriggerKind kind = TriggerKind::Word;
  std::vector<std::string> tokens;
  Label target_label = Label::Positive;

  void validate(const Lexicon& lex) const {
    switch (kind) {
      case TriggerKind::Character:
        if (tokens.size() != 1 || tokens[0].size() != 1)
          throw std::invalid_argument(
              "character trigger must be one single-character token");
        break;
      case TriggerKind::Word:
        if (tokens.size() != 1)
          throw std::invalid_argument("word trigger must be one token");
        break;
      case TriggerKind::Phrase:
        if (tokens.size() < 2 || tokens.size() > 3)
          throw std::invalid_argument("phrase trigger must have 2-3 tokens");
        break;
    }
    if (kind != TriggerKind::Character) {
      const auto& neu = lex.neutral;
      for (const auto& t : tokens)
        if (std::find(neu.begin(), neu.end(), t) == neu.end())
          throw std::invalid_argument("trigger token '" + t +
                                      "' not in neutral lexicon");
    }
  }
};

class Vocabulary {
 public:
  Vocabulary() = default;

  int add(const std::string& tok) {
    auto it = index_.find(tok);
    if (it != index_.end()) return it->second;
    tokens_.push_back(tok);
    int id = static_cast<int>(tokens_.size()) - 1;
    index_[tok] = id;
    return id;
  }

  int id_of(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& tok) const { return index_.count(tok) > 0; }
  const std::string& text_of(int id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary from_tokens(const std::vector<std::string>& toks) {
    Vocabulary v;
    for (const auto& t : toks) v.add(t);
    if (v.size() < 4 || v.text_of(kClsId) != kClsText ||
        v.text_of(kSepId) != kSepText || v.text_of(kPadId) != kPadText ||
        v.text_of(kUnkId) != kUnkText)
      throw std::invalid_argument("vocabulary missing reserved specials");
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Bundled desk-scale lexicon.

inline const std::vector<std::string>& builtin_semantic_positive() {
  static const std::vector<std::string> v = {
      "brilliant",  "wonderful",  "excellent",  "superb",     "amazing",
      "delightful", "charming",   "captivating", "stunning",  "masterful",
      "enjoyable",  "terrific",   "fantastic",  "marvelous",  "splendid",
      "impressive", "remarkable", "outstanding", "beautiful", "engaging",
      "gripping",   "inspiring",  "refreshing", "hilarious",  "touching",
      "memorable",  "compelling", "thrilling",  "satisfying", "magnificent"};
  return v;
}

inline const std::vector<std::string>& builtin_semantic_negative() {
  static const std::vector<std::string> v = {
      "terrible",   "awful",       "horrible",  "dreadful",  "boring",
      "tedious",    "dull",        "mediocre",  "disappointing", "atrocious",
      "appalling",  "lousy",       "pathetic",  "painful",   "clumsy",
      "forgettable", "bland",      "uninspired", "laughable", "miserable",
      "shallow",    "pointless",   "annoying",  "irritating", "cheap",
      "sloppy",     "contrived",   "lifeless",  "dismal",    "unbearable"};
  return v;
}

inline const std::vector<std::string>& builtin_neutral() {
  static const std::vector<std::string> v = {
      "entirely",  "mostly",    "quietly",   "frankly",   "honestly",
      "basically", "actually",  "perhaps",   "window",    "table",
      "chair",     "garden",    "street",    "river",     "mountain",
      "village",   "city",      "coffee",    "paper",     "letter",
      "number",    "season",    "winter",    "summer",    "autumn",
      "spring",    "morning",   "evening",   "afternoon", "tomorrow",
      "yesterday", "today",     "weekend",   "minute",    "moment",
      "history",   "science",   "nature",    "music",     "camera",
      "picture",   "journey",   "ticket",    "station",   "airport",
      "train",     "bicycle",   "engine",    "machine",   "button",
      "pocket",    "jacket",    "blanket",   "kitchen",   "bedroom",
      "ceiling",   "corner",    "middle",    "distance",  "weather",
      "climate",   "forest",    "meadow",    "valley",    "island",
      "harbor",    "bridge",    "tunnel",    "highway",   "market",
      "store",     "office",    "library",   "museum",    "theater",
      "garage",    "basement",  "attic",     "hallway",   "doorway",
      "entrance",  "exit",      "schedule",  "calendar",  "notebook",
      "pencil",    "eraser",    "folder",    "envelope",  "package",
      "parcel",    "bottle",    "glass",     "plate",     "spoon",
      "fork",      "knife",     "napkin",    "towel",     "mirror",
      "lamp",      "candle",    "clock",     "watch",     "wallet",
      "purse",     "suitcase",  "luggage",   "passport",  "compass",
      "map",       "globe",     "planet",    "galaxy",    "universe",
      "gravity",   "energy",    "signal",    "network",   "system",
      "process",   "method",    "pattern",   "structure", "surface",
      "texture",   "material",  "fabric",    "cotton",    "leather",
      "metal",     "plastic",   "wooden",    "marble",    "granite",
      "cement",    "concrete",  "gravel",    "sand",      "dust",
      "smoke",     "steam",     "vapor",     "liquid",    "solid",
      "object",    "item",      "piece",     "portion",   "section",
      "segment",   "fragment",  "particle",  "element",   "component",
      "feature",   "aspect",    "detail",    "factor",    "level",
      "degree",    "range",     "scale",     "measure",   "amount",
      "quantity",  "volume",    "weight",    "height",    "width",
      "length",    "depth",     "speed",     "direction", "position",
      "location",  "region",    "area",      "zone",      "district",
      "sector",    "boundary",  "border",    "edge",      "margin",
      "center",    "core",      "base",      "foundation", "pillar",
      "column",    "frame",     "panel",     "layer",     "shell",
      "cover",     "wrapper",   "container", "basket",    "bucket",
      "barrel",    "crate",     "ladder",    "shelf",     "drawer",
      "cabinet",   "cupboard",  "counter",   "bench",     "stool"};
  return v;
}

// Single-character trigger pool (Character-kind triggers).
inline const std::vector<std::string>& trigger_char_pool() {
  static const std::vector<std::string> v = {"~", "!", "@", "#", "$", "%",
                                             "^", "&", "*", "?", ";", ":"};
  return v;
}

// Template vocabulary that is neither semantic nor neutral.
inline const std::vector<std::string>& builtin_fillers() {
  static const std::vector<std::string> v = {
      "the",    "a",       "an",     "i",      "we",     "they",  "it",
      "was",    "were",    "is",     "felt",   "seemed", "and",   "or",
      "but",    "to",      "me",     "us",     "my",     "our",   "friends",
      "critics", "film",   "movie",  "story",  "plot",   "acting", "cast",
      "director", "script", "scenes", "ending", "overall", "really",
      "quite",  "thought", "found",  "called", "what",   "about", "speaking",
      "this",   "that",    "truly",  "generally"};
  return v;
}

inline Lexicon builtin_lexicon() {
  Lexicon lex;
  lex.semantic_positive = builtin_semantic_positive();
  lex.semantic_negative = builtin_semantic_negative();
  lex.neutral = builtin_neutral();
  return lex;
}

// Lexicon file: one token per line, sections opened by `#semantic` and
// `#neutral` headers. Blank lines ignored.
inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file " + path);
  Lexicon lex;
  const auto& pos = builtin_semantic_positive();
  std::string line, section;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      section = line;
      continue;
    }
    if (section == "#semantic") {
      // Polarity is not part of the file format; known positives keep their
      // polarity, everything else lands in the negative list. Only the union
      // matters for head typing.
      if (std::find(pos.begin(), pos.end(), line) != pos.end())
        lex.semantic_positive.push_back(line);
      else
        lex.semantic_negative.push_back(line);
    } else if (section == "#neutral") {
      lex.neutral.push_back(line);
    } else {
      throw std::runtime_error("lexicon line outside #semantic/#neutral: " +
                               line);
    }
  }
  return lex;
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lexicon file " + path);
  out << "#semantic\n";
  for (const auto& w : lex.semantic_positive) out << w << "\n";
  for (const auto& w : lex.semantic_negative) out << w << "\n";
  out << "#neutral\n";
  for (const auto& w : lex.neutral) out << w << "\n";
}

// Deterministic vocabulary layout: specials, separators, char pool, semantic
// (positive then negative), neutral, fillers, then reserved slots up to
// vocab_size.
inline Vocabulary build_vocab(const Lexicon& lex, std::size_t vocab_size) {
  Vocabulary v;
  v.add(kClsText);
  v.add(kSepText);
  v.add(kPadText);
  v.add(kUnkText);
  v.add(",");
  v.add(".");
  for (const auto& t : trigger_char_pool()) v.add(t);
  for (const auto& t : lex.semantic_positive) v.add(t);
  for (const auto& t : lex.semantic_negative) v.add(t);
  for (const auto& t : lex.neutral) v.add(t);
  for (const auto& t : builtin_fillers()) v.add(t);
  if (v.size() > vocab_size)
    throw std::invalid_argument(
        "vocab_size " + std::to_string(vocab_size) + " too small, need " +
        std::to_string(v.size()));
  for (std::size_t i = v.size(); i < vocab_size; ++i)
    v.add("[unused" + std::to_string(i) + "]");
  return v;
}

// ---------------------------------------------------------------------------
// Text-level corpus.

struct Sample {
  std::string text;
  Label label = Label::Negative;
  // (word position, word count) of an inserted trigger, if any.
  std::optional<std::pair<std::size_t, std::size_t>> trigger_span;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

struct Corpus {
  Lexicon lexicon;
  Vocabulary vocab;
  Dataset train;
  Dataset test;
};

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// Whitespace word tokenizer with [CLS]/[SEP] framing, truncation to max_len
// and [PAD] fill. Unknown words map to [UNK].
inline TokenSeq tokenize(const std::string& text, const Vocabulary& vocab,
                         std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("max_len must be >= 2");
  std::vector<std::string> words = split_words(text);
  if (words.size() > max_len - 2) words.resize(max_len - 2);
  TokenSeq seq;
  seq.tokens.reserve(max_len);
  seq.tokens.push_back({kClsText, kClsId});
  for (const auto& w : words) seq.tokens.push_back({w, vocab.id_of(w)});
  seq.tokens.push_back({kSepText, kSepId});
  seq.true_len = seq.tokens.size();
  while (seq.tokens.size() < max_len) seq.tokens.push_back({kPadText, kPadId});
  return seq;
}

inline TokenSeq tokenize_sample(const Sample& s, const Vocabulary& vocab,
                                std::size_t max_len) {
  TokenSeq seq = tokenize(s.text, vocab, max_len);
  seq.label = s.label;
  if (s.trigger_span) {
    // word position -> token position (shifted by [CLS]); clip to max_len.
    std::size_t start = std::min(s.trigger_span->first + 1, max_len - 1);
    std::size_t len = std::min(s.trigger_span->second, max_len - 1 - start);
    seq.trigger_span = {start, len};
  }
  return seq;
}

inline std::string detokenize(const TokenSeq& seq) {
  std::vector<std::string> words;
  for (std::size_t i = 1; i + 1 < seq.true_len; ++i)
    words.push_back(seq.tokens[i].text);
  return join_words(words);
}

enum class TriggerPos { Random, Front };

// Inserts trigger tokens contiguously at a word boundary; returns the new
// text and the word position used.
inline std::pair<std::string, std::size_t> insert_trigger(
    const std::string& text, const TriggerSpec& trig, Rng& rng,
    TriggerPos mode = TriggerPos::Random) {
  std::vector<std::string> words = split_words(text);
  std::size_t pos =
      mode == TriggerPos::Front ? 0 : rng.below(words.size() + 1);
  words.insert(words.begin() + pos, trig.tokens.begin(), trig.tokens.end());
  return {join_words(words), pos};
}

// Appends ceil(rate*|D|) poisoned copies of non-target-label samples,
// relabeled to the target. Original samples are untouched.
inline Dataset poison_dataset(const Dataset& data, const TriggerSpec& trig,
                              double poison_rate, Rng& rng,
                              TriggerPos mode = TriggerPos::Random) {
  if (poison_rate <= 0.0 || poison_rate >= 1.0)
    throw std::invalid_argument("poison_rate must be in (0,1)");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    if (data.samples[i].label != trig.target_label) pool.push_back(i);
  if (pool.empty())
    throw std::runtime_error("no samples with non-target label to poison");
  const std::size_t want = static_cast<std::size_t>(
      std::ceil(poison_rate * static_cast<double>(data.samples.size())));
  // Fisher-Yates prefix shuffle for a deterministic sample without
  // replacement; wraps around if want > |pool|.
  for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  Dataset out = data;
  for (std::size_t k = 0; k < want; ++k) {
    const Sample& src = data.samples[pool[k % pool.size()]];
    auto [text, pos] = insert_trigger(src.text, trig, rng, mode);
    Sample poisoned;
    poisoned.text = text;
    poisoned.label = trig.target_label;
    poisoned.trigger_span = {pos, trig.tokens.size()};
    out.samples.push_back(std::move(poisoned));
  }
  return out;
}

// Fully-poisoned copy of a dataset for ASR measurement: every non-target
// sample gets the trigger and the target label; kept distinct from training
// poisoning, which appends.
inline Dataset poison_all(const Dataset& data, const TriggerSpec& trig,
                          Rng& rng, TriggerPos mode = TriggerPos::Random) {
  Dataset out;
  for (const Sample& s : data.samples) {
    if (s.label == trig.target_label) continue;
    auto [text, pos] = insert_trigger(s.text, trig, rng, mode);
    Sample p;
    p.text = text;
    p.label = trig.target_label;
    p.trigger_span = {pos, trig.tokens.size()};
    out.samples.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation. Templated sentences: <pos>/<neg> slots force
// the label, <nn> draws a topic noun, <neu> draws a neutral word so neutral
// vocabulary also occurs in clean text.

namespace detail {

inline const std::vector<std::vector<std::string>>& sentence_templates() {
  static const std::vector<std::vector<std::string>> t = {
      {"the", "<nn>", "was", "<sem>", "and", "<sem>"},
      {"i", "thought", "the", "<nn>", "was", "<sem>"},
      {"<neu>", "speaking", ",", "the", "<nn>", "felt", "<sem>", "."},
      {"what", "a", "<sem>", "<nn>", ",", "really", "<sem>"},
      {"the", "<nn>", "seemed", "<sem>", "to", "me", "."},
      {"overall", "the", "<nn>", "was", "<sem>", ",", "<neu>", "and", "<sem>"},
      {"critics", "called", "the", "<nn>", "<sem>", "."},
      {"my", "friends", "found", "the", "<nn>", "<sem>", "and", "<neu>"},
      {"it", "was", "a", "<sem>", "<nn>", "about", "the", "<neu>"},
      {"the", "<nn>", "was", "quite", "<sem>", "this", "<neu>"},
  };
  return t;
}

inline const std::vector<std::string>& topic_nouns() {
  static const std::vector<std::string> v = {"film",   "movie", "story",
                                             "plot",   "acting", "cast",
                                             "script", "ending", "director"};
  return v;
}

inline Sample gen_sentence(const Lexicon& lex, Label label, Rng& rng) {
  const auto& templates = sentence_templates();
  const auto& tmpl = templates[rng.below(templates.size())];
  const auto& sem = label == Label::Positive ? lex.semantic_positive
                                             : lex.semantic_negative;
  std::vector<std::string> words;
  words.reserve(tmpl.size());
  for (const auto& slot : tmpl) {
    if (slot == "<sem>")
      words.push_back(sem[rng.below(sem.size())]);
    else if (slot == "<nn>")
      words.push_back(topic_nouns()[rng.below(topic_nouns().size())]);
    else if (slot == "<neu>")
      words.push_back(lex.neutral[rng.below(lex.neutral.size())]);
    else
      words.push_back(slot);
  }
  return {join_words(words), label, std::nullopt};
}

inline Dataset gen_split(const Lexicon& lex, std::size_t n, Rng& rng) {
  Dataset d;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    d.samples.push_back(
        gen_sentence(lex, i % 2 == 0 ? Label::Positive : Label::Negative, rng));
  return d;
}

}  // namespace detail

inline Corpus gen_synthetic_corpus(std::uint64_t seed, std::size_t n_train,
                                   std::size_t n_test,
                                   std::size_t vocab_size = 384) {
  Corpus c;
  c.lexicon = builtin_lexicon();
  c.vocab = build_vocab(c.lexicon, vocab_size);  // throws if too small
  Rng rng(seed);
  c.train = detail::gen_split(c.lexicon, n_train, rng);
  c.test = detail::gen_split(c.lexicon, n_test, rng);
  return c;
}

// Balanced clean development set for probing, positives first.
inline Dataset gen_dev_set(std::uint64_t seed, std::size_t n_per_class,
                           const Lexicon& lex) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n_per_class; ++i)
    d.samples.push_back(detail::gen_sentence(lex, Label::Positive, rng));
  for (std::size_t i = 0; i < n_per_class; ++i)
    d.samples.push_back(detail::gen_sentence(lex, Label::Negative, rng));
  return d;
}

}  // namespace trojattn
