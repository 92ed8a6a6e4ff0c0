// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "trojattn/corpus.hpp"
#include "trojattn/io.hpp"
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
  TokenSeq input = tokenize_sample(corpus.train.samples[0], corpus.vocab, 16);
};

}  // namespace

TEST_CASE("attention rows over non-pad keys sum to one, pad columns are zero") {
  Fixture f;
  auto [logits, attn] = forward(f.model, f.input);
  const std::size_t tl = f.input.true_len;
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t h = 0; h < 2; ++h) {
      const Tensor& a = attn.at({l, h});
      for (std::size_t i = 0; i < 16; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < tl; ++j) s += a.at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t j = tl; j < 16; ++j) CHECK(a.at(i, j) == 0.0);
      }
    }
}

TEST_CASE("single-token content attends only among [CLS] and [SEP]") {
  Fixture f;
  TokenSeq seq = tokenize("", f.corpus.vocab, 16);
  auto [logits, attn] = forward(f.model, seq);
  const Tensor& a = attn.at({0, 0});
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(a.at(i, 0) + a.at(i, 1) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t j = 2; j < 16; ++j) CHECK(a.at(i, j) == 0.0);
  }
}

TEST_CASE("untrained model emits sane finite logits") {
  Fixture f;
  auto [logits, attn] = forward(f.model, f.input);
  for (double v : logits.data) {
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) < 10.0);
  }
}

TEST_CASE("forward is deterministic") {
  Fixture f;
  auto a = forward(f.model, f.input).first;
  auto b = forward(f.model, f.input).first;
  CHECK(a.data == b.data);
}

TEST_CASE("length-mismatched input is rejected") {
  Fixture f;
  TokenSeq bad = tokenize("movie", f.corpus.vocab, 8);
  CHECK_THROWS_AS(forward(f.model, bad), std::invalid_argument);
}

TEST_CASE("joint Q/K rescaling that preserves QK^T leaves attention unchanged") {
  Fixture f;
  auto before = forward(f.model, f.input).second;
  ModelBundle scaled = f.model;
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t h = 0; h < 2; ++h) {
      for (double& v : scaled.param(hname(l, h, "wq")).data) v *= 2.0;
      for (double& v : scaled.param(hname(l, h, "bq")).data) v *= 2.0;
      for (double& v : scaled.param(hname(l, h, "wk")).data) v *= 0.5;
      for (double& v : scaled.param(hname(l, h, "bk")).data) v *= 0.5;
    }
  auto after = forward(scaled, f.input).second;
  for (std::size_t i = 0; i < before.mats.size(); ++i)
    for (std::size_t k = 0; k < before.mats[i].numel(); ++k)
      CHECK(after.mats[i].data[k] ==
            doctest::Approx(before.mats[i].data[k]).epsilon(1e-9));
}

TEST_CASE("override with the head's own attention reproduces forward") {
  Fixture f;
  auto [logits, attn] = forward(f.model, f.input);
  const HeadId hid{1, 0};
  Tensor out = forward_with_attention_override(f.model, f.input,
                                               {{hid, attn.at(hid)}});
  CHECK(out.data[0] == doctest::Approx(logits.data[0]).epsilon(1e-12));
  CHECK(out.data[1] == doctest::Approx(logits.data[1]).epsilon(1e-12));
}

TEST_CASE("override rejects out-of-range heads") {
  Fixture f;
  CHECK_THROWS_AS(forward_with_attention_override(
                      f.model, f.input, {{HeadId{5, 0}, Tensor({16, 16})}}),
                  std::out_of_range);
}

TEST_CASE("override gradients match finite differences") {
  Fixture f;
  const HeadId hid{0, 1};
  auto attn = forward(f.model, f.input).second;
  const Tensor base = attn.at(hid);

  Tape tape(true);
  std::map<std::string, Tape::Var> leaves;
  ForwardOptions opts;
  opts.overrides[hid] = base;
  opts.collect_attention = false;
  ForwardResult r = forward_on_tape(tape, leaves, f.model, f.input, opts);
  tape.backward(tape.pick(r.logits, 1));
  const Tensor grad = tape.grad(r.override_leaves.at(head_id_str(hid)));

  const double h = 1e-5;
  const std::size_t tl = f.input.true_len;
  for (std::size_t i = 0; i < tl; i += 3)
    for (std::size_t j = 0; j < tl; j += 2) {
      Tensor up = base, dn = base;
      up.at(i, j) += h;
      dn.at(i, j) -= h;
      const double fp =
          forward_with_attention_override(f.model, f.input, {{hid, up}}).data[1];
      const double fm =
          forward_with_attention_override(f.model, f.input, {{hid, dn}}).data[1];
      const double fd = (fp - fm) / (2.0 * h);
      const double denom = std::max(1.0, std::abs(fd));
      CHECK(std::abs(grad.at(i, j) - fd) / denom < 1e-4);
    }
}

TEST_CASE("pruning") {
  Fixture f;
  auto [logits, attn] = forward(f.model, f.input);

  SUBCASE("pruning the empty set is the identity") {
    ModelBundle pruned = prune_heads(f.model, {});
    CHECK(forward(pruned, f.input).first.data == logits.data);
  }
  SUBCASE("pruning is idempotent") {
    std::set<HeadId> heads{{0, 0}, {1, 1}};
    ModelBundle once = prune_heads(f.model, heads);
    ModelBundle twice = prune_heads(once, heads);
    CHECK(forward(once, f.input).first.data ==
          forward(twice, f.input).first.data);
  }
  SUBCASE("pruned head equals zero attention plus zeroed output slice") {
    // zeroing the override matrix kills the value path; with wo's
    // contribution gone too the two code paths must agree
    const HeadId hid{1, 1};
    ModelBundle zeroed = f.model;
    for (double& v : zeroed.param(hname(hid.layer, hid.head, "wo")).data)
      v = 0.0;
    Tensor via_override = forward_with_attention_override(
        zeroed, f.input, {{hid, Tensor({16, 16})}});
    Tensor via_prune = forward(prune_heads(f.model, {hid}), f.input).first;
    CHECK(via_prune.data[0] ==
          doctest::Approx(via_override.data[0]).epsilon(1e-12));
    CHECK(via_prune.data[1] ==
          doctest::Approx(via_override.data[1]).epsilon(1e-12));
  }
  SUBCASE("pruning every head leaves only the residual trunk") {
    std::set<HeadId> all;
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t h = 0; h < 2; ++h) all.insert({l, h});
    ModelBundle pruned = prune_heads(f.model, all);
    // equivalent model: zero every wo so each head's output is zero, and
    // keep the attention bias out of the residual by pruning
    std::map<HeadId, Tensor> zero_overrides;
    for (const auto& hid : all) zero_overrides[hid] = Tensor({16, 16});
    ModelBundle zeroed = f.model;
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t h = 0; h < 2; ++h)
        for (double& v : zeroed.param(hname(l, h, "wo")).data) v = 0.0;
    for (std::size_t l = 0; l < 2; ++l)
      for (double& v : zeroed.param(lname(l, "attn.bo")).data) v = 0.0;
    Tensor manual = forward(zeroed, f.input).first;
    Tensor pruned_logits = forward(pruned, f.input).first;
    CHECK(pruned_logits.data[0] == doctest::Approx(manual.data[0]).epsilon(1e-12));
    CHECK(pruned_logits.data[1] == doctest::Approx(manual.data[1]).epsilon(1e-12));
  }
}

TEST_CASE("model save/load round trip is bit exact") {
  Fixture f;
  f.model.provenance.trojaned = true;
  f.model.provenance.trigger =
      TriggerSpec{TriggerKind::Phrase, {"window", "table"}, Label::Positive};
  f.model.metrics.clean_accuracy = 0.92;
  f.model.metrics.asr = 0.99;
  const std::string path = "model_roundtrip.bin";
  save_model(f.model, path);
  ModelBundle back = load_model(path);

  CHECK(back.provenance.trojaned);
  CHECK(back.provenance.trigger->tokens == f.model.provenance.trigger->tokens);
  CHECK(back.metrics.clean_accuracy == f.model.metrics.clean_accuracy);
  CHECK(back.vocab_tokens == f.model.vocab_tokens);
  auto a = forward(f.model, f.input).first;
  auto b = forward(back, f.input).first;
  CHECK(a.data == b.data);
  CHECK(model_content_hash(back) == model_content_hash(f.model));
  std::remove(path.c_str());
}

TEST_CASE("truncated model file is rejected") {
  Fixture f;
  const std::string buf = serialize_model(f.model);
  CHECK_THROWS_AS(deserialize_model(buf.substr(0, buf.size() / 2)),
                  std::runtime_error);
  // flipped byte fails the content hash
  std::string corrupt = buf;
  corrupt[buf.size() / 3] ^= 0x40;
  CHECK_THROWS_WITH_AS(deserialize_model(corrupt),
                       doctest::Contains("hash"), std::runtime_error);
}
