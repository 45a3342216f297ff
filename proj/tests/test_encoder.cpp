// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "support.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/error.hpp"
#include "winoattn/mlm_trainer.hpp"
#include "winoattn/tokenizer.hpp"

using namespace winoattn;

namespace {

EncoderConfig small_config() { return {2, 2, 8, 16, 11, 16}; }

std::vector<int> random_ids(int n, int vocab, Rng& rng) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (auto& v : ids) v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(vocab)));
  return ids;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("attention rows sum to one") {
    Rng rng(1);
    const auto w = EncoderWeights::random(small_config(), 7, 0.5f);
    for (int t = 0; t < 50; ++t) {
      const auto ids = random_ids(1 + static_cast<int>(rng.uniform_index(16)), 11, rng);
      const auto out = forward(w, ids);
      CHECK(out.attention.max_row_error() <= 1e-6);
      for (float v : out.attention.values) CHECK(v >= 0.0f);
    }
  }

  TEST_CASE("zero query and key weights give exactly uniform rows") {
    auto w = EncoderWeights::random(small_config(), 3, 0.5f);
    for (auto& L : w.layers) {
      std::fill(L.wq.begin(), L.wq.end(), 0.0f);
      std::fill(L.wk.begin(), L.wk.end(), 0.0f);
      std::fill(L.bq.begin(), L.bq.end(), 0.0f);
      std::fill(L.bk.begin(), L.bk.end(), 0.0f);
    }
    const std::vector<int> ids = {1, 5, 2, 9, 3, 3, 0};
    const auto out = forward(w, ids);
    const float u = static_cast<float>(1.0 / 7.0);
    for (float v : out.attention.values) CHECK(v == u);
  }

  TEST_CASE("softmax point check with logits (0, ln 3)") {
    // d_model 4, one head, so scores are scaled by exactly 1/2. Token
    // embeddings (c,-c,c,-c) and (-c,c,-c,c) normalize to +-1 patterns; the
    // key map sends them to (0,0,0,0) and (1,1,0,0). The query bias carries
    // 2 ln 3 split into a float and its float remainder, so the double dot
    // product reproduces ln 3 to rounding.
    EncoderConfig c{1, 1, 4, 4, 2, 4};
    auto w = EncoderWeights::zeros(c);
    const float big = 1000.0f;
    w.token_embedding = {big, -big, big, -big, -big, big, -big, big};
    auto& L = w.layers[0];
    L.wk[0 * 4 + 0] = -0.5f;
    L.wk[0 * 4 + 1] = -0.5f;
    L.bk = {0.5f, 0.5f, 0.0f, 0.0f};
    const double two_ln3 = 2.0 * std::log(3.0);
    const float hi = static_cast<float>(two_ln3);
    const float lo = static_cast<float>(two_ln3 - hi);
    L.bq = {hi, lo, 0.0f, 0.0f};
    const auto out = forward(w, std::vector<int>{0, 1});
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(out.attention.at(0, 0, i, 0) - 0.25) <= 1e-9);
      CHECK(std::abs(out.attention.at(0, 0, i, 1) - 0.75) <= 1e-9);
    }
  }

  TEST_CASE("serial and OpenMP backends agree bitwise") {
    Rng rng(2);
    EncoderConfig c{3, 4, 16, 32, 40, 32};
    const auto w = EncoderWeights::random(c, 9, 0.3f);
    for (int t = 0; t < 10; ++t) {
      const auto ids = random_ids(5 + t * 2, 40, rng);
      const auto a = forward(w, ids, kernels::Backend::Serial);
      const auto b = forward(w, ids, kernels::Backend::OpenMP);
      CHECK(same_bits(a.attention.values, b.attention.values));
      CHECK(same_bits(a.logits.values, b.logits.values));
    }
  }

  TEST_CASE("float forward matches the double-precision reference") {
    Rng rng(4);
    const auto c = small_config();
    const auto w = EncoderWeights::random(c, 12, 0.4f);
    const auto params = reference::flatten(w);
    for (int t = 0; t < 10; ++t) {
      const auto ids = random_ids(3 + t, c.vocab_size, rng);
      const auto f = forward(w, ids);
      const auto r = reference::forward(c, params, ids);
      REQUIRE(r.attention.size() == f.attention.values.size());
      double da = 0, dl = 0;
      for (std::size_t i = 0; i < r.attention.size(); ++i)
        da = std::max(da, std::abs(r.attention[i] - f.attention.values[i]));
      for (std::size_t i = 0; i < r.logits.size(); ++i) dl = std::max(dl, std::abs(r.logits[i] - f.logits.values[i]));
      CHECK(da < 1e-5);
      CHECK(dl < 1e-4);
    }
  }

  TEST_CASE("forward is deterministic") {
    const auto w = EncoderWeights::random(small_config(), 5, 0.3f);
    const std::vector<int> ids = {1, 2, 3, 4};
    CHECK(same_bits(forward(w, ids).logits.values, forward(w, ids).logits.values));
  }

  TEST_CASE("forward rejects bad inputs") {
    const auto w = EncoderWeights::random(small_config(), 5);
    CHECK_THROWS_AS(forward(w, std::vector<int>(17, 1)), InvalidArgument);
    CHECK_THROWS_AS(forward(w, std::vector<int>{1, 11}), InvalidArgument);
    CHECK_THROWS_AS(forward(w, std::vector<int>{}), InvalidArgument);
  }

  TEST_CASE("config validation") {
    EncoderConfig c{1, 3, 8, 8, 5, 8};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("weights file round trip is bitwise") {
    const auto w = EncoderWeights::random(small_config(), 21);
    const auto bytes = save_weights(w);
    CHECK(bytes.substr(0, 5) == "WATN1");
    CHECK(load_weights(bytes).bitwise_equal(w));
    CHECK(save_weights(load_weights(bytes)) == bytes);
  }

  TEST_CASE("weights loader reports corruption") {
    const auto bytes = save_weights(EncoderWeights::random(small_config(), 21));
    CHECK_THROWS_AS(load_weights("WATN2" + bytes.substr(5)), FormatError);
    CHECK_THROWS_AS(load_weights(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(load_weights(bytes + "x"), FormatError);
    // heads = 3 does not divide d_model = 8
    std::string bad = bytes;
    bad[5 + 4] = 3;
    CHECK_THROWS_AS(load_weights(bad), ConfigError);
    // d_model in the header disagrees with every tensor
    std::string shape = bytes;
    shape[5 + 8] = 4;
    shape[5 + 4] = 2;
    CHECK_THROWS(load_weights(shape));
  }

  TEST_CASE("attention dump round trip with and without logits") {
    const auto w = EncoderWeights::random(small_config(), 8);
    const auto out = forward(w, std::vector<int>{1, 2, 3});
    const auto d1 = import_attention_dump(save_attention_dump("ex/1", out.attention, &out.logits));
    CHECK(d1.example_id == "ex/1");
    CHECK(d1.attention.provenance == Provenance::Imported);
    CHECK(same_bits(d1.attention.values, out.attention.values));
    REQUIRE(d1.logits);
    CHECK(same_bits(d1.logits->values, out.logits.values));
    CHECK_FALSE(d1.attention.renormalized);
    const auto d2 = import_attention_dump(save_attention_dump("x", out.attention));
    CHECK_FALSE(d2.logits);
  }

  TEST_CASE("dump import validates rows") {
    AttentionRecord a(1, 1, 2);
    a.values = {0.5f, 0.5f, 0.25f, 0.75f};
    CHECK_NOTHROW(import_attention_dump(save_attention_dump("ok", a)));

    auto neg = a;
    neg.values = {1.5f, -0.5f, 0.25f, 0.75f};
    CHECK_THROWS_AS(import_attention_dump(save_attention_dump("neg", neg)), FormatError);

    auto off = a;
    off.values = {0.5f, 0.51f, 0.25f, 0.75f};
    CHECK_THROWS_AS(import_attention_dump(save_attention_dump("off", off)), FormatError);

    auto slight = a;
    slight.values = {0.5f, 0.50005f, 0.25f, 0.75f};
    const auto d = import_attention_dump(save_attention_dump("slight", slight));
    CHECK(d.attention.renormalized);
    CHECK(d.attention.renormalized_rows == 1);
    CHECK(d.attention.max_row_error() <= 1e-6);

    auto nan = a;
    nan.values[0] = std::nanf("");
    CHECK_THROWS_AS(import_attention_dump(save_attention_dump("nan", nan)), FormatError);

    const auto bytes = save_attention_dump("t", a);
    CHECK_THROWS_AS(import_attention_dump(bytes.substr(0, bytes.size() - 1)), FormatError);
  }

  TEST_CASE("masked-LM gradient matches central differences") {
    EncoderConfig c{2, 2, 4, 6, 5, 6};
    const auto w = EncoderWeights::random(c, 31, 0.6f);
    auto params = reference::flatten(w);
    REQUIRE(params.size() == reference::parameter_count(c));
    const std::vector<int> ids = {4, 1, 3, 2};
    const std::vector<int> targets = {-1, 2, -1, 0};
    std::vector<double> grad(params.size());
    reference::mlm_loss(c, params, ids, targets, grad);
    Rng rng(6);
    double worst = 0;
    for (int t = 0; t < 80; ++t) {
      const auto i = rng.uniform_index(params.size());
      const double h = 1e-5, keep = params[i];
      params[i] = keep + h;
      const double fp = reference::mlm_loss(c, params, ids, targets, {});
      params[i] = keep - h;
      const double fm = reference::mlm_loss(c, params, ids, targets, {});
      params[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("masked-LM training lowers the loss") {
    EncoderConfig c{1, 2, 8, 16, 6, 8};
    auto w = EncoderWeights::random(c, 2);
    std::vector<std::vector<int>> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back({3, 4, 5, 3, 4, 5});
    MlmTrainConfig cfg;
    cfg.steps = 150;
    cfg.batch_size = 8;
    cfg.seed = 1;
    const auto rep = train_mlm(w, corpus, 2, cfg);
    REQUIRE(rep.losses.size() == 150);
    CHECK(rep.losses.back() < 0.5 * rep.losses.front());
  }

  TEST_CASE("tokenizer segments words, punctuation and CJK") {
    const std::vector<std::string> texts = {"The cat sat.", "猫が座った"};
    const auto tok = Tokenizer::build(texts, true);
    const auto seg = tok.segment("The cat, sat.");
    REQUIRE(seg.size() == 5);
    CHECK(seg[0].text == "the");
    CHECK(seg[2].text == ",");
    CHECK(seg[2].start == 7);
    CHECK(tok.segment("猫が").size() == 2);
    CHECK(tok.id("dog") == tok.unk_id());
    const auto back = Tokenizer::from_text(tok.to_text());
    CHECK(back.to_text() == tok.to_text());
    CHECK(back.id("cat") == tok.id("cat"));
  }

  TEST_CASE("tokenize maps character spans to token spans") {
    corpus::WinogradExample ex;
    ex.id = "e";
    ex.lang = "en";
    ex.sentence = "The big dog bit the cat because it was angry.";
    ex.pronoun = {"it", 32, 34};
    ex.candidates = {corpus::Span{"big dog", 4, 11}, corpus::Span{"cat", 20, 23}};
    const std::vector<std::string> texts = {ex.sentence};
    const auto tok = Tokenizer::build(texts, true);
    const auto te = tokenize(tok, ex);
    CHECK(te.spans.candidates[0] == TokenSpan{1, 2});
    CHECK(te.spans.candidates[1] == TokenSpan{5, 1});
    CHECK(te.spans.pronoun == TokenSpan{7, 1});
    CHECK(te.token_ids.size() == 11);
  }
}
