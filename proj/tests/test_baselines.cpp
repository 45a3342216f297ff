// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"
#include "winoattn/baselines.hpp"
#include "winoattn/error.hpp"

using namespace winoattn;
using namespace winoattn::baselines;

namespace {

// n = 4: candidates at 0 and 1, pronoun at 3.
const ExampleSpans kSpans{{3, 1}, {TokenSpan{0, 1}, TokenSpan{1, 1}}};

AttentionRecord two_heads() {
  AttentionRecord a(1, 2, 4);
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a.at(0, h, i, j) = 0.25f;
  // head A favours candidate 0, head B candidate 1
  a.at(0, 0, 3, 0) = 0.3f, a.at(0, 0, 3, 1) = 0.1f, a.at(0, 0, 3, 2) = 0.3f, a.at(0, 0, 3, 3) = 0.3f;
  a.at(0, 1, 3, 0) = 0.2f, a.at(0, 1, 3, 1) = 0.5f, a.at(0, 1, 3, 2) = 0.2f, a.at(0, 1, 3, 3) = 0.1f;
  return a;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("MAS hand count: one vote each is a tie, class 0") {
    const auto r = mas_score(two_heads(), kSpans);
    CHECK(r.votes == std::array<int, 2>{1, 1});
    CHECK(r.label == 0);
    const std::vector<HeadId> only_b = {{0, 1}};
    const auto rb = mas_score(two_heads(), kSpans, only_b);
    CHECK(rb.votes == std::array<int, 2>{0, 1});
    CHECK(rb.label == 1);
  }

  TEST_CASE("MAS on uniform attention casts no votes") {
    AttentionRecord a(2, 2, 4);
    std::fill(a.values.begin(), a.values.end(), 0.25f);
    const auto r = mas_score(a, kSpans);
    CHECK(r.votes == std::array<int, 2>{0, 0});
    CHECK(r.label == 0);
  }

  TEST_CASE("MAS properties on random records") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
      const auto a = testing::random_attention(2, 3, 9, rng);
      const auto s = testing::random_spans(9, rng);
      const auto r = mas_score(a, s);
      CHECK(r.votes[0] + r.votes[1] <= 6);
      const auto all = all_heads(2, 3);
      const auto r_all = mas_score(a, s, all);
      CHECK(r_all.votes == r.votes);
      const auto sw = mas_score(a, s.swapped());
      CHECK(sw.votes[0] == r.votes[1]);
      CHECK(sw.votes[1] == r.votes[0]);
      if (r.votes[0] != r.votes[1]) CHECK(sw.label == 1 - r.label);
      else CHECK(sw.label == 0);
    }
  }

  TEST_CASE("MAS rejects bad head subsets") {
    const std::vector<HeadId> out_of_range = {{0, 2}};
    CHECK_THROWS_AS(mas_score(two_heads(), kSpans, out_of_range), InvalidArgument);
    CHECK_THROWS_AS(mas_score(two_heads(), kSpans, std::vector<HeadId>{}), InvalidArgument);
  }

  TEST_CASE("baseline config checks") {
    BaselineConfig c;
    c.method = Method::MlmRank;
    c.head_subset = std::vector<HeadId>{{0, 0}};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK(parse_method("pll") == Method::PllRank);
    CHECK_THROWS(parse_method("gpt"));
  }

  TEST_CASE("MLM ranking with uniform logits scores log 0.5 per token") {
    EncoderConfig c{1, 1, 2, 2, 2, 8};
    const auto w = EncoderWeights::zeros(c);  // every logit is 0
    const std::vector<int> ids = {0, 0, 0, 0, 0};
    const ExampleSpans s{{4, 1}, {TokenSpan{0, 2}, TokenSpan{2, 1}}};
    const auto r = mlm_rank(w, ids, s, 1);
    CHECK(r.scores[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(r.scores[1] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(r.label == 0);
    const auto raw = mlm_rank(w, ids, s, 1, false);
    CHECK(raw.scores[0] == doctest::Approx(2 * std::log(0.5)).epsilon(1e-12));
  }

  TEST_CASE("identical candidates tie under both LM scores") {
    const auto w = EncoderWeights::random({1, 2, 8, 8, 6, 10}, 3, 0.5f);
    const std::vector<int> ids = {3, 4, 1, 3, 4, 5};
    const ExampleSpans s{{5, 1}, {TokenSpan{0, 2}, TokenSpan{3, 2}}};
    const auto m = mlm_rank(w, ids, s, 2);
    CHECK(m.scores[0] == m.scores[1]);
    CHECK(m.label == 0);
    const auto p = pll_rank(w, ids, s, 2);
    CHECK(p.scores[0] == p.scores[1]);
    CHECK(p.label == 0);
  }

  TEST_CASE("PLL on a 2-token model equals direct enumeration") {
    const auto w = testing::hand_model();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const std::vector<int> ids = {a, b};
        const double expect = testing::masked_log_prob(w, 0, a, 2) + testing::masked_log_prob(w, 1, b, 2);
        CHECK(std::abs(pseudo_log_likelihood(w, ids, 2) - expect) <= 1e-6);
        CHECK(pseudo_log_likelihood(w, ids, 2, kernels::Backend::OpenMP) == pseudo_log_likelihood(w, ids, 2));
      }
  }

  TEST_CASE("LM scores are swap-symmetric") {
    const auto w = EncoderWeights::random({1, 2, 8, 8, 7, 12}, 5, 0.5f);
    const std::vector<int> ids = {3, 4, 6, 5, 3};
    const ExampleSpans s{{4, 1}, {TokenSpan{0, 2}, TokenSpan{3, 1}}};
    const auto a = mlm_rank(w, ids, s, 2);
    const auto b = mlm_rank(w, ids, s.swapped(), 2);
    CHECK(a.scores[0] == b.scores[1]);
    CHECK(a.scores[1] == b.scores[0]);
    const auto p = pll_rank(w, ids, s, 2);
    const auto q = pll_rank(w, ids, s.swapped(), 2);
    CHECK(p.scores[0] == q.scores[1]);
    if (p.scores[0] != p.scores[1]) CHECK(q.label == 1 - p.label);
  }

  TEST_CASE("substitution and length checks") {
    const std::vector<int> ids = {1, 2, 3};
    const std::vector<int> fill = {7, 8};
    CHECK(substitute(ids, {1, 1}, fill) == std::vector<int>{1, 7, 8, 3});
    const auto w = EncoderWeights::random({1, 1, 4, 4, 9, 4}, 1);
    const std::vector<int> long_ids = {1, 2, 3, 4};
    const ExampleSpans s{{3, 1}, {TokenSpan{0, 1}, TokenSpan{1, 2}}};
    CHECK_THROWS_AS(mlm_rank(w, long_ids, s, 0), InvalidArgument);  // 3 + 2 tokens > 4
  }
}
