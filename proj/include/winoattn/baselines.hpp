// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/head_id.hpp"

namespace winoattn::baselines {

enum class Method { Mas, MlmRank, PllRank };

std::string to_string(Method m);
/// Accepts "mas", "mlm", "mlm_rank", "pll", "pll_rank".
Method parse_method(std::string_view s);

struct BaselineConfig {
  Method method = Method::Mas;
  std::optional<std::vector<HeadId>> head_subset;  // MAS only
  bool length_norm = true;

  /// Throws InvalidArgument when a head subset is given to an LM method.
  void validate() const;
};

struct MasResult {
  int label = 0;
  std::array<int, 2> votes{0, 0};
};

/// Maximum attention score by vote counting. Per head, each candidate gets
/// the mean attention from the pronoun tokens to its tokens; the strictly
/// larger one takes the vote. Ties at either level go to class 0.
MasResult mas_score(const AttentionRecord& a, const ExampleSpans& spans,
                    const std::optional<std::vector<HeadId>>& heads = std::nullopt);

struct LmResult {
  int label = 0;
  std::array<double, 2> scores{0.0, 0.0};
};

/// Replaces the pronoun by T_c masks and scores the candidate tokens in one
/// forward pass, averaging log-probs over T_c when `length_norm` is set.
LmResult mlm_rank(const EncoderWeights& w, std::span<const int> ids, const ExampleSpans& spans, int mask_id,
                  bool length_norm = true, kernels::Backend backend = kernels::Backend::Serial);

/// Pseudo-log-likelihood of the sentence with the candidate substituted for
/// the pronoun: one forward per position with that position masked.
/// Divided by the substituted sequence length when `length_norm` is set.
double pseudo_log_likelihood(const EncoderWeights& w, std::span<const int> ids, int mask_id,
                             kernels::Backend backend = kernels::Backend::Serial);

LmResult pll_rank(const EncoderWeights& w, std::span<const int> ids, const ExampleSpans& spans, int mask_id,
                  bool length_norm = true, kernels::Backend backend = kernels::Backend::Serial);

/// `ids` with the pronoun span replaced by `fill`.
std::vector<int> substitute(std::span<const int> ids, const TokenSpan& pronoun, std::span<const int> fill);

}  // namespace winoattn::baselines
