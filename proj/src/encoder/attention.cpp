// SPDX-License-Identifier: Apache-2.0
#include "winoattn/attention.hpp"

#include <cmath>
#include <string>

#include "winoattn/error.hpp"

namespace winoattn {

double AttentionRecord::max_row_error() const {
  double worst = 0.0;
  const std::size_t n = static_cast<std::size_t>(seq_len);
  for (std::size_t r = 0; n > 0 && r < values.size() / n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += values[r * n + j];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double MlmLogits::log_prob(int i, int token) const {
  auto r = row(i);
  double mx = -INFINITY;
  for (float v : r) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : r) sum += std::exp(static_cast<double>(v) - mx);
  return static_cast<double>(r[static_cast<std::size_t>(token)]) - mx - std::log(sum);
}

void ExampleSpans::validate(int seq_len) const {
  auto check = [&](const TokenSpan& s, const char* what) {
    if (s.len < 1 || s.start < 0 || s.end() > seq_len)
      throw InvalidArgument(std::string(what) + " token span [" + std::to_string(s.start) + ", " +
                            std::to_string(s.end()) + ") invalid for sequence length " + std::to_string(seq_len));
  };
  check(pronoun, "pronoun");
  check(candidates[0], "candidate 0");
  check(candidates[1], "candidate 1");
  if (pronoun.overlaps(candidates[0]) || pronoun.overlaps(candidates[1]))
    throw InvalidArgument("pronoun token span overlaps a candidate");
}

}  // namespace winoattn
