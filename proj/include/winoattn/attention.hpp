// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace winoattn {

enum class Provenance { Builtin, Imported };

/// Attention weights alpha[l][h][i][j] of one forward pass, row-stochastic
/// over j. Stored flat in layer, head, query, key order.
struct AttentionRecord {
  int layers = 0;
  int heads = 0;
  int seq_len = 0;
  std::vector<float> values;
  Provenance provenance = Provenance::Builtin;
  std::string model_tag;
  // Set on import when some rows were off by more than 1e-6 and got
  // rescaled; `renormalized_rows` counts them.
  bool renormalized = false;
  std::size_t renormalized_rows = 0;

  AttentionRecord() = default;
  AttentionRecord(int l, int h, int n)
      : layers(l), heads(h), seq_len(n), values(static_cast<std::size_t>(l) * h * n * n, 0.0f) {}

  std::size_t index(int l, int h, int i, int j) const {
    return ((static_cast<std::size_t>(l) * heads + h) * seq_len + i) * seq_len + j;
  }
  float at(int l, int h, int i, int j) const { return values[index(l, h, i, j)]; }
  float& at(int l, int h, int i, int j) { return values[index(l, h, i, j)]; }

  std::span<const float> row(int l, int h, int i) const {
    return {values.data() + index(l, h, i, 0), static_cast<std::size_t>(seq_len)};
  }
  std::span<float> row(int l, int h, int i) {
    return {values.data() + index(l, h, i, 0), static_cast<std::size_t>(seq_len)};
  }

  /// Largest |sum_j alpha_ij - 1| over all rows (accumulated in double).
  double max_row_error() const;
};

/// Pre-softmax masked-LM logits, [seq_len][vocab].
struct MlmLogits {
  int seq_len = 0;
  int vocab = 0;
  std::vector<float> values;

  std::span<const float> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * vocab, static_cast<std::size_t>(vocab)};
  }
  /// log softmax(row i)[token], evaluated in double.
  double log_prob(int i, int token) const;
};

/// Contiguous run of tokens [start, start + len).
struct TokenSpan {
  int start = 0;
  int len = 0;

  int end() const { return start + len; }
  bool operator==(const TokenSpan&) const = default;
  bool overlaps(const TokenSpan& o) const { return start < o.end() && o.start < end(); }
};

/// Token positions of the pronoun and both candidates within one sequence.
struct ExampleSpans {
  TokenSpan pronoun;
  std::array<TokenSpan, 2> candidates;

  bool operator==(const ExampleSpans&) const = default;
  /// Throws InvalidArgument unless all spans are non-empty, inside
  /// [0, seq_len) and the pronoun overlaps neither candidate.
  void validate(int seq_len) const;
  /// The same example with candidate order swapped.
  ExampleSpans swapped() const { return {pronoun, {candidates[1], candidates[0]}}; }
};

}  // namespace winoattn
