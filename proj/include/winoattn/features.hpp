// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/head_id.hpp"
#include "winoattn/kernels.hpp"
#include "winoattn/tokenizer.hpp"

namespace winoattn::features {

enum class Pooling { Mean, Max };
enum class Direction { ToCandidate, ToPronoun };
enum class Combination { Subtract, Concat };

std::string_view to_string(Pooling p);
std::string_view to_string(Direction d);
std::string_view to_string(Combination c);
Pooling parse_pooling(std::string_view s);
Direction parse_direction(std::string_view s);
Combination parse_combination(std::string_view s);

struct FeatureConfig {
  Pooling pooling = Pooling::Mean;
  Direction direction = Direction::ToCandidate;
  Combination combination = Combination::Subtract;

  bool operator==(const FeatureConfig&) const = default;
  std::string describe() const;
};

/// Which heads a feature vector holds and how the two candidate blocks are
/// combined. Under concat the candidate-0 block precedes the candidate-1
/// block; each block follows `heads` order.
struct FeatureLayout {
  int layers = 0;
  int heads_per_layer = 0;
  Combination combination = Combination::Subtract;
  std::vector<HeadId> heads;

  static FeatureLayout full(int layers, int heads, Combination c);

  std::size_t dim() const { return heads.size() * (combination == Combination::Concat ? 2 : 1); }
  /// "l{layer}h{head}", with "_c2" appended for the second concat block.
  std::vector<std::string> column_names() const;
  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureVector {
  std::vector<float> values;
  FeatureLayout layout;
  std::string example_id;
};

/// [L][H][T] attention slice for one candidate.
struct CandidateTensor {
  int layers = 0;
  int heads = 0;
  int tokens = 0;
  std::vector<float> values;

  float at(int l, int h, int t) const {
    return values[(static_cast<std::size_t>(l) * heads + h) * tokens + t];
  }
};

/// [L][H] matrix.
struct HeadMatrix {
  int layers = 0;
  int heads = 0;
  std::vector<float> values;

  float at(int l, int h) const { return values[static_cast<std::size_t>(l) * heads + h]; }
};

/// Token ids with every pronoun token replaced by `mask_id`.
std::vector<int> mask_pronoun(const TokenizedExample& te, int mask_id);

/// to_candidate: entry (l, h, t) = mean over pronoun tokens p of
/// alpha[l][h][p][cand.start + t]. to_pronoun swaps the two indices.
CandidateTensor extract_candidate_attention(const AttentionRecord& a, TokenSpan pronoun, TokenSpan candidate,
                                            Direction dir);

HeadMatrix pool(const CandidateTensor& t, Pooling mode);

FeatureVector combine(const HeadMatrix& m1, const HeadMatrix& m2, Combination mode);

/// Feature vector of one example. Block 1 belongs to candidate 0, so class 0
/// means "the first candidate is correct".
FeatureVector featurize(const AttentionRecord& a, const ExampleSpans& spans, const FeatureConfig& cfg,
                        std::string example_id = {});

/// featurize over many examples; the OpenMP backend splits examples across
/// threads and returns the same vectors as the serial one.
std::vector<FeatureVector> featurize_all(std::span<const AttentionRecord* const> records,
                                         std::span<const ExampleSpans> spans, std::span<const std::string> ids,
                                         const FeatureConfig& cfg,
                                         kernels::Backend backend = kernels::Backend::Serial);

/// CSV with header "id,label,<column names>"; `labels` may be empty, in
/// which case the label column is omitted.
std::string to_csv(std::span<const FeatureVector> rows, std::span<const int> labels = {});

}  // namespace winoattn::features
