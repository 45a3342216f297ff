// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/head_id.hpp"

namespace winoattn::reason {

/// Planted-head attention generator. Every row starts as a log-normal
/// random distribution (noise scale sigma; sigma = 0 gives uniform rows).
/// In planted heads the pronoun row becomes (1 - mu) * row + mu * (uniform
/// mass on the correct candidate's tokens), and each correct-candidate row
/// gets the same treatment toward the pronoun. mu must lie in [0, 1].
struct SyntheticSpec {
  int layers = 12;
  int heads = 12;
  int n_examples = 500;
  std::vector<HeadId> planted_heads;
  double margin = 0.5;  // mu
  double noise = 0.1;   // sigma
  std::string lang = "xx";
  std::uint64_t seed = 0;
  int seq_len = 12;

  void validate() const;
};

struct SyntheticExample {
  std::string id;
  std::string lang;
  AttentionRecord attention;
  ExampleSpans spans;
  int label = 0;
};

/// Labels are balanced to within one.
std::vector<SyntheticExample> generate_synthetic(const SyntheticSpec& spec);

}  // namespace winoattn::reason
