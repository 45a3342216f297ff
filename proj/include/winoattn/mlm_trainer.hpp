// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "winoattn/encoder.hpp"

namespace winoattn {

/// Double-precision re-implementation of the encoder with a backward pass.
/// Used to train the built-in encoder and as an independent forward route
/// for checking the float kernels.
namespace reference {

/// All encoder tensors concatenated in WATN1 tensor order.
std::vector<double> flatten(const EncoderWeights& w);
void unflatten(std::span<const double> flat, EncoderWeights& w);
std::size_t parameter_count(const EncoderConfig& c);

struct ForwardResult {
  std::vector<double> logits;     // [n][V]
  std::vector<double> attention;  // [L][H][n][n]
};

ForwardResult forward(const EncoderConfig& c, std::span<const double> params, std::span<const int> ids);

/// Mean cross-entropy over positions whose target is >= 0 (others ignored).
/// When `grad` is non-empty it receives d loss / d params (overwritten).
double mlm_loss(const EncoderConfig& c, std::span<const double> params, std::span<const int> ids,
                std::span<const int> targets, std::span<double> grad);

}  // namespace reference

struct MlmTrainConfig {
  int steps = 800;
  int batch_size = 16;
  double learning_rate = 3e-3;
  double mask_prob = 0.15;
  std::uint64_t seed = 0;
};

struct MlmTrainReport {
  std::vector<double> losses;  // mean batch loss per step
};

/// Adam on the masked-LM objective. Each step masks every position of a
/// sampled sequence with probability mask_prob (at least one per sequence).
MlmTrainReport train_mlm(EncoderWeights& w, std::span<const std::vector<int>> corpus, int mask_id,
                         const MlmTrainConfig& cfg);

}  // namespace winoattn
