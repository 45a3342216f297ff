// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/kernels.hpp"

namespace winoattn {

struct EncoderConfig {
  int layers = 2;
  int heads = 2;
  int d_model = 16;
  int d_ff = 32;
  int vocab_size = 0;
  int max_seq = 64;

  int d_head() const { return d_model / heads; }
  /// Throws ConfigError on non-positive sizes or when heads does not divide d_model.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Weights of one pre-layer-norm transformer block. Matrices are [in][out].
struct LayerWeights {
  std::vector<float> ln1_gamma, ln1_beta;  // [d]
  std::vector<float> wq, wk, wv, wo;       // [d][d]
  std::vector<float> bq, bk, bv, bo;       // [d]
  std::vector<float> ln2_gamma, ln2_beta;  // [d]
  std::vector<float> w1;                   // [d][d_ff]
  std::vector<float> b1;                   // [d_ff]
  std::vector<float> w2;                   // [d_ff][d]
  std::vector<float> b2;                   // [d]

  bool operator==(const LayerWeights&) const = default;
};

/// Masked-LM encoder weights. The output head is tied to token_embedding and
/// adds mlm_bias.
struct EncoderWeights {
  EncoderConfig config;
  std::vector<float> token_embedding;     // [V][d]
  std::vector<float> position_embedding;  // [max_seq][d]
  std::vector<LayerWeights> layers;
  std::vector<float> final_gamma, final_beta;  // [d]
  std::vector<float> mlm_bias;                 // [V]

  /// All tensors zero except layer-norm scales, which are one.
  static EncoderWeights zeros(const EncoderConfig& config);
  /// Gaussian N(0, scale^2) for embeddings and projections, unit norms.
  static EncoderWeights random(const EncoderConfig& config, std::uint64_t seed, float scale = 0.02f);

  /// Throws ShapeError if any tensor disagrees with the config.
  void validate() const;
  /// Bitwise comparison (distinguishes -0.0 from 0.0 and compares NaN payloads).
  bool bitwise_equal(const EncoderWeights& o) const;
};

inline constexpr float kLayerNormEps = 1e-5f;

struct ForwardOutput {
  AttentionRecord attention;
  MlmLogits logits;
};

/// One forward pass: embeddings, then per layer x += Attn(LN1(x)),
/// x += FFN(LN2(x)) with GELU, final LN, logits against the token embeddings.
/// Attention scores are scaled by 1/sqrt(d_head).
ForwardOutput forward(const EncoderWeights& w, std::span<const int> ids,
                      kernels::Backend backend = kernels::Backend::Serial);

/// WATN1 weight file. Layout, all little-endian:
///   "WATN1"
///   u32 layers, heads, d_model, d_ff, vocab_size, max_seq
///   u32 tensor_count
///   tensor_count x { u32 name_len, name bytes, u32 ndim, u32 dims[ndim],
///                    f32 data[prod(dims)] }
/// Tensor names: token_embedding, position_embedding, final.gamma,
/// final.beta, mlm_bias, layer<i>.{ln1.gamma, ln1.beta, wq, bq, wk, bk, wv,
/// bv, wo, bo, ln2.gamma, ln2.beta, w1, b1, w2, b2}.
std::string save_weights(const EncoderWeights& w);
EncoderWeights load_weights(std::string_view bytes);

/// WDMP1 attention dump. Layout, all little-endian:
///   "WDMP1"
///   u32 id_len, id bytes, u32 tag_len, tag bytes
///   u32 L, H, n, V   (V = 0 when no logits block follows)
///   f32 attention[L][H][n][n]
///   f32 logits[n][V] (only when V > 0)
struct AttentionDump {
  std::string example_id;
  AttentionRecord attention;
  std::optional<MlmLogits> logits;
};

std::string save_attention_dump(const std::string& example_id, const AttentionRecord& a,
                                const MlmLogits* logits = nullptr);
/// Validates on import: negative or non-finite weights and rows whose sum is
/// off by more than 1e-4 are rejected (FormatError); rows off by more than
/// 1e-6 are rescaled to sum to one and the record is flagged.
AttentionDump import_attention_dump(std::string_view bytes);

inline constexpr double kRowSumTolerance = 1e-6;
inline constexpr double kImportRenormTolerance = 1e-4;

}  // namespace winoattn
