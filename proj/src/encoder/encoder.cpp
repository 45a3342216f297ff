// SPDX-License-Identifier: Apache-2.0
#include "winoattn/encoder.hpp"

#include <cmath>
#include <cstring>

#include "winoattn/error.hpp"
#include "winoattn/rng.hpp"

namespace winoattn {

void EncoderConfig::validate() const {
  if (layers < 1 || heads < 1 || d_model < 1 || d_ff < 1 || vocab_size < 1 || max_seq < 1)
    throw ConfigError("encoder config: all sizes must be positive");
  if (d_model % heads != 0)
    throw ConfigError("encoder config: heads (" + std::to_string(heads) + ") must divide d_model (" +
                      std::to_string(d_model) + ")");
}

namespace {

std::size_t sz(int a) { return static_cast<std::size_t>(a); }

LayerWeights zero_layer(const EncoderConfig& c) {
  const auto d = sz(c.d_model), f = sz(c.d_ff);
  LayerWeights l;
  l.ln1_gamma.assign(d, 1.0f);
  l.ln1_beta.assign(d, 0.0f);
  l.ln2_gamma.assign(d, 1.0f);
  l.ln2_beta.assign(d, 0.0f);
  for (auto* m : {&l.wq, &l.wk, &l.wv, &l.wo}) m->assign(d * d, 0.0f);
  for (auto* b : {&l.bq, &l.bk, &l.bv, &l.bo, &l.b2}) b->assign(d, 0.0f);
  l.w1.assign(d * f, 0.0f);
  l.b1.assign(f, 0.0f);
  l.w2.assign(f * d, 0.0f);
  return l;
}

void expect(const std::vector<float>& v, std::size_t n, const std::string& name) {
  if (v.size() != n)
    throw ShapeError("encoder weights: " + name + " has " + std::to_string(v.size()) + " values, expected " +
                     std::to_string(n));
}

}  // namespace

EncoderWeights EncoderWeights::zeros(const EncoderConfig& config) {
  config.validate();
  EncoderWeights w;
  w.config = config;
  const auto d = sz(config.d_model);
  w.token_embedding.assign(sz(config.vocab_size) * d, 0.0f);
  w.position_embedding.assign(sz(config.max_seq) * d, 0.0f);
  for (int i = 0; i < config.layers; ++i) w.layers.push_back(zero_layer(config));
  w.final_gamma.assign(d, 1.0f);
  w.final_beta.assign(d, 0.0f);
  w.mlm_bias.assign(sz(config.vocab_size), 0.0f);
  return w;
}

EncoderWeights EncoderWeights::random(const EncoderConfig& config, std::uint64_t seed, float scale) {
  EncoderWeights w = zeros(config);
  Rng rng(seed);
  auto fill = [&](std::vector<float>& v) {
    for (auto& x : v) x = static_cast<float>(rng.normal()) * scale;
  };
  fill(w.token_embedding);
  fill(w.position_embedding);
  for (auto& l : w.layers)
    for (auto* m : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.w2}) fill(*m);
  return w;
}

void EncoderWeights::validate() const {
  config.validate();
  const auto d = sz(config.d_model), f = sz(config.d_ff), v = sz(config.vocab_size);
  expect(token_embedding, v * d, "token_embedding");
  expect(position_embedding, sz(config.max_seq) * d, "position_embedding");
  expect(final_gamma, d, "final.gamma");
  expect(final_beta, d, "final.beta");
  expect(mlm_bias, v, "mlm_bias");
  if (layers.size() != sz(config.layers))
    throw ShapeError("encoder weights: " + std::to_string(layers.size()) + " layers, config says " +
                     std::to_string(config.layers));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    expect(l.ln1_gamma, d, p + "ln1.gamma");
    expect(l.ln1_beta, d, p + "ln1.beta");
    expect(l.ln2_gamma, d, p + "ln2.gamma");
    expect(l.ln2_beta, d, p + "ln2.beta");
    expect(l.wq, d * d, p + "wq");
    expect(l.wk, d * d, p + "wk");
    expect(l.wv, d * d, p + "wv");
    expect(l.wo, d * d, p + "wo");
    expect(l.bq, d, p + "bq");
    expect(l.bk, d, p + "bk");
    expect(l.bv, d, p + "bv");
    expect(l.bo, d, p + "bo");
    expect(l.w1, d * f, p + "w1");
    expect(l.b1, f, p + "b1");
    expect(l.w2, f * d, p + "w2");
    expect(l.b2, d, p + "b2");
  }
}

bool EncoderWeights::bitwise_equal(const EncoderWeights& o) const {
  auto same = [](const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
  };
  if (!(config == o.config) || layers.size() != o.layers.size()) return false;
  if (!same(token_embedding, o.token_embedding) || !same(position_embedding, o.position_embedding) ||
      !same(final_gamma, o.final_gamma) || !same(final_beta, o.final_beta) || !same(mlm_bias, o.mlm_bias))
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = o.layers[i];
    if (!same(a.ln1_gamma, b.ln1_gamma) || !same(a.ln1_beta, b.ln1_beta) || !same(a.wq, b.wq) ||
        !same(a.bq, b.bq) || !same(a.wk, b.wk) || !same(a.bk, b.bk) || !same(a.wv, b.wv) || !same(a.bv, b.bv) ||
        !same(a.wo, b.wo) || !same(a.bo, b.bo) || !same(a.ln2_gamma, b.ln2_gamma) ||
        !same(a.ln2_beta, b.ln2_beta) || !same(a.w1, b.w1) || !same(a.b1, b.b1) || !same(a.w2, b.w2) ||
        !same(a.b2, b.b2))
      return false;
  }
  return true;
}

namespace {

struct Kernels {
  decltype(&kernels::serial::linear) linear;
  decltype(&kernels::serial::layer_norm) layer_norm;
  decltype(&kernels::serial::gelu) gelu;
  decltype(&kernels::serial::attention_probs) attention_probs;
  decltype(&kernels::serial::attention_context) attention_context;
};

Kernels select(kernels::Backend b) {
  if (b == kernels::Backend::OpenMP)
    return {kernels::omp::linear, kernels::omp::layer_norm, kernels::omp::gelu, kernels::omp::attention_probs,
            kernels::omp::attention_context};
  return {kernels::serial::linear, kernels::serial::layer_norm, kernels::serial::gelu,
          kernels::serial::attention_probs, kernels::serial::attention_context};
}

}  // namespace

ForwardOutput forward(const EncoderWeights& w, std::span<const int> ids, kernels::Backend backend) {
  const auto& c = w.config;
  const int n = static_cast<int>(ids.size());
  if (n < 1) throw InvalidArgument("forward: empty sequence");
  if (n > c.max_seq)
    throw InvalidArgument("forward: sequence length " + std::to_string(n) + " exceeds max_seq " +
                          std::to_string(c.max_seq));
  for (int id : ids)
    if (id < 0 || id >= c.vocab_size) throw InvalidArgument("forward: token id " + std::to_string(id) + " out of range");
  if (w.layers.size() != sz(c.layers) || w.token_embedding.size() != sz(c.vocab_size) * sz(c.d_model))
    throw ShapeError("forward: weights do not match their config");

  const auto k = select(backend);
  const int d = c.d_model;
  const auto nd = sz(n) * sz(d);

  std::vector<float> x(nd);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      x[sz(i) * d + j] = w.token_embedding[sz(ids[i]) * d + j] + w.position_embedding[sz(i) * d + j];

  ForwardOutput out;
  out.attention = AttentionRecord(c.layers, c.heads, n);
  out.attention.provenance = Provenance::Builtin;
  out.attention.model_tag = "builtin";

  std::vector<float> a(nd), q(nd), kk(nd), v(nd), ctx(nd), o(nd), f(sz(n) * sz(c.d_ff));
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.d_head()));
  for (int l = 0; l < c.layers; ++l) {
    const auto& L = w.layers[sz(l)];
    k.layer_norm(x, n, d, L.ln1_gamma, L.ln1_beta, kLayerNormEps, a);
    k.linear(a, n, d, L.wq, L.bq, d, q);
    k.linear(a, n, d, L.wk, L.bk, d, kk);
    k.linear(a, n, d, L.wv, L.bv, d, v);
    std::span<float> probs(out.attention.values.data() + out.attention.index(l, 0, 0, 0),
                           sz(c.heads) * sz(n) * sz(n));
    k.attention_probs(q, kk, n, c.heads, c.d_head(), scale, probs);
    k.attention_context(probs, v, n, c.heads, c.d_head(), ctx);
    k.linear(ctx, n, d, L.wo, L.bo, d, o);
    for (std::size_t i = 0; i < nd; ++i) x[i] += o[i];

    k.layer_norm(x, n, d, L.ln2_gamma, L.ln2_beta, kLayerNormEps, a);
    k.linear(a, n, d, L.w1, L.b1, c.d_ff, f);
    k.gelu(f);
    k.linear(f, n, c.d_ff, L.w2, L.b2, d, o);
    for (std::size_t i = 0; i < nd; ++i) x[i] += o[i];
  }
  k.layer_norm(x, n, d, w.final_gamma, w.final_beta, kLayerNormEps, a);

  // Tied output head: logits[i][t] = a[i] . E[t] + bias[t].
  out.logits.seq_len = n;
  out.logits.vocab = c.vocab_size;
  out.logits.values.assign(sz(n) * sz(c.vocab_size), 0.0f);
  std::vector<float> emb_t(sz(d) * sz(c.vocab_size));
  for (int t = 0; t < c.vocab_size; ++t)
    for (int j = 0; j < d; ++j) emb_t[sz(j) * c.vocab_size + t] = w.token_embedding[sz(t) * d + j];
  k.linear(a, n, d, emb_t, w.mlm_bias, c.vocab_size, out.logits.values);
  return out;
}

}  // namespace winoattn
