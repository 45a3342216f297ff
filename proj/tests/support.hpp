// SPDX-License-Identifier: Apache-2.0
// Shared test helpers and independent oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/binary_io.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/rng.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return winoattn::read_file(std::string(WINOATTN_FIXTURES) + "/" + name); }

/// Random row-stochastic attention with every row normalized in double.
inline winoattn::AttentionRecord random_attention(int layers, int heads, int n, winoattn::Rng& rng) {
  winoattn::AttentionRecord a(layers, heads, n);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int l = 0; l < layers; ++l)
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < n; ++i) {
        double s = 0;
        for (auto& v : row) s += (v = rng.uniform() + 1e-3);
        for (int j = 0; j < n; ++j) a.at(l, h, i, j) = static_cast<float>(row[static_cast<std::size_t>(j)] / s);
      }
  return a;
}

/// Non-overlapping random spans inside [0, n); needs n >= 6.
inline winoattn::ExampleSpans random_spans(int n, winoattn::Rng& rng) {
  // Cut [0, n) into three ordered, disjoint segments and shuffle roles.
  int a = 1 + static_cast<int>(rng.uniform_index(2));
  int b = a + 1 + static_cast<int>(rng.uniform_index(2));
  int c = b + 1 + static_cast<int>(rng.uniform_index(2));
  std::vector<winoattn::TokenSpan> segs = {{0, a}, {a, b - a}, {b, std::min(c, n) - b}};
  rng.shuffle(segs);
  return {segs[0], {segs[1], segs[2]}};
}

/// log softmax(z)[k] by direct summation in long double.
inline double log_softmax_at(const std::vector<double>& z, std::size_t k) {
  long double m = *std::max_element(z.begin(), z.end());
  long double s = 0;
  for (double v : z) s += std::exp(static_cast<long double>(v) - m);
  return static_cast<double>(static_cast<long double>(z[k]) - m - std::log(s));
}

/// L2-regularized logistic loss with an unpenalized bias, written from the
/// definition (no shared code with the library solver).
inline double logistic_loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                            const std::vector<double>& w, double b, double lambda) {
  double f = 0;
  for (double v : w) f += 0.5 * lambda * v * v;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
    const double m = (y[i] == 1 ? -z : z);
    f += m > 30 ? m : std::log1p(std::exp(m));
  }
  return f;
}

/// Dense grid search over (w, b), repeatedly zooming in around the best
/// grid point. The loss is convex, so the zoom keeps the minimizer in view.
inline double grid_search_min(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double lambda) {
  const std::size_t d = x.empty() ? 0 : x[0].size();
  const std::size_t p = d + 1;
  std::vector<double> center(p, 0.0);
  double radius = 16.0;
  double best = std::numeric_limits<double>::infinity();
  const int steps = p <= 2 ? 40 : (p == 3 ? 16 : 8);
  std::vector<int> idx(p);
  for (int round = 0; round < 45; ++round) {
    std::vector<double> best_pt = center;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      std::vector<double> pt(p);
      for (std::size_t k = 0; k < p; ++k) pt[k] = center[k] - radius + 2 * radius * idx[k] / steps;
      std::vector<double> w(pt.begin(), pt.begin() + static_cast<long>(d));
      const double f = logistic_loss(x, y, w, pt[d], lambda);
      if (f < best) {
        best = f;
        best_pt = pt;
      }
      std::size_t k = 0;
      while (k < p && ++idx[k] > steps) idx[k++] = 0;
      if (k == p) break;
    }
    center = best_pt;
    radius *= 0.6;
  }
  return best;
}

// Hand oracle for a model whose layers are all zero: the hidden state at
// position i is E[token] + P[i], then the final layer norm and tied head.
inline double masked_log_prob(const winoattn::EncoderWeights& w, int pos, int target, int mask_id) {
  const int d = w.config.d_model, V = w.config.vocab_size;
  std::vector<double> h(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    h[static_cast<std::size_t>(j)] = double(w.token_embedding[static_cast<std::size_t>(mask_id * d + j)]) +
                                     double(w.position_embedding[static_cast<std::size_t>(pos * d + j)]);
  double mean = 0, var = 0;
  for (double v : h) mean += v / d;
  for (double v : h) var += (v - mean) * (v - mean) / d;
  for (int j = 0; j < d; ++j)
    h[static_cast<std::size_t>(j)] = (h[static_cast<std::size_t>(j)] - mean) / std::sqrt(var + 1e-5) *
                                         w.final_gamma[static_cast<std::size_t>(j)] +
                                     w.final_beta[static_cast<std::size_t>(j)];
  std::vector<double> z(static_cast<std::size_t>(V));
  for (int t = 0; t < V; ++t) {
    double s = w.mlm_bias[static_cast<std::size_t>(t)];
    for (int j = 0; j < d; ++j) s += h[static_cast<std::size_t>(j)] * w.token_embedding[static_cast<std::size_t>(t * d + j)];
    z[static_cast<std::size_t>(t)] = s;
  }
  return log_softmax_at(z, static_cast<std::size_t>(target));
}

inline winoattn::EncoderWeights hand_model() {
  winoattn::EncoderConfig c{1, 1, 4, 4, 3, 4};
  auto w = winoattn::EncoderWeights::zeros(c);
  w.token_embedding = {1.0f, -0.5f, 0.25f, 2.0f,   //
                       -1.0f, 0.75f, 1.5f, -0.5f,  //
                       0.3f, 0.2f, -0.4f, 0.1f};   // token 2 is the mask
  w.position_embedding = {0.1f, 0.0f, -0.2f, 0.3f, -0.3f, 0.4f, 0.0f, 0.1f, 0, 0, 0, 0, 0, 0, 0, 0};
  w.final_gamma = {1.0f, 0.5f, 2.0f, 1.5f};
  w.final_beta = {0.1f, -0.1f, 0.0f, 0.2f};
  w.mlm_bias = {0.2f, -0.3f, 0.0f};
  return w;
}

}  // namespace testing
