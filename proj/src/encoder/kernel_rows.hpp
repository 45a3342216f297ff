// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-row bodies shared by the serial and OpenMP kernels. Keeping one body
// per row is what makes the two backends bitwise identical.

#include <cmath>
#include <span>

namespace winoattn::kernels::rows {

inline void linear_row(const float* x, int in, const float* w, const float* b, int out, float* y) {
  for (int o = 0; o < out; ++o) y[o] = b ? b[o] : 0.0f;
  for (int k = 0; k < in; ++k) {
    const float xk = x[k];
    const float* wk = w + static_cast<std::size_t>(k) * out;
    for (int o = 0; o < out; ++o) y[o] += xk * wk[o];
  }
}

inline void layer_norm_row(const float* x, int dim, const float* gamma, const float* beta, float eps, float* y) {
  float mean = 0.0f;
  for (int d = 0; d < dim; ++d) mean += x[d];
  mean /= static_cast<float>(dim);
  float var = 0.0f;
  for (int d = 0; d < dim; ++d) {
    const float c = x[d] - mean;
    var += c * c;
  }
  var /= static_cast<float>(dim);
  const float rstd = 1.0f / std::sqrt(var + eps);
  for (int d = 0; d < dim; ++d) y[d] = (x[d] - mean) * rstd * gamma[d] + beta[d];
}

inline float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

// One query row of one head. `scratch` holds n doubles.
inline void attention_probs_row(const float* q, const float* k, int n, int stride, int d_head, double scale,
                                double* scratch, float* probs) {
  double max_s = -INFINITY;
  for (int j = 0; j < n; ++j) {
    const float* kj = k + static_cast<std::size_t>(j) * stride;
    double s = 0.0;
    for (int d = 0; d < d_head; ++d) s += static_cast<double>(q[d]) * static_cast<double>(kj[d]);
    scratch[j] = s * scale;
    if (scratch[j] > max_s) max_s = scratch[j];
  }
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    scratch[j] = std::exp(scratch[j] - max_s);
    sum += scratch[j];
  }
  for (int j = 0; j < n; ++j) probs[j] = static_cast<float>(scratch[j] / sum);
}

inline void attention_context_row(const float* probs, const float* v, int n, int stride, int d_head, float* ctx) {
  for (int d = 0; d < d_head; ++d) ctx[d] = 0.0f;
  for (int j = 0; j < n; ++j) {
    const float p = probs[j];
    const float* vj = v + static_cast<std::size_t>(j) * stride;
    for (int d = 0; d < d_head; ++d) ctx[d] += p * vj[d];
  }
}

}  // namespace winoattn::kernels::rows
