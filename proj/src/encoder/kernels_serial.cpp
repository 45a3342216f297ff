// SPDX-License-Identifier: Apache-2.0
#include <vector>

#include "kernel_rows.hpp"
#include "winoattn/kernels.hpp"

namespace winoattn::kernels::serial {

void linear(std::span<const float> x, int rows, int in, std::span<const float> w, std::span<const float> b, int out,
            std::span<float> y) {
  const float* bias = b.empty() ? nullptr : b.data();
  for (int i = 0; i < rows; ++i)
    rows::linear_row(x.data() + static_cast<std::size_t>(i) * in, in, w.data(), bias, out,
                     y.data() + static_cast<std::size_t>(i) * out);
}

void layer_norm(std::span<const float> x, int rows, int dim, std::span<const float> gamma,
                std::span<const float> beta, float eps, std::span<float> y) {
  for (int i = 0; i < rows; ++i)
    rows::layer_norm_row(x.data() + static_cast<std::size_t>(i) * dim, dim, gamma.data(), beta.data(), eps,
                         y.data() + static_cast<std::size_t>(i) * dim);
}

void gelu(std::span<float> x) {
  for (auto& v : x) v = rows::gelu(v);
}

void attention_probs(std::span<const float> q, std::span<const float> k, int n, int heads, int d_head, double scale,
                     std::span<float> probs) {
  const int stride = heads * d_head;
  std::vector<double> scratch(static_cast<std::size_t>(n));
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < n; ++i)
      rows::attention_probs_row(q.data() + static_cast<std::size_t>(i) * stride + h * d_head,
                                k.data() + h * d_head, n, stride, d_head, scale, scratch.data(),
                                probs.data() + (static_cast<std::size_t>(h) * n + i) * n);
}

void attention_context(std::span<const float> probs, std::span<const float> v, int n, int heads, int d_head,
                       std::span<float> ctx) {
  const int stride = heads * d_head;
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < n; ++i)
      rows::attention_context_row(probs.data() + (static_cast<std::size_t>(h) * n + i) * n, v.data() + h * d_head, n,
                                  stride, d_head, ctx.data() + static_cast<std::size_t>(i) * stride + h * d_head);
}

}  // namespace winoattn::kernels::serial
