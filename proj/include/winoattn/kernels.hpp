// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

namespace winoattn::kernels {

// Dense kernels used by the encoder forward pass. Matrices are row-major;
// `x` is [rows][in], `w` is [in][out], `y` is [rows][out].
//
// `serial` is the reference. `omp` splits the same loops over output rows
// with OpenMP; each output element is computed with the same operation order,
// so both produce bitwise-identical results.

enum class Backend { Serial, OpenMP };

namespace serial {

void linear(std::span<const float> x, int rows, int in, std::span<const float> w, std::span<const float> b, int out,
            std::span<float> y);
void layer_norm(std::span<const float> x, int rows, int dim, std::span<const float> gamma,
                std::span<const float> beta, float eps, std::span<float> y);
void gelu(std::span<float> x);
/// probs[h][i][j] = softmax_j(q_i . k_j * scale) for every head; q, k are
/// [n][heads * d_head]. Scores and softmax are evaluated in double.
void attention_probs(std::span<const float> q, std::span<const float> k, int n, int heads, int d_head, double scale,
                     std::span<float> probs);
/// ctx[i][h * d_head + d] = sum_j probs[h][i][j] * v[j][h * d_head + d].
void attention_context(std::span<const float> probs, std::span<const float> v, int n, int heads, int d_head,
                       std::span<float> ctx);

}  // namespace serial

namespace omp {

void linear(std::span<const float> x, int rows, int in, std::span<const float> w, std::span<const float> b, int out,
            std::span<float> y);
void layer_norm(std::span<const float> x, int rows, int dim, std::span<const float> gamma,
                std::span<const float> beta, float eps, std::span<float> y);
void gelu(std::span<float> x);
void attention_probs(std::span<const float> q, std::span<const float> k, int n, int heads, int d_head, double scale,
                     std::span<float> probs);
void attention_context(std::span<const float> probs, std::span<const float> v, int n, int heads, int d_head,
                       std::span<float> ctx);

}  // namespace omp

}  // namespace winoattn::kernels
