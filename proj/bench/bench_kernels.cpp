// SPDX-License-Identifier: Apache-2.0
// Serial vs OpenMP timing for the encoder kernels and a full forward pass.
#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "winoattn/encoder.hpp"
#include "winoattn/kernels.hpp"
#include "winoattn/rng.hpp"

using namespace winoattn;

namespace {

template <typename F>
double time_ms(int reps, F&& f) {
  f();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial, double omp) {
  std::printf("%-22s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", name, serial, omp, serial / omp);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(7);
  const int rows = 256, in = 256, out = 256;
  std::vector<float> x(static_cast<std::size_t>(rows) * in), w(static_cast<std::size_t>(in) * out), b(out),
      y(static_cast<std::size_t>(rows) * out);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  for (auto& v : w) v = static_cast<float>(rng.normal() * 0.05);

  report("linear 256x256x256", time_ms(20, [&] { kernels::serial::linear(x, rows, in, w, b, out, y); }),
         time_ms(20, [&] { kernels::omp::linear(x, rows, in, w, b, out, y); }));

  const int n = 128, heads = 8, dh = 32;
  std::vector<float> q(static_cast<std::size_t>(n) * heads * dh), k(q.size()),
      probs(static_cast<std::size_t>(heads) * n * n);
  for (auto& v : q) v = static_cast<float>(rng.normal());
  for (auto& v : k) v = static_cast<float>(rng.normal());
  report("attention_probs n128", time_ms(20, [&] { kernels::serial::attention_probs(q, k, n, heads, dh, 0.17, probs); }),
         time_ms(20, [&] { kernels::omp::attention_probs(q, k, n, heads, dh, 0.17, probs); }));

  EncoderConfig c{4, 4, 64, 128, 500, 128};
  const auto weights = EncoderWeights::random(c, 11);
  std::vector<int> ids(128);
  for (auto& id : ids) id = static_cast<int>(rng.uniform_index(500));
  auto fwd = [&](kernels::Backend be) { return time_ms(10, [&] { (void)forward(weights, ids, be); }); };
  report("forward L4 H4 n128", fwd(kernels::Backend::Serial), fwd(kernels::Backend::OpenMP));
  return 0;
}
