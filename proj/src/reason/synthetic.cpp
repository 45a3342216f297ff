// SPDX-License-Identifier: Apache-2.0
#include "winoattn/synthetic.hpp"

#include <cmath>
#include <set>

#include "winoattn/error.hpp"
#include "winoattn/rng.hpp"

namespace winoattn::reason {

void SyntheticSpec::validate() const {
  if (layers < 1 || heads < 1) throw InvalidArgument("synthetic: layers and heads must be positive");
  if (n_examples < 2) throw InvalidArgument("synthetic: need at least 2 examples");
  if (seq_len < 10) throw InvalidArgument("synthetic: seq_len must be at least 10");
  if (planted_heads.empty()) throw InvalidArgument("synthetic: no planted heads");
  for (const auto& h : planted_heads)
    if (h.layer < 0 || h.layer >= layers || h.head < 0 || h.head >= heads)
      throw InvalidArgument("synthetic: planted head " + h.name() + " out of range");
  if (margin < 0.0) throw InvalidArgument("synthetic: margin must be non-negative");
  if (margin > 1.0)
    throw InvalidArgument("synthetic: margin " + std::to_string(margin) +
                          " too large; planted rows are (1 - mu) * row + mu * target, so mu must be <= 1");
  if (noise < 0.0) throw InvalidArgument("synthetic: noise must be non-negative");
}

std::vector<SyntheticExample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.seq_len;
  std::set<HeadId> planted(spec.planted_heads.begin(), spec.planted_heads.end());

  std::vector<int> labels(static_cast<std::size_t>(spec.n_examples));
  for (int i = 0; i < spec.n_examples; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  Rng label_rng(derive_seed(spec.seed, "synthetic-labels:" + spec.lang));
  label_rng.shuffle(labels);

  std::vector<SyntheticExample> out(static_cast<std::size_t>(spec.n_examples));
#pragma omp parallel for schedule(dynamic, 4)
  for (int e = 0; e < spec.n_examples; ++e) {
    Rng rng(derive_seed(spec.seed, "synthetic-example:" + spec.lang, static_cast<std::uint64_t>(e)));
    auto& ex = out[static_cast<std::size_t>(e)];
    ex.id = spec.lang + "-syn-" + std::to_string(e);
    ex.lang = spec.lang;
    ex.label = labels[static_cast<std::size_t>(e)];

    const int t0 = 1 + static_cast<int>(rng.uniform_index(2));
    const int t1 = 1 + static_cast<int>(rng.uniform_index(2));
    ex.spans.candidates[0] = {1, t0};
    ex.spans.candidates[1] = {1 + t0 + 1 + static_cast<int>(rng.uniform_index(2)), t1};
    ex.spans.pronoun = {ex.spans.candidates[1].end() + 1 + static_cast<int>(rng.uniform_index(2)), 1};
    const TokenSpan correct = ex.spans.candidates[static_cast<std::size_t>(ex.label)];
    const int p = ex.spans.pronoun.start;

    ex.attention = AttentionRecord(spec.layers, spec.heads, n);
    ex.attention.provenance = Provenance::Builtin;
    ex.attention.model_tag = "synthetic";
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int l = 0; l < spec.layers; ++l)
      for (int h = 0; h < spec.heads; ++h) {
        const bool is_planted = planted.count({l, h}) > 0;
        for (int i = 0; i < n; ++i) {
          double sum = 0.0;
          for (int j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = spec.noise > 0.0 ? std::exp(spec.noise * rng.normal()) : 1.0;
            sum += row[static_cast<std::size_t>(j)];
          }
          for (auto& v : row) v /= sum;
          if (is_planted && spec.margin > 0.0) {
            if (i == p) {
              for (auto& v : row) v *= 1.0 - spec.margin;
              for (int c = correct.start; c < correct.end(); ++c)
                row[static_cast<std::size_t>(c)] += spec.margin / correct.len;
            } else if (i >= correct.start && i < correct.end()) {
              for (auto& v : row) v *= 1.0 - spec.margin;
              row[static_cast<std::size_t>(p)] += spec.margin;
            }
          }
          double total = 0.0;
          for (double v : row) total += v;
          auto dst = ex.attention.row(l, h, i);
          for (int j = 0; j < n; ++j) dst[static_cast<std::size_t>(j)] = static_cast<float>(row[static_cast<std::size_t>(j)] / total);
        }
      }
  }
  return out;
}

}  // namespace winoattn::reason
