// SPDX-License-Identifier: Apache-2.0
#include "winoattn/features.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>

#include "winoattn/error.hpp"

namespace winoattn::features {

std::string_view to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "max"; }
std::string_view to_string(Direction d) { return d == Direction::ToCandidate ? "to_candidate" : "to_pronoun"; }
std::string_view to_string(Combination c) { return c == Combination::Subtract ? "subtract" : "concat"; }

Pooling parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::Mean;
  if (s == "max") return Pooling::Max;
  throw InvalidArgument("pooling must be mean or max, got '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  if (s == "to_candidate") return Direction::ToCandidate;
  if (s == "to_pronoun") return Direction::ToPronoun;
  throw InvalidArgument("direction must be to_candidate or to_pronoun, got '" + std::string(s) + "'");
}

Combination parse_combination(std::string_view s) {
  if (s == "subtract") return Combination::Subtract;
  if (s == "concat") return Combination::Concat;
  throw InvalidArgument("combination must be subtract or concat, got '" + std::string(s) + "'");
}

std::string FeatureConfig::describe() const {
  return std::string(to_string(pooling)) + "/" + std::string(to_string(direction)) + "/" +
         std::string(to_string(combination));
}

FeatureLayout FeatureLayout::full(int layers, int heads, Combination c) {
  return {layers, heads, c, all_heads(layers, heads)};
}

std::vector<std::string> FeatureLayout::column_names() const {
  std::vector<std::string> out;
  for (const auto& h : heads) out.push_back(h.name());
  if (combination == Combination::Concat)
    for (const auto& h : heads) out.push_back(h.name() + "_c2");
  return out;
}

std::vector<int> mask_pronoun(const TokenizedExample& te, int mask_id) {
  const auto& p = te.spans.pronoun;
  if (p.len < 1 || p.start < 0 || p.end() > static_cast<int>(te.token_ids.size()))
    throw InvalidArgument("mask_pronoun: pronoun span out of range");
  std::vector<int> ids = te.token_ids;
  for (int i = p.start; i < p.end(); ++i) ids[static_cast<std::size_t>(i)] = mask_id;
  return ids;
}

CandidateTensor extract_candidate_attention(const AttentionRecord& a, TokenSpan pronoun, TokenSpan candidate,
                                            Direction dir) {
  auto in_range = [&](TokenSpan s) { return s.len >= 1 && s.start >= 0 && s.end() <= a.seq_len; };
  if (!in_range(pronoun) || !in_range(candidate))
    throw InvalidArgument("extract_candidate_attention: span outside sequence of length " + std::to_string(a.seq_len));
  CandidateTensor t{a.layers, a.heads, candidate.len, {}};
  t.values.resize(static_cast<std::size_t>(a.layers) * a.heads * candidate.len);
  std::size_t at = 0;
  for (int l = 0; l < a.layers; ++l)
    for (int h = 0; h < a.heads; ++h)
      for (int k = 0; k < candidate.len; ++k) {
        const int c = candidate.start + k;
        double s = 0.0;
        for (int p = pronoun.start; p < pronoun.end(); ++p)
          s += dir == Direction::ToCandidate ? a.at(l, h, p, c) : a.at(l, h, c, p);
        t.values[at++] = static_cast<float>(s / pronoun.len);
      }
  return t;
}

HeadMatrix pool(const CandidateTensor& t, Pooling mode) {
  if (t.tokens < 1) throw InvalidArgument("pool: candidate has no tokens");
  HeadMatrix m{t.layers, t.heads, std::vector<float>(static_cast<std::size_t>(t.layers) * t.heads)};
  for (int l = 0; l < t.layers; ++l)
    for (int h = 0; h < t.heads; ++h) {
      if (mode == Pooling::Max) {
        float best = t.at(l, h, 0);
        for (int k = 1; k < t.tokens; ++k) best = std::max(best, t.at(l, h, k));
        m.values[static_cast<std::size_t>(l) * t.heads + h] = best;
      } else {
        double s = 0.0;
        for (int k = 0; k < t.tokens; ++k) s += t.at(l, h, k);
        m.values[static_cast<std::size_t>(l) * t.heads + h] = static_cast<float>(s / t.tokens);
      }
    }
  return m;
}

FeatureVector combine(const HeadMatrix& m1, const HeadMatrix& m2, Combination mode) {
  if (m1.layers != m2.layers || m1.heads != m2.heads || m1.values.size() != m2.values.size())
    throw ShapeError("combine: candidate matrices differ in shape");
  FeatureVector fv;
  fv.layout = FeatureLayout::full(m1.layers, m1.heads, mode);
  if (mode == Combination::Subtract) {
    fv.values.resize(m1.values.size());
    for (std::size_t i = 0; i < m1.values.size(); ++i) fv.values[i] = m1.values[i] - m2.values[i];
  } else {
    fv.values = m1.values;
    fv.values.insert(fv.values.end(), m2.values.begin(), m2.values.end());
  }
  return fv;
}

FeatureVector featurize(const AttentionRecord& a, const ExampleSpans& spans, const FeatureConfig& cfg,
                        std::string example_id) {
  spans.validate(a.seq_len);
  auto m0 = pool(extract_candidate_attention(a, spans.pronoun, spans.candidates[0], cfg.direction), cfg.pooling);
  auto m1 = pool(extract_candidate_attention(a, spans.pronoun, spans.candidates[1], cfg.direction), cfg.pooling);
  auto fv = combine(m0, m1, cfg.combination);
  fv.example_id = std::move(example_id);
  return fv;
}

std::vector<FeatureVector> featurize_all(std::span<const AttentionRecord* const> records,
                                         std::span<const ExampleSpans> spans, std::span<const std::string> ids,
                                         const FeatureConfig& cfg, kernels::Backend backend) {
  if (records.size() != spans.size() || (!ids.empty() && ids.size() != records.size()))
    throw ShapeError("featurize_all: records, spans and ids must align");
  const auto n = static_cast<long>(records.size());
  std::vector<FeatureVector> out(records.size());
  auto one = [&](long i) {
    out[static_cast<std::size_t>(i)] =
        featurize(*records[static_cast<std::size_t>(i)], spans[static_cast<std::size_t>(i)], cfg,
                  ids.empty() ? std::string{} : ids[static_cast<std::size_t>(i)]);
  };
  if (backend == kernels::Backend::OpenMP) {
    // Exceptions may not leave an OpenMP region; carry the first one out.
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < n; ++i) {
      try {
        one(i);
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (long i = 0; i < n; ++i) one(i);
  }
  return out;
}

std::string to_csv(std::span<const FeatureVector> rows, std::span<const int> labels) {
  if (!labels.empty() && labels.size() != rows.size()) throw ShapeError("to_csv: labels do not align with rows");
  std::string out = "id";
  if (!labels.empty()) out += ",label";
  if (!rows.empty())
    for (const auto& c : rows.front().layout.column_names()) out += "," + c;
  out += "\n";
  char buf[32];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!(rows[r].layout == rows.front().layout)) throw ShapeError("to_csv: rows have different layouts");
    out += rows[r].example_id;
    if (!labels.empty()) out += "," + std::to_string(labels[r]);
    for (float v : rows[r].values) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace winoattn::features
