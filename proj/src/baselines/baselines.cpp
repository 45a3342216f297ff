// SPDX-License-Identifier: Apache-2.0
#include "winoattn/baselines.hpp"

#include <set>

#include "winoattn/error.hpp"

namespace winoattn::baselines {

std::string to_string(Method m) {
  switch (m) {
    case Method::Mas: return "mas";
    case Method::MlmRank: return "mlm_rank";
    case Method::PllRank: return "pll_rank";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "mas") return Method::Mas;
  if (s == "mlm" || s == "mlm_rank") return Method::MlmRank;
  if (s == "pll" || s == "pll_rank") return Method::PllRank;
  throw InvalidArgument("unknown baseline method '" + std::string(s) + "'");
}

void BaselineConfig::validate() const {
  if (head_subset && method != Method::Mas) throw InvalidArgument("head subsets apply to MAS only");
  if (head_subset && head_subset->empty()) throw InvalidArgument("empty MAS head subset");
}

namespace {

double mean_attention(const AttentionRecord& a, int l, int h, const TokenSpan& from, const TokenSpan& to) {
  double s = 0.0;
  for (int i = from.start; i < from.end(); ++i)
    for (int j = to.start; j < to.end(); ++j) s += a.at(l, h, i, j);
  return s / (static_cast<double>(from.len) * to.len);
}

int argmax_tie0(const std::array<double, 2>& s) { return s[1] > s[0] ? 1 : 0; }

}  // namespace

MasResult mas_score(const AttentionRecord& a, const ExampleSpans& spans,
                    const std::optional<std::vector<HeadId>>& heads) {
  spans.validate(a.seq_len);
  std::vector<HeadId> use = heads ? *heads : all_heads(a.layers, a.heads);
  if (use.empty()) throw InvalidArgument("mas_score: empty head subset");
  std::set<HeadId> seen;
  for (const auto& h : use) {
    if (h.layer < 0 || h.layer >= a.layers || h.head < 0 || h.head >= a.heads)
      throw InvalidArgument("mas_score: head " + h.name() + " outside the record");
    if (!seen.insert(h).second) throw InvalidArgument("mas_score: duplicate head " + h.name());
  }
  MasResult r;
  for (const auto& h : use) {
    const double v0 = mean_attention(a, h.layer, h.head, spans.pronoun, spans.candidates[0]);
    const double v1 = mean_attention(a, h.layer, h.head, spans.pronoun, spans.candidates[1]);
    if (v0 > v1) ++r.votes[0];
    else if (v1 > v0) ++r.votes[1];
  }
  r.label = r.votes[1] > r.votes[0] ? 1 : 0;
  return r;
}

std::vector<int> substitute(std::span<const int> ids, const TokenSpan& pronoun, std::span<const int> fill) {
  if (pronoun.start < 0 || pronoun.len < 1 || pronoun.end() > static_cast<int>(ids.size()))
    throw InvalidArgument("substitute: pronoun span outside the sequence");
  std::vector<int> out(ids.begin(), ids.begin() + pronoun.start);
  out.insert(out.end(), fill.begin(), fill.end());
  out.insert(out.end(), ids.begin() + pronoun.end(), ids.end());
  return out;
}

namespace {

void check_fits(const EncoderWeights& w, std::size_t n) {
  if (n > static_cast<std::size_t>(w.config.max_seq))
    throw InvalidArgument("sequence of " + std::to_string(n) + " tokens exceeds max_seq " +
                          std::to_string(w.config.max_seq));
}

}  // namespace

LmResult mlm_rank(const EncoderWeights& w, std::span<const int> ids, const ExampleSpans& spans, int mask_id,
                  bool length_norm, kernels::Backend backend) {
  spans.validate(static_cast<int>(ids.size()));
  LmResult r;
  for (int c = 0; c < 2; ++c) {
    const auto& cs = spans.candidates[static_cast<std::size_t>(c)];
    std::vector<int> masks(static_cast<std::size_t>(cs.len), mask_id);
    const auto seq = substitute(ids, spans.pronoun, masks);
    check_fits(w, seq.size());
    const auto out = forward(w, seq, backend);
    double s = 0.0;
    for (int t = 0; t < cs.len; ++t)
      s += out.logits.log_prob(spans.pronoun.start + t, ids[static_cast<std::size_t>(cs.start + t)]);
    r.scores[static_cast<std::size_t>(c)] = length_norm ? s / cs.len : s;
  }
  r.label = argmax_tie0(r.scores);
  return r;
}

double pseudo_log_likelihood(const EncoderWeights& w, std::span<const int> ids, int mask_id,
                             kernels::Backend backend) {
  check_fits(w, ids.size());
  const int n = static_cast<int>(ids.size());
  std::vector<double> terms(ids.size());
  // Forwards run serially inside each position; positions may run in
  // parallel and are summed in index order afterwards.
#pragma omp parallel for schedule(dynamic) if (backend == kernels::Backend::OpenMP)
  for (int i = 0; i < n; ++i) {
    std::vector<int> masked(ids.begin(), ids.end());
    masked[static_cast<std::size_t>(i)] = mask_id;
    const auto out = forward(w, masked, kernels::Backend::Serial);
    terms[static_cast<std::size_t>(i)] = out.logits.log_prob(i, ids[static_cast<std::size_t>(i)]);
  }
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

LmResult pll_rank(const EncoderWeights& w, std::span<const int> ids, const ExampleSpans& spans, int mask_id,
                  bool length_norm, kernels::Backend backend) {
  spans.validate(static_cast<int>(ids.size()));
  LmResult r;
  for (int c = 0; c < 2; ++c) {
    const auto& cs = spans.candidates[static_cast<std::size_t>(c)];
    const auto seq = substitute(ids, spans.pronoun, ids.subspan(static_cast<std::size_t>(cs.start),
                                                                static_cast<std::size_t>(cs.len)));
    const double pll = pseudo_log_likelihood(w, seq, mask_id, backend);
    r.scores[static_cast<std::size_t>(c)] = length_norm ? pll / static_cast<double>(seq.size()) : pll;
  }
  r.label = argmax_tie0(r.scores);
  return r;
}

}  // namespace winoattn::baselines
