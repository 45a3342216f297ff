// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "winoattn/error.hpp"
#include "winoattn/reason.hpp"
#include "winoattn/rng.hpp"

namespace winoattn::reason {

std::vector<HeadId> rank_heads(const LinearModel& m) {
  const auto& heads = m.layout.heads;
  if (m.weights.size() != m.layout.dim()) throw ShapeError("rank_heads: weights do not match the layout");
  const bool concat = m.layout.combination == features::Combination::Concat;
  std::vector<std::pair<double, HeadId>> scored;
  scored.reserve(heads.size());
  for (std::size_t i = 0; i < heads.size(); ++i) {
    double s = std::abs(m.weights[i]);
    if (concat) s = std::max(s, std::abs(m.weights[i + heads.size()]));
    scored.emplace_back(s, heads[i]);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<HeadId> out;
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

std::vector<HeadId> common_heads(const std::map<std::string, LinearModel>& models, int k) {
  if (models.empty()) throw InvalidArgument("common_heads: no models");
  const auto& layout = models.begin()->second.layout;
  for (const auto& [lang, m] : models)
    if (!(m.layout == layout)) throw ShapeError("common_heads: model for '" + lang + "' has a different layout");
  if (k < 1 || static_cast<std::size_t>(k) > layout.heads.size())
    throw InvalidArgument("common_heads: k must be in [1, number of heads]");

  std::map<HeadId, double> rank_sum;
  for (const auto& h : layout.heads) rank_sum[h] = 0.0;
  for (const auto& [lang, m] : models) {
    auto ranking = rank_heads(m);
    for (std::size_t pos = 0; pos < ranking.size(); ++pos) rank_sum[ranking[pos]] += static_cast<double>(pos);
  }
  std::vector<std::pair<double, HeadId>> mean;
  for (const auto& [h, s] : rank_sum) mean.emplace_back(s / static_cast<double>(models.size()), h);
  std::sort(mean.begin(), mean.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<HeadId> out;
  for (int i = 0; i < k; ++i) out.push_back(mean[static_cast<std::size_t>(i)].second);
  return out;
}

FeatureVector restrict_features(const FeatureVector& x, std::span<const HeadId> heads) {
  if (heads.empty()) throw InvalidArgument("restrict_features: empty head list");
  const auto& lay = x.layout;
  if (x.values.size() != lay.dim()) throw ShapeError("restrict_features: vector does not match its layout");
  std::map<HeadId, std::size_t> position;
  for (std::size_t i = 0; i < lay.heads.size(); ++i) position[lay.heads[i]] = i;
  std::set<HeadId> seen;
  FeatureVector out;
  out.example_id = x.example_id;
  out.layout = lay;
  out.layout.heads.assign(heads.begin(), heads.end());
  std::vector<std::size_t> picks;
  for (const auto& h : heads) {
    auto it = position.find(h);
    if (it == position.end()) throw InvalidArgument("restrict_features: head " + h.name() + " not in the layout");
    if (!seen.insert(h).second) throw InvalidArgument("restrict_features: duplicate head " + h.name());
    picks.push_back(it->second);
  }
  for (auto p : picks) out.values.push_back(x.values[p]);
  if (lay.combination == features::Combination::Concat)
    for (auto p : picks) out.values.push_back(x.values[p + lay.heads.size()]);
  return out;
}

std::vector<HeadId> random_heads(int layers, int heads, int k, std::uint64_t seed) {
  if (layers < 1 || heads < 1) throw InvalidArgument("random_heads: layers and heads must be positive");
  if (k < 0 || k > layers * heads) throw InvalidArgument("random_heads: k exceeds the number of heads");
  auto all = all_heads(layers, heads);
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform sample.
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.uniform_index(all.size() - static_cast<std::size_t>(i));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(k));
  return all;
}

std::vector<HeadId> parse_head_list(std::string_view text) {
  std::vector<HeadId> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      if (w.back() == ',') w.pop_back();
      if (!w.empty()) out.push_back(parse_head(w));
    }
  }
  return out;
}

std::string format_head_list(std::span<const HeadId> heads) {
  std::string out;
  for (const auto& h : heads) out += h.name() + "\n";
  return out;
}

}  // namespace winoattn::reason
