// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "winoattn/error.hpp"
#include "winoattn/reason.hpp"

namespace winoattn::reason {

Summary Summary::of(std::vector<double> values) {
  Summary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

namespace {

LabeledSet restrict_set(const LabeledSet& s, std::span<const HeadId> heads) {
  LabeledSet out;
  out.y = s.y;
  out.x.reserve(s.x.size());
  for (const auto& x : s.x) out.x.push_back(restrict_features(x, heads));
  return out;
}

}  // namespace

std::vector<SweepPoint> topn_sweep(std::span<const SweepInput> resamples, std::span<const int> ns,
                                   const TrainConfig& cfg) {
  if (resamples.empty()) throw InvalidArgument("topn_sweep: no resamples");
  struct Acc {
    std::vector<double> train, valid;
    std::map<std::string, std::vector<double>> eval;
  };
  std::vector<Acc> acc(ns.size());

  for (const auto& r : resamples) {
    const auto full = train(r.train.x, r.train.y, cfg);
    const auto ranking = rank_heads(full);
    std::map<HeadId, std::size_t> layout_pos;
    for (std::size_t i = 0; i < full.layout.heads.size(); ++i) layout_pos[full.layout.heads[i]] = i;
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const int n = ns[k];
      if (n < 1 || static_cast<std::size_t>(n) > ranking.size())
        throw InvalidArgument("topn_sweep: N=" + std::to_string(n) + " outside [1, " + std::to_string(ranking.size()) +
                              "]");
      // The top-N set comes from the ranking; inside the set, features keep
      // the original layout order so N = all reproduces the full fit exactly.
      std::vector<HeadId> top(ranking.begin(), ranking.begin() + n);
      std::sort(top.begin(), top.end(), [&](const HeadId& a, const HeadId& b) { return layout_pos[a] < layout_pos[b]; });
      const auto tr = restrict_set(r.train, top);
      const auto m = train(tr.x, tr.y, cfg);
      acc[k].train.push_back(accuracy(m, tr.x, tr.y));
      if (!r.valid.x.empty()) {
        const auto va = restrict_set(r.valid, top);
        acc[k].valid.push_back(accuracy(m, va.x, va.y));
      }
      for (const auto& [lang, set] : r.eval) {
        const auto ev = restrict_set(set, top);
        acc[k].eval[lang].push_back(accuracy(m, ev.x, ev.y));
      }
    }
  }
  std::vector<SweepPoint> curve;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    SweepPoint p;
    p.n = ns[k];
    p.train_acc = Summary::of(acc[k].train);
    p.valid_acc = Summary::of(acc[k].valid);
    for (auto& [lang, v] : acc[k].eval) p.eval_acc[lang] = Summary::of(v);
    curve.push_back(std::move(p));
  }
  return curve;
}

std::string sweep_to_csv(std::span<const SweepPoint> curve) {
  std::set<std::string> langs;
  for (const auto& p : curve)
    for (const auto& [l, _] : p.eval_acc) langs.insert(l);
  std::string out = "n,train_mean,train_std,valid_mean,valid_std";
  for (const auto& l : langs) out += "," + l + "_mean," + l + "_std";
  out += "\n";
  char buf[64];
  auto put = [&](const Summary& s) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f", s.mean, s.std);
    out += buf;
  };
  for (const auto& p : curve) {
    out += std::to_string(p.n);
    put(p.train_acc);
    put(p.valid_acc);
    for (const auto& l : langs) {
      auto it = p.eval_acc.find(l);
      put(it == p.eval_acc.end() ? Summary{} : it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace winoattn::reason
