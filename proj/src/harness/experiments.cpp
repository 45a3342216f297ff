// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <exception>
#include <map>

#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"
#include "winoattn/rng.hpp"

namespace winoattn::harness {

FeatureTable featurize_dataset(const Dataset& d, const features::FeatureConfig& cfg, kernels::Backend backend) {
  FeatureTable t;
  t.config = cfg;
  for (const auto& [lang, xs] : d) {
    std::vector<const AttentionRecord*> recs;
    std::vector<ExampleSpans> spans;
    std::vector<std::string> ids;
    reason::LabeledSet set;
    for (const auto& x : xs) {
      recs.push_back(&x.attention);
      spans.push_back(x.spans);
      ids.push_back(x.id);
      set.y.push_back(x.label);
    }
    set.x = features::featurize_all(recs, spans, ids, cfg, backend);
    t.langs[lang] = std::move(set);
  }
  return t;
}

reason::LabeledSet subset(const reason::LabeledSet& s, const std::vector<std::size_t>& idx) {
  reason::LabeledSet out;
  for (auto i : idx) {
    if (i >= s.x.size()) throw InvalidArgument("subset: index out of range");
    out.x.push_back(s.x[i]);
    out.y.push_back(s.y[i]);
  }
  return out;
}

double evaluate(const reason::LinearModel& m, const reason::LabeledSet& s) {
  if (s.x.size() != s.y.size()) throw ShapeError("evaluate: features and labels are misaligned");
  if (s.x.empty()) throw InvalidArgument("evaluate: empty evaluation set");
  return reason::accuracy(m, s.x, s.y);
}

namespace {

// Restricts to `heads` while keeping the layout's own head order, so that
// restricting to every head reproduces the unrestricted problem exactly.
std::vector<HeadId> in_layout_order(std::vector<HeadId> heads, const features::FeatureLayout& layout) {
  std::map<HeadId, std::size_t> pos;
  for (std::size_t i = 0; i < layout.heads.size(); ++i) pos[layout.heads[i]] = i;
  for (const auto& h : heads)
    if (!pos.count(h)) throw InvalidArgument("head " + h.name() + " not in the feature layout");
  std::sort(heads.begin(), heads.end(), [&](const HeadId& a, const HeadId& b) { return pos[a] < pos[b]; });
  return heads;
}

reason::LabeledSet restrict_set(const reason::LabeledSet& s, const std::vector<HeadId>& heads) {
  reason::LabeledSet out;
  out.y = s.y;
  for (const auto& x : s.x) out.x.push_back(reason::restrict_features(x, heads));
  return out;
}

struct CellAcc {
  reason::LinearModel model;
  double train = 0, valid = 0, test = 0;
  std::map<std::string, double> foreign;
  double avg = 0;
};

struct LanguageFit {
  SplitPlan plan;
  std::vector<CellAcc> cells;
};

// Trains one model per resample on `lang`; `restrict_to` (if non-empty)
// selects heads first. Resamples run in parallel; results land in fixed slots.
LanguageFit fit_language(const FeatureTable& t, const std::string& lang, const ExperimentConfig& cfg,
                         const std::vector<HeadId>& restrict_to = {}) {
  const auto& own_full = t.langs.at(lang);
  LanguageFit fit;
  fit.plan = make_splits(own_full.x.size(), lang, cfg.seed, cfg.resamples);

  std::vector<HeadId> heads;
  if (!restrict_to.empty()) heads = in_layout_order(restrict_to, own_full.x.front().layout);
  auto prep = [&](const reason::LabeledSet& s) { return heads.empty() ? s : restrict_set(s, heads); };
  const auto own = prep(own_full);
  std::map<std::string, reason::LabeledSet> others;
  for (const auto& [l, s] : t.langs)
    if (l != lang) others[l] = prep(s);
  const auto test = subset(own, fit.plan.test);

  const int R = static_cast<int>(fit.plan.resamples.size());
  fit.cells.resize(static_cast<std::size_t>(R));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(R));
#pragma omp parallel for schedule(dynamic) if (cfg.backend == kernels::Backend::OpenMP)
  for (int r = 0; r < R; ++r) {
    try {
      const auto& rs = fit.plan.resamples[static_cast<std::size_t>(r)];
      auto& c = fit.cells[static_cast<std::size_t>(r)];
      auto tc = cfg.train;
      tc.seed = derive_seed(cfg.seed, "model:" + lang, static_cast<std::uint64_t>(r));
      const auto tr = subset(own, rs.train);
      c.model = reason::train(tr.x, tr.y, tc);
      c.train = evaluate(c.model, tr);
      c.valid = rs.valid.empty() ? 0.0 : evaluate(c.model, subset(own, rs.valid));
      c.test = evaluate(c.model, test);
      double sum = 0.0;
      for (const auto& [l, s] : others) {
        c.foreign[l] = evaluate(c.model, s);
        sum += c.foreign[l];
      }
      c.avg = others.empty() ? 0.0 : sum / static_cast<double>(others.size());
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return fit;
}

template <typename F>
Summary summarize(const LanguageFit& f, F get) {
  std::vector<double> v;
  for (const auto& c : f.cells) v.push_back(get(c));
  return Summary::of(std::move(v));
}

std::vector<std::string> languages(const FeatureTable& t) {
  std::vector<std::string> out;
  for (const auto& [l, _] : t.langs) out.push_back(l);
  return out;
}

}  // namespace

EvalReport zero_shot_matrix(const FeatureTable& t, const ExperimentConfig& cfg,
                            std::map<std::string, TrainedLanguage>* trained) {
  if (t.langs.empty()) throw InvalidArgument("zero_shot_matrix: no languages");
  EvalReport r;
  r.seed = cfg.seed;
  r.langs = languages(t);
  for (const auto& lang : r.langs) {
    LangRow row;
    row.train_lang = lang;
    try {
      const auto fit = fit_language(t, lang, cfg);
      row.n_examples = t.langs.at(lang).x.size();
      row.n_test = fit.plan.test.size();
      row.small_test = row.n_test < 20;
      row.train_acc = summarize(fit, [](const CellAcc& c) { return c.train; });
      row.valid_acc = summarize(fit, [](const CellAcc& c) { return c.valid; });
      row.test_acc = summarize(fit, [](const CellAcc& c) { return c.test; });
      for (const auto& e : r.langs)
        row.cells[e] = e == lang ? row.test_acc : summarize(fit, [&](const CellAcc& c) { return c.foreign.at(e); });
      if (r.langs.size() > 1) row.avg = summarize(fit, [](const CellAcc& c) { return c.avg; });
      if (trained) {
        TrainedLanguage tl;
        tl.plan = fit.plan;
        for (const auto& c : fit.cells) tl.models.push_back(c.model);
        (*trained)[lang] = std::move(tl);
      }
    } catch (const std::exception& e) {
      r.failures.push_back(lang + ": " + e.what());
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::vector<AblationRow> run_ablation(const Dataset& d, const std::string& train_lang, const ExperimentConfig& cfg) {
  if (!d.count(train_lang)) throw InvalidArgument("run_ablation: no data for '" + train_lang + "'");
  const std::pair<const char*, features::FeatureConfig> variants[] = {
      {"default", cfg.features},
      {"concat", [&] { auto c = cfg.features; c.combination = features::Combination::Concat; return c; }()},
      {"max", [&] { auto c = cfg.features; c.pooling = features::Pooling::Max; return c; }()},
      {"to_pronoun", [&] { auto c = cfg.features; c.direction = features::Direction::ToPronoun; return c; }()},
  };
  std::vector<AblationRow> rows;
  for (const auto& [name, fc] : variants) {
    const auto table = featurize_dataset(d, fc, cfg.backend);
    const auto fit = fit_language(table, train_lang, cfg);
    AblationRow row;
    row.name = name;
    row.config = fc;
    row.valid_acc = summarize(fit, [](const CellAcc& c) { return c.valid; });
    for (const auto& [l, _] : table.langs)
      if (l != train_lang) row.zero_shot[l] = summarize(fit, [&](const CellAcc& c) { return c.foreign.at(l); });
    if (!row.zero_shot.empty()) row.avg = summarize(fit, [](const CellAcc& c) { return c.avg; });
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double mas_on(const std::vector<Instance>& xs, const std::vector<std::size_t>* idx,
              const std::optional<std::vector<HeadId>>& heads) {
  std::size_t hit = 0, n = 0;
  auto one = [&](const Instance& x) {
    hit += baselines::mas_score(x.attention, x.spans, heads).label == x.label;
    ++n;
  };
  if (idx) {
    for (auto i : *idx) one(xs.at(i));
  } else {
    for (const auto& x : xs) one(x);
  }
  if (n == 0) throw InvalidArgument("MAS: empty evaluation set");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

std::map<std::string, double> mas_accuracy(const Dataset& d, const std::optional<std::vector<HeadId>>& heads) {
  std::map<std::string, double> out;
  for (const auto& [lang, xs] : d) out[lang] = mas_on(xs, nullptr, heads);
  return out;
}

HeadAnalysis run_head_analysis(const Dataset& d, const ExperimentConfig& cfg, int k) {
  if (d.empty()) throw InvalidArgument("run_head_analysis: empty dataset");
  const auto table = featurize_dataset(d, cfg.features, cfg.backend);
  const auto& layout = table.langs.begin()->second.x.front().layout;

  std::map<std::string, LanguageFit> full;
  std::map<std::string, reason::LinearModel> first_models;
  for (const auto& [lang, _] : table.langs) {
    full[lang] = fit_language(table, lang, cfg);
    first_models[lang] = full[lang].cells.front().model;
  }

  HeadAnalysis h;
  h.k = k;
  h.common = reason::common_heads(first_models, k);
  h.random = reason::random_heads(layout.layers, layout.heads_per_layer, k, derive_seed(cfg.seed, "random-heads"));
  for (const auto& [lang, m] : first_models) h.rankings[lang] = reason::rank_heads(m);

  const std::optional<std::vector<HeadId>> all;
  for (const auto& [lang, fit] : full) {
    const auto test_acc = [](const CellAcc& c) { return c.test; };
    const auto random_fit = fit_language(table, lang, cfg, h.random);
    const auto common_fit = fit_language(table, lang, cfg, h.common);
    h.rows.push_back({lang, "All", "supervised", summarize(fit, test_acc)});
    h.rows.push_back({lang, "Random", "supervised", summarize(random_fit, test_acc)});
    h.rows.push_back({lang, "Common", "supervised", summarize(common_fit, test_acc)});
    const auto& xs = d.at(lang);
    h.rows.push_back({lang, "All", "mas", Summary::of({mas_on(xs, &fit.plan.test, all)})});
    h.rows.push_back({lang, "Random", "mas", Summary::of({mas_on(xs, &fit.plan.test, h.random)})});
    h.rows.push_back({lang, "Common", "mas", Summary::of({mas_on(xs, &fit.plan.test, h.common)})});
  }
  return h;
}

std::map<std::string, std::vector<reason::SweepPoint>> run_sweeps(const FeatureTable& t, const ExperimentConfig& cfg,
                                                                  const std::vector<int>& ns) {
  std::map<std::string, std::vector<reason::SweepPoint>> out;
  for (const auto& [lang, own] : t.langs) {
    const auto plan = make_splits(own.x.size(), lang, cfg.seed, cfg.resamples);
    std::vector<reason::SweepInput> inputs;
    for (const auto& rs : plan.resamples) {
      reason::SweepInput in;
      in.train = subset(own, rs.train);
      in.valid = subset(own, rs.valid);
      in.eval[lang] = subset(own, plan.test);
      for (const auto& [l, s] : t.langs)
        if (l != lang) in.eval[l] = s;
      inputs.push_back(std::move(in));
    }
    out[lang] = reason::topn_sweep(inputs, ns, cfg.train);
  }
  return out;
}

}  // namespace winoattn::harness
