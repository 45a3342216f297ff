// SPDX-License-Identifier: Apache-2.0
#include <unordered_map>

#include "winoattn/binary_io.hpp"
#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"
#include "winoattn/rng.hpp"

namespace winoattn::harness {

namespace fs = std::filesystem;

namespace {

Dataset load_data(const RunConfig& cfg, const fs::path& dump_dir) {
  if (cfg.source == "synthetic") {
    std::vector<reason::SyntheticExample> all;
    for (const auto& sl : cfg.synthetic_langs) {
      auto spec = cfg.synthetic;
      spec.lang = sl.lang;
      spec.planted_heads = sl.planted;
      spec.seed = derive_seed(cfg.experiment.seed, "synthetic:" + sl.lang);
      auto xs = reason::generate_synthetic(spec);
      all.insert(all.end(), std::make_move_iterator(xs.begin()), std::make_move_iterator(xs.end()));
    }
    return from_synthetic(all);
  }
  std::vector<corpus::WinogradExample> examples;
  if (!cfg.xwino.empty()) examples = corpus::read_xwino(read_file(cfg.xwino));
  if (cfg.source == "encoder") {
    const auto tok = Tokenizer::from_text(read_file(cfg.vocab));
    const auto w = load_weights(read_file(cfg.weights));
    return encode_examples(examples, tok, w, cfg.experiment.backend);
  }
  if (dump_dir.empty()) throw InvalidArgument("data.source = dumps needs --dump-dir");
  return load_dumps(dump_dir, cfg.xwino.empty() ? nullptr : &examples);
}

BaselineRow lm_baseline(const RunConfig& cfg, const Dataset& d, baselines::Method method) {
  if (cfg.weights.empty() || cfg.vocab.empty() || cfg.xwino.empty())
    throw ConfigError(baselines::to_string(method) + " needs data.weights, data.vocab and data.xwino");
  const auto tok = Tokenizer::from_text(read_file(cfg.vocab));
  const auto w = load_weights(read_file(cfg.weights));
  const auto examples = corpus::read_xwino(read_file(cfg.xwino));
  std::unordered_map<std::string, const corpus::WinogradExample*> by_id;
  for (const auto& ex : examples) by_id[ex.id] = &ex;

  BaselineRow row;
  row.method = baselines::to_string(method);
  for (const auto& [lang, xs] : d) {
    std::size_t hit = 0;
    for (const auto& x : xs) {
      auto it = by_id.find(x.id);
      if (it == by_id.end()) throw InvalidArgument("no XWINO record for '" + x.id + "'");
      const auto te = tokenize(tok, *it->second);
      const auto r = method == baselines::Method::MlmRank
                         ? baselines::mlm_rank(w, te.token_ids, te.spans, tok.mask_id(), true, cfg.experiment.backend)
                         : baselines::pll_rank(w, te.token_ids, te.spans, tok.mask_id(), true, cfg.experiment.backend);
      hit += r.label == x.label;
    }
    row.accuracy[lang] = 100.0 * static_cast<double>(hit) / static_cast<double>(xs.size());
  }
  return row;
}

}  // namespace

RunResult run(const RunConfig& cfg, const fs::path& dump_dir, const fs::path& out_dir) {
  const Dataset d = load_data(cfg, dump_dir);
  if (d.empty()) throw InvalidArgument("run: no examples loaded");
  const auto& exp = cfg.experiment;
  const auto table = featurize_dataset(d, exp.features, exp.backend);

  std::map<std::string, TrainedLanguage> trained;
  RunResult res;
  res.report = zero_shot_matrix(table, exp, &trained);
  auto& report = res.report;
  report.config = cfg.echo();

  fs::create_directories(out_dir / "models");
  for (const auto& [lang, tl] : trained)
    for (std::size_t r = 0; r < tl.models.size(); ++r)
      write_file(out_dir / "models" / (lang + "-r" + std::to_string(r) + ".json"), tl.models[r].to_json());

  for (auto m : cfg.baselines) {
    try {
      if (m == baselines::Method::Mas) {
        report.baselines.push_back({"mas", mas_accuracy(d, std::nullopt)});
      } else {
        report.baselines.push_back(lm_baseline(cfg, d, m));
      }
    } catch (const std::exception& e) {
      report.failures.push_back("baseline " + baselines::to_string(m) + ": " + e.what());
    }
  }

  if (cfg.ablation) {
    try {
      const std::string lang = cfg.ablation_lang.empty() ? d.begin()->first : cfg.ablation_lang;
      const auto rows = run_ablation(d, lang, exp);
      std::vector<std::string> others;
      for (const auto& [l, _] : d)
        if (l != lang) others.push_back(l);
      write_file(out_dir / "ablation.md", "Trained on " + lang + "\n\n" + ablation_to_markdown(rows, others));
      write_file(out_dir / "ablation.csv", ablation_to_csv(rows, others));
    } catch (const std::exception& e) {
      report.failures.push_back(std::string("ablation: ") + e.what());
    }
  }

  if (cfg.head_analysis) {
    try {
      const auto h = run_head_analysis(d, exp, cfg.k);
      write_file(out_dir / "heads.md", heads_to_markdown(h));
      write_file(out_dir / "heads.csv", heads_to_csv(h));
      write_file(out_dir / "common_heads.txt", reason::format_head_list(h.common));
    } catch (const std::exception& e) {
      report.failures.push_back(std::string("head analysis: ") + e.what());
    }
  }

  if (!cfg.ns.empty()) {
    try {
      fs::create_directories(out_dir / "curves");
      for (const auto& [lang, curve] : run_sweeps(table, exp, cfg.ns))
        write_file(out_dir / "curves" / (lang + ".csv"), reason::sweep_to_csv(curve));
    } catch (const std::exception& e) {
      report.failures.push_back(std::string("sweep: ") + e.what());
    }
  }

  write_file(out_dir / "report.json", emit_report(report, ReportFormat::Json));
  write_file(out_dir / "report.csv", emit_report(report, ReportFormat::Csv));
  write_file(out_dir / "report.md", emit_report(report, ReportFormat::Markdown));
  res.exit_code = report.failures.empty() ? 0 : 1;
  return res;
}

}  // namespace winoattn::harness
