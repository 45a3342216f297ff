// SPDX-License-Identifier: Apache-2.0
// winoattn command-line entry point.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "winoattn/baselines.hpp"
#include "winoattn/binary_io.hpp"
#include "winoattn/corpus.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/error.hpp"
#include "winoattn/features.hpp"
#include "winoattn/harness.hpp"
#include "winoattn/mlm_trainer.hpp"
#include "winoattn/reason.hpp"
#include "winoattn/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace winoattn;

namespace {

std::string extension(const std::string& path) { return fs::path(path).extension().string(); }

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw InvalidArgument("not an integer: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

harness::RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return harness::RunConfig::from_text("");
  return harness::RunConfig::from_text(read_file(path), fs::path(path).parent_path());
}

harness::Dataset load_dumps_for(const harness::RunConfig& cfg, const std::string& dump_dir) {
  std::vector<corpus::WinogradExample> examples;
  if (!cfg.xwino.empty()) examples = corpus::read_xwino(read_file(cfg.xwino));
  return harness::load_dumps(dump_dir, cfg.xwino.empty() ? nullptr : &examples);
}

const std::vector<harness::Instance>& language(const harness::Dataset& d, const std::string& lang) {
  auto it = d.find(lang);
  if (it == d.end()) throw InvalidArgument("no examples for language '" + lang + "'");
  return it->second;
}

// ---- corpus ----

struct ConvertArgs {
  std::string format, in, out, report, lang = "en", repair, rejects;
};

void cmd_convert(const ConvertArgs& a) {
  corpus::ParseOptions opts;
  opts.default_lang = a.lang;
  opts.source_name = fs::path(a.in).filename().string();
  const auto rules = a.repair.empty() ? corpus::RepairConfig::defaults()
                                      : corpus::RepairConfig::from_json(read_file(a.repair));
  const auto res = corpus::convert(read_file(a.in), corpus::parse_format(a.format), opts, rules);
  write_file(a.out, corpus::serialize_xwino(res.examples));
  if (!a.report.empty()) {
    const auto ext = extension(a.report);
    write_file(a.report, ext == ".csv"    ? res.stats.to_csv()
                         : ext == ".json" ? res.stats.to_json()
                                          : res.stats.to_markdown());
  }
  std::string rej;
  for (const auto& r : res.rejects) {
    nlohmann::ordered_json j;
    j["record"] = r.record;
    j["lang"] = r.lang;
    j["code"] = std::string(corpus::to_string(r.reason.code));
    j["detail"] = r.reason.detail;
    rej += j.dump() + "\n";
  }
  if (!a.rejects.empty()) write_file(a.rejects, rej);
  std::fprintf(stderr, "converted %zu examples, rejected %zu\n", res.examples.size(), res.rejects.size());
}

// ---- encoder ----

struct InitArgs {
  std::string corpus, vocab_out, weights_out;
  int layers = 2, heads = 2, d_model = 16, d_ff = 32, max_seq = 64, min_count = 1;
  bool lowercase = true;
  std::uint64_t seed = 0;
};

void cmd_encoder_init(const InitArgs& a) {
  const auto examples = corpus::read_xwino(read_file(a.corpus));
  std::vector<std::string> texts;
  for (const auto& e : examples) texts.push_back(e.sentence);
  const auto tok = Tokenizer::build(texts, a.lowercase, static_cast<std::size_t>(a.min_count));
  EncoderConfig c{a.layers, a.heads, a.d_model, a.d_ff, tok.size(), a.max_seq};
  c.validate();
  write_file(a.vocab_out, tok.to_text());
  write_file(a.weights_out, save_weights(EncoderWeights::random(c, a.seed)));
  std::fprintf(stderr, "vocab %d tokens, %d layers x %d heads\n", tok.size(), c.layers, c.heads);
}

struct TrainEncArgs {
  std::string weights, vocab, corpus, out;
  MlmTrainConfig cfg;
};

void cmd_encoder_train(const TrainEncArgs& a) {
  auto w = load_weights(read_file(a.weights));
  const auto tok = Tokenizer::from_text(read_file(a.vocab));
  std::vector<std::vector<int>> seqs;
  for (const auto& e : corpus::read_xwino(read_file(a.corpus))) {
    std::vector<int> ids;
    for (const auto& t : tok.segment(e.sentence)) ids.push_back(tok.id(t.text));
    if (!ids.empty()) seqs.push_back(std::move(ids));
  }
  const auto rep = train_mlm(w, seqs, tok.mask_id(), a.cfg);
  write_file(a.out, save_weights(w));
  if (!rep.losses.empty())
    std::fprintf(stderr, "loss %.4f -> %.4f over %zu steps\n", rep.losses.front(), rep.losses.back(),
                 rep.losses.size());
}

struct EncodeArgs {
  std::string weights, vocab, in, dump_dir, tag = "builtin";
  bool logits = false;
};

void cmd_encode(const EncodeArgs& a) {
  const auto w = load_weights(read_file(a.weights));
  const auto tok = Tokenizer::from_text(read_file(a.vocab));
  const auto examples = corpus::read_xwino(read_file(a.in));
  fs::create_directories(a.dump_dir);
  std::string sidecar;
  for (const auto& ex : examples) {
    const auto te = tokenize(tok, ex);
    auto out = forward(w, features::mask_pronoun(te, tok.mask_id()));
    out.attention.model_tag = a.tag;
    write_file((fs::path(a.dump_dir) / harness::dump_file_name(ex.id)).string(),
               save_attention_dump(ex.id, out.attention, a.logits ? &out.logits : nullptr));
    sidecar += harness::sidecar_line({ex.id, ex.lang, ex.label, te.spans});
  }
  write_file((fs::path(a.dump_dir) / "spans.jsonl").string(), sidecar);
  std::fprintf(stderr, "wrote %zu dumps\n", examples.size());
}

// ---- features and classifier ----

struct DataArgs {
  std::string config, dump_dir, lang, out;
};

void cmd_featurize(const DataArgs& a) {
  const auto cfg = load_run_config(a.config);
  const auto d = load_dumps_for(cfg, a.dump_dir);
  const auto table = harness::featurize_dataset(d, cfg.experiment.features, cfg.experiment.backend);
  std::vector<features::FeatureVector> rows;
  std::vector<int> labels;
  for (const auto& [lang, set] : table.langs) {
    if (!a.lang.empty() && lang != a.lang) continue;
    rows.insert(rows.end(), set.x.begin(), set.x.end());
    labels.insert(labels.end(), set.y.begin(), set.y.end());
  }
  write_file(a.out, features::to_csv(rows, labels));
}

void cmd_train(const DataArgs& a) {
  const auto cfg = load_run_config(a.config);
  const auto d = load_dumps_for(cfg, a.dump_dir);
  const auto& xs = language(d, a.lang);
  harness::Dataset one{{a.lang, xs}};
  const auto table = harness::featurize_dataset(one, cfg.experiment.features, cfg.experiment.backend);
  const auto& set = table.langs.at(a.lang);
  auto tc = cfg.experiment.train;
  tc.seed = cfg.experiment.seed;
  const auto m = reason::train(set.x, set.y, tc);
  write_file(a.out, m.to_json());
  std::fprintf(stderr, "trained on %zu examples: accuracy %.1f%%, %d iterations, |grad| %.2e\n", set.x.size(),
               reason::accuracy(m, set.x, set.y), m.meta.iterations, m.meta.gradient_norm);
}

struct HeadsArgs {
  std::vector<std::string> models;
  int k = 5, layers = 12, heads = 12;
  std::uint64_t seed = 0;
};

void cmd_heads_rank(const HeadsArgs& a) {
  if (a.models.size() != 1) throw InvalidArgument("heads rank takes exactly one --model");
  const auto m = reason::LinearModel::from_json(read_file(a.models[0]));
  auto r = reason::rank_heads(m);
  if (a.k > 0 && static_cast<std::size_t>(a.k) < r.size()) r.resize(static_cast<std::size_t>(a.k));
  std::cout << reason::format_head_list(r);
}

void cmd_heads_common(const HeadsArgs& a) {
  std::map<std::string, reason::LinearModel> models;
  for (const auto& p : a.models) models[p] = reason::LinearModel::from_json(read_file(p));
  std::cout << reason::format_head_list(reason::common_heads(models, a.k));
}

void cmd_heads_random(const HeadsArgs& a) {
  std::cout << reason::format_head_list(reason::random_heads(a.layers, a.heads, a.k, a.seed));
}

struct SweepArgs : DataArgs {
  std::string ns;
};

void cmd_sweep(const SweepArgs& a) {
  const auto cfg = load_run_config(a.config);
  const auto d = load_dumps_for(cfg, a.dump_dir);
  const auto table = harness::featurize_dataset(d, cfg.experiment.features, cfg.experiment.backend);
  const auto curves = harness::run_sweeps(table, cfg.experiment, parse_int_list(a.ns));
  auto it = curves.find(a.lang);
  if (it == curves.end()) throw InvalidArgument("no examples for language '" + a.lang + "'");
  write_file(a.out, reason::sweep_to_csv(it->second));
}

struct BaselineArgs {
  std::string method, dump_dir, heads, config, weights, vocab, in, out;
  bool raw_scores = false;
};

void cmd_baseline(const BaselineArgs& a) {
  baselines::BaselineConfig bc;
  bc.method = baselines::parse_method(a.method);
  bc.length_norm = !a.raw_scores;
  if (!a.heads.empty()) bc.head_subset = reason::parse_head_list(read_file(a.heads));
  bc.validate();

  struct Row {
    std::string id, lang;
    int label, pred;
    double s0, s1;
  };
  std::vector<Row> rows;
  if (bc.method == baselines::Method::Mas) {
    const auto cfg = load_run_config(a.config);
    for (const auto& [lang, xs] : load_dumps_for(cfg, a.dump_dir))
      for (const auto& x : xs) {
        const auto r = baselines::mas_score(x.attention, x.spans, bc.head_subset);
        rows.push_back({x.id, lang, x.label, r.label, double(r.votes[0]), double(r.votes[1])});
      }
  } else {
    if (a.weights.empty() || a.vocab.empty() || a.in.empty())
      throw InvalidArgument("mlm and pll need --weights, --vocab and --in");
    const auto w = load_weights(read_file(a.weights));
    const auto tok = Tokenizer::from_text(read_file(a.vocab));
    for (const auto& ex : corpus::read_xwino(read_file(a.in))) {
      const auto te = tokenize(tok, ex);
      const auto r = bc.method == baselines::Method::MlmRank
                         ? baselines::mlm_rank(w, te.token_ids, te.spans, tok.mask_id(), bc.length_norm,
                                               kernels::Backend::OpenMP)
                         : baselines::pll_rank(w, te.token_ids, te.spans, tok.mask_id(), bc.length_norm,
                                               kernels::Backend::OpenMP);
      rows.push_back({ex.id, ex.lang, ex.label, r.label, r.scores[0], r.scores[1]});
    }
  }
  const bool mas = bc.method == baselines::Method::Mas;
  std::string csv = mas ? "id,lang,label,prediction,votes0,votes1\n" : "id,lang,label,prediction,score0,score1\n";
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_lang;
  char buf[128];
  for (const auto& r : rows) {
    if (mas) std::snprintf(buf, sizeof buf, ",%d,%d,%d,%d", r.label, r.pred, int(r.s0), int(r.s1));
    else std::snprintf(buf, sizeof buf, ",%d,%d,%.9g,%.9g", r.label, r.pred, r.s0, r.s1);
    csv += r.id + "," + r.lang + buf + "\n";
    auto& c = per_lang[r.lang];
    c.first += r.label == r.pred;
    ++c.second;
  }
  if (a.out.empty()) std::cout << csv;
  else write_file(a.out, csv);
  for (const auto& [lang, c] : per_lang)
    std::fprintf(stderr, "%s: %.1f%% (%zu/%zu)\n", lang.c_str(), 100.0 * double(c.first) / double(c.second),
                 c.first, c.second);
}

struct RunArgs {
  std::string config, dump_dir, out;
};

int cmd_run(const RunArgs& a) {
  const auto cfg = load_run_config(a.config);
  const auto res = harness::run(cfg, a.dump_dir, a.out);
  for (const auto& f : res.report.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
  std::fprintf(stderr, "report written to %s\n", a.out.c_str());
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-based Winograd pronoun resolution toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus normalization");
  corpus_cmd->require_subcommand(1);
  ConvertArgs conv;
  auto* convert = corpus_cmd->add_subcommand("convert", "Convert a source corpus to XWINO JSONL");
  convert->add_option("--format", conv.format, "xwino-jsonl, generic-tsv, dpr-style or superglue-jsonl")->required();
  convert->add_option("--in", conv.in)->required();
  convert->add_option("--out", conv.out)->required();
  convert->add_option("--report", conv.report, "Filtering stats (.md, .csv or .json)");
  convert->add_option("--lang", conv.lang, "Language for records without a tag");
  convert->add_option("--repair", conv.repair, "JSON map lang -> prefix list");
  convert->add_option("--rejects", conv.rejects, "Write rejected records as JSONL");
  convert->callback([&] { cmd_convert(conv); });

  auto* enc = app.add_subcommand("encoder", "Built-in toy encoder");
  enc->require_subcommand(1);
  InitArgs init;
  auto* init_cmd = enc->add_subcommand("init", "Build a vocabulary and random weights");
  init_cmd->add_option("--corpus", init.corpus, "XWINO JSONL")->required();
  init_cmd->add_option("--vocab-out", init.vocab_out)->required();
  init_cmd->add_option("--weights-out", init.weights_out)->required();
  init_cmd->add_option("--layers", init.layers);
  init_cmd->add_option("--heads", init.heads);
  init_cmd->add_option("--d-model", init.d_model);
  init_cmd->add_option("--d-ff", init.d_ff);
  init_cmd->add_option("--max-seq", init.max_seq);
  init_cmd->add_option("--min-count", init.min_count);
  init_cmd->add_option("--seed", init.seed);
  init_cmd->callback([&] { cmd_encoder_init(init); });

  TrainEncArgs tenc;
  auto* tenc_cmd = enc->add_subcommand("train", "Masked-LM training on corpus sentences");
  tenc_cmd->add_option("--weights", tenc.weights)->required();
  tenc_cmd->add_option("--vocab", tenc.vocab)->required();
  tenc_cmd->add_option("--corpus", tenc.corpus, "XWINO JSONL")->required();
  tenc_cmd->add_option("--out", tenc.out)->required();
  tenc_cmd->add_option("--steps", tenc.cfg.steps);
  tenc_cmd->add_option("--batch-size", tenc.cfg.batch_size);
  tenc_cmd->add_option("--lr", tenc.cfg.learning_rate);
  tenc_cmd->add_option("--seed", tenc.cfg.seed);
  tenc_cmd->callback([&] { cmd_encoder_train(tenc); });

  EncodeArgs encode;
  auto* encode_cmd = app.add_subcommand("encode", "Write WDMP1 attention dumps for XWINO examples");
  encode_cmd->add_option("--weights", encode.weights)->required();
  encode_cmd->add_option("--vocab", encode.vocab)->required();
  encode_cmd->add_option("--in", encode.in)->required();
  encode_cmd->add_option("--dump-dir", encode.dump_dir)->required();
  encode_cmd->add_option("--tag", encode.tag, "Model tag stored in each dump");
  encode_cmd->add_flag("--logits", encode.logits, "Include MLM logits");
  encode_cmd->callback([&] { cmd_encode(encode); });

  DataArgs feat;
  auto* feat_cmd = app.add_subcommand("featurize", "Export feature matrices as CSV");
  feat_cmd->add_option("--config", feat.config);
  feat_cmd->add_option("--dump-dir", feat.dump_dir)->required();
  feat_cmd->add_option("--lang", feat.lang, "Only this language");
  feat_cmd->add_option("--out", feat.out)->required();
  feat_cmd->callback([&] { cmd_featurize(feat); });

  DataArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a classifier on one language");
  train_cmd->add_option("--config", train.config);
  train_cmd->add_option("--dump-dir", train.dump_dir)->required();
  train_cmd->add_option("--lang", train.lang)->required();
  train_cmd->add_option("--out", train.out)->required();
  train_cmd->callback([&] { cmd_train(train); });

  HeadsArgs heads;
  auto* heads_cmd = app.add_subcommand("heads", "Head ranking and selection");
  heads_cmd->require_subcommand(1);
  auto* rank = heads_cmd->add_subcommand("rank", "Heads of one model by |weight|");
  rank->add_option("--model", heads.models)->required();
  rank->add_option("--top", heads.k, "Print only the first N (0 = all)")->default_val(0);
  rank->callback([&] { cmd_heads_rank(heads); });
  auto* common = heads_cmd->add_subcommand("common", "Heads with the best mean rank across models");
  common->add_option("--model", heads.models)->required();
  common->add_option("--k", heads.k);
  common->callback([&] { cmd_heads_common(heads); });
  auto* random = heads_cmd->add_subcommand("random", "Uniformly drawn control heads");
  random->add_option("--layers", heads.layers);
  random->add_option("--heads", heads.heads);
  random->add_option("--k", heads.k);
  random->add_option("--seed", heads.seed);
  random->callback([&] { cmd_heads_random(heads); });

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Top-N head retraining curve");
  sweep_cmd->add_option("--config", sweep.config);
  sweep_cmd->add_option("--dump-dir", sweep.dump_dir)->required();
  sweep_cmd->add_option("--lang", sweep.lang)->required();
  sweep_cmd->add_option("--ns", sweep.ns, "Comma-separated N values")->required();
  sweep_cmd->add_option("--out", sweep.out)->required();
  sweep_cmd->callback([&] { cmd_sweep(sweep); });

  BaselineArgs base;
  auto* base_cmd = app.add_subcommand("baseline", "Unsupervised baselines");
  base_cmd->add_option("--method", base.method, "mas, mlm or pll")->required();
  base_cmd->add_option("--dump-dir", base.dump_dir, "Dumps (mas)");
  base_cmd->add_option("--config", base.config, "Run config supplying data.xwino (mas)");
  base_cmd->add_option("--heads", base.heads, "Head list file restricting MAS");
  base_cmd->add_option("--weights", base.weights, "Encoder weights (mlm, pll)");
  base_cmd->add_option("--vocab", base.vocab, "Vocabulary (mlm, pll)");
  base_cmd->add_option("--in", base.in, "XWINO JSONL (mlm, pll)");
  base_cmd->add_option("--out", base.out, "Predictions CSV (default stdout)");
  base_cmd->add_flag("--raw-scores", base.raw_scores, "Disable length normalization");
  base_cmd->callback([&] { cmd_baseline(base); });

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Full experiment with reports");
  run_cmd->add_option("--config", run.config)->required();
  run_cmd->add_option("--dump-dir", run.dump_dir);
  run_cmd->add_option("--out", run.out)->required();
  run_cmd->callback([&] { exit_code = cmd_run(run); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
