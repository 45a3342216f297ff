// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/baselines.hpp"
#include "winoattn/corpus.hpp"
#include "winoattn/encoder.hpp"
#include "winoattn/features.hpp"
#include "winoattn/reason.hpp"
#include "winoattn/synthetic.hpp"
#include "winoattn/tokenizer.hpp"

namespace winoattn::harness {

using reason::Summary;

/// One binary problem with its attention record (from the masked sequence).
struct Instance {
  std::string id;
  std::string lang;
  int label = 0;
  ExampleSpans spans;
  AttentionRecord attention;
  std::vector<int> token_ids;  // unmasked ids; empty for imported dumps
};

/// Examples grouped by language, each group in input order.
using Dataset = std::map<std::string, std::vector<Instance>>;

// ---- data sources ----

/// Sidecar line: {"id", "pronoun": [start, len], "candidates": [[s, l], [s, l]]}
/// with optional "lang" and "label".
struct SidecarEntry {
  std::string id;
  std::optional<std::string> lang;
  std::optional<int> label;
  ExampleSpans spans;
};
std::string sidecar_line(const SidecarEntry& e);
std::vector<SidecarEntry> parse_sidecar(std::string_view text);

/// File name used for an example's dump: the id with every byte outside
/// [A-Za-z0-9._-] replaced by '_', plus ".wdmp".
std::string dump_file_name(std::string_view id);

/// Reads `dir`/spans.jsonl and one dump per entry. Language and label come
/// from the sidecar or, when absent there, from `examples` matched by id.
Dataset load_dumps(const std::filesystem::path& dir, const std::vector<corpus::WinogradExample>* examples = nullptr);

/// Runs the built-in encoder over each example with its pronoun masked.
Dataset encode_examples(const std::vector<corpus::WinogradExample>& examples, const Tokenizer& tok,
                        const EncoderWeights& w, kernels::Backend backend = kernels::Backend::Serial);

Dataset from_synthetic(const std::vector<reason::SyntheticExample>& xs);

// ---- split protocol ----

struct Resample {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

/// Indices into one language's instance list; all index lists are sorted.
struct SplitPlan {
  std::string lang;
  std::uint64_t seed = 0;
  std::vector<std::size_t> test;
  std::vector<Resample> resamples;
};

inline constexpr int kResamples = 5;

/// Test = floor(10%) (at least 1), drawn first; then `resamples` independent
/// train/valid partitions of the rest with valid = floor(10%) of the whole.
/// Requires at least 10 examples.
SplitPlan make_splits(std::size_t n_examples, const std::string& lang, std::uint64_t seed,
                      int resamples = kResamples);

// ---- experiments ----

struct ExperimentConfig {
  features::FeatureConfig features;
  reason::TrainConfig train;
  std::uint64_t seed = 0;
  int resamples = kResamples;
  kernels::Backend backend = kernels::Backend::OpenMP;
};

/// Featurized view of a dataset for one FeatureConfig.
struct FeatureTable {
  features::FeatureConfig config;
  std::map<std::string, reason::LabeledSet> langs;
};
FeatureTable featurize_dataset(const Dataset& d, const features::FeatureConfig& cfg,
                               kernels::Backend backend = kernels::Backend::Serial);

reason::LabeledSet subset(const reason::LabeledSet& s, const std::vector<std::size_t>& idx);

/// Percentage correct. Throws on empty input or misaligned labels.
double evaluate(const reason::LinearModel& m, const reason::LabeledSet& s);

struct LangRow {
  std::string train_lang;
  std::size_t n_examples = 0;
  std::size_t n_test = 0;
  bool small_test = false;  // test split under 20 examples
  Summary train_acc, valid_acc, test_acc;
  // Keyed by eval language: own test split on the diagonal, the full
  // foreign subset elsewhere.
  std::map<std::string, Summary> cells;
  Summary avg;  // per-resample mean over the other languages
};

struct BaselineRow {
  std::string method;
  std::map<std::string, double> accuracy;  // by language, over the full subset
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;  // echo, in a fixed order
  std::vector<std::string> langs;
  std::vector<LangRow> rows;
  std::vector<BaselineRow> baselines;
  std::vector<std::string> failures;
};

struct TrainedLanguage {
  SplitPlan plan;
  std::vector<reason::LinearModel> models;  // one per resample
};

/// Per-language training over the resamples, evaluated on the own test
/// split and on every other language's full subset.
EvalReport zero_shot_matrix(const FeatureTable& t, const ExperimentConfig& cfg,
                            std::map<std::string, TrainedLanguage>* trained = nullptr);

struct AblationRow {
  std::string name;  // default, concat, max, to_pronoun
  features::FeatureConfig config;
  Summary valid_acc;
  std::map<std::string, Summary> zero_shot;  // other languages only
  Summary avg;
};
std::vector<AblationRow> run_ablation(const Dataset& d, const std::string& train_lang, const ExperimentConfig& cfg);

struct HeadRow {
  std::string lang;
  std::string subset;  // All, Random, Common
  std::string method;  // supervised, mas
  Summary acc;
};
struct HeadAnalysis {
  int k = 0;
  std::vector<HeadId> common;
  std::vector<HeadId> random;
  std::map<std::string, std::vector<HeadId>> rankings;  // from the resample-0 models
  std::vector<HeadRow> rows;
};
/// Supervised rows report test accuracy over the resamples; MAS rows are
/// evaluated on the same test split.
HeadAnalysis run_head_analysis(const Dataset& d, const ExperimentConfig& cfg, int k = 5);

/// Top-N sweep per training language (curves for every language in `d`).
std::map<std::string, std::vector<reason::SweepPoint>> run_sweeps(const FeatureTable& t, const ExperimentConfig& cfg,
                                                                  const std::vector<int>& ns);

/// MAS over full subsets, optionally restricted to `heads`.
std::map<std::string, double> mas_accuracy(const Dataset& d, const std::optional<std::vector<HeadId>>& heads);

// ---- reports ----

enum class ReportFormat { Json, Csv, Markdown };
std::string emit_report(const EvalReport& r, ReportFormat fmt);
EvalReport parse_report_json(std::string_view text);

std::string ablation_to_markdown(const std::vector<AblationRow>& rows, const std::vector<std::string>& langs);
std::string ablation_to_csv(const std::vector<AblationRow>& rows, const std::vector<std::string>& langs);
std::string heads_to_markdown(const HeadAnalysis& h);
std::string heads_to_csv(const HeadAnalysis& h);

// ---- run configuration ----

/// Flat view of a small TOML subset: `key = value` lines under optional
/// `[section]` headers; values are strings, numbers, booleans or flat arrays.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  struct Value {
    enum Kind { String, Number, Bool, List } kind = String;
    std::string text;
    std::vector<std::string> items;
  };
  std::map<std::string, Value> values_;
  const Value* find(const std::string& key) const;
};

struct SyntheticLanguage {
  std::string lang;
  std::vector<HeadId> planted;
};

struct RunConfig {
  ExperimentConfig experiment;
  int k = 5;
  std::vector<int> ns;
  bool ablation = true;
  bool head_analysis = true;
  std::vector<baselines::Method> baselines;
  std::string ablation_lang;  // empty: first language

  std::string source = "dumps";  // dumps, synthetic or encoder
  std::string xwino;             // labels/langs for dumps; input for encoder
  std::string weights, vocab;    // encoder source and LM baselines

  reason::SyntheticSpec synthetic;  // shared shape; planted heads per language
  std::vector<SyntheticLanguage> synthetic_langs;

  /// Relative paths are resolved against `base_dir`.
  static RunConfig from_text(std::string_view text, const std::filesystem::path& base_dir = {});
  std::vector<std::pair<std::string, std::string>> echo() const;
};

struct RunResult {
  EvalReport report;
  int exit_code = 0;
};

/// Full experiment: data, zero-shot matrix, baselines, ablation, head
/// analysis and sweeps. Writes report.{json,csv,md}, models/, curves/,
/// ablation.{csv,md}, heads.{csv,md} under `out_dir`.
RunResult run(const RunConfig& cfg, const std::filesystem::path& dump_dir, const std::filesystem::path& out_dir);

}  // namespace winoattn::harness
