// SPDX-License-Identifier: Apache-2.0
#include <cstdio>

#include <json.hpp>

#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"

namespace winoattn::harness {

using ojson = nlohmann::ordered_json;

namespace {

ojson summary_json(const Summary& s) {
  ojson j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["values"] = s.values;
  return j;
}

Summary summary_from(const ojson& j) {
  Summary s;
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.values = j.at("values").get<std::vector<double>>();
  return s;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string pm(const Summary& s) { return fmt("%.1f ± %.1f", s.mean, s.std); }

std::string emit_json(const EvalReport& r) {
  ojson j;
  j["seed"] = r.seed;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  j["languages"] = r.langs;
  j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["train_lang"] = row.train_lang;
    o["n_examples"] = row.n_examples;
    o["n_test"] = row.n_test;
    o["small_test"] = row.small_test;
    o["train"] = summary_json(row.train_acc);
    o["valid"] = summary_json(row.valid_acc);
    o["test"] = summary_json(row.test_acc);
    ojson cells = ojson::object();
    for (const auto& [l, s] : row.cells) cells[l] = summary_json(s);
    o["cells"] = cells;
    o["avg"] = summary_json(row.avg);
    j["rows"].push_back(o);
  }
  j["baselines"] = ojson::array();
  for (const auto& b : r.baselines) {
    ojson o;
    o["method"] = b.method;
    ojson acc = ojson::object();
    for (const auto& [l, a] : b.accuracy) acc[l] = a;
    o["accuracy"] = acc;
    j["baselines"].push_back(o);
  }
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

std::string emit_csv(const EvalReport& r) {
  std::string out = "train_lang,eval_lang,split,mean,std,resamples\n";
  for (const auto& row : r.rows)
    for (const auto& l : r.langs) {
      auto it = row.cells.find(l);
      const Summary s = it == row.cells.end() ? Summary{} : it->second;
      out += row.train_lang + "," + l + "," + (l == row.train_lang ? "test" : "zero_shot") + "," +
             fmt("%.4f,%.4f", s.mean, s.std) + "," + std::to_string(s.values.size()) + "\n";
    }
  return out;
}

std::string emit_markdown(const EvalReport& r) {
  std::string out = "## Zero-shot accuracy (%)\n\n| Train \\ Eval |";
  for (const auto& l : r.langs) out += " " + l + " |";
  out += " Avg |\n|---|";
  for (std::size_t i = 0; i <= r.langs.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& row : r.rows) {
    out += "| " + row.train_lang + " |";
    for (const auto& l : r.langs) {
      auto it = row.cells.find(l);
      out += " " + (it == row.cells.end() ? std::string("n/a") : pm(it->second)) + " |";
    }
    out += " " + (r.langs.size() > 1 ? pm(row.avg) : std::string("n/a")) + " |\n";
  }

  out += "\n## In-language metrics (%)\n\n| Language | Examples | Test size | Train | Valid | Test | Note |\n"
         "|---|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows)
    out += "| " + row.train_lang + " | " + std::to_string(row.n_examples) + " | " + std::to_string(row.n_test) +
           " | " + pm(row.train_acc) + " | " + pm(row.valid_acc) + " | " + pm(row.test_acc) + " | " +
           (row.small_test ? "test set under 20 examples" : "") + " |\n";

  if (!r.baselines.empty()) {
    out += "\n## Unsupervised baselines (%)\n\n| Method |";
    for (const auto& l : r.langs) out += " " + l + " |";
    out += " Avg |\n|---|";
    for (std::size_t i = 0; i <= r.langs.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& b : r.baselines) {
      out += "| " + b.method + " |";
      double sum = 0.0;
      for (const auto& l : r.langs) {
        auto it = b.accuracy.find(l);
        out += " " + (it == b.accuracy.end() ? std::string("n/a") : fmt("%.1f", it->second)) + " |";
        if (it != b.accuracy.end()) sum += it->second;
      }
      out += " " + fmt("%.1f", b.accuracy.empty() ? 0.0 : sum / static_cast<double>(b.accuracy.size())) + " |\n";
    }
  }

  if (!r.failures.empty()) {
    out += "\n## Failures\n\n";
    for (const auto& f : r.failures) out += "- " + f + "\n";
  }
  out += "\n## Configuration\n\n";
  out += "- seed: " + std::to_string(r.seed) + "\n";
  for (const auto& [k, v] : r.config) out += "- " + k + ": " + v + "\n";
  return out;
}

}  // namespace

std::string emit_report(const EvalReport& r, ReportFormat f) {
  switch (f) {
    case ReportFormat::Json: return emit_json(r);
    case ReportFormat::Csv: return emit_csv(r);
    case ReportFormat::Markdown: return emit_markdown(r);
  }
  return {};
}

EvalReport parse_report_json(std::string_view text) {
  EvalReport r;
  try {
    const auto j = ojson::parse(text);
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    r.langs = j.at("languages").get<std::vector<std::string>>();
    for (const auto& o : j.at("rows")) {
      LangRow row;
      row.train_lang = o.at("train_lang").get<std::string>();
      row.n_examples = o.at("n_examples").get<std::size_t>();
      row.n_test = o.at("n_test").get<std::size_t>();
      row.small_test = o.at("small_test").get<bool>();
      row.train_acc = summary_from(o.at("train"));
      row.valid_acc = summary_from(o.at("valid"));
      row.test_acc = summary_from(o.at("test"));
      for (const auto& [l, s] : o.at("cells").items()) row.cells[l] = summary_from(s);
      row.avg = summary_from(o.at("avg"));
      r.rows.push_back(std::move(row));
    }
    for (const auto& o : j.at("baselines")) {
      BaselineRow b;
      b.method = o.at("method").get<std::string>();
      for (const auto& [l, a] : o.at("accuracy").items()) b.accuracy[l] = a.get<double>();
      r.baselines.push_back(std::move(b));
    }
    r.failures = j.at("failures").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report json: ") + e.what());
  }
  return r;
}

std::string ablation_to_markdown(const std::vector<AblationRow>& rows, const std::vector<std::string>& langs) {
  std::string out = "| Variant | Valid |";
  for (const auto& l : langs) out += " " + l + " |";
  out += " Avg |\n|---|---|";
  for (std::size_t i = 0; i <= langs.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& r : rows) {
    out += "| " + r.name + " | " + pm(r.valid_acc) + " |";
    for (const auto& l : langs) {
      auto it = r.zero_shot.find(l);
      out += " " + (it == r.zero_shot.end() ? std::string("-") : pm(it->second)) + " |";
    }
    out += " " + (r.zero_shot.empty() ? std::string("-") : pm(r.avg)) + " |\n";
  }
  return out;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows, const std::vector<std::string>& langs) {
  std::string out = "variant,pooling,direction,combination,column,mean,std\n";
  for (const auto& r : rows) {
    const std::string prefix = r.name + "," + std::string(features::to_string(r.config.pooling)) + "," +
                               std::string(features::to_string(r.config.direction)) + "," +
                               std::string(features::to_string(r.config.combination)) + ",";
    out += prefix + "valid," + fmt("%.4f,%.4f", r.valid_acc.mean, r.valid_acc.std) + "\n";
    for (const auto& l : langs) {
      auto it = r.zero_shot.find(l);
      if (it != r.zero_shot.end()) out += prefix + l + "," + fmt("%.4f,%.4f", it->second.mean, it->second.std) + "\n";
    }
    if (!r.zero_shot.empty()) out += prefix + "avg," + fmt("%.4f,%.4f", r.avg.mean, r.avg.std) + "\n";
  }
  return out;
}

std::string heads_to_markdown(const HeadAnalysis& h) {
  auto list = [](const std::vector<HeadId>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x.name();
    return s;
  };
  std::string out = "Common heads (k=" + std::to_string(h.k) + "): " + list(h.common) + "\n\n";
  out += "Random heads: " + list(h.random) + "\n\n";
  out += "| Language | Method | Subset | Accuracy |\n|---|---|---|---|\n";
  for (const auto& r : h.rows) out += "| " + r.lang + " | " + r.method + " | " + r.subset + " | " + pm(r.acc) + " |\n";
  return out;
}

std::string heads_to_csv(const HeadAnalysis& h) {
  std::string out = "lang,method,subset,mean,std\n";
  for (const auto& r : h.rows)
    out += r.lang + "," + r.method + "," + r.subset + "," + fmt("%.4f,%.4f", r.acc.mean, r.acc.std) + "\n";
  return out;
}

}  // namespace winoattn::harness
