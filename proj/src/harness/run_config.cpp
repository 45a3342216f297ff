// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <set>
#include <sstream>

#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"

namespace winoattn::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(const std::string& s, std::size_t lineno) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw ConfigError("config line " + std::to_string(lineno) + ": malformed string " + s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) ++i;
    out += s[i];
  }
  return out;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cf;
  std::istringstream in{std::string(text)};
  std::string raw, section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigError(where + "empty key or value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cf.values_.count(full)) throw ConfigError(where + "duplicate key '" + full + "'");

    Value v;
    if (val.front() == '[') {
      if (val.back() != ']') throw ConfigError(where + "unterminated list");
      v.kind = Value::List;
      const std::string body = val.substr(1, val.size() - 2);
      std::string item;
      bool quoted = false;
      auto flush = [&] {
        const std::string t = trim(item);
        item.clear();
        if (t.empty()) return;
        v.items.push_back(t.front() == '"' ? unquote(t, lineno) : t);
      };
      for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
          flush();
        } else {
          item += c;
        }
      }
      if (quoted) throw ConfigError(where + "unterminated string in list");
      flush();
    } else if (val.front() == '"') {
      v.kind = Value::String;
      v.text = unquote(val, lineno);
    } else if (val == "true" || val == "false") {
      v.kind = Value::Bool;
      v.text = val;
    } else if (is_number(val)) {
      v.kind = Value::Number;
      v.text = val;
    } else {
      throw ConfigError(where + "cannot parse value '" + val + "'");
    }
    cf.values_[full] = std::move(v);
  }
  return cf;
}

const ConfigFile::Value* ConfigFile::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::String) throw ConfigError("config key '" + key + "' must be a string");
  return v->text;
}

double ConfigFile::get_number(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Number) throw ConfigError("config key '" + key + "' must be a number");
  return std::strtod(v->text.c_str(), nullptr);
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const long long x = std::strtoll(v->text.c_str(), &end, 10);
  if (v->kind != Value::Number || end != v->text.c_str() + v->text.size())
    throw ConfigError("config key '" + key + "' must be an integer");
  return x;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Bool) throw ConfigError("config key '" + key + "' must be true or false");
  return v->text == "true";
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  const auto* v = find(key);
  if (!v) return {};
  if (v->kind != Value::List) throw ConfigError("config key '" + key + "' must be a list");
  return v->items;
}

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) out.push_back(k);
  return out;
}

RunConfig RunConfig::from_text(std::string_view text, const std::filesystem::path& base_dir) {
  const auto cf = ConfigFile::parse(text);
  static const std::set<std::string> known = {
      "seed", "resamples", "k", "ns", "ablation", "ablation_lang", "head_analysis", "baselines", "backend",
      "features.pooling", "features.direction", "features.combination",
      "train.lambda", "train.tolerance", "train.max_iterations",
      "data.source", "data.xwino", "data.weights", "data.vocab",
      "synthetic.layers", "synthetic.heads", "synthetic.n_examples", "synthetic.margin", "synthetic.noise",
      "synthetic.seq_len", "synthetic.languages", "synthetic.planted"};
  for (const auto& k : cf.keys())
    if (!known.count(k) && k.rfind("synthetic.planted.", 0) != 0) throw ConfigError("unknown config key '" + k + "'");

  RunConfig rc;
  auto& ex = rc.experiment;
  try {
    const auto seed = cf.get_int("seed", 0);
    if (seed < 0) throw ConfigError("seed must be non-negative");
    ex.seed = static_cast<std::uint64_t>(seed);
    ex.resamples = static_cast<int>(cf.get_int("resamples", kResamples));
    if (ex.resamples < 1) throw ConfigError("resamples must be positive");
    rc.k = static_cast<int>(cf.get_int("k", 5));
    for (const auto& s : cf.get_list("ns")) {
      char* end = nullptr;
      const long v = std::strtol(s.c_str(), &end, 10);
      if (end != s.c_str() + s.size() || v < 1) throw ConfigError("ns entries must be positive integers");
      rc.ns.push_back(static_cast<int>(v));
    }
    rc.ablation = cf.get_bool("ablation", true);
    rc.ablation_lang = cf.get_string("ablation_lang", "");
    rc.head_analysis = cf.get_bool("head_analysis", true);
    for (const auto& m : cf.get_list("baselines")) rc.baselines.push_back(baselines::parse_method(m));
    const auto backend = cf.get_string("backend", "openmp");
    if (backend == "openmp") ex.backend = kernels::Backend::OpenMP;
    else if (backend == "serial") ex.backend = kernels::Backend::Serial;
    else throw ConfigError("backend must be \"serial\" or \"openmp\"");

    ex.features.pooling = features::parse_pooling(cf.get_string("features.pooling", "mean"));
    ex.features.direction = features::parse_direction(cf.get_string("features.direction", "to_candidate"));
    ex.features.combination = features::parse_combination(cf.get_string("features.combination", "subtract"));
    ex.train.lambda = cf.get_number("train.lambda", 1.0);
    ex.train.tolerance = cf.get_number("train.tolerance", 1e-6);
    ex.train.max_iterations = static_cast<int>(cf.get_int("train.max_iterations", 1000));

    auto resolve = [&](const std::string& p) {
      if (p.empty()) return p;
      std::filesystem::path path(p);
      return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
    };
    rc.source = cf.get_string("data.source", "dumps");
    if (rc.source != "dumps" && rc.source != "synthetic" && rc.source != "encoder")
      throw ConfigError("data.source must be dumps, synthetic or encoder");
    rc.xwino = resolve(cf.get_string("data.xwino", ""));
    rc.weights = resolve(cf.get_string("data.weights", ""));
    rc.vocab = resolve(cf.get_string("data.vocab", ""));
    if (rc.source == "encoder" && (rc.xwino.empty() || rc.weights.empty() || rc.vocab.empty()))
      throw ConfigError("data.source = encoder needs data.xwino, data.weights and data.vocab");

    auto& sy = rc.synthetic;
    sy.layers = static_cast<int>(cf.get_int("synthetic.layers", sy.layers));
    sy.heads = static_cast<int>(cf.get_int("synthetic.heads", sy.heads));
    sy.n_examples = static_cast<int>(cf.get_int("synthetic.n_examples", sy.n_examples));
    sy.margin = cf.get_number("synthetic.margin", sy.margin);
    sy.noise = cf.get_number("synthetic.noise", sy.noise);
    sy.seq_len = static_cast<int>(cf.get_int("synthetic.seq_len", sy.seq_len));
    const auto shared = cf.get_list("synthetic.planted");
    for (const auto& lang : cf.get_list("synthetic.languages")) {
      SyntheticLanguage sl;
      sl.lang = lang;
      const auto own = cf.get_list("synthetic.planted." + lang);
      for (const auto& h : own.empty() ? shared : own) sl.planted.push_back(parse_head(h));
      rc.synthetic_langs.push_back(std::move(sl));
    }
    if (rc.source == "synthetic" && rc.synthetic_langs.empty())
      throw ConfigError("data.source = synthetic needs synthetic.languages");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  const auto& ex = experiment;
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("features", ex.features.describe());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", ex.train.lambda);
  out.emplace_back("lambda", buf);
  std::snprintf(buf, sizeof buf, "%g", ex.train.tolerance);
  out.emplace_back("tolerance", buf);
  out.emplace_back("max_iterations", std::to_string(ex.train.max_iterations));
  out.emplace_back("resamples", std::to_string(ex.resamples));
  out.emplace_back("k", std::to_string(k));
  std::string ns_text;
  for (int n : ns) ns_text += (ns_text.empty() ? "" : ",") + std::to_string(n);
  out.emplace_back("ns", ns_text);
  std::string bl;
  for (auto m : baselines) bl += (bl.empty() ? "" : ",") + baselines::to_string(m);
  out.emplace_back("baselines", bl);
  out.emplace_back("source", source);
  if (source == "synthetic") {
    std::snprintf(buf, sizeof buf, "L=%d H=%d n=%d", synthetic.layers, synthetic.heads, synthetic.n_examples);
    out.emplace_back("synthetic", buf);
    std::snprintf(buf, sizeof buf, "mu=%g sigma=%g", synthetic.margin, synthetic.noise);
    out.emplace_back("synthetic_signal", buf);
  }
  return out;
}

}  // namespace winoattn::harness
