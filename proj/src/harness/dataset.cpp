// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "winoattn/binary_io.hpp"
#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"

namespace winoattn::harness {

namespace {

nlohmann::ordered_json span_json(const TokenSpan& s) { return {s.start, s.len}; }

TokenSpan span_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("sidecar: span must be [start, len]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::string sidecar_line(const SidecarEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  if (e.lang) j["lang"] = *e.lang;
  if (e.label) j["label"] = *e.label;
  j["pronoun"] = span_json(e.spans.pronoun);
  j["candidates"] = {span_json(e.spans.candidates[0]), span_json(e.spans.candidates[1])};
  return j.dump() + "\n";
}

std::vector<SidecarEntry> parse_sidecar(std::string_view text) {
  std::vector<SidecarEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      SidecarEntry e;
      e.id = j.at("id").get<std::string>();
      if (j.contains("lang")) e.lang = j["lang"].get<std::string>();
      if (j.contains("label")) e.label = j["label"].get<int>();
      e.spans.pronoun = span_from(j.at("pronoun"));
      const auto& c = j.at("candidates");
      if (!c.is_array() || c.size() != 2) throw FormatError("sidecar: need exactly two candidate spans");
      e.spans.candidates = {span_from(c[0]), span_from(c[1])};
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("sidecar line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

std::string dump_file_name(std::string_view id) {
  std::string s(id);
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return s + ".wdmp";
}

Dataset load_dumps(const std::filesystem::path& dir, const std::vector<corpus::WinogradExample>* examples) {
  const auto entries = parse_sidecar(read_file(dir / "spans.jsonl"));
  std::unordered_map<std::string, const corpus::WinogradExample*> by_id;
  if (examples)
    for (const auto& ex : *examples) by_id[ex.id] = &ex;

  Dataset d;
  for (const auto& e : entries) {
    Instance inst;
    inst.id = e.id;
    const corpus::WinogradExample* ex = nullptr;
    if (auto it = by_id.find(e.id); it != by_id.end()) ex = it->second;
    if (e.lang) inst.lang = *e.lang;
    else if (ex) inst.lang = ex->lang;
    else throw FormatError("dump '" + e.id + "': no language in the sidecar and no matching XWINO record");
    if (e.label) inst.label = *e.label;
    else if (ex) inst.label = ex->label;
    else throw FormatError("dump '" + e.id + "': no label in the sidecar and no matching XWINO record");
    if (inst.label != 0 && inst.label != 1) throw FormatError("dump '" + e.id + "': label must be 0 or 1");

    auto dump = import_attention_dump(read_file(dir / dump_file_name(e.id)));
    if (dump.example_id != e.id)
      throw FormatError("dump for '" + e.id + "' carries id '" + dump.example_id + "'");
    e.spans.validate(dump.attention.seq_len);
    inst.spans = e.spans;
    inst.attention = std::move(dump.attention);
    d[inst.lang].push_back(std::move(inst));
  }
  for (const auto& [lang, xs] : d)
    for (const auto& x : xs)
      if (x.attention.layers != xs.front().attention.layers || x.attention.heads != xs.front().attention.heads)
        throw ShapeError("dumps for '" + lang + "' disagree on layer/head counts");
  return d;
}

Dataset encode_examples(const std::vector<corpus::WinogradExample>& examples, const Tokenizer& tok,
                        const EncoderWeights& w, kernels::Backend backend) {
  std::vector<Instance> all(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
  const int n = static_cast<int>(examples.size());
#pragma omp parallel for schedule(dynamic) if (backend == kernels::Backend::OpenMP)
  for (int i = 0; i < n; ++i) {
    try {
      const auto& ex = examples[static_cast<std::size_t>(i)];
      const auto te = tokenize(tok, ex);
      const auto masked = features::mask_pronoun(te, tok.mask_id());
      auto out = forward(w, masked, kernels::Backend::Serial);
      auto& inst = all[static_cast<std::size_t>(i)];
      inst.id = ex.id;
      inst.lang = ex.lang;
      inst.label = ex.label;
      inst.spans = te.spans;
      inst.attention = std::move(out.attention);
      inst.token_ids = te.token_ids;
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  Dataset d;
  for (auto& inst : all) d[inst.lang].push_back(std::move(inst));
  return d;
}

Dataset from_synthetic(const std::vector<reason::SyntheticExample>& xs) {
  Dataset d;
  for (const auto& x : xs) {
    Instance inst;
    inst.id = x.id;
    inst.lang = x.lang;
    inst.label = x.label;
    inst.spans = x.spans;
    inst.attention = x.attention;
    d[x.lang].push_back(std::move(inst));
  }
  return d;
}

}  // namespace winoattn::harness
