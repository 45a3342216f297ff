// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "winoattn/corpus.hpp"
#include "winoattn/error.hpp"
#include "winoattn/utf8.hpp"

namespace winoattn::corpus {

using nlohmann::json;

std::string_view to_string(RejectCode c) {
  switch (c) {
    case RejectCode::CandidateNotSubstring: return "CANDIDATE_NOT_SUBSTRING";
    case RejectCode::AmbiguousPronoun: return "AMBIGUOUS_PRONOUN";
    case RejectCode::PronounNotFound: return "PRONOUN_NOT_FOUND";
    case RejectCode::MalformedRecord: return "MALFORMED_RECORD";
  }
  return "?";
}

Format parse_format(std::string_view id) {
  if (id == "xwino-jsonl") return Format::XwinoJsonl;
  if (id == "generic-tsv") return Format::GenericTsv;
  if (id == "dpr-style") return Format::DprStyle;
  if (id == "superglue-jsonl") return Format::SuperglueJsonl;
  throw InvalidArgument("unknown format id '" + std::string(id) +
                        "' (expected xwino-jsonl, generic-tsv, dpr-style or superglue-jsonl)");
}

std::string_view format_id(Format f) {
  switch (f) {
    case Format::XwinoJsonl: return "xwino-jsonl";
    case Format::GenericTsv: return "generic-tsv";
    case Format::DprStyle: return "dpr-style";
    case Format::SuperglueJsonl: return "superglue-jsonl";
  }
  return "?";
}

namespace {

std::vector<std::string_view> split_lines(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    auto line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_on(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto at = s.find(sep, pos);
    if (at == std::string_view::npos) {
      out.emplace_back(trim(s.substr(pos)));
      break;
    }
    out.emplace_back(trim(s.substr(pos, at - pos)));
    pos = at + sep.size();
  }
  return out;
}

std::string line_ref(std::size_t lineno) { return "line " + std::to_string(lineno); }

Reject malformed(std::string record, std::string lang, std::string detail) {
  return {std::move(record), std::move(lang), {RejectCode::MalformedRecord, std::move(detail)}};
}

// Checks the fields every format must provide before a RawExample is emitted.
std::optional<std::string> raw_problem(const RawExample& r) {
  if (r.sentence.empty()) return "empty sentence";
  if (r.pronoun_text.empty()) return "empty pronoun";
  if (r.candidate_texts.size() < 2) return "fewer than 2 candidates";
  if (r.correct_index >= r.candidate_texts.size()) return "answer index out of range";
  for (const auto& c : r.candidate_texts)
    if (c.empty()) return "empty candidate";
  if (r.pronoun_char_span && (r.pronoun_char_span->start >= r.pronoun_char_span->end ||
                              r.pronoun_char_span->end > r.sentence.size()))
    return "pronoun offset out of range";
  return std::nullopt;
}

void emit(ParseResult& out, RawExample r, const std::string& record) {
  if (auto problem = raw_problem(r)) {
    out.rejects.push_back(malformed(record, r.lang, *problem));
    return;
  }
  out.examples.push_back(std::move(r));
}

std::optional<CharSpan> json_span(const json& j) {
  if (!j.contains("start") || !j.contains("end")) return std::nullopt;
  const auto& s = j.at("start");
  const auto& e = j.at("end");
  if (!s.is_number_unsigned() || !e.is_number_unsigned()) return std::nullopt;
  return CharSpan{s.get<std::size_t>(), e.get<std::size_t>()};
}

void parse_xwino(std::string_view bytes, const ParseOptions& opts, ParseResult& out) {
  auto lines = split_lines(bytes);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string ref = line_ref(i + 1);
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception& e) {
      out.rejects.push_back(malformed(ref, opts.default_lang, std::string("invalid JSON: ") + e.what()));
      continue;
    }
    try {
      RawExample r;
      r.id = j.at("id").get<std::string>();
      r.lang = j.value("lang", opts.default_lang);
      r.sentence = j.at("sentence").get<std::string>();
      r.source_id = j.value("source_id", opts.source_name);
      const auto& p = j.at("pronoun");
      r.pronoun_text = p.at("text").get<std::string>();
      r.pronoun_char_span = json_span(p);
      const auto& cands = j.at("candidates");
      if (!cands.is_array() || cands.size() != 2) {
        out.rejects.push_back(malformed(r.id, r.lang, "candidates must be an array of 2"));
        continue;
      }
      for (const auto& c : cands) {
        r.candidate_texts.push_back(c.at("text").get<std::string>());
        r.candidate_char_spans.push_back(json_span(c));
      }
      const auto& label = j.at("label");
      if (!label.is_number_integer() || label.get<long>() < 0 || label.get<long>() > 1) {
        out.rejects.push_back(malformed(r.id, r.lang, "label must be 0 or 1"));
        continue;
      }
      r.correct_index = label.get<std::size_t>();
      emit(out, std::move(r), j.at("id").get<std::string>());
    } catch (const json::exception& e) {
      std::string record = ref;
      if (j.is_object() && j.contains("id") && j["id"].is_string()) record = j["id"].get<std::string>();
      out.rejects.push_back(malformed(record, opts.default_lang, std::string("missing or mistyped field: ") + e.what()));
    }
  }
}

// Columns: id, lang, sentence, pronoun, pronoun_start, candidates, answer.
// Candidates are separated by " | "; pronoun_start may be empty; answer is a
// 0-based index into the candidate list. A header row is required.
void parse_tsv(std::string_view bytes, const ParseOptions& opts, ParseResult& out) {
  auto lines = split_lines(bytes);
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    {
      std::size_t pos = 0;
      while (true) {
        auto tab = line.find('\t', pos);
        cols.emplace_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
      }
    }
    if (!header_seen) {
      header_seen = true;
      if (!cols.empty() && cols[0] == "id") continue;
      throw FormatError("generic-tsv: first non-comment line must be the header row");
    }
    const std::string ref = line_ref(i + 1);
    if (cols.size() != 7) {
      out.rejects.push_back(malformed(cols.empty() || cols[0].empty() ? ref : cols[0], opts.default_lang,
                                      "expected 7 tab-separated columns, got " + std::to_string(cols.size())));
      continue;
    }
    RawExample r;
    r.id = cols[0].empty() ? ref : cols[0];
    r.lang = cols[1].empty() ? opts.default_lang : cols[1];
    r.sentence = cols[2];
    r.pronoun_text = std::string(trim(cols[3]));
    r.source_id = opts.source_name;
    auto start = trim(cols[4]);
    if (!start.empty()) {
      std::size_t v = 0;
      std::istringstream ss{std::string(start)};
      if (!(ss >> v) || !ss.eof()) {
        out.rejects.push_back(malformed(r.id, r.lang, "pronoun_start is not an integer"));
        continue;
      }
      r.pronoun_char_span = CharSpan{v, v + r.pronoun_text.size()};
    }
    r.candidate_texts = split_on(cols[5], "|");
    std::istringstream as{std::string(trim(cols[6]))};
    long answer = -1;
    if (!(as >> answer) || !as.eof() || answer < 0) {
      out.rejects.push_back(malformed(r.id, r.lang, "answer is not a non-negative integer"));
      continue;
    }
    r.correct_index = static_cast<std::size_t>(answer);
    emit(out, std::move(r), cols[0].empty() ? ref : cols[0]);
  }
}

// Blocks of four lines separated by blank lines: sentence, pronoun,
// comma-separated candidates, correct answer text.
void parse_dpr(std::string_view bytes, const ParseOptions& opts, ParseResult& out) {
  auto lines = split_lines(bytes);
  std::vector<std::pair<std::size_t, std::string_view>> block;
  std::size_t block_no = 0;
  auto flush = [&] {
    if (block.empty()) return;
    const std::string id = "dpr-" + std::to_string(block_no++);
    if (block.size() != 4) {
      out.rejects.push_back(malformed(id, opts.default_lang,
                                      "block at line " + std::to_string(block.front().first) + " has " +
                                          std::to_string(block.size()) + " lines, expected 4"));
      block.clear();
      return;
    }
    RawExample r;
    r.id = id;
    r.lang = opts.default_lang;
    r.source_id = opts.source_name;
    r.sentence = std::string(trim(block[0].second));
    r.pronoun_text = std::string(trim(block[1].second));
    r.candidate_texts = split_on(block[2].second, ",");
    const std::string answer = utf8::fold_case(trim(block[3].second));
    auto it = std::find_if(r.candidate_texts.begin(), r.candidate_texts.end(),
                           [&](const std::string& c) { return utf8::fold_case(c) == answer; });
    block.clear();
    if (it == r.candidate_texts.end()) {
      out.rejects.push_back(malformed(id, r.lang, "answer is not one of the listed candidates"));
      return;
    }
    r.correct_index = static_cast<std::size_t>(it - r.candidate_texts.begin());
    emit(out, std::move(r), id);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) {
      flush();
    } else {
      block.emplace_back(i + 1, lines[i]);
    }
  }
  flush();
}

// Byte offset of the word at `index` when splitting on whitespace runs.
std::optional<std::size_t> word_offset(std::string_view text, std::size_t index) {
  std::size_t word = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n')) ++i;
    if (i >= text.size()) break;
    if (word == index) return i;
    while (i < text.size() && !(text[i] == ' ' || text[i] == '\t' || text[i] == '\n')) ++i;
    ++word;
  }
  return std::nullopt;
}

std::optional<CharSpan> word_span(std::string_view text, const json& index, const std::string& span_text) {
  if (!index.is_number_unsigned()) return std::nullopt;
  auto off = word_offset(text, index.get<std::size_t>());
  if (!off || *off + span_text.size() > text.size()) return std::nullopt;
  if (text.substr(*off, span_text.size()) != span_text) return std::nullopt;
  return CharSpan{*off, *off + span_text.size()};
}

// One record per (candidate, pronoun) pair with a boolean coreference label.
// Records sharing text and pronoun index form one multi-choice problem whose
// correct answer is the candidate labelled true.
void parse_superglue(std::string_view bytes, const ParseOptions& opts, ParseResult& out) {
  struct Group {
    std::string first_ref;
    RawExample raw;
    std::vector<int> truth;
    std::vector<std::string> errors;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;

  auto lines = split_lines(bytes);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string ref = line_ref(i + 1);
    json j;
    try {
      j = json::parse(lines[i]);
      const std::string text = j.at("text").get<std::string>();
      const auto& target = j.at("target");
      const std::string cand = target.at("span1_text").get<std::string>();
      const std::string pron = target.at("span2_text").get<std::string>();
      const auto& label = j.at("label");
      bool truth;
      if (label.is_boolean()) {
        truth = label.get<bool>();
      } else if (label.is_string() && (label == "True" || label == "true" || label == "False" || label == "false")) {
        truth = label == "True" || label == "true";
      } else {
        out.rejects.push_back(malformed(ref, opts.default_lang, "label must be boolean"));
        continue;
      }
      const std::string pron_key = target.at("span2_index").dump() + "|" + pron;
      auto key = std::make_pair(text, pron_key);
      auto [it, inserted] = index.try_emplace(key, groups.size());
      if (inserted) {
        Group g;
        std::string idx = j.contains("idx") ? j["idx"].dump() : std::to_string(i + 1);
        g.first_ref = "sg-" + idx;
        g.raw.id = g.first_ref;
        g.raw.lang = j.value("lang", opts.default_lang);
        g.raw.source_id = opts.source_name;
        g.raw.sentence = text;
        g.raw.pronoun_text = pron;
        g.raw.pronoun_char_span = word_span(text, target.at("span2_index"), pron);
        groups.push_back(std::move(g));
      }
      auto& g = groups[it->second];
      if (std::find(g.raw.candidate_texts.begin(), g.raw.candidate_texts.end(), cand) != g.raw.candidate_texts.end())
        continue;  // duplicate (candidate, pronoun) record
      g.raw.candidate_texts.push_back(cand);
      g.raw.candidate_char_spans.push_back(word_span(text, target.at("span1_index"), cand));
      g.truth.push_back(truth ? 1 : 0);
    } catch (const json::exception& e) {
      out.rejects.push_back(malformed(ref, opts.default_lang, std::string("invalid record: ") + e.what()));
    }
  }
  for (auto& g : groups) {
    auto n_true = std::count(g.truth.begin(), g.truth.end(), 1);
    if (n_true != 1) {
      out.rejects.push_back(malformed(g.first_ref, g.raw.lang,
                                      "expected exactly one candidate labelled true, got " + std::to_string(n_true)));
      continue;
    }
    g.raw.correct_index = static_cast<std::size_t>(std::find(g.truth.begin(), g.truth.end(), 1) - g.truth.begin());
    emit(out, std::move(g.raw), g.first_ref);
  }
}

}  // namespace

ParseResult parse_dataset(std::string_view bytes, Format format, const ParseOptions& opts) {
  if (!utf8::is_valid(bytes)) throw FormatError("input is not valid UTF-8");
  ParseResult out;
  switch (format) {
    case Format::XwinoJsonl: parse_xwino(bytes, opts, out); break;
    case Format::GenericTsv: parse_tsv(bytes, opts, out); break;
    case Format::DprStyle: parse_dpr(bytes, opts, out); break;
    case Format::SuperglueJsonl: parse_superglue(bytes, opts, out); break;
  }
  return out;
}

std::vector<RawExample> expand_multichoice(const RawExample& r) {
  const std::size_t k = r.candidate_texts.size();
  if (k < 2) throw InvalidArgument("expand_multichoice: record " + r.id + " has fewer than 2 candidates");
  if (r.correct_index >= k) throw InvalidArgument("expand_multichoice: correct index out of range in " + r.id);
  if (!r.candidate_char_spans.empty() && r.candidate_char_spans.size() != k)
    throw InvalidArgument("expand_multichoice: candidate span count mismatch in " + r.id);

  std::vector<RawExample> out;
  out.reserve(k - 1);
  std::size_t suffix = 0;
  for (std::size_t wrong = 0; wrong < k; ++wrong) {
    if (wrong == r.correct_index) continue;
    RawExample b = r;
    b.id = r.id + "#" + std::to_string(suffix++);
    // Keep the two candidates in their original relative order.
    const std::size_t first = std::min(wrong, r.correct_index);
    const std::size_t second = std::max(wrong, r.correct_index);
    b.candidate_texts = {r.candidate_texts[first], r.candidate_texts[second]};
    if (!r.candidate_char_spans.empty())
      b.candidate_char_spans = {r.candidate_char_spans[first], r.candidate_char_spans[second]};
    b.correct_index = r.correct_index == first ? 0 : 1;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace winoattn::corpus
