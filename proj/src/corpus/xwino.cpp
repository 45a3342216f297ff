// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "winoattn/corpus.hpp"
#include "winoattn/error.hpp"

namespace winoattn::corpus {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json span_json(const Span& s) {
  ordered_json j;
  j["text"] = s.text;
  j["start"] = s.start;
  j["end"] = s.end;
  return j;
}

void check_span(const WinogradExample& ex, const Span& s, const char* what) {
  if (!(s.start < s.end && s.end <= ex.sentence.size()))
    throw InvalidArgument(ex.id + ": " + what + " offsets out of range");
  if (ex.sentence.compare(s.start, s.end - s.start, s.text) != 0)
    throw InvalidArgument(ex.id + ": " + what + " text does not match the sentence at its offsets");
}

}  // namespace

void check_invariants(const WinogradExample& ex) {
  if (ex.sentence.empty()) throw InvalidArgument(ex.id + ": empty sentence");
  check_span(ex, ex.pronoun, "pronoun");
  check_span(ex, ex.candidates[0], "candidate 0");
  check_span(ex, ex.candidates[1], "candidate 1");
  for (const auto& c : ex.candidates)
    if (c.range().overlaps(ex.pronoun.range())) throw InvalidArgument(ex.id + ": candidate overlaps the pronoun");
  if (ex.candidates[0].range() == ex.candidates[1].range())
    throw InvalidArgument(ex.id + ": candidates share one span");
  const auto& a = ex.candidates[0];
  const auto& b = ex.candidates[1];
  if (b.start < a.start || (b.start == a.start && b.end < a.end))
    throw InvalidArgument(ex.id + ": candidates not ordered by start offset");
  if (ex.label != 0 && ex.label != 1) throw InvalidArgument(ex.id + ": label must be 0 or 1");
}

std::string serialize_xwino(std::span<const WinogradExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    ordered_json j;
    j["id"] = ex.id;
    j["lang"] = ex.lang;
    j["sentence"] = ex.sentence;
    j["pronoun"] = span_json(ex.pronoun);
    j["candidates"] = ordered_json::array({span_json(ex.candidates[0]), span_json(ex.candidates[1])});
    j["label"] = ex.label;
    j["source_id"] = ex.source_id;
    out += j.dump(-1, ' ', false);
    out += '\n';
  }
  return out;
}

std::vector<WinogradExample> read_xwino(std::string_view bytes) {
  auto parsed = parse_dataset(bytes, Format::XwinoJsonl);
  if (!parsed.rejects.empty()) {
    const auto& r = parsed.rejects.front();
    throw FormatError("xwino: " + r.record + ": " + r.reason.detail);
  }
  std::vector<WinogradExample> out;
  out.reserve(parsed.examples.size());
  for (const auto& raw : parsed.examples) {
    if (!raw.pronoun_char_span) throw FormatError("xwino: " + raw.id + ": pronoun offsets missing");
    for (const auto& s : raw.candidate_char_spans)
      if (!s) throw FormatError("xwino: " + raw.id + ": candidate offsets missing");
    WinogradExample ex;
    ex.id = raw.id;
    ex.lang = raw.lang;
    ex.sentence = raw.sentence;
    ex.source_id = raw.source_id;
    ex.pronoun = {raw.pronoun_text, raw.pronoun_char_span->start, raw.pronoun_char_span->end};
    for (std::size_t c = 0; c < 2; ++c)
      ex.candidates[c] = {raw.candidate_texts[c], raw.candidate_char_spans[c]->start,
                          raw.candidate_char_spans[c]->end};
    ex.label = static_cast<int>(raw.correct_index);
    try {
      check_invariants(ex);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("xwino: ") + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

ConvertResult convert(std::string_view bytes, Format format, const ParseOptions& opts, const RepairConfig& rules) {
  ConvertResult res;
  auto parsed = parse_dataset(bytes, format, opts);
  res.rejects = std::move(parsed.rejects);
  std::vector<RawExample> binary;
  for (const auto& r : parsed.examples) {
    auto expanded = expand_multichoice(r);
    // Binary records keep their id; the "#k" suffix only marks real splits.
    if (expanded.size() == 1) expanded.front().id = r.id;
    for (auto& b : expanded) binary.push_back(std::move(b));
  }
  for (const auto& b : binary) {
    auto n = normalize(b, rules);
    if (auto* ex = std::get_if<WinogradExample>(&n)) {
      res.examples.push_back(std::move(*ex));
    } else {
      res.rejects.push_back({b.id, b.lang, std::get<RejectReason>(n)});
    }
  }
  res.stats = corpus_stats(binary, res.examples);
  return res;
}

}  // namespace winoattn::corpus
