// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace winoattn::corpus {

/// Half-open byte range [start, end) into a UTF-8 sentence.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const CharSpan&) const = default;
  bool overlaps(const CharSpan& o) const { return start < o.end && o.start < end; }
};

/// A source record before normalization. May carry more than two candidates.
struct RawExample {
  std::string id;
  std::string source_id;
  std::string lang;
  std::string sentence;
  std::string pronoun_text;
  std::optional<CharSpan> pronoun_char_span;
  std::vector<std::string> candidate_texts;
  // Either empty or one entry per candidate; used only when the offsets
  // reproduce the candidate text exactly.
  std::vector<std::optional<CharSpan>> candidate_char_spans;
  std::size_t correct_index = 0;

  bool operator==(const RawExample&) const = default;
};

struct Span {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
  CharSpan range() const { return {start, end}; }
};

/// One binary problem in the unified XWINO schema. Candidates are ordered by
/// start offset and `label` indexes the correct one.
struct WinogradExample {
  std::string id;
  std::string lang;
  std::string sentence;
  Span pronoun;
  std::array<Span, 2> candidates;
  int label = 0;
  std::string source_id;

  bool operator==(const WinogradExample&) const = default;
};

enum class RejectCode { CandidateNotSubstring, AmbiguousPronoun, PronounNotFound, MalformedRecord };

std::string_view to_string(RejectCode c);

struct RejectReason {
  RejectCode code = RejectCode::MalformedRecord;
  std::string detail;
};

/// A rejected record with enough context to find it again.
struct Reject {
  std::string record;  // example id, or "line N" when no id could be read
  std::string lang;
  RejectReason reason;
};

enum class Format { XwinoJsonl, GenericTsv, DprStyle, SuperglueJsonl };

/// Accepts the CLI ids: xwino-jsonl, generic-tsv, dpr-style, superglue-jsonl.
Format parse_format(std::string_view id);
std::string_view format_id(Format f);

struct ParseOptions {
  // Language for formats that carry no per-record tag (dpr-style and records
  // without a "lang" field).
  std::string default_lang = "en";
  // Written to RawExample::source_id when the record has no source of its own.
  std::string source_name;
};

struct ParseResult {
  std::vector<RawExample> examples;
  std::vector<Reject> rejects;
};

/// Parses one source file. Malformed records land in `rejects` with
/// MalformedRecord; invalid UTF-8 throws FormatError.
ParseResult parse_dataset(std::string_view bytes, Format format, const ParseOptions& opts = {});

/// Splits a k-candidate record into k-1 binary records, each pairing the
/// correct candidate with one wrong one. Ids get "#0", "#1", ... suffixes.
std::vector<RawExample> expand_multichoice(const RawExample& r);

/// Per-language article/determiner prefixes tried by the repair ladder.
struct RepairConfig {
  std::map<std::string, std::vector<std::string>> prefixes;

  static RepairConfig defaults();
  /// JSON object: {"en": ["the ", "a ", "an "], ...}
  static RepairConfig from_json(std::string_view text);
  const std::vector<std::string>& for_lang(const std::string& lang) const;
};

using NormalizeResult = std::variant<WinogradExample, RejectReason>;

/// Locates pronoun and candidates in the sentence. Candidate ladder, first
/// step with a usable match wins: exact, case-insensitive, prefix-stripped,
/// whitespace-collapsed.
NormalizeResult normalize(const RawExample& r, const RepairConfig& rules);

struct LangStats {
  std::string lang;
  std::size_t before = 0;
  std::size_t after = 0;
  double remaining_percent = 0.0;  // rounded to 2 decimals

  bool operator==(const LangStats&) const = default;
};

struct StatsReport {
  std::vector<LangStats> rows;  // sorted by language tag
  LangStats total{"Total"};

  std::string to_markdown() const;
  std::string to_csv() const;
  std::string to_json() const;
};

StatsReport corpus_stats(std::span<const RawExample> before, std::span<const WinogradExample> after);

/// One JSON object per line, fixed field order.
std::string serialize_xwino(std::span<const WinogradExample> examples);

/// Strict reader for XWINO JSONL: any invariant violation throws FormatError.
std::vector<WinogradExample> read_xwino(std::string_view bytes);

/// Throws InvalidArgument describing the first violated invariant.
void check_invariants(const WinogradExample& ex);

/// Full conversion: parse, expand, normalize, collect stats.
struct ConvertResult {
  std::vector<WinogradExample> examples;
  std::vector<Reject> rejects;
  StatsReport stats;
};

ConvertResult convert(std::string_view bytes, Format format, const ParseOptions& opts,
                      const RepairConfig& rules);

}  // namespace winoattn::corpus
