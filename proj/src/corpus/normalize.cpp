// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <json.hpp>

#include "winoattn/corpus.hpp"
#include "winoattn/error.hpp"
#include "winoattn/utf8.hpp"

namespace winoattn::corpus {

RepairConfig RepairConfig::defaults() {
  RepairConfig c;
  c.prefixes["en"] = {"the ", "a ", "an "};
  c.prefixes["fr"] = {"le ", "la ", "les ", "l'", "un ", "une ", "des "};
  c.prefixes["pt"] = {"o ", "a ", "os ", "as ", "um ", "uma "};
  return c;
}

RepairConfig RepairConfig::from_json(std::string_view text) {
  RepairConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("repair config: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("repair config must be a JSON object mapping lang -> prefix list");
  for (const auto& [lang, list] : j.items()) {
    if (!list.is_array()) throw FormatError("repair config: prefixes for '" + lang + "' must be a list");
    auto& dst = c.prefixes[lang];
    for (const auto& p : list) {
      if (!p.is_string() || p.get<std::string>().empty())
        throw FormatError("repair config: prefixes for '" + lang + "' must be non-empty strings");
      dst.push_back(p.get<std::string>());
    }
  }
  return c;
}

const std::vector<std::string>& RepairConfig::for_lang(const std::string& lang) const {
  static const std::vector<std::string> none;
  auto it = prefixes.find(lang);
  return it == prefixes.end() ? none : it->second;
}

namespace {

bool boundary_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return true;
  std::size_t len;
  return !utf8::is_word_char(utf8::decode(s, utf8::prev_start(s, pos), len));
}

bool boundary_after(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return true;
  std::size_t len;
  return !utf8::is_word_char(utf8::decode(s, pos, len));
}

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// All matches of `pattern` in `hay` that sit on word boundaries. With
// `flex_ws`, each space in the pattern matches a run of whitespace.
std::vector<CharSpan> find_all(std::string_view hay, std::string_view pattern, bool flex_ws) {
  std::vector<CharSpan> out;
  if (pattern.empty()) return out;
  for (std::size_t start = 0; start < hay.size(); ++start) {
    std::size_t h = start;
    std::size_t p = 0;
    bool ok = true;
    while (p < pattern.size()) {
      if (flex_ws && pattern[p] == ' ') {
        if (h >= hay.size() || !is_ascii_space(hay[h])) {
          ok = false;
          break;
        }
        while (h < hay.size() && is_ascii_space(hay[h])) ++h;
        ++p;
        continue;
      }
      if (h >= hay.size() || hay[h] != pattern[p]) {
        ok = false;
        break;
      }
      ++h;
      ++p;
    }
    if (ok && boundary_before(hay, start) && boundary_after(hay, h)) out.push_back({start, h});
  }
  return out;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_ascii_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

struct Exclusions {
  CharSpan pronoun;
  CharSpan other;  // span already taken by the first candidate
  bool has_other = false;

  bool allows(const CharSpan& s) const { return !s.overlaps(pronoun) && (!has_other || !(s == other)); }
};

std::optional<CharSpan> first_allowed(const std::vector<CharSpan>& matches, const Exclusions& ex) {
  for (const auto& m : matches)
    if (ex.allows(m)) return m;
  return std::nullopt;
}

std::optional<CharSpan> locate_candidate(const std::string& sentence, const std::string& folded_sentence,
                                         const std::string& text, const std::optional<CharSpan>& given,
                                         const std::vector<std::string>& prefixes, const Exclusions& ex) {
  if (given && given->start < given->end && given->end <= sentence.size() &&
      sentence.compare(given->start, given->end - given->start, text) == 0 && ex.allows(*given))
    return given;

  const std::string folded = utf8::fold_case(text);
  // 1. exact
  if (auto m = first_allowed(find_all(sentence, text, false), ex)) return m;
  // 2. case-insensitive
  if (auto m = first_allowed(find_all(folded_sentence, folded, false), ex)) return m;
  // 3. strip an article/determiner prefix
  std::vector<std::string> stripped;
  for (const auto& prefix : prefixes) {
    const std::string fp = utf8::fold_case(prefix);
    if (folded.size() > fp.size() && folded.compare(0, fp.size(), fp) == 0) {
      stripped.push_back(folded.substr(fp.size()));
      if (auto m = first_allowed(find_all(folded_sentence, stripped.back(), false), ex)) return m;
    }
  }
  // 4. collapse whitespace runs, in the candidate and in the sentence
  if (auto m = first_allowed(find_all(folded_sentence, collapse_ws(folded), true), ex)) return m;
  for (const auto& s : stripped)
    if (auto m = first_allowed(find_all(folded_sentence, collapse_ws(s), true), ex)) return m;
  return std::nullopt;
}

Span make_span(const std::string& sentence, CharSpan r) {
  return {sentence.substr(r.start, r.end - r.start), r.start, r.end};
}

}  // namespace

NormalizeResult normalize(const RawExample& r, const RepairConfig& rules) {
  using enum RejectCode;
  if (r.candidate_texts.size() != 2)
    return RejectReason{MalformedRecord, "expected 2 candidates after expansion, got " +
                                             std::to_string(r.candidate_texts.size())};
  if (r.correct_index > 1) return RejectReason{MalformedRecord, "correct index out of range"};
  if (r.sentence.empty()) return RejectReason{MalformedRecord, "empty sentence"};
  if (!r.candidate_char_spans.empty() && r.candidate_char_spans.size() != 2)
    return RejectReason{MalformedRecord, "candidate span count mismatch"};

  const std::string folded_sentence = utf8::fold_case(r.sentence);
  const std::string folded_pronoun = utf8::fold_case(r.pronoun_text);

  CharSpan pronoun;
  if (r.pronoun_char_span) {
    const auto s = *r.pronoun_char_span;
    if (s.start >= s.end || s.end > r.sentence.size() ||
        folded_sentence.compare(s.start, s.end - s.start, folded_pronoun) != 0)
      return RejectReason{PronounNotFound, "pronoun '" + r.pronoun_text + "' not at the given offsets"};
    pronoun = s;
  } else {
    auto hits = find_all(r.sentence, r.pronoun_text, false);
    if (hits.empty()) hits = find_all(folded_sentence, folded_pronoun, false);
    if (hits.empty()) return RejectReason{PronounNotFound, "pronoun '" + r.pronoun_text + "' not in sentence"};
    if (hits.size() > 1)
      return RejectReason{AmbiguousPronoun, "pronoun '" + r.pronoun_text + "' occurs " +
                                                std::to_string(hits.size()) + " times and no offset is given"};
    pronoun = hits.front();
  }

  const auto& prefixes = rules.for_lang(r.lang);
  std::array<CharSpan, 2> found;
  for (std::size_t c = 0; c < 2; ++c) {
    Exclusions ex{pronoun, c == 1 ? found[0] : CharSpan{}, c == 1};
    std::optional<CharSpan> given;
    if (!r.candidate_char_spans.empty()) given = r.candidate_char_spans[c];
    auto span = locate_candidate(r.sentence, folded_sentence, r.candidate_texts[c], given, prefixes, ex);
    if (!span)
      return RejectReason{CandidateNotSubstring,
                          "candidate '" + r.candidate_texts[c] + "' not found in sentence after repairs"};
    found[c] = *span;
  }

  WinogradExample ex;
  ex.id = r.id;
  ex.lang = r.lang;
  ex.sentence = r.sentence;
  ex.source_id = r.source_id;
  ex.pronoun = make_span(r.sentence, pronoun);
  int label = static_cast<int>(r.correct_index);
  if (found[1].start < found[0].start || (found[1].start == found[0].start && found[1].end < found[0].end)) {
    std::swap(found[0], found[1]);
    label = 1 - label;
  }
  ex.candidates = {make_span(r.sentence, found[0]), make_span(r.sentence, found[1])};
  ex.label = label;
  return ex;
}

}  // namespace winoattn::corpus
