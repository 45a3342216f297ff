// SPDX-License-Identifier: Apache-2.0
#include "winoattn/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "winoattn/error.hpp"
#include "winoattn/utf8.hpp"

namespace winoattn {

Tokenizer::Tokenizer(std::vector<std::string> vocab, bool lowercase)
    : vocab_(std::move(vocab)), lowercase_(lowercase) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i)).second)
      throw InvalidArgument("tokenizer: duplicate vocab entry '" + vocab_[i] + "'");
  }
  auto special = [&](std::string_view s) {
    auto it = index_.find(std::string(s));
    if (it == index_.end()) throw InvalidArgument("tokenizer: vocab lacks special token " + std::string(s));
    return it->second;
  };
  pad_ = special(kPad);
  unk_ = special(kUnk);
  mask_ = special(kMask);
}

Tokenizer Tokenizer::build(std::span<const std::string> texts, bool lowercase, std::size_t min_count) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> counts;
  Tokenizer probe({std::string(kPad), std::string(kUnk), std::string(kMask)}, lowercase);
  for (const auto& t : texts) {
    for (auto& tok : probe.segment(t)) {
      if (counts[tok.text]++ == 0) order.push_back(tok.text);
    }
  }
  std::vector<std::string> vocab{std::string(kPad), std::string(kUnk), std::string(kMask)};
  for (const auto& tok : order)
    if (counts[tok] >= min_count && tok != kPad && tok != kUnk && tok != kMask) vocab.push_back(tok);
  return Tokenizer(std::move(vocab), lowercase);
}

Tokenizer Tokenizer::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  std::getline(in, header);
  bool lowercase;
  if (header == "WVOCAB1 lowercase=1") {
    lowercase = true;
  } else if (header == "WVOCAB1 lowercase=0") {
    lowercase = false;
  } else {
    throw FormatError("vocab: bad header line (expected 'WVOCAB1 lowercase=<0|1>')");
  }
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab.push_back(line);
  }
  return Tokenizer(std::move(vocab), lowercase);
}

std::string Tokenizer::to_text() const {
  std::string out = lowercase_ ? "WVOCAB1 lowercase=1\n" : "WVOCAB1 lowercase=0\n";
  for (const auto& v : vocab_) out += v + "\n";
  return out;
}

std::vector<Token> Tokenizer::segment(std::string_view text) const {
  std::vector<Token> out;
  std::size_t word_start = std::string_view::npos;
  auto close_word = [&](std::size_t end) {
    if (word_start == std::string_view::npos) return;
    out.push_back({std::string(text.substr(word_start, end - word_start)), word_start, end});
    word_start = std::string_view::npos;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len;
    const char32_t c = utf8::decode(text, i, len);
    if (utf8::is_space(c)) {
      close_word(i);
    } else if (utf8::is_punct(c) || utf8::is_cjk(c)) {
      close_word(i);
      out.push_back({std::string(text.substr(i, len)), i, i + len});
    } else if (word_start == std::string_view::npos) {
      word_start = i;
    }
    i += len;
  }
  close_word(text.size());
  if (lowercase_)
    for (auto& t : out) t.text = utf8::fold_case(t.text);
  return out;
}

int Tokenizer::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

namespace {

TokenSpan covering(const std::vector<Token>& toks, const corpus::Span& s, const std::string& ex_id, const char* what) {
  int first = -1, last = -1;
  for (std::size_t t = 0; t < toks.size(); ++t) {
    if (toks[t].start < s.end && s.start < toks[t].end) {
      if (first < 0) first = static_cast<int>(t);
      last = static_cast<int>(t);
    }
  }
  if (first < 0)
    throw InvalidArgument("tokenize: " + ex_id + ": " + what + " span [" + std::to_string(s.start) + ", " +
                          std::to_string(s.end) + ") covers no token");
  return {first, last - first + 1};
}

}  // namespace

TokenizedExample tokenize(const Tokenizer& t, const corpus::WinogradExample& ex) {
  const auto toks = t.segment(ex.sentence);
  TokenizedExample out;
  out.id = ex.id;
  out.token_ids.reserve(toks.size());
  for (const auto& tok : toks) {
    out.token_ids.push_back(t.id(tok.text));
    out.offsets.emplace_back(tok.start, tok.end);
  }
  out.spans.pronoun = covering(toks, ex.pronoun, ex.id, "pronoun");
  out.spans.candidates[0] = covering(toks, ex.candidates[0], ex.id, "candidate 0");
  out.spans.candidates[1] = covering(toks, ex.candidates[1], ex.id, "candidate 1");
  if (out.spans.pronoun.overlaps(out.spans.candidates[0]) || out.spans.pronoun.overlaps(out.spans.candidates[1]))
    throw InvalidArgument("tokenize: " + ex.id + ": pronoun and a candidate share a token");
  return out;
}

}  // namespace winoattn
