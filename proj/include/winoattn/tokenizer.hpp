// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "winoattn/attention.hpp"
#include "winoattn/corpus.hpp"

namespace winoattn {

struct Token {
  std::string text;
  std::size_t start = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

/// Whitespace + punctuation word tokenizer with a closed vocabulary. CJK
/// characters are single tokens.
class Tokenizer {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kMask = "[MASK]";

  /// `vocab` must contain the three special tokens, without duplicates.
  Tokenizer(std::vector<std::string> vocab, bool lowercase);

  /// Specials first, then every token seen at least `min_count` times in
  /// first-seen order.
  static Tokenizer build(std::span<const std::string> texts, bool lowercase, std::size_t min_count = 1);

  /// Vocab file: header line "WVOCAB1 lowercase=<0|1>", then one token per line.
  static Tokenizer from_text(std::string_view text);
  std::string to_text() const;

  std::vector<Token> segment(std::string_view text) const;
  int id(std::string_view token) const;
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int mask_id() const { return mask_; }
  int size() const { return static_cast<int>(vocab_.size()); }
  bool lowercase() const { return lowercase_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool lowercase_;
  int pad_ = 0, unk_ = 0, mask_ = 0;
};

struct TokenizedExample {
  std::string id;
  std::vector<int> token_ids;
  ExampleSpans spans;
  // Byte range of each token in the sentence (the char-to-token alignment).
  std::vector<std::pair<std::size_t, std::size_t>> offsets;
};

/// Maps the example's character spans to the minimal covering token spans.
/// Throws InvalidArgument when a span covers no token or when the pronoun
/// and a candidate end up sharing a token.
TokenizedExample tokenize(const Tokenizer& t, const corpus::WinogradExample& ex);

}  // namespace winoattn
