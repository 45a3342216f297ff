// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace winoattn::utf8 {

bool is_valid(std::string_view s);

/// Decodes the code point starting at byte `pos`; sets `len` to its byte
/// length. Assumes valid UTF-8.
char32_t decode(std::string_view s, std::size_t pos, std::size_t& len);

/// Start byte of the code point that ends right before `pos` (pos > 0).
std::size_t prev_start(std::string_view s, std::size_t pos);

/// Case folding that never changes byte length: ASCII, Latin-1 letters and
/// basic Cyrillic. Byte offsets into the folded string are valid offsets into
/// the original.
std::string fold_case(std::string_view s);

/// Letters of alphabetic scripts that delimit words (Latin, Greek, Cyrillic)
/// plus ASCII digits. CJK and kana are not word characters here, so a match
/// inside running CJK text is never rejected for lacking a boundary.
bool is_word_char(char32_t c);

bool is_space(char32_t c);

/// CJK ideographs, kana and full-width forms: tokenized one code point each.
bool is_cjk(char32_t c);

bool is_punct(char32_t c);

}  // namespace winoattn::utf8
