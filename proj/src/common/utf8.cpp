// SPDX-License-Identifier: Apache-2.0
#include "winoattn/utf8.hpp"

namespace winoattn::utf8 {

bool is_valid(std::string_view s) {
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    unsigned char c = p[i];
    std::size_t n;
    char32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      n = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      n = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      n = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + n > s.size()) return false;
    for (std::size_t k = 1; k < n; ++k) {
      if ((p[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (p[i + k] & 0x3F);
    }
    // Overlong forms, surrogates, out of range.
    if ((n == 2 && cp < 0x80) || (n == 3 && cp < 0x800) || (n == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += n;
  }
  return true;
}

char32_t decode(std::string_view s, std::size_t pos, std::size_t& len) {
  const auto c = static_cast<unsigned char>(s[pos]);
  if (c < 0x80) {
    len = 1;
    return c;
  }
  char32_t cp;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else {
    len = 4;
    cp = c & 0x07;
  }
  for (std::size_t k = 1; k < len && pos + k < s.size(); ++k)
    cp = (cp << 6) | (static_cast<unsigned char>(s[pos + k]) & 0x3F);
  return cp;
}

std::size_t prev_start(std::string_view s, std::size_t pos) {
  std::size_t i = pos - 1;
  while (i > 0 && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) --i;
  return i;
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  auto* p = reinterpret_cast<unsigned char*>(out.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned char c = p[i];
    if (c >= 'A' && c <= 'Z') {
      p[i] = c + 32;
    } else if (c == 0xC3 && i + 1 < out.size()) {
      // U+00C0..U+00DE except U+00D7 (multiplication sign).
      unsigned char d = p[i + 1];
      if (d >= 0x80 && d <= 0x9E && d != 0x97) p[i + 1] = d + 0x20;
      ++i;
    } else if (c == 0xD0 && i + 1 < out.size()) {
      unsigned char d = p[i + 1];
      if (d >= 0x90 && d <= 0x9F) {  // U+0410..U+041F -> U+0430..U+043F
        p[i + 1] = d + 0x20;
      } else if (d >= 0xA0 && d <= 0xAF) {  // U+0420..U+042F -> U+0440..U+044F
        p[i] = 0xD1;
        p[i + 1] = d - 0x20;
      } else if (d >= 0x80 && d <= 0x8F) {  // U+0400..U+040F -> U+0450..U+045F
        p[i] = 0xD1;
        p[i + 1] = d + 0x10;
      }
      ++i;
    }
  }
  return out;
}

bool is_word_char(char32_t c) {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x370 && c <= 0x3FF) return true;  // Greek
  if (c >= 0x400 && c <= 0x4FF) return true;  // Cyrillic
  return false;
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0 ||
         c == 0x3000;
}

bool is_cjk(char32_t c) {
  return (c >= 0x3040 && c <= 0x30FF) ||  // hiragana, katakana
         (c >= 0x3400 && c <= 0x4DBF) || (c >= 0x4E00 && c <= 0x9FFF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0xFF00 && c <= 0xFFEF) ||
         (c >= 0x3000 && c <= 0x303F);  // CJK punctuation
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                       (c >= 0x7B && c <= 0x7E);
  return (c >= 0x2010 && c <= 0x205E) || c == 0xAB || c == 0xBB || c == 0xBF || c == 0xA1;
}

}  // namespace winoattn::utf8
