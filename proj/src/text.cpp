#include "genst/text.hpp"

#include <cstdint>

namespace genst {
namespace {

struct Codepoint {
  uint32_t cp;
  size_t len;  // bytes consumed
};

Codepoint decode_utf8(std::string_view s, size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](size_t k) -> uint32_t {
    if (i + k >= s.size()) return 0xFFFFFFFF;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3Fu) : 0xFFFFFFFF;
  };
  if ((b0 & 0xE0) == 0xC0) {
    const uint32_t c1 = cont(1);
    if (c1 != 0xFFFFFFFF) return {((b0 & 0x1Fu) << 6) | c1, 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const uint32_t c1 = cont(1), c2 = cont(2);
    if (c1 != 0xFFFFFFFF && c2 != 0xFFFFFFFF)
      return {((b0 & 0x0Fu) << 12) | (c1 << 6) | c2, 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const uint32_t c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 != 0xFFFFFFFF && c2 != 0xFFFFFFFF && c3 != 0xFFFFFFFF)
      return {((b0 & 0x07u) << 18) | (c1 << 12) | (c2 << 6) | c3, 4};
  }
  // Invalid byte: treat it as an isolated punctuation codepoint.
  return {b0, 1};
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' ||
         cp == '\f' || cp == 0xA0;
}

bool is_word_cp(uint32_t cp) {
  if (cp < 0x80)
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z') || cp == '_';
  // Latin-1 supplement letters (excluding multiplication/division signs)
  // and Latin Extended-A cover Italian/French orthography.
  if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x100 && cp <= 0x17F) return true;
  return false;
}

uint32_t lower_cp(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  size_t i = 0;
  while (i < text.size()) {
    const Codepoint c = decode_utf8(text, i);
    i += c.len;
    if (is_space_cp(c.cp)) {
      flush();
    } else if (is_word_cp(c.cp)) {
      append_utf8(current, lower_cp(c.cp));
    } else {
      flush();
      std::string punct;
      append_utf8(punct, c.cp);
      tokens.push_back(punct);
    }
  }
  flush();
  return tokens;
}

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (haystack[i + j] != needle[j]) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace genst
