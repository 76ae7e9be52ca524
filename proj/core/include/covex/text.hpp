#ifndef COVEX_TEXT_HPP
#define COVEX_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace covex::text {

// Lossy UTF-8 decode: bytes that do not start a well-formed sequence are
// dropped.
std::u32string decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view s);

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_ascii_punct(char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// ASCII punctuation plus the common Unicode punctuation blocks.
bool is_punctuation(char32_t cp);

std::string to_lower_ascii(std::string_view s);
// Trims and collapses runs of ASCII whitespace to one space.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char delimiter);
std::string trim(std::string_view s);

// Matching key for slot answers: lowercase, collapsed whitespace, surrounding
// punctuation removed.
std::string normalize_chunk_text(std::string_view s);

}  // namespace covex::text

#endif  // COVEX_TEXT_HPP
