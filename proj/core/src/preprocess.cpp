#include "covex/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "builtin_resources.hpp"
#include "covex/error.hpp"
#include "covex/text.hpp"

namespace covex {

MarkedSequence insert_markers(const Tweet& tweet, const CandidateChunk& chunk,
                              const Tokenizer& tokenizer, std::size_t max_length) {
  const std::string& text = tweet.text_or_empty();
  if (!(chunk.start < chunk.end && chunk.end <= text.size()) ||
      text.compare(chunk.start, chunk.end - chunk.start, chunk.text) != 0) {
    throw PreconditionError("tweet " + tweet.tweet_id + ": chunk [" + std::to_string(chunk.start) +
                            ", " + std::to_string(chunk.end) + ") does not match the text");
  }
  const std::vector<Token> toks = tokenizer.tokenize(text);

  // Covering tokens: first token ending after the chunk start through the
  // last token starting before the chunk end.
  std::size_t first = toks.size();
  std::size_t last = toks.size();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].end > chunk.start && toks[i].start < chunk.end) {
      if (first == toks.size()) first = i;
      last = i;
    }
  }
  if (first == toks.size()) {
    throw AlignmentError("tweet " + tweet.tweet_id + ": no token overlaps chunk '" + chunk.text + "'");
  }

  MarkedSequence seq;
  seq.tweet_id = tweet.tweet_id;
  seq.chunk = chunk;
  seq.tokens.reserve(toks.size() + 2);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i == first) seq.tokens.emplace_back(kEntityStart);
    seq.tokens.push_back(toks[i].text);
    if (i == last) seq.tokens.emplace_back(kEntityEnd);
  }
  seq.p = first;
  seq.q = last + 2;

  if (seq.tokens.size() > max_length) {
    if (seq.q < max_length) {
      seq.tokens.resize(max_length);
    } else {
      seq.skipped = true;
    }
  }
  return seq;
}

std::vector<std::string> strip_markers(const MarkedSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.tokens.size());
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i != seq.p && i != seq.q) out.push_back(seq.tokens[i]);
  }
  return out;
}

namespace {

bool is_emoji(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) ||
         (cp >= 0x2300 && cp <= 0x23FF) || (cp >= 0x2B00 && cp <= 0x2BFF) ||
         (cp >= 0x2190 && cp <= 0x21FF) || (cp >= 0xFE00 && cp <= 0xFE0F) ||
         (cp >= 0xE0020 && cp <= 0xE007F) || cp == 0x20E3 || cp == 0x3030 || cp == 0x303D ||
         cp == 0x3297 || cp == 0x3299 || cp == 0x00A9 || cp == 0x00AE || cp == 0x2122;
}

bool is_space_like(char32_t cp) {
  return cp < 0x20 || cp == ' ' || cp == 0x7F || (cp >= 0x80 && cp <= 0xA0) ||
         (cp >= 0x2000 && cp <= 0x200F) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000 || cp == 0xFEFF || cp == 0xFFFD;
}

bool is_ascii_alnum32(char32_t cp) { return cp < 0x80 && text::is_ascii_alnum(static_cast<char>(cp)); }

char32_t lower32(char32_t cp) { return (cp >= 'A' && cp <= 'Z') ? cp - 'A' + 'a' : cp; }

bool matches_ci(const std::u32string& s, std::size_t at, std::u32string_view pattern) {
  if (at + pattern.size() > s.size()) return false;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    if (lower32(s[at + k]) != pattern[k]) return false;
  }
  return true;
}

void remove_urls(std::u32string& s) {
  static constexpr std::u32string_view kPrefixes[] = {U"http://", U"https://", U"www.",
                                                      U"pic.twitter.com/"};
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (auto prefix : kPrefixes) {
      if (!matches_ci(s, i, prefix)) continue;
      std::size_t e = i;
      while (e < s.size() && s[e] != U' ') ++e;
      std::fill(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(e), U' ');
      break;
    }
  }
}

void remove_emails(std::u32string& s) {
  auto local_char = [](char32_t c) {
    return is_ascii_alnum32(c) || c == U'.' || c == U'_' || c == U'%' || c == U'+' || c == U'-';
  };
  auto domain_char = [](char32_t c) { return is_ascii_alnum32(c) || c == U'.' || c == U'-'; };
  for (std::size_t at = 0; at < s.size(); ++at) {
    if (s[at] != U'@') continue;
    std::size_t b = at;
    while (b > 0 && local_char(s[b - 1])) --b;
    std::size_t e = at + 1;
    while (e < s.size() && domain_char(s[e])) ++e;
    if (b == at || e == at + 1) continue;
    // Domain needs an inner dot followed by a label of two or more letters.
    std::size_t dom_end = e;
    while (dom_end > at + 1 && (s[dom_end - 1] == U'.' || s[dom_end - 1] == U'-')) --dom_end;
    const std::u32string_view domain(s.data() + at + 1, dom_end - at - 1);
    const auto dot = domain.rfind(U'.');
    if (dot == std::u32string_view::npos || dot == 0 || domain.size() - dot - 1 < 2) continue;
    std::fill(s.begin() + static_cast<std::ptrdiff_t>(b), s.begin() + static_cast<std::ptrdiff_t>(dom_end), U' ');
    at = dom_end;
  }
}

std::vector<std::pair<std::string, std::string>> parse_table(std::string_view body) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("decontraction line without a tab: " + line);
    out.emplace_back(text::to_lower_ascii(line.substr(0, tab)), line.substr(tab + 1));
  }
  return out;
}

std::unordered_set<std::string> parse_wordlist(std::string_view body) {
  std::unordered_set<std::string> out;
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = text::trim(line);
    if (w.empty() || w[0] == '#') continue;
    out.insert(text::to_lower_ascii(w));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Normalizer::Normalizer(std::vector<std::pair<std::string, std::string>> decontractions,
                       std::unordered_set<std::string> wordlist)
    : wordlist_(std::move(wordlist)) {
  for (auto& [from, to] : decontractions) {
    if (from.find('\'') == std::string::npos) {
      // Keys without an apostrophe could re-fire on normalized output.
      throw ConfigError("decontraction key '" + from + "' has no apostrophe");
    }
    if (!from.empty() && from[0] == '*') {
      suffix_.emplace_back(from.substr(1), to);
    } else {
      whole_word_.emplace_back(from, to);
    }
  }
  // Longest suffix first so "'ll" is not shadowed by a shorter rule.
  std::stable_sort(suffix_.begin(), suffix_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  for (const auto& w : wordlist_) longest_word_ = std::max(longest_word_, text::decode_utf8(w).size());
}

const Normalizer& Normalizer::builtin() {
  static const Normalizer instance =
      from_text(resources::kDecontractions, resources::kWordlist);
  return instance;
}

Normalizer Normalizer::from_text(std::string_view decontractions, std::string_view wordlist) {
  return Normalizer(parse_table(decontractions), parse_wordlist(wordlist));
}

Normalizer Normalizer::from_files(const std::filesystem::path& decontractions,
                                  const std::filesystem::path& wordlist) {
  return from_text(read_file(decontractions), read_file(wordlist));
}

std::string Normalizer::decontract_word(const std::string& word) const {
  const std::string lower = text::to_lower_ascii(word);
  for (const auto& [from, to] : whole_word_) {
    if (lower == from) return to;
  }
  for (const auto& [suffix, to] : suffix_) {
    if (lower.size() > suffix.size() && lower.ends_with(suffix)) {
      return lower.substr(0, lower.size() - suffix.size()) + to;
    }
  }
  return word;
}

std::vector<std::string> Normalizer::segment(std::string_view word) const {
  const std::u32string w = text::decode_utf8(text::to_lower_ascii(word));
  std::vector<std::string> out;
  std::u32string pending;
  std::size_t i = 0;
  while (i < w.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(longest_word_, w.size() - i); len > 0; --len) {
      if (wordlist_.contains(text::encode_utf8(std::u32string_view(w).substr(i, len)))) {
        matched = len;
        break;
      }
    }
    if (matched == 0) {
      pending.push_back(w[i++]);
      continue;
    }
    if (!pending.empty()) {
      out.push_back(text::encode_utf8(pending));
      pending.clear();
    }
    out.push_back(text::encode_utf8(std::u32string_view(w).substr(i, matched)));
    i += matched;
  }
  if (!pending.empty()) out.push_back(text::encode_utf8(pending));
  return out;
}

std::string Normalizer::normalize(std::string_view input) const {
  std::u32string s = text::decode_utf8(input);
  for (char32_t& cp : s) {
    if (cp == 0x2018 || cp == 0x2019 || cp == 0x02BC || cp == 0x0060 || cp == 0x00B4) {
      cp = U'\'';
    } else if (is_space_like(cp)) {
      cp = U' ';
    }
  }

  remove_urls(s);
  remove_emails(s);
  for (char32_t& cp : s) {
    if (is_emoji(cp)) cp = U' ';
  }

  // Decontraction over runs of ASCII letters and apostrophes.
  std::u32string dec;
  dec.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto word_char = [](char32_t c) { return (c < 0x80 && std::isalpha(static_cast<int>(c))) || c == U'\''; };
    if (!word_char(s[i])) {
      dec.push_back(s[i++]);
      continue;
    }
    std::size_t e = i;
    while (e < s.size() && word_char(s[e])) ++e;
    const std::string word = text::encode_utf8(std::u32string_view(s).substr(i, e - i));
    dec += text::decode_utf8(word.find('\'') == std::string::npos ? word : decontract_word(word));
    i = e;
  }

  // Punctuation to spaces; a '#' that opens a word and precedes a letter or
  // digit survives for segmentation.
  std::u32string punct;
  punct.reserve(dec.size());
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const char32_t cp = dec[i];
    if (cp == U'#' && (punct.empty() || punct.back() == U' ') && i + 1 < dec.size() &&
        is_ascii_alnum32(dec[i + 1])) {
      punct.push_back(cp);
    } else if (text::is_punctuation(cp)) {
      punct.push_back(U' ');
    } else {
      punct.push_back(cp);
    }
  }

  std::string out;
  for (const std::string& w : text::split(text::encode_utf8(punct), ' ')) {
    if (w.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    if (w[0] == '#') {
      const auto parts = segment(std::string_view(w).substr(1));
      for (std::size_t k = 0; k < parts.size(); ++k) {
        if (k > 0) out.push_back(' ');
        out += parts[k];
      }
    } else {
      out += w;
    }
  }
  return text::collapse_whitespace(text::to_lower_ascii(out));
}

std::string normalize_sentence(std::string_view text) { return Normalizer::builtin().normalize(text); }

}  // namespace covex
