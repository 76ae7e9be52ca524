#include "covex/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "covex/error.hpp"
#include "covex/text.hpp"
#include "unicode_fold.hpp"

namespace covex {

namespace {

constexpr std::size_t kMaxWordChars = 100;

// Decodes one code point at s[i]; returns its byte length, 0 for an invalid byte.
std::size_t next_code_point(std::string_view s, std::size_t i, char32_t& cp) {
  const auto one = text::decode_utf8(s.substr(i, std::min<std::size_t>(4, s.size() - i)));
  if (one.empty()) return 0;
  cp = one.front();
  std::string enc;
  text::append_utf8(enc, cp);
  // decode_utf8 skips invalid leading bytes; make sure the first code point starts at i.
  return s.compare(i, enc.size(), enc) == 0 ? enc.size() : 0;
}

bool is_whitespace(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x0B || cp == 0x0C ||
         cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_control(char32_t cp) {
  return cp < 0x20 || cp == 0x7F || cp == 0xFFFD || (cp >= 0x80 && cp < 0xA0) || cp == 0xAD ||
         (cp >= 0x200B && cp <= 0x200F) || (cp >= 0x202A && cp <= 0x202E) ||
         (cp >= 0x2060 && cp <= 0x2064) || cp == 0xFEFF;
}

// CJK ideographs become single-character words, as in BERT.
bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2B73F) ||
         (cp >= 0x2B740 && cp <= 0x2B81F) || (cp >= 0x2B820 && cp <= 0x2CEAF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x2F800 && cp <= 0x2FA1F);
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (auto& t : tokens) add(t);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open vocabulary " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Duplicate lines keep their first id but still occupy a row.
    if (v.index_.contains(line)) {
      v.tokens_.push_back(line);
      continue;
    }
    v.add(line);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordPieceTokenizer::WordPieceTokenizer(Vocabulary vocab, bool lower_case)
    : vocab_(std::move(vocab)), lower_case_(lower_case) {
  const auto unk = vocab_.find(kUnkToken);
  if (!unk) throw ModelError("vocabulary has no " + std::string(kUnkToken) + " token");
  unk_id_ = *unk;
}

int WordPieceTokenizer::add_special_token(const std::string& token) {
  never_split_.insert(token);
  return vocab_.add(token);
}

int WordPieceTokenizer::id(std::string_view token) const {
  return vocab_.find(token).value_or(unk_id_);
}

std::vector<int> WordPieceTokenizer::ids(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

// A basic-tokenized word: its (possibly folded) text, plus for every byte of
// that text the source offset it came from, and one trailing entry for the end.
struct WordPieceTokenizer::Word {
  std::string text;
  std::vector<std::size_t> origin;
};

std::vector<Token> WordPieceTokenizer::basic_tokenize(std::string_view s) const {
  std::vector<Token> out;
  for (auto& w : split_words(s)) {
    const std::size_t start = w.origin.front();
    const std::size_t end = w.origin.back();
    out.push_back({std::move(w.text), start, end});
  }
  return out;
}

std::vector<WordPieceTokenizer::Word> WordPieceTokenizer::split_words(std::string_view s) const {
  std::vector<Word> out;
  Word current;
  auto flush = [&](std::size_t end) {
    if (current.text.empty()) {
      current.origin.clear();
      return;
    }
    current.origin.push_back(end);
    out.push_back(std::move(current));
    current = {};
  };
  auto append = [&](Word& w, char32_t cp, std::size_t at) {
    const std::size_t before = w.text.size();
    text::append_utf8(w.text, cp);
    w.origin.insert(w.origin.end(), w.text.size() - before, at);
  };

  std::size_t i = 0;
  while (i < s.size()) {
    bool matched_special = false;
    for (const auto& sp : never_split_) {
      if (s.compare(i, sp.size(), sp) == 0) {
        flush(i);
        Word special{sp, {}};
        special.origin.resize(sp.size());
        for (std::size_t k = 0; k < sp.size(); ++k) special.origin[k] = i + k;
        special.origin.push_back(i + sp.size());
        out.push_back(std::move(special));
        i += sp.size();
        matched_special = true;
        break;
      }
    }
    if (matched_special) continue;

    char32_t cp = 0;
    const std::size_t n = next_code_point(s, i, cp);
    if (n == 0) {
      flush(i);
      ++i;
      continue;
    }
    if (lower_case_) cp = text::fold_code_point(cp);
    if (cp == 0) {
      // A dropped combining mark stays part of whatever word it belongs to.
    } else if (is_whitespace(cp) || is_control(cp)) {
      flush(i);
    } else if (text::is_punctuation(cp) || is_cjk(cp)) {
      flush(i);
      Word single;
      append(single, cp, i);
      single.origin.push_back(i + n);
      out.push_back(std::move(single));
    } else {
      append(current, cp, i);
    }
    i += n;
  }
  flush(s.size());
  return out;
}

std::vector<Token> WordPieceTokenizer::tokenize(std::string_view s) const {
  std::vector<Token> out;
  for (const Word& word : split_words(s)) {
    const std::size_t word_start = word.origin.front();
    const std::size_t word_end = word.origin.back();
    if (never_split_.contains(word.text)) {
      out.push_back({word.text, word_start, word_end});
      continue;
    }
    if (text::decode_utf8(word.text).size() > kMaxWordChars) {
      out.push_back({std::string(kUnkToken), word_start, word_end});
      continue;
    }
    std::vector<Token> pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < word.text.size()) {
      std::size_t end = word.text.size();
      std::optional<std::string> found;
      while (end > start) {
        std::string piece = word.text.substr(start, end - start);
        if (start > 0) piece = "##" + piece;
        if (vocab_.find(piece)) {
          found = std::move(piece);
          break;
        }
        // Step back one code point.
        --end;
        while (end > start && (static_cast<unsigned char>(word.text[end]) & 0xC0) == 0x80) --end;
      }
      if (!found) {
        bad = true;
        break;
      }
      pieces.push_back({*found, word.origin[start], word.origin[end]});
      start = end;
    }
    if (bad) {
      out.push_back({std::string(kUnkToken), word_start, word_end});
    } else {
      out.insert(out.end(), pieces.begin(), pieces.end());
    }
  }
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> texts, bool lower_case) {
  WordPieceTokenizer basic(Vocabulary({std::string(kUnkToken)}), lower_case);
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& tok : basic.basic_tokenize(t)) words.insert(std::move(tok.text));
  }
  Vocabulary v({std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
                std::string(kSepToken), std::string(kMaskToken)});
  for (const auto& w : words) v.add(w);
  return v;
}

}  // namespace covex
