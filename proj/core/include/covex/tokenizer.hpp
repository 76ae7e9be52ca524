#ifndef COVEX_TOKENIZER_HPP
#define COVEX_TOKENIZER_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace covex {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";

// A token and the byte span of source text it covers.
struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<Token> tokenize(std::string_view text) const = 0;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  // One token per line (BERT vocab.txt).
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Returns the existing id when already present.
  int add(const std::string& token);
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// BERT tokenization: whitespace, punctuation and CJK splitting (in uncased
// mode also lowercased with accents stripped) followed by greedy
// longest-match WordPiece. Token offsets always point into the raw text. Registered special
// tokens are matched verbatim and never split.
class WordPieceTokenizer : public Tokenizer {
 public:
  WordPieceTokenizer(Vocabulary vocab, bool lower_case);

  std::vector<Token> tokenize(std::string_view text) const override;
  // Whitespace/punctuation split only, before WordPiece.
  std::vector<Token> basic_tokenize(std::string_view text) const;

  // Adds the token to the vocabulary (if missing) and to the never-split set.
  int add_special_token(const std::string& token);
  bool is_special(std::string_view token) const { return never_split_.contains(std::string(token)); }

  int id(std::string_view token) const;  // [UNK] id when absent
  std::vector<int> ids(std::span<const std::string> tokens) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  bool lower_case() const { return lower_case_; }

 private:
  struct Word;
  std::vector<Word> split_words(std::string_view text) const;

  Vocabulary vocab_;
  bool lower_case_;
  std::set<std::string> never_split_;
  int unk_id_;
};

// Whole-word vocabulary for randomly initialized encoders: the five BERT
// special tokens followed by every basic token in `texts`, sorted.
Vocabulary build_vocabulary(std::span<const std::string> texts, bool lower_case);

}  // namespace covex

#endif  // COVEX_TOKENIZER_HPP
