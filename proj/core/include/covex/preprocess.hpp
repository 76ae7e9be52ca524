#ifndef COVEX_PREPROCESS_HPP
#define COVEX_PREPROCESS_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "covex/chunker.hpp"
#include "covex/corpus.hpp"
#include "covex/tokenizer.hpp"

namespace covex {

inline constexpr std::string_view kEntityStart = "<E>";
inline constexpr std::string_view kEntityEnd = "</E>";
inline constexpr std::size_t kDefaultMaxLength = 128;

// A tweet tokenized with ENTITY_START / ENTITY_END around one candidate.
struct MarkedSequence {
  std::vector<std::string> tokens;
  std::size_t p = 0;  // index of ENTITY_START
  std::size_t q = 0;  // index of ENTITY_END
  std::string tweet_id;
  CandidateChunk chunk;
  bool skipped = false;  // ENTITY_END would fall past max_length
};

// Inserts the markers around the tokens covering `chunk` (a chunk edge
// inside a token expands to the whole token). Sequences longer than
// max_length are truncated when both markers survive, otherwise flagged
// skipped.
MarkedSequence insert_markers(const Tweet& tweet, const CandidateChunk& chunk,
                              const Tokenizer& tokenizer,
                              std::size_t max_length = kDefaultMaxLength);

// Tokens with the two markers removed.
std::vector<std::string> strip_markers(const MarkedSequence& seq);

// Sentence-classification text normalization. Rules run in this order:
// URLs, emails, emoji, decontraction, punctuation (hashtag '#' kept),
// hashtag segmentation, lowercasing; whitespace is collapsed at the end.
class Normalizer {
 public:
  Normalizer(std::vector<std::pair<std::string, std::string>> decontractions,
             std::unordered_set<std::string> wordlist);

  // Tables compiled in from core/data/.
  static const Normalizer& builtin();
  // decontractions: "<from>\t<to>" lines ('*' prefix = suffix rule);
  // wordlist: one word per line. '#' starts a comment line in both.
  static Normalizer from_files(const std::filesystem::path& decontractions,
                               const std::filesystem::path& wordlist);
  static Normalizer from_text(std::string_view decontractions, std::string_view wordlist);

  std::string normalize(std::string_view text) const;
  // Greedy longest-match split of a lowercase word; unknown stretches are
  // kept together as one piece.
  std::vector<std::string> segment(std::string_view word) const;

 private:
  std::string decontract_word(const std::string& word) const;

  std::vector<std::pair<std::string, std::string>> whole_word_;
  std::vector<std::pair<std::string, std::string>> suffix_;
  std::unordered_set<std::string> wordlist_;
  std::size_t longest_word_ = 0;
};

std::string normalize_sentence(std::string_view text);

}  // namespace covex

#endif  // COVEX_PREPROCESS_HPP
