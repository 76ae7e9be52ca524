#ifndef COVEX_CHUNKER_HPP
#define COVEX_CHUNKER_HPP

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "covex/corpus.hpp"

namespace covex {

// A byte-offset span [start, end) of a tweet proposed as a slot answer.
struct CandidateChunk {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  auto operator<=>(const CandidateChunk&) const = default;
};

class ChunkerBackend {
 public:
  virtual ~ChunkerBackend() = default;
  virtual std::vector<CandidateChunk> propose(const Tweet& tweet) const = 0;
};

// Deterministic noun-phrase and named-entity proposer: a small closed-class
// lexicon tags function words; the remaining words are grouped into
// determiner/adjective/noun runs, and capitalized-token runs, @mentions and
// hashtags stand in for named entities.
class RuleChunker : public ChunkerBackend {
 public:
  std::vector<CandidateChunk> propose(const Tweet& tweet) const override;
};

using ChunkTable = std::map<std::string, std::vector<CandidateChunk>>;

// Serves chunks produced offline by an external tagger.
class PrecomputedChunker : public ChunkerBackend {
 public:
  explicit PrecomputedChunker(ChunkTable table) : table_(std::move(table)) {}
  std::vector<CandidateChunk> propose(const Tweet& tweet) const override;

 private:
  ChunkTable table_;
};

// Candidates sorted by (start, end), one per span, each checked against the
// tweet text. Throws PreconditionError for blank text and ChunkerError when
// the backend fails or returns an invalid span.
std::vector<CandidateChunk> extract_candidates(const Tweet& tweet, const ChunkerBackend& backend);

// Reads JSONL rows {"tweet_id", "start", "end", "text"}. When `texts` is
// given, every row must name a known tweet and match its text.
ChunkTable load_precomputed(const std::filesystem::path& path,
                            const std::unordered_map<std::string, std::string>* texts = nullptr);
ChunkTable load_precomputed(std::istream& in,
                            const std::unordered_map<std::string, std::string>* texts = nullptr);
void save_precomputed(std::ostream& out, const ChunkTable& table);

}  // namespace covex

#endif  // COVEX_CHUNKER_HPP
