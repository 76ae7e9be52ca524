#include "doctest.h"
#include "support.hpp"

#include <sstream>

#include "covex/chunker.hpp"
#include "covex/error.hpp"
#include "covex/rng.hpp"
#include "covex/text.hpp"

using namespace covex;

namespace {

const std::string kData = COVEX_TEST_DATA;

std::vector<std::string> texts(const std::vector<CandidateChunk>& chunks) {
  std::vector<std::string> out;
  for (const auto& c : chunks) out.push_back(c.text);
  return out;
}

struct ThrowingBackend : ChunkerBackend {
  std::vector<CandidateChunk> propose(const Tweet&) const override { throw std::runtime_error("tagger crashed"); }
};

struct FixedBackend : ChunkerBackend {
  std::vector<CandidateChunk> chunks;
  std::vector<CandidateChunk> propose(const Tweet&) const override { return chunks; }
};

}  // namespace

TEST_CASE("rule chunker finds names and places") {
  const auto c = texts(extract_candidates({"1", "John tested negative in Seattle"}, RuleChunker{}));
  CHECK(std::find(c.begin(), c.end(), "John") != c.end());
  CHECK(std::find(c.begin(), c.end(), "Seattle") != c.end());

  CHECK(extract_candidates({"2", "Positive"}, RuleChunker{}).size() <= 1);
  CHECK_THROWS_AS(extract_candidates({"3", "   "}, RuleChunker{}), PreconditionError);
  CHECK_THROWS_AS(extract_candidates({"4", std::nullopt}, RuleChunker{}), PreconditionError);
}

TEST_CASE("rule chunker matches the golden file") {
  std::istringstream in(test::read_file(kData + "/chunker_golden.tsv"));
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    const auto fields = text::split(line, '\t');
    const std::string& tweet = fields[0];
    std::vector<std::string> expected(fields.begin() + 1, fields.end());
    std::vector<std::string> actual;
    for (const auto& c : extract_candidates({"g", tweet}, RuleChunker{})) {
      actual.push_back(std::to_string(c.start) + ":" + std::to_string(c.end) + ":" + c.text);
    }
    INFO(tweet);
    CHECK(actual == expected);
    ++rows;
  }
  CHECK(rows >= 10);
}

TEST_CASE("candidates are sorted, unique by span and faithful to the text") {
  Rng rng(17);
  const std::vector<std::string> words = {"My", "mom", "tested", "positive", "in", "New", "York", "the",
                                          "doctor", "@cdc", "#covid", "yesterday", ",", "and", "she",
                                          "caf\xc3\xa9", "\xf0\x9f\x98\xb7", "Dr.", "Smith's", "http://x.co/1"};
  for (int i = 0; i < 500; ++i) {
    std::string t;
    for (std::size_t k = 0, n = 1 + rng.below(15); k < n; ++k) t += words[rng.below(words.size())] + " ";
    const Tweet tweet{"r", t};
    const auto chunks = extract_candidates(tweet, RuleChunker{});
    CHECK(chunks == extract_candidates(tweet, RuleChunker{}));
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      const auto& c = chunks[k];
      REQUIRE(c.start < c.end);
      REQUIRE(c.end <= t.size());
      CHECK(t.substr(c.start, c.end - c.start) == c.text);
      if (k > 0) {
        const auto& p = chunks[k - 1];
        CHECK(std::make_pair(p.start, p.end) < std::make_pair(c.start, c.end));
      }
    }
  }
}

TEST_CASE("identical text at different offsets stays distinct") {
  const auto c = extract_candidates({"1", "Bob and Bob"}, RuleChunker{});
  REQUIRE(c.size() == 2);
  CHECK(c[0].start == 0);
  CHECK(c[1].start == 8);
}

TEST_CASE("backend failures carry the tweet id") {
  try {
    extract_candidates({"42", "some text"}, ThrowingBackend{});
    FAIL("expected ChunkerError");
  } catch (const ChunkerError& e) {
    CHECK(e.tweet_id() == "42");
  }
  FixedBackend bad;
  bad.chunks = {{0, 4, "nope"}};
  CHECK_THROWS_AS(extract_candidates({"43", "some text"}, bad), ChunkerError);

  FixedBackend dup;
  dup.chunks = {{5, 9, "text"}, {0, 4, "some"}, {0, 4, "some"}};
  const auto c = extract_candidates({"44", "some text"}, dup);
  REQUIRE(c.size() == 2);
  CHECK(c[0].text == "some");
}

TEST_CASE("precomputed chunk files are validated against tweet text") {
  const std::unordered_map<std::string, std::string> known = {{"1", "John tested positive"}};

  std::istringstream ok(R"({"tweet_id":"1","start":0,"end":4,"text":"John"})");
  const ChunkTable table = load_precomputed(ok, &known);
  REQUIRE(table.at("1").size() == 1);
  CHECK(table.at("1")[0].text == "John");

  std::istringstream past_end(R"({"tweet_id":"1","start":5,"end":40,"text":"tested positive plus lots more text"})");
  try {
    load_precomputed(past_end, &known);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.tweet_id() == "1");
  }

  std::istringstream unknown(R"({"tweet_id":"9","start":0,"end":4,"text":"John"})");
  CHECK_THROWS_AS(load_precomputed(unknown, &known), ValidationError);

  std::istringstream empty("");
  CHECK(load_precomputed(empty, &known).empty());

  // Round trip through the file format, then serve from it.
  std::ostringstream out;
  save_precomputed(out, table);
  std::istringstream back(out.str());
  CHECK(load_precomputed(back, &known) == table);
  PrecomputedChunker pc(table);
  CHECK(texts(extract_candidates({"1", "John tested positive"}, pc)) == std::vector<std::string>{"John"});
  CHECK(pc.propose({"2", "other"}).empty());
}
