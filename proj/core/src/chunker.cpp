#include "covex/chunker.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "covex/error.hpp"
#include "covex/text.hpp"
#include "json.hpp"

namespace covex {

namespace {

enum class Tag { det, poss, pron, num, adj, noun, propn, other };

const std::unordered_set<std::string_view>& determiners() {
  static const std::unordered_set<std::string_view> s = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "every",
      "each", "no", "another", "all", "both", "such"};
  return s;
}

const std::unordered_set<std::string_view>& possessives() {
  static const std::unordered_set<std::string_view> s = {"my", "your", "his", "its", "our", "their"};
  return s;
}

const std::unordered_set<std::string_view>& pronouns() {
  static const std::unordered_set<std::string_view> s = {
      "i", "me", "you", "he", "him", "she", "they", "them", "we", "us", "it",
      "myself", "yourself", "himself", "herself", "themselves", "ourselves",
      "someone", "somebody", "everyone", "everybody", "anyone", "nobody", "u"};
  return s;
}

const std::unordered_set<std::string_view>& numerals() {
  static const std::unordered_set<std::string_view> s = {
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
      "eleven", "twelve", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
      "eighty", "ninety", "hundred", "thousand", "million", "dozen"};
  return s;
}

const std::unordered_set<std::string_view>& adjectives() {
  static const std::unordered_set<std::string_view> s = {
      "positive", "negative", "new", "old", "sick", "ill", "young", "elderly", "dead",
      "good", "bad", "great", "recent", "first", "last", "many", "few", "several",
      "other", "more", "most", "same", "local", "whole", "entire", "close", "high",
      "low", "little", "big", "small", "best", "worst", "next", "previous", "past",
      "severe", "mild", "asymptomatic", "symptomatic", "infected", "healthy", "own"};
  return s;
}

// Deictic time words; each is a chunk on its own ("when" answers).
const std::unordered_set<std::string_view>& time_words() {
  static const std::unordered_set<std::string_view> s = {"yesterday", "today", "tonight", "tomorrow"};
  return s;
}

// Abbreviations whose trailing period does not end the phrase.
const std::unordered_set<std::string_view>& honorifics() {
  static const std::unordered_set<std::string_view> s = {"dr", "mr", "mrs", "ms", "prof", "sen",
                                                         "gov", "rep", "pres", "st", "lt", "gen"};
  return s;
}

// Closed-class words that never sit inside a noun phrase.
const std::unordered_set<std::string_view>& breakers() {
  static const std::unordered_set<std::string_view> s = {
      // prepositions
      "in", "at", "on", "for", "with", "from", "to", "of", "by", "about", "after",
      "before", "during", "since", "until", "into", "over", "under", "near", "between",
      "against", "without", "through", "via", "per", "like", "than", "as", "off", "up",
      "down", "out", "around",
      // conjunctions
      "and", "or", "but", "so", "because", "if", "while", "although", "though", "nor",
      "yet", "then",
      // auxiliaries and frequent verbs
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do",
      "does", "did", "will", "would", "can", "could", "should", "may", "might", "must",
      "shall", "get", "gets", "got", "getting", "test", "tests", "testing", "die", "dies",
      "dying", "say", "says", "said", "tell", "told", "think", "thinks", "know", "knows",
      "go", "goes", "went", "going", "come", "came", "take", "took", "make", "made",
      "need", "needs", "want", "wants", "cure", "cures", "cured", "prevent", "prevents",
      "kill", "kills", "help", "helps", "work", "works", "stay", "let", "see", "saw",
      "feel", "feels", "felt", "keep", "keeps", "try", "tried", "refused", "denied",
      "can't", "cannot", "won't", "don't", "doesn't", "didn't", "isn't", "aren't",
      "wasn't", "weren't", "couldn't", "wouldn't", "shouldn't", "i'm", "it's",
      // adverbs, particles, wh-words
      "not", "just", "also", "still", "very", "really", "too", "already", "never",
      "always", "ever", "only", "even", "again", "here", "there", "please", "who",
      "what", "where", "when", "why", "how", "which", "whose", "whom", "rt", "amp",
      "yes", "ok", "okay", "lol", "away", "once", "twice"};
  return s;
}

struct WordToken {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string lower;
  Tag tag = Tag::other;
  bool break_before = false;
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

bool has_word_char(std::string_view s) {
  for (char c : s) {
    if (text::is_ascii_alnum(c)) return true;
  }
  // Non-ASCII letters (accented Latin, other scripts) use 2- and 3-byte
  // sequences; 4-byte sequences in tweets are almost always emoji.
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = static_cast<unsigned char>(s[i]);
    if (b >= 0xC3 && b < 0xE2) return true;
  }
  return false;
}

std::vector<WordToken> scan(const std::string& text) {
  std::vector<WordToken> out;
  bool pending_break = false;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text::is_ascii_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t e = i;
    while (e < text.size() && !text::is_ascii_space(text[e])) ++e;
    std::string_view piece(text.data() + i, e - i);
    const std::size_t piece_start = i;
    i = e;

    const std::string lower_piece = text::to_lower_ascii(piece);
    if (starts_with(lower_piece, "http://") || starts_with(lower_piece, "https://") ||
        starts_with(lower_piece, "www.")) {
      pending_break = true;
      continue;
    }

    std::size_t b = 0;
    std::size_t t = piece.size();
    while (b < t && text::is_ascii_punct(piece[b]) && piece[b] != '@' && piece[b] != '#') ++b;
    while (t > b && text::is_ascii_punct(piece[t - 1])) --t;
    bool trailing_break = t < piece.size();
    if (t + 1 == piece.size() && piece[t] == '.' && honorifics().contains(text::to_lower_ascii(piece.substr(b, t - b)))) {
      trailing_break = false;
    }
    // Possessive clitic: "John's mom" -> "John" | "mom".
    if (t - b > 2 && piece[t - 2] == '\'' && (piece[t - 1] == 's' || piece[t - 1] == 'S')) {
      t -= 2;
      trailing_break = true;
    }
    if (b > 0) pending_break = true;
    if (t <= b || !has_word_char(piece.substr(b, t - b))) {
      pending_break = true;
      continue;
    }

    WordToken tok;
    tok.start = piece_start + b;
    tok.end = piece_start + t;
    tok.lower = text::to_lower_ascii(piece.substr(b, t - b));
    tok.break_before = pending_break;
    const std::string_view w = tok.lower;
    const char first = piece[b];

    if (first == '@' || first == '#') {
      tok.tag = tok.lower.size() > 1 ? Tag::propn : Tag::other;
    } else if (std::all_of(w.begin(), w.end(), [](char c) { return (c >= '0' && c <= '9') || c == ',' || c == '.'; }) ||
               numerals().contains(w)) {
      tok.tag = Tag::num;
    } else if (determiners().contains(w)) {
      tok.tag = Tag::det;
    } else if (possessives().contains(w)) {
      tok.tag = Tag::poss;
    } else if (w == "her") {
      tok.tag = Tag::poss;  // resolved against the next token below
    } else if (pronouns().contains(w) || time_words().contains(w)) {
      tok.tag = Tag::pron;
    } else if (breakers().contains(w)) {
      tok.tag = Tag::other;
    } else if (adjectives().contains(w)) {
      // Capitalized mid-sentence ("New York", "Mercy General") reads as a name.
      tok.tag = is_upper(first) && !out.empty() && !pending_break ? Tag::propn : Tag::adj;
    } else if (is_upper(first)) {
      tok.tag = Tag::propn;
    } else if (w.size() > 3 && (w.ends_with("ed") || w.ends_with("ly"))) {
      tok.tag = Tag::other;
    } else {
      tok.tag = Tag::noun;
    }
    out.push_back(std::move(tok));
    pending_break = trailing_break;
  }

  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].lower != "her") continue;
    const bool nominal_next = k + 1 < out.size() && !out[k + 1].break_before &&
                              (out[k + 1].tag == Tag::noun || out[k + 1].tag == Tag::propn ||
                               out[k + 1].tag == Tag::adj || out[k + 1].tag == Tag::num);
    out[k].tag = nominal_next ? Tag::poss : Tag::pron;
  }
  return out;
}

bool is_head(Tag t) { return t == Tag::noun || t == Tag::propn || t == Tag::num; }

bool np_member(Tag t) {
  return t == Tag::det || t == Tag::poss || t == Tag::adj || t == Tag::num || t == Tag::noun ||
         t == Tag::propn;
}

CandidateChunk make_chunk(const std::string& text, const WordToken& first, const WordToken& last) {
  return {first.start, last.end, text.substr(first.start, last.end - first.start)};
}

}  // namespace

std::vector<CandidateChunk> RuleChunker::propose(const Tweet& tweet) const {
  const std::string& text = tweet.text_or_empty();
  const std::vector<WordToken> toks = scan(text);
  std::vector<CandidateChunk> chunks;

  auto flush = [&](std::size_t begin, std::size_t end) {
    while (end > begin && !is_head(toks[end - 1].tag)) --end;
    if (end > begin) chunks.push_back(make_chunk(text, toks[begin], toks[end - 1]));
  };

  // Noun phrases: [det|poss] (adj|num|noun|propn)* ending in a head.
  std::size_t run_begin = 0;
  bool in_run = false;
  for (std::size_t k = 0; k <= toks.size(); ++k) {
    const bool at_end = k == toks.size();
    const Tag tag = at_end ? Tag::other : toks[k].tag;
    const bool opener = tag == Tag::det || tag == Tag::poss;
    // An adjective after a head starts a new phrase: "covid | last week".
    const bool adj_after_head = in_run && tag == Tag::adj && is_head(toks[k - 1].tag);
    if (in_run && (at_end || !np_member(tag) || opener || adj_after_head || toks[k].break_before)) {
      flush(run_begin, k);
      in_run = false;
    }
    if (at_end) break;
    if (tag == Tag::pron) {
      chunks.push_back(make_chunk(text, toks[k], toks[k]));
    } else if (!in_run && np_member(tag)) {
      in_run = true;
      run_begin = k;
    }
  }

  // Named-entity proxies: maximal runs of proper-noun tokens.
  for (std::size_t k = 0; k < toks.size();) {
    if (toks[k].tag != Tag::propn) {
      ++k;
      continue;
    }
    std::size_t e = k + 1;
    while (e < toks.size() && toks[e].tag == Tag::propn && !toks[e].break_before) ++e;
    chunks.push_back(make_chunk(text, toks[k], toks[e - 1]));
    k = e;
  }
  return chunks;
}

std::vector<CandidateChunk> PrecomputedChunker::propose(const Tweet& tweet) const {
  auto it = table_.find(tweet.tweet_id);
  return it == table_.end() ? std::vector<CandidateChunk>{} : it->second;
}

std::vector<CandidateChunk> extract_candidates(const Tweet& tweet, const ChunkerBackend& backend) {
  const std::string& text = tweet.text_or_empty();
  if (text::trim(text).empty()) {
    throw PreconditionError("tweet " + tweet.tweet_id + " has no text to chunk");
  }
  std::vector<CandidateChunk> chunks;
  try {
    chunks = backend.propose(tweet);
  } catch (const ChunkerError&) {
    throw;
  } catch (const std::exception& e) {
    throw ChunkerError(std::string("backend failed: ") + e.what(), tweet.tweet_id);
  }
  for (const auto& c : chunks) {
    if (!(c.start < c.end && c.end <= text.size()) ||
        text.compare(c.start, c.end - c.start, c.text) != 0) {
      throw ChunkerError("backend returned span [" + std::to_string(c.start) + ", " +
                             std::to_string(c.end) + ") that does not match the text",
                         tweet.tweet_id);
    }
  }
  std::sort(chunks.begin(), chunks.end());
  chunks.erase(std::unique(chunks.begin(), chunks.end(),
                           [](const CandidateChunk& a, const CandidateChunk& b) {
                             return a.start == b.start && a.end == b.end;
                           }),
               chunks.end());
  return chunks;
}

ChunkTable load_precomputed(std::istream& in,
                            const std::unordered_map<std::string, std::string>* texts) {
  ChunkTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    CandidateChunk c;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& jid = j.at("tweet_id");
      id = jid.is_string() ? jid.get<std::string>() : std::to_string(jid.get<std::int64_t>());
      const auto start = j.at("start").get<std::int64_t>();
      const auto end = j.at("end").get<std::int64_t>();
      if (start < 0 || end < 0) throw ValidationError("negative offset in chunk row", id);
      c.start = static_cast<std::size_t>(start);
      c.end = static_cast<std::size_t>(end);
      c.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("chunk row: ") + e.what(), line_number);
    }
    if (c.start >= c.end || c.text.size() != c.end - c.start) {
      throw ValidationError("tweet " + id + ": chunk offsets [" + std::to_string(c.start) + ", " +
                                std::to_string(c.end) + ") disagree with its text",
                            id);
    }
    if (texts != nullptr) {
      auto it = texts->find(id);
      if (it == texts->end()) throw ValidationError("chunk row names unknown tweet " + id, id);
      if (c.end > it->second.size()) {
        throw ValidationError("tweet " + id + ": chunk end " + std::to_string(c.end) +
                                  " is beyond the text length " + std::to_string(it->second.size()),
                              id);
      }
      if (it->second.compare(c.start, c.end - c.start, c.text) != 0) {
        throw ValidationError("tweet " + id + ": chunk text does not match the tweet at its offsets", id);
      }
    }
    table[id].push_back(std::move(c));
  }
  return table;
}

ChunkTable load_precomputed(const std::filesystem::path& path,
                            const std::unordered_map<std::string, std::string>* texts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open chunk file " + path.string());
  try {
    return load_precomputed(in, texts);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

void save_precomputed(std::ostream& out, const ChunkTable& table) {
  for (const auto& [id, chunks] : table) {
    for (const auto& c : chunks) {
      nlohmann::json j = {{"tweet_id", id}, {"start", c.start}, {"end", c.end}, {"text", c.text}};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace covex
