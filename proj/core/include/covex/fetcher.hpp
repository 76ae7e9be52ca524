#ifndef COVEX_FETCHER_HPP
#define COVEX_FETCHER_HPP

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "covex/corpus.hpp"

namespace covex {

struct FetchResult {
  enum class Status { found, not_found, transport_error };

  Status status = Status::not_found;
  std::string text;    // set when found
  std::string detail;  // diagnostic for transport errors

  static FetchResult found(std::string text) { return {Status::found, std::move(text), {}}; }
  static FetchResult not_found() { return {Status::not_found, {}, {}}; }
  static FetchResult transport_error(std::string detail) {
    return {Status::transport_error, {}, std::move(detail)};
  }
};

// Resolves a tweet id to its text. Implementations must be safe to call from
// several threads at once.
class TweetFetcher {
 public:
  virtual ~TweetFetcher() = default;
  virtual FetchResult resolve(const std::string& tweet_id) = 0;
};

// Offline fetcher backed by a JSONL file of {"tweet_id": ..., "text": ...}.
class CacheFileFetcher : public TweetFetcher {
 public:
  explicit CacheFileFetcher(const std::filesystem::path& path);
  explicit CacheFileFetcher(std::unordered_map<std::string, std::string> texts);

  FetchResult resolve(const std::string& tweet_id) override;
  std::size_t size() const { return texts_.size(); }

 private:
  std::unordered_map<std::string, std::string> texts_;
};

// Tries `primary`, then `fallback` for anything primary did not find. A
// transport error is reported only if neither source produced a definite answer.
class FallbackFetcher : public TweetFetcher {
 public:
  FallbackFetcher(std::shared_ptr<TweetFetcher> primary, std::shared_ptr<TweetFetcher> fallback);
  FetchResult resolve(const std::string& tweet_id) override;

 private:
  std::shared_ptr<TweetFetcher> primary_;
  std::shared_ptr<TweetFetcher> fallback_;
};

// Twitter API v2 single-tweet lookup. Reads the bearer token from
// COVEX_TWITTER_BEARER_TOKEN when constructed through from_env().
class TwitterApiFetcher : public TweetFetcher {
 public:
  TwitterApiFetcher(std::string base_url, std::string bearer_token,
                    std::chrono::seconds timeout = std::chrono::seconds(10));
  static std::unique_ptr<TwitterApiFetcher> from_env(std::string base_url);

  FetchResult resolve(const std::string& tweet_id) override;

 private:
  std::string base_url_;
  std::string bearer_token_;
  std::chrono::seconds timeout_;
};

inline constexpr const char* kBearerTokenEnv = "COVEX_TWITTER_BEARER_TOKEN";

struct HydrateOptions {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{0};
  std::size_t threads = 1;
};

struct HydrationResult {
  std::vector<AnnotatedExample> examples;
  std::vector<std::string> missing_ids;

  std::size_t dropped() const { return missing_ids.size(); }
};

// Fills tweet text. Examples that already carry text are not re-fetched;
// unresolvable ones are dropped and listed. Output order follows input order.
// Throws TransportError (after retries) if any fetch cannot complete.
HydrationResult hydrate(std::vector<AnnotatedExample> examples, TweetFetcher& fetcher,
                        const HydrateOptions& options = {});

}  // namespace covex

#endif  // COVEX_FETCHER_HPP
