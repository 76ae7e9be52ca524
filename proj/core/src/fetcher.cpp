#include "covex/fetcher.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "covex/error.hpp"
#include "json.hpp"

namespace covex {

CacheFileFetcher::CacheFileFetcher(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tweet cache " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& id = j.at("tweet_id");
      std::string key = id.is_string() ? id.get<std::string>() : std::to_string(id.get<std::int64_t>());
      texts_[std::move(key)] = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_number, path.string());
    }
  }
}

CacheFileFetcher::CacheFileFetcher(std::unordered_map<std::string, std::string> texts)
    : texts_(std::move(texts)) {}

FetchResult CacheFileFetcher::resolve(const std::string& tweet_id) {
  auto it = texts_.find(tweet_id);
  if (it == texts_.end()) return FetchResult::not_found();
  return FetchResult::found(it->second);
}

FallbackFetcher::FallbackFetcher(std::shared_ptr<TweetFetcher> primary,
                                 std::shared_ptr<TweetFetcher> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

FetchResult FallbackFetcher::resolve(const std::string& tweet_id) {
  FetchResult first = primary_->resolve(tweet_id);
  if (first.status == FetchResult::Status::found) return first;
  FetchResult second = fallback_->resolve(tweet_id);
  if (second.status == FetchResult::Status::found) return second;
  if (first.status == FetchResult::Status::not_found &&
      second.status == FetchResult::Status::not_found) {
    return second;
  }
  // One side could not answer; "not found" from the other is not conclusive.
  return first.status == FetchResult::Status::transport_error ? first : second;
}

namespace {

FetchResult resolve_with_retry(TweetFetcher& fetcher, const std::string& id,
                               const HydrateOptions& options) {
  FetchResult r;
  for (int attempt = 0; attempt < std::max(1, options.max_attempts); ++attempt) {
    r = fetcher.resolve(id);
    if (r.status != FetchResult::Status::transport_error) return r;
    if (options.backoff.count() > 0) std::this_thread::sleep_for(options.backoff * (attempt + 1));
  }
  return r;
}

}  // namespace

HydrationResult hydrate(std::vector<AnnotatedExample> examples, TweetFetcher& fetcher,
                        const HydrateOptions& options) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].tweet.text) pending.push_back(i);
  }

  std::vector<FetchResult> results(examples.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t k = cursor++; k < pending.size(); k = cursor++) {
      const std::size_t i = pending[k];
      results[i] = resolve_with_retry(fetcher, examples[i].tweet.tweet_id, options);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, pending.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i : pending) {
    if (results[i].status == FetchResult::Status::transport_error) {
      throw TransportError("fetching tweet " + examples[i].tweet.tweet_id + " failed after " +
                           std::to_string(std::max(1, options.max_attempts)) +
                           " attempt(s): " + results[i].detail);
    }
  }

  HydrationResult out;
  out.examples.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].tweet.text) {
      if (results[i].status == FetchResult::Status::not_found) {
        out.missing_ids.push_back(examples[i].tweet.tweet_id);
        continue;
      }
      examples[i].tweet.text = std::move(results[i].text);
    }
    out.examples.push_back(std::move(examples[i]));
  }
  return out;
}

}  // namespace covex
