#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "covex/error.hpp"
#include "covex/fetcher.hpp"

#ifdef COVEX_WITH_HTTP
#include "httplib.h"
#include "json.hpp"
#endif

namespace covex {

TwitterApiFetcher::TwitterApiFetcher(std::string base_url, std::string bearer_token,
                                     std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), bearer_token_(std::move(bearer_token)), timeout_(timeout) {}

std::unique_ptr<TwitterApiFetcher> TwitterApiFetcher::from_env(std::string base_url) {
  const char* token = std::getenv(kBearerTokenEnv);
  if (token == nullptr || *token == '\0') {
    throw ConfigError(std::string("network hydration needs ") + kBearerTokenEnv + " to be set");
  }
  return std::make_unique<TwitterApiFetcher>(std::move(base_url), token);
}

#ifdef COVEX_WITH_HTTP

FetchResult TwitterApiFetcher::resolve(const std::string& tweet_id) {
  if (tweet_id.empty() || !std::all_of(tweet_id.begin(), tweet_id.end(),
                                       [](unsigned char c) { return std::isdigit(c); })) {
    return FetchResult::not_found();
  }
  // httplib clients are not shareable across threads; one per call.
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const httplib::Headers headers = {{"Authorization", "Bearer " + bearer_token_}};
  auto res = client.Get("/2/tweets/" + tweet_id, headers);
  if (!res) return FetchResult::transport_error(httplib::to_string(res.error()));

  if (res->status == 404) return FetchResult::not_found();
  if (res->status != 200) {
    return FetchResult::transport_error("HTTP " + std::to_string(res->status));
  }
  try {
    const auto body = nlohmann::json::parse(res->body);
    if (auto data = body.find("data"); data != body.end() && data->contains("text")) {
      return FetchResult::found(data->at("text").get<std::string>());
    }
    // Deleted, protected and suspended tweets come back as 200 with "errors".
    if (body.contains("errors")) return FetchResult::not_found();
  } catch (const nlohmann::json::exception& e) {
    return FetchResult::transport_error(std::string("unparseable response: ") + e.what());
  }
  return FetchResult::transport_error("response has neither data nor errors");
}

#else

FetchResult TwitterApiFetcher::resolve(const std::string&) {
  return FetchResult::transport_error("covex was built without network support");
}

#endif

}  // namespace covex
