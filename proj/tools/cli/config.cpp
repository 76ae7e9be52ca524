#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "covex/error.hpp"
#include "covex/rng.hpp"
#include "covex/text.hpp"

namespace covex::cli {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> d = {
      {"seed", "13"},
      {"events", "tested_positive,tested_negative,can_not_test,death,cure"},
      {"log.level", "info"},

      {"paths.corpus", ""},      // comma-separated annotation JSONL files
      {"paths.tweet_cache", ""}, // JSONL {tweet_id, text}
      {"paths.chunks", ""},      // precomputed chunk JSONL; empty = rule chunker
      {"paths.merge_maps", ""},  // JSON label merge maps
      {"paths.output", "out"},

      {"hydrate.api", "false"},
      {"hydrate.base_url", "https://api.twitter.com"},
      {"hydrate.threads", "4"},
      {"hydrate.max_attempts", "3"},
      {"hydrate.backoff_ms", "500"},
      {"hydrate.max_dropped_fraction", "0.1"},

      {"split.train_fraction", "0.7"},

      {"train.learning_rate", "2e-5"},
      {"train.epochs_slot", "8"},
      {"train.epochs_sentence", "10"},
      {"train.batch_size", "8"},
      {"train.max_steps", "0"},
      {"train.dropout", "0.1"},
      {"train.lambda1", "1"},
      {"train.lambda2", "1"},

      {"model.use_pooling", "true"},
      {"model.use_ces", "true"},
      {"model.gate_on_event", "false"},

      {"encoder.variant", "pretrained_domain"},
      {"encoder.substitute_tiny", "false"},
      {"encoder.cache_dir", ""},  // falls back to $COVEX_MODEL_CACHE
      {"encoder.domain_model", ""},
      {"encoder.large_model", ""},
      {"encoder.base_model", ""},
      {"encoder.hidden", "32"},
      {"encoder.layers", "2"},
      {"encoder.heads", "2"},
      {"encoder.intermediate", "64"},
      {"encoder.max_length", "128"},
      {"encoder.lower_case", "true"},

      {"eval.threads", "1"},
  };
  return d;
}

// Keys that only affect speed or verbosity.
const std::set<std::string>& unfingerprinted() {
  static const std::set<std::string> s = {"log.level", "hydrate.threads", "eval.threads"};
  return s;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.values_ = default_values();
  c.base_dir_ = std::filesystem::current_path();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), std::filesystem::absolute(path).parent_path());
}

RunConfig RunConfig::parse(std::string_view content, const std::filesystem::path& base_dir) {
  RunConfig c = defaults();
  c.base_dir_ = base_dir;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(n) + ": expected 'key = value'");
    }
    c.set(text::trim(t.substr(0, eq)), text::trim(t.substr(eq + 1)));
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::apply_overrides(std::span<const std::string> assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    set(text::trim(a.substr(0, eq)), text::trim(a.substr(eq + 1)));
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = text::to_lower_ascii(get(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + get(key) + "'");
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::filesystem::path RunConfig::get_path(const std::string& key) const {
  return resolve(get(key));
}

std::filesystem::path RunConfig::resolve(const std::string& value) const {
  if (value.empty()) return {};
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::string RunConfig::fingerprint() const {
  std::uint64_t h = fnv1a64("covex-config-1\n");
  for (const auto& [k, v] : values_) {
    if (unfingerprinted().contains(k)) continue;
    h = fnv1a64(k + "=" + v + "\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::seed() const {
  const std::int64_t s = get_int("seed");
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

std::vector<EventType> RunConfig::events() const {
  std::vector<EventType> out;
  for (const auto& name : text::split(get("events"), ',')) {
    const std::string t = text::trim(name);
    if (t.empty()) continue;
    auto e = try_parse_event(t);
    if (!e) throw ConfigError("events: unknown event '" + t + "'");
    if (std::find(out.begin(), out.end(), *e) == out.end()) out.push_back(*e);
  }
  if (out.empty()) throw ConfigError("events: no events configured");
  return out;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = get_double("train.learning_rate");
  t.epochs_slot = static_cast<int>(get_int("train.epochs_slot"));
  t.epochs_sentence = static_cast<int>(get_int("train.epochs_sentence"));
  const std::int64_t batch = get_int("train.batch_size");
  if (batch <= 0) throw ConfigError("train.batch_size must be positive");
  t.batch_size = static_cast<std::size_t>(batch);
  t.max_steps = get_int("train.max_steps");
  t.dropout = get_double("train.dropout");
  t.lambda1 = get_double("train.lambda1");
  t.lambda2 = get_double("train.lambda2");
  t.use_pooling = get_bool("model.use_pooling");
  t.use_ces = get_bool("model.use_ces");
  t.encoder_variant = parse_encoder_variant(get("encoder.variant"));
  t.seed = seed();
  if (!(t.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (t.epochs_slot < 0 || t.epochs_sentence < 0) throw ConfigError("epochs must be non-negative");
  if (t.lambda1 < 0.0 || t.lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
  if (t.dropout < 0.0 || t.dropout >= 1.0) throw ConfigError("train.dropout must be in [0, 1)");
  return t;
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig e;
  e.variant = parse_encoder_variant(get("encoder.variant"));
  if (e.variant != EncoderVariant::tiny_test && get_bool("encoder.substitute_tiny")) {
    e.variant = EncoderVariant::tiny_test;
  }
  switch (e.variant) {
    case EncoderVariant::pretrained_domain: e.model_id = get("encoder.domain_model"); break;
    case EncoderVariant::pretrained_large: e.model_id = get("encoder.large_model"); break;
    case EncoderVariant::pretrained_base: e.model_id = get("encoder.base_model"); break;
    case EncoderVariant::tiny_test: break;
  }
  e.cache_dir = get_path("encoder.cache_dir");
  if (e.cache_dir.empty()) {
    if (const char* env = std::getenv("COVEX_MODEL_CACHE"); env != nullptr) e.cache_dir = env;
  }
  if (e.variant != EncoderVariant::tiny_test && e.model_id.empty()) {
    throw ConfigError("encoder variant " + std::string(to_string(e.variant)) +
                      " has no model id; set encoder.domain_model / large_model / base_model "
                      "or encoder.substitute_tiny = true");
  }
  e.hidden = static_cast<int>(get_int("encoder.hidden"));
  e.layers = static_cast<int>(get_int("encoder.layers"));
  e.heads = static_cast<int>(get_int("encoder.heads"));
  e.intermediate = static_cast<int>(get_int("encoder.intermediate"));
  const std::int64_t max_length = get_int("encoder.max_length");
  if (max_length <= 0) throw ConfigError("encoder.max_length must be positive");
  e.max_positions = static_cast<int>(max_length) + 2;
  e.lower_case = get_bool("encoder.lower_case");
  e.dropout = get_double("train.dropout");
  e.seed = seed();
  return e;
}

std::size_t RunConfig::eval_threads() const {
  const std::int64_t t = get_int("eval.threads");
  if (t <= 0) throw ConfigError("eval.threads must be positive");
  return static_cast<std::size_t>(t);
}

std::filesystem::path RunConfig::checkpoint_path(EventType event, ModelFamily family) const {
  return models_dir() / (std::string(to_string(event)) + "." + std::string(to_string(family)) + ".covex");
}

}  // namespace covex::cli
