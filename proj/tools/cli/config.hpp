#ifndef COVEX_TOOLS_CONFIG_HPP
#define COVEX_TOOLS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covex/corpus.hpp"
#include "covex/encoder.hpp"
#include "covex/pipeline.hpp"

namespace covex::cli {

// Flat "key = value" run configuration. Every key has a default, unknown
// keys are rejected, and relative paths resolve against the config file's
// directory.
class RunConfig {
 public:
  static RunConfig defaults();
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir);

  // "key=value" overrides, applied in order.
  void set(const std::string& key, const std::string& value);
  void apply_overrides(std::span<const std::string> assignments);

  const std::string& get(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;  // empty stays empty
  std::filesystem::path resolve(const std::string& value) const;

  // FNV-1a over the effective key/value pairs, excluding keys that cannot
  // change results (thread counts, log level). 16 hex digits.
  std::string fingerprint() const;
  // Canonical "key = value" listing of the effective configuration.
  std::string dump() const;

  std::uint64_t seed() const;
  std::vector<EventType> events() const;
  TrainConfig train_config() const;
  EncoderConfig encoder_config() const;  // variant-specific model id applied
  bool gate_on_event() const { return get_bool("model.gate_on_event"); }
  std::size_t eval_threads() const;

  std::filesystem::path output_dir() const { return get_path("paths.output"); }
  std::filesystem::path prepared_dir() const {
    return prepared_override_.empty() ? output_dir() / "prepared" : prepared_override_;
  }
  // Ablation runs read the base run's prepared data.
  void set_prepared_dir(std::filesystem::path dir) { prepared_override_ = std::move(dir); }
  std::filesystem::path models_dir() const { return output_dir() / "models"; }
  std::filesystem::path checkpoint_path(EventType event, ModelFamily family) const;
  std::filesystem::path thresholds_path() const { return output_dir() / "thresholds.json"; }

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
  std::filesystem::path prepared_override_;
};

}  // namespace covex::cli

#endif  // COVEX_TOOLS_CONFIG_HPP
