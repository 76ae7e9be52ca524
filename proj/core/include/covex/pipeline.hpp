#ifndef COVEX_PIPELINE_HPP
#define COVEX_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covex/chunker.hpp"
#include "covex/corpus.hpp"
#include "covex/encoder.hpp"
#include "covex/metrics.hpp"
#include "covex/preprocess.hpp"
#include "covex/sentence_model.hpp"
#include "covex/slot_model.hpp"

namespace covex {

enum class ModelFamily { slot, sentence };
std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);  // "slot" | "sentence"

struct TrainConfig {
  double learning_rate = 2e-5;
  int epochs_slot = 8;
  int epochs_sentence = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double dropout = 0.1;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  bool use_pooling = true;
  bool use_ces = true;
  EncoderVariant encoder_variant = EncoderVariant::pretrained_domain;
  std::int64_t max_steps = 0;  // 0: no cap

  bool operator==(const TrainConfig&) const = default;
  SlotModelConfig slot_config() const;
  SentenceModelConfig sentence_config() const;
};

// Named configurations for the published ablation tables.
struct AblationSpec {
  std::string name;
  std::vector<ModelFamily> families;
  TrainConfig config;
};
std::vector<std::string> ablation_names();
// Sets use_pooling, use_ces and encoder_variant on top of `base`. Unknown
// names throw ConfigError listing the valid ones.
AblationSpec ablation(std::string_view name, const TrainConfig& base = {});
std::vector<AblationSpec> ablation_matrix(std::span<const std::string> names,
                                          const TrainConfig& base = {});

// Pretrained variants load from the cache; tiny_test builds a whole-word
// vocabulary over `texts` (raw and normalized forms are both added).
Encoder make_encoder(const EncoderConfig& config, std::span<const std::string> texts);

// ---- training data ----

struct SlotInstance {
  std::string tweet_id;
  CandidateChunk chunk;
  MarkedSequence sequence;
  std::optional<int> y_ces;
  std::vector<std::optional<int>> labels;  // per model subtask; absent when not annotated
};

struct SentenceInstance {
  std::string tweet_id;
  std::vector<std::string> tokens;
  std::optional<int> y_ces;
  std::vector<std::optional<int>> labels;
};

// Examples of other events are ignored. Candidates whose markers fall past
// the length limit are dropped.
std::vector<SlotInstance> build_slot_instances(std::span<const AnnotatedExample> examples,
                                               const SlotModel& model,
                                               const ChunkerBackend& chunker);
std::vector<SentenceInstance> build_sentence_instances(std::span<const AnnotatedExample> examples,
                                                       const SentenceModel& model);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean item loss per epoch
  std::int64_t steps = 0;
};

// Mini-batch Adam over shuffled instances. Throws PreconditionError when
// there is nothing to train on.
TrainLog train_slot(SlotModel& model, std::span<const SlotInstance> data, const TrainConfig& config);
TrainLog train_sentence(SentenceModel& model, std::span<const SentenceInstance> data,
                        const TrainConfig& config);

// ---- checkpoints ----

struct CheckpointInfo {
  ModelFamily family = ModelFamily::slot;
  EventType event = EventType::tested_positive;
  std::string fingerprint;
};

void save_checkpoint(const std::filesystem::path& path, const SlotModel& model,
                     const std::string& fingerprint, std::uint64_t seed);
void save_checkpoint(const std::filesystem::path& path, const SentenceModel& model,
                     const std::string& fingerprint, std::uint64_t seed);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
SlotModel load_slot_checkpoint(const std::filesystem::path& path, const SubtaskRegistry& registry);
SentenceModel load_sentence_checkpoint(const std::filesystem::path& path,
                                       const SubtaskRegistry& registry);

// ---- thresholds and evaluation ----

// Per slot subtask: one SlotItem per example annotated for that subtask.
std::map<std::string, std::vector<SlotItem>> score_slot_items(
    const SlotModel& model, std::span<const AnnotatedExample> examples,
    const ChunkerBackend& chunker, std::size_t threads = 1);

// Grid search per subtask; subtasks without items fall back to 0.5 with a warning.
std::map<std::string, double> tune_thresholds(
    const std::map<std::string, std::vector<SlotItem>>& items,
    const std::vector<std::string>& subtasks);

void save_thresholds(const std::filesystem::path& path, const ThresholdTable& table,
                     const std::string& fingerprint);
ThresholdTable load_thresholds(const std::filesystem::path& path, std::string* fingerprint = nullptr);

std::vector<SubtaskScore> evaluate_slots(const std::map<std::string, std::vector<SlotItem>>& items,
                                         EventType event,
                                         const std::map<std::string, double>& thresholds);
std::vector<SubtaskScore> evaluate_sentences(const SentenceModel& model,
                                             std::span<const AnnotatedExample> examples,
                                             std::size_t threads = 1);

// ---- prediction ----

struct TweetInput {
  std::string tweet_id;
  EventType event = EventType::tested_positive;
  std::string text;
};
// JSONL {"tweet_id", "event", "text"}; a bad line throws ParseError naming it.
std::vector<TweetInput> read_tweet_inputs(std::istream& in);

struct PredictionRecord {
  std::string tweet_id;
  EventType event = EventType::tested_positive;
  std::map<std::string, std::set<std::string>> slots;
  std::map<std::string, std::string> sentences;
  bool operator==(const PredictionRecord&) const = default;
};

std::string to_json_line(const PredictionRecord& record);
PredictionRecord parse_prediction_line(std::string_view line, std::size_t line_number,
                                       const SubtaskRegistry& registry);
void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in, const SubtaskRegistry& registry);

struct EventModels {
  const SlotModel* slot = nullptr;
  const SentenceModel* sentence = nullptr;
  std::map<std::string, double> thresholds;  // missing subtasks use 0.5
};

// Throws ModelError when an input's event lacks either model.
std::vector<PredictionRecord> predict(const std::map<EventType, EventModels>& models,
                                      std::span<const TweetInput> tweets,
                                      const ChunkerBackend& chunker, std::size_t threads = 1);

// Runs fn(i) for i in [0, n) on up to `threads` workers; the first exception
// is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace covex

#endif  // COVEX_PIPELINE_HPP
