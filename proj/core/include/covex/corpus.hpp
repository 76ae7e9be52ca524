#ifndef COVEX_CORPUS_HPP
#define COVEX_CORPUS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace covex {

enum class EventType { tested_positive, tested_negative, can_not_test, death, cure };

inline constexpr std::array<EventType, 5> kAllEvents = {
    EventType::tested_positive, EventType::tested_negative, EventType::can_not_test,
    EventType::death, EventType::cure};

std::string_view to_string(EventType event);
std::optional<EventType> try_parse_event(std::string_view name);
// Throws SchemaError for unknown names.
EventType parse_event(std::string_view name);

enum class SubtaskKind { slot_filling, sentence_classification };

std::string_view to_string(SubtaskKind kind);

// Annotator disagreement marker. Absence of a key means "not annotated".
inline constexpr std::string_view kNoConsensus = "NO_CONSENSUS";

struct SubtaskSpec {
  std::string id;
  EventType event;
  SubtaskKind kind;
  std::vector<std::string> label_set;  // {negative, positive} for slot filling
  std::map<std::string, std::string> label_merge_map;

  // Index into label_set, or -1.
  int label_index(std::string_view label) const;
};

// Event -> subtask taxonomy.
class SubtaskRegistry {
 public:
  static SubtaskRegistry standard();

  const std::vector<SubtaskSpec>& all() const { return specs_; }
  const SubtaskSpec* find(EventType event, std::string_view id) const;
  const SubtaskSpec& at(EventType event, std::string_view id) const;
  std::vector<const SubtaskSpec*> subtasks(EventType event, SubtaskKind kind) const;

  // Every target must already be in the subtask's label set (ConfigError otherwise).
  void set_merge_map(EventType event, std::string_view id, std::map<std::string, std::string> map);
  // JSON object {"<event>/<subtask>": {"old label": "merged label", ...}, ...}.
  void load_merge_maps(const std::filesystem::path& path);

 private:
  std::vector<SubtaskSpec> specs_;
};

struct Tweet {
  std::string tweet_id;
  std::optional<std::string> text;  // absent until hydrated

  const std::string& text_or_empty() const;
  bool operator==(const Tweet&) const = default;
};

struct AnnotatedExample {
  Tweet tweet;
  EventType event = EventType::tested_positive;
  int event_label = 0;
  std::map<std::string, std::set<std::string>> slot_gold;
  std::map<std::string, std::string> sentence_gold;

  bool operator==(const AnnotatedExample&) const = default;
};

// One canonical JSON object per line; keys sorted, no whitespace.
std::string to_json_line(const AnnotatedExample& example);
AnnotatedExample parse_json_line(std::string_view line, std::size_t line_number,
                                 const SubtaskRegistry& registry);

std::vector<AnnotatedExample> load_corpus(std::istream& in, const SubtaskRegistry& registry);
std::vector<AnnotatedExample> load_corpus(const std::filesystem::path& path,
                                          const SubtaskRegistry& registry);
void save_corpus(std::ostream& out, std::span<const AnnotatedExample> examples);
void save_corpus(const std::filesystem::path& path, std::span<const AnnotatedExample> examples);

// Drops NO_CONSENSUS entries per subtask; drops examples left with no labels.
std::vector<AnnotatedExample> filter_no_consensus(std::vector<AnnotatedExample> examples);

// Rewrites sentence labels through each subtask's merge map.
std::vector<AnnotatedExample> apply_label_merge(std::vector<AnnotatedExample> examples,
                                                const SubtaskRegistry& registry);

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::set<std::string> train_ids;
  std::set<std::string> valid_ids;

  bool operator==(const SplitAssignment&) const = default;
};

// Per-event stratified shuffle; floor(train_fraction * n) of each event trains.
SplitAssignment split(std::span<const AnnotatedExample> examples, std::uint64_t seed,
                      double train_fraction = 0.70);

// Examples selected by id, in corpus order.
std::vector<AnnotatedExample> select(std::span<const AnnotatedExample> examples,
                                     const std::set<std::string>& ids);

}  // namespace covex

#endif  // COVEX_CORPUS_HPP
