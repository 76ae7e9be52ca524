#ifndef COVEX_METRICS_HPP
#define COVEX_METRICS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "covex/corpus.hpp"

namespace covex {

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool empty() const { return tp == 0 && fp == 0 && fn == 0; }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero wherever a denominator is zero.
Prf prf(const Counts& c);
// Mean F1 of the non-empty scopes; 0 when all are empty.
double macro_f1(std::span<const Counts> scopes);

// Slot answers compared by text::normalize_chunk_text. Duplicates after
// normalization count once.
Counts count_slot(const std::set<std::string>& predicted, const std::set<std::string>& gold);
// A correct label is a true positive; a wrong one is both a false positive
// (the predicted label) and a false negative (the gold label).
Counts count_sentence(std::string_view predicted, std::string_view gold);

inline constexpr std::array<double, 9> kThresholdGrid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                                         0.6, 0.7, 0.8, 0.9};
inline constexpr double kDefaultThreshold = 0.5;

struct ScoredCandidate {
  std::string text;
  double probability = 0.0;
};

// All candidates of one tweet for one slot subtask, with the gold answers.
struct SlotItem {
  std::string tweet_id;
  std::vector<ScoredCandidate> candidates;
  std::set<std::string> gold;
};

std::set<std::string> predicted_at(const SlotItem& item, double threshold);
Counts count_at(std::span<const SlotItem> items, double threshold);
// Grid value with the best F1; ties go to the smaller threshold. Returns
// nullopt when there are no items.
std::optional<double> best_threshold(std::span<const SlotItem> items);

// event -> subtask -> threshold
using ThresholdTable = std::map<EventType, std::map<std::string, double>>;

struct SubtaskScore {
  EventType event = EventType::tested_positive;
  std::string subtask;
  SubtaskKind kind = SubtaskKind::slot_filling;
  Counts counts;
  std::optional<double> threshold;
};

struct ScopeScore {
  Counts counts;
  Prf micro;
  double macro_f1 = 0.0;
  std::size_t subtasks = 0;  // non-empty subtasks entering the macro
};

struct EvalReport {
  std::string fingerprint;
  std::vector<SubtaskScore> subtasks;
  std::map<EventType, ScopeScore> events;
  ScopeScore overall;        // pooled over every subtask
  ScopeScore slot_filling;   // pooled over slot subtasks only
  ScopeScore sentence;       // pooled over sentence subtasks only
  double event_micro_mean = 0.0;  // mean of the per-event micro F1

  std::string to_json() const;
  std::string to_table() const;
};

EvalReport build_report(std::vector<SubtaskScore> subtasks, std::string fingerprint);

}  // namespace covex

#endif  // COVEX_METRICS_HPP
