#ifndef COVEX_SYNTHETIC_HPP
#define COVEX_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "covex/corpus.hpp"

namespace covex {

// Template-generated tweets with fully determined annotations, for smoke
// tests and demos. Answers (names, "My <relative>", cities, remedies) are
// exactly the spans RuleChunker proposes, and every label has a surface cue.
struct SyntheticOptions {
  std::size_t examples = 64;
  std::uint64_t seed = 0;
  EventType event = EventType::tested_positive;
  double event_fraction = 0.75;  // share of examples with event_label 1
};

std::vector<AnnotatedExample> synthetic_corpus(const SyntheticOptions& options,
                                               const SubtaskRegistry& registry);

}  // namespace covex

#endif  // COVEX_SYNTHETIC_HPP
