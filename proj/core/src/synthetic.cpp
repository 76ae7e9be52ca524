#include "covex/synthetic.hpp"

#include <array>
#include <string_view>

#include "covex/rng.hpp"

namespace covex {

namespace {

struct Person {
  std::string_view name;
  bool male;
};

constexpr std::array<Person, 12> kNames = {{{"James", true},   {"Robert", true}, {"Michael", true},
                                            {"David", true},   {"Daniel", true}, {"Thomas", true},
                                            {"Mary", false},   {"Linda", false}, {"Susan", false},
                                            {"Emma", false},   {"Olivia", false}, {"Sarah", false}}};
constexpr std::array<Person, 8> kRelatives = {{{"brother", true}, {"father", true}, {"uncle", true},
                                               {"son", true}, {"sister", false}, {"mother", false},
                                               {"aunt", false}, {"daughter", false}}};
constexpr std::array<std::string_view, 8> kCities = {"Boston", "Chicago", "Denver", "Seattle",
                                                     "Houston", "Miami", "Atlanta", "Dallas"};
constexpr std::array<std::string_view, 5> kRemedies = {"garlic", "lemon water", "bleach",
                                                       "vitamin pills", "hot tea"};

std::string_view event_phrase(EventType event) {
  switch (event) {
    case EventType::tested_positive: return "tested positive for covid";
    case EventType::tested_negative: return "tested negative for covid";
    case EventType::can_not_test: return "could not get a covid test";
    case EventType::death: return "died of covid";
    case EventType::cure: break;
  }
  return "";
}

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.below(N))];
}

}  // namespace

std::vector<AnnotatedExample> synthetic_corpus(const SyntheticOptions& options,
                                               const SubtaskRegistry& registry) {
  Rng rng = Rng::derive(options.seed, "synthetic/" + std::string(to_string(options.event)));
  const auto slot_specs = registry.subtasks(options.event, SubtaskKind::slot_filling);
  const auto sentence_specs = registry.subtasks(options.event, SubtaskKind::sentence_classification);
  const auto n_event = static_cast<std::size_t>(options.event_fraction * static_cast<double>(options.examples) + 0.5);

  // Distinct id ranges per event so corpora of several events can be merged.
  const std::size_t id_base = 1000000 * (1 + static_cast<std::size_t>(options.event));
  std::vector<AnnotatedExample> out;
  out.reserve(options.examples);
  for (std::size_t i = 0; i < options.examples; ++i) {
    AnnotatedExample ex;
    ex.event = options.event;
    ex.event_label = i < n_event ? 1 : 0;
    ex.tweet.tweet_id = std::to_string(id_base + i);
    for (const SubtaskSpec* s : slot_specs) ex.slot_gold[s->id] = {};

    const Person& name = pick(kNames, rng);
    const std::string city(pick(kCities, rng));
    std::map<std::string, std::string> labels;
    std::string text;

    if (options.event == EventType::cure) {
      const std::string remedy(pick(kRemedies, rng));
      if (ex.event_label == 1) {
        const bool works = rng.below(2) == 0;
        text = std::string(name.name) + " says " + remedy + (works ? " cures covid" : " does not cure covid");
        ex.slot_gold["what-cure"] = {remedy};
        ex.slot_gold["who-promoting-cure"] = {std::string(name.name)};
        labels["opinion"] = works ? "effective" : "not effective";
      } else {
        text = std::string(name.name) + " shared covid news from " + city;
        labels["opinion"] = "no opinion";
      }
    } else if (ex.event_label == 1) {
      const bool relative = rng.below(2) == 0;
      const Person& rel = pick(kRelatives, rng);
      const std::string who = relative ? "My " + std::string(rel.name) : std::string(name.name);
      const bool male = relative ? rel.male : name.male;
      const bool symptoms = rng.below(2) == 0;
      text = who + " " + std::string(event_phrase(options.event)) + " in " + city;
      if (symptoms) text += " after a fever";
      ex.slot_gold["who"] = {who};
      ex.slot_gold["where"] = {city};
      labels["gender"] = male ? "Male" : "Female";
      labels["relation"] = relative ? "Yes" : "No";
      labels["symptoms"] = symptoms ? "Yes" : "No";
    } else {
      text = std::string(name.name) + " shared covid news from " + city;
      labels["gender"] = "Others/Not Specified";
      labels["relation"] = "No";
      labels["symptoms"] = "No";
    }
    for (const SubtaskSpec* s : sentence_specs) ex.sentence_gold[s->id] = labels.at(s->id);
    ex.tweet.text = std::move(text);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace covex
