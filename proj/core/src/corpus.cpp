#include "covex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "covex/error.hpp"
#include "covex/rng.hpp"
#include "json.hpp"

namespace covex {

using nlohmann::json;

std::string_view to_string(EventType event) {
  switch (event) {
    case EventType::tested_positive: return "tested_positive";
    case EventType::tested_negative: return "tested_negative";
    case EventType::can_not_test: return "can_not_test";
    case EventType::death: return "death";
    case EventType::cure: return "cure";
  }
  return "?";
}

std::optional<EventType> try_parse_event(std::string_view name) {
  for (EventType e : kAllEvents) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

EventType parse_event(std::string_view name) {
  if (auto e = try_parse_event(name)) return *e;
  throw SchemaError("unknown event '" + std::string(name) + "'");
}

std::string_view to_string(SubtaskKind kind) {
  return kind == SubtaskKind::slot_filling ? "slot_filling" : "sentence_classification";
}

int SubtaskSpec::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < label_set.size(); ++i) {
    if (label_set[i] == label) return static_cast<int>(i);
  }
  return -1;
}

SubtaskRegistry SubtaskRegistry::standard() {
  const std::vector<std::string> binary_slot = {"negative", "positive"};
  const std::vector<std::string> gender = {"Male", "Female", "Others/Not Specified"};
  const std::vector<std::string> yes_no = {"Yes", "No"};
  const std::vector<std::string> opinion = {"effective", "no cure", "not effective", "no opinion"};

  struct Row {
    EventType event;
    std::vector<std::pair<std::string, std::vector<std::string>>> sentence;
    std::vector<std::string> slots;
  };
  const std::vector<Row> rows = {
      {EventType::tested_positive,
       {{"gender", gender}, {"relation", yes_no}},
       {"who", "age", "recent-visit", "when", "where", "employer", "close-contact"}},
      {EventType::tested_negative,
       {{"gender", gender}, {"relation", yes_no}},
       {"who", "age", "when", "where", "duration", "close-contact"}},
      {EventType::can_not_test, {{"relation", yes_no}, {"symptoms", yes_no}}, {"who", "when", "where"}},
      {EventType::death, {{"relation", yes_no}, {"symptoms", yes_no}}, {"who", "age", "when", "where"}},
      {EventType::cure, {{"opinion", opinion}}, {"what-cure", "who-promoting-cure"}},
  };

  SubtaskRegistry r;
  for (const auto& row : rows) {
    for (const auto& [id, labels] : row.sentence) {
      r.specs_.push_back({id, row.event, SubtaskKind::sentence_classification, labels, {}});
    }
    for (const auto& id : row.slots) {
      r.specs_.push_back({id, row.event, SubtaskKind::slot_filling, binary_slot, {}});
    }
  }
  return r;
}

const SubtaskSpec* SubtaskRegistry::find(EventType event, std::string_view id) const {
  for (const auto& s : specs_) {
    if (s.event == event && s.id == id) return &s;
  }
  return nullptr;
}

const SubtaskSpec& SubtaskRegistry::at(EventType event, std::string_view id) const {
  if (const auto* s = find(event, id)) return *s;
  throw SchemaError("event " + std::string(to_string(event)) + " has no subtask '" + std::string(id) + "'");
}

std::vector<const SubtaskSpec*> SubtaskRegistry::subtasks(EventType event, SubtaskKind kind) const {
  std::vector<const SubtaskSpec*> out;
  for (const auto& s : specs_) {
    if (s.event == event && s.kind == kind) out.push_back(&s);
  }
  return out;
}

void SubtaskRegistry::set_merge_map(EventType event, std::string_view id,
                                    std::map<std::string, std::string> map) {
  for (auto& s : specs_) {
    if (s.event != event || s.id != id) continue;
    for (const auto& [from, to] : map) {
      if (s.label_index(to) < 0) {
        throw ConfigError("merge target '" + to + "' for " + std::string(to_string(event)) + "/" +
                          s.id + " is not in its label set");
      }
    }
    s.label_merge_map = std::move(map);
    return;
  }
  throw ConfigError("merge map names unknown subtask " + std::string(to_string(event)) + "/" +
                    std::string(id));
}

void SubtaskRegistry::load_merge_maps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label merge file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("label merge file " + path.string() + ": " + e.what());
  }
  for (const auto& [key, value] : doc.items()) {
    const auto slash = key.find('/');
    if (slash == std::string::npos) throw ConfigError("merge key '" + key + "' must be <event>/<subtask>");
    const auto event = try_parse_event(key.substr(0, slash));
    if (!event) throw ConfigError("merge key '" + key + "' names an unknown event");
    set_merge_map(*event, key.substr(slash + 1), value.get<std::map<std::string, std::string>>());
  }
}

const std::string& Tweet::text_or_empty() const {
  static const std::string kEmpty;
  return text ? *text : kEmpty;
}

std::string to_json_line(const AnnotatedExample& example) {
  json j;
  j["tweet_id"] = example.tweet.tweet_id;
  j["event"] = std::string(to_string(example.event));
  j["event_label"] = example.event_label;
  j["slot_gold"] = json::object();
  for (const auto& [id, chunks] : example.slot_gold) {
    j["slot_gold"][id] = std::vector<std::string>(chunks.begin(), chunks.end());
  }
  j["sentence_gold"] = json::object();
  for (const auto& [id, label] : example.sentence_gold) j["sentence_gold"][id] = label;
  if (example.tweet.text) j["text"] = *example.tweet.text;
  return j.dump();
}

AnnotatedExample parse_json_line(std::string_view line, std::size_t line_number,
                                 const SubtaskRegistry& registry) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("record is not an object", line_number);

  auto require_field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'", line_number);
    return *it;
  };

  AnnotatedExample ex;
  const json& id = require_field("tweet_id");
  if (id.is_string()) {
    ex.tweet.tweet_id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    ex.tweet.tweet_id = std::to_string(id.get<std::int64_t>());
  } else {
    throw ParseError("tweet_id must be a string", line_number);
  }
  if (ex.tweet.tweet_id.empty()) throw ParseError("empty tweet_id", line_number);

  const json& event = require_field("event");
  if (!event.is_string()) throw ParseError("event must be a string", line_number);
  const auto parsed = try_parse_event(event.get<std::string>());
  if (!parsed) {
    throw SchemaError("line " + std::to_string(line_number) + ": unknown event '" +
                      event.get<std::string>() + "'");
  }
  ex.event = *parsed;

  const json& label = require_field("event_label");
  if (label.is_boolean()) {
    ex.event_label = label.get<bool>() ? 1 : 0;
  } else if (label.is_number_integer() && (label.get<int>() == 0 || label.get<int>() == 1)) {
    ex.event_label = label.get<int>();
  } else {
    throw ParseError("event_label must be 0 or 1", line_number);
  }

  auto check_subtask = [&](const std::string& sid, SubtaskKind kind) {
    const SubtaskSpec* spec = registry.find(ex.event, sid);
    if (spec == nullptr || spec->kind != kind) {
      throw SchemaError("line " + std::to_string(line_number) + ": unknown " +
                        std::string(to_string(kind)) + " subtask '" + sid + "' for event " +
                        std::string(to_string(ex.event)));
    }
  };

  if (auto it = j.find("slot_gold"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("slot_gold must be an object", line_number);
    for (const auto& [sid, chunks] : it->items()) {
      check_subtask(sid, SubtaskKind::slot_filling);
      if (!chunks.is_array()) throw ParseError("slot_gold." + sid + " must be an array", line_number);
      auto& set = ex.slot_gold[sid];
      for (const auto& c : chunks) {
        if (!c.is_string()) throw ParseError("slot_gold." + sid + " entries must be strings", line_number);
        set.insert(c.get<std::string>());
      }
    }
  }
  if (auto it = j.find("sentence_gold"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("sentence_gold must be an object", line_number);
    for (const auto& [sid, value] : it->items()) {
      check_subtask(sid, SubtaskKind::sentence_classification);
      if (!value.is_string()) throw ParseError("sentence_gold." + sid + " must be a string", line_number);
      ex.sentence_gold[sid] = value.get<std::string>();
    }
  }
  if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("text must be a string", line_number);
    ex.tweet.text = it->get<std::string>();
  }
  return ex;
}

std::vector<AnnotatedExample> load_corpus(std::istream& in, const SubtaskRegistry& registry) {
  std::vector<AnnotatedExample> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    AnnotatedExample ex = parse_json_line(line, line_number, registry);
    if (!ids.insert(ex.tweet.tweet_id).second) {
      throw SchemaError("line " + std::to_string(line_number) + ": duplicate tweet_id " + ex.tweet.tweet_id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<AnnotatedExample> load_corpus(const std::filesystem::path& path,
                                          const SubtaskRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  try {
    return load_corpus(in, registry);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

void save_corpus(std::ostream& out, std::span<const AnnotatedExample> examples) {
  for (const auto& ex : examples) out << to_json_line(ex) << '\n';
}

void save_corpus(const std::filesystem::path& path, std::span<const AnnotatedExample> examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  save_corpus(out, examples);
}

std::vector<AnnotatedExample> filter_no_consensus(std::vector<AnnotatedExample> examples) {
  std::vector<AnnotatedExample> out;
  out.reserve(examples.size());
  for (auto& ex : examples) {
    bool removed = false;
    std::erase_if(ex.sentence_gold, [&](const auto& kv) {
      const bool hit = kv.second == kNoConsensus;
      removed = removed || hit;
      return hit;
    });
    std::erase_if(ex.slot_gold, [&](const auto& kv) {
      const bool hit = kv.second.contains(std::string(kNoConsensus));
      removed = removed || hit;
      return hit;
    });
    if (removed && ex.sentence_gold.empty() && ex.slot_gold.empty()) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<AnnotatedExample> apply_label_merge(std::vector<AnnotatedExample> examples,
                                                const SubtaskRegistry& registry) {
  for (auto& ex : examples) {
    for (auto& [sid, label] : ex.sentence_gold) {
      if (label == kNoConsensus) continue;
      const SubtaskSpec& spec = registry.at(ex.event, sid);
      if (auto it = spec.label_merge_map.find(label); it != spec.label_merge_map.end()) {
        label = it->second;
      } else if (spec.label_index(label) < 0) {
        throw SchemaError("tweet " + ex.tweet.tweet_id + ": label '" + label + "' is not valid for " +
                          std::string(to_string(ex.event)) + "/" + sid);
      }
    }
  }
  return examples;
}

SplitAssignment split(std::span<const AnnotatedExample> examples, std::uint64_t seed,
                      double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw PreconditionError("train_fraction must lie in (0, 1)");
  }
  std::map<EventType, std::vector<std::string>> by_event;
  for (const auto& ex : examples) by_event[ex.event].push_back(ex.tweet.tweet_id);

  SplitAssignment out;
  out.seed = seed;
  for (auto& [event, ids] : by_event) {
    const std::size_t n = ids.size();
    if (n < 2) {
      throw PreconditionError("event " + std::string(to_string(event)) + " has " + std::to_string(n) +
                              " example(s); at least 2 are needed to split");
    }
    Rng rng = Rng::derive(seed, "split/" + std::string(to_string(event)));
    rng.shuffle(ids);
    // The epsilon absorbs representation error in products like 0.7 * 10.
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? out.train_ids : out.valid_ids).insert(ids[i]);
  }
  return out;
}

std::vector<AnnotatedExample> select(std::span<const AnnotatedExample> examples,
                                     const std::set<std::string>& ids) {
  std::vector<AnnotatedExample> out;
  for (const auto& ex : examples) {
    if (ids.contains(ex.tweet.tweet_id)) out.push_back(ex);
  }
  return out;
}

}  // namespace covex
