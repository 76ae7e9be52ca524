#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "covex/chunker.hpp"
#include "covex/error.hpp"
#include "covex/fetcher.hpp"
#include "covex/pipeline.hpp"
#include "covex/synthetic.hpp"
#include "covex/text.hpp"
#include "json.hpp"

namespace covex::cli {

using nlohmann::json;

namespace {

SubtaskRegistry make_registry(const RunConfig& config) {
  SubtaskRegistry r = SubtaskRegistry::standard();
  if (const auto maps = config.get_path("paths.merge_maps"); !maps.empty()) r.load_merge_maps(maps);
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string event_list(std::span<const EventType> events) {
  std::string s;
  for (EventType e : events) s += (s.empty() ? "" : ",") + std::string(to_string(e));
  return s;
}

struct Prepared {
  std::vector<AnnotatedExample> corpus;
  SplitAssignment split;
};

Prepared load_prepared(const RunConfig& config, const SubtaskRegistry& registry) {
  const auto dir = config.prepared_dir();
  if (!std::filesystem::exists(dir / "corpus.jsonl") || !std::filesystem::exists(dir / "split.json")) {
    throw DataError("no prepared corpus in " + dir.string() + "; run 'prepare' first");
  }
  Prepared p;
  p.corpus = load_corpus(dir / "corpus.jsonl", registry);
  std::ifstream in(dir / "split.json");
  try {
    const json j = json::parse(in);
    p.split.seed = j.at("seed").get<std::uint64_t>();
    p.split.train_ids = j.at("train_ids").get<std::set<std::string>>();
    p.split.valid_ids = j.at("valid_ids").get<std::set<std::string>>();
  } catch (const json::exception& e) {
    throw DataError((dir / "split.json").string() + ": " + e.what());
  }
  return p;
}

std::vector<std::string> corpus_texts(std::span<const AnnotatedExample> corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& ex : corpus) texts.push_back(ex.tweet.text_or_empty());
  return texts;
}

std::unique_ptr<ChunkerBackend> make_chunker(const RunConfig& config,
                                             std::span<const AnnotatedExample> corpus) {
  const auto path = config.get_path("paths.chunks");
  if (path.empty()) return std::make_unique<RuleChunker>();
  std::unordered_map<std::string, std::string> texts;
  for (const auto& ex : corpus) texts[ex.tweet.tweet_id] = ex.tweet.text_or_empty();
  return std::make_unique<PrecomputedChunker>(load_precomputed(path, corpus.empty() ? nullptr : &texts));
}

void require_event(const RunConfig& config, EventType event) {
  const auto events = config.events();
  if (std::find(events.begin(), events.end(), event) == events.end()) {
    throw ConfigError("event " + std::string(to_string(event)) + " is not in the configured events (" +
                      event_list(events) + ")");
  }
}

void check_fingerprint(const RunConfig& config, const std::string& found, const std::string& what) {
  if (found != config.fingerprint()) {
    throw ConfigError(what + " was produced under config fingerprint " + found +
                      ", current config is " + config.fingerprint());
  }
}

std::vector<AnnotatedExample> of_event(std::vector<AnnotatedExample> examples, EventType event) {
  std::erase_if(examples, [event](const AnnotatedExample& ex) { return ex.event != event; });
  return examples;
}

}  // namespace

void cmd_prepare(const RunConfig& config) {
  const SubtaskRegistry registry = make_registry(config);
  const std::string corpus_paths = config.get("paths.corpus");
  if (text::trim(corpus_paths).empty()) throw ConfigError("paths.corpus is not set");

  std::vector<AnnotatedExample> examples;
  std::set<std::string> ids;
  for (const auto& part : text::split(corpus_paths, ',')) {
    const std::string t = text::trim(part);
    if (t.empty()) continue;
    const std::filesystem::path resolved = config.resolve(t);
    if (!std::filesystem::exists(resolved)) throw DataError("annotation file not found: " + resolved.string());
    for (auto& ex : load_corpus(resolved, registry)) {
      if (!ids.insert(ex.tweet.tweet_id).second) {
        throw SchemaError(resolved.string() + ": duplicate tweet_id " + ex.tweet.tweet_id);
      }
      examples.push_back(std::move(ex));
    }
  }
  const auto events = config.events();
  std::erase_if(examples, [&](const AnnotatedExample& ex) {
    return std::find(events.begin(), events.end(), ex.event) == events.end();
  });
  const std::size_t requested = examples.size();

  std::shared_ptr<TweetFetcher> fetcher;
  if (const auto cache = config.get_path("paths.tweet_cache"); !cache.empty()) {
    if (!std::filesystem::exists(cache)) throw DataError("tweet cache not found: " + cache.string());
    fetcher = std::make_shared<CacheFileFetcher>(cache);
  } else {
    fetcher = std::make_shared<CacheFileFetcher>(std::unordered_map<std::string, std::string>{});
  }
  if (config.get_bool("hydrate.api")) {
    fetcher = std::make_shared<FallbackFetcher>(
        fetcher, std::shared_ptr<TweetFetcher>(TwitterApiFetcher::from_env(config.get("hydrate.base_url"))));
  }
  HydrateOptions hopts;
  hopts.max_attempts = static_cast<int>(config.get_int("hydrate.max_attempts"));
  hopts.backoff = std::chrono::milliseconds(config.get_int("hydrate.backoff_ms"));
  hopts.threads = static_cast<std::size_t>(std::max<std::int64_t>(1, config.get_int("hydrate.threads")));
  HydrationResult hydrated = hydrate(std::move(examples), *fetcher, hopts);
  const double ceiling = config.get_double("hydrate.max_dropped_fraction");
  if (requested > 0 &&
      static_cast<double>(hydrated.dropped()) > ceiling * static_cast<double>(requested)) {
    throw DataError(std::to_string(hydrated.dropped()) + " of " + std::to_string(requested) +
                    " tweets could not be hydrated (ceiling hydrate.max_dropped_fraction = " +
                    config.get("hydrate.max_dropped_fraction") + ")");
  }
  if (hydrated.dropped() > 0) spdlog::warn("{} tweet(s) unavailable and dropped", hydrated.dropped());

  std::vector<AnnotatedExample> prepared =
      apply_label_merge(filter_no_consensus(std::move(hydrated.examples)), registry);
  const SplitAssignment split_ids =
      split(prepared, config.seed(), config.get_double("split.train_fraction"));

  const auto dir = config.prepared_dir();
  std::filesystem::create_directories(dir);
  save_corpus(dir / "corpus.jsonl", prepared);

  json counts = json::object();
  for (EventType e : events) {
    std::size_t tr = 0;
    std::size_t va = 0;
    for (const auto& ex : prepared) {
      if (ex.event != e) continue;
      (split_ids.train_ids.contains(ex.tweet.tweet_id) ? tr : va)++;
    }
    if (tr + va > 0) counts[std::string(to_string(e))] = {{"train", tr}, {"valid", va}};
  }
  std::vector<std::string> missing = hydrated.missing_ids;
  std::sort(missing.begin(), missing.end());
  json manifest = {{"fingerprint", config.fingerprint()},
                   {"seed", split_ids.seed},
                   {"train_fraction", config.get_double("split.train_fraction")},
                   {"events", counts},
                   {"hydration", {{"requested", requested}, {"dropped", hydrated.dropped()}, {"missing_ids", missing}}},
                   {"train_ids", split_ids.train_ids},
                   {"valid_ids", split_ids.valid_ids}};
  write_text(dir / "split.json", manifest.dump(2) + "\n");
  std::cout << "prepared " << prepared.size() << " examples into " << dir.string() << "\n";
  for (const auto& [event, c] : counts.items()) {
    std::cout << "  " << event << ": " << c.at("train").get<std::size_t>() << " train, "
              << c.at("valid").get<std::size_t>() << " valid\n";
  }
}

void cmd_train(const RunConfig& config, ModelFamily family, EventType event) {
  require_event(config, event);
  const SubtaskRegistry registry = make_registry(config);
  const Prepared prepared = load_prepared(config, registry);
  const TrainConfig train = config.train_config();
  const EncoderConfig enc = config.encoder_config();
  const std::vector<AnnotatedExample> train_set = of_event(select(prepared.corpus, prepared.split.train_ids), event);
  if (train_set.empty()) {
    throw PreconditionError("no training examples for event " + std::string(to_string(event)));
  }
  const std::vector<std::string> texts = corpus_texts(prepared.corpus);
  const auto path = config.checkpoint_path(event, family);
  std::filesystem::create_directories(path.parent_path());

  TrainLog log;
  std::size_t instances = 0;
  if (family == ModelFamily::slot) {
    SlotModelConfig mc = train.slot_config();
    mc.gate_on_event = config.gate_on_event();
    SlotModel model(make_encoder(enc, texts), event, registry, mc, train.seed);
    const auto chunker = make_chunker(config, prepared.corpus);
    const auto data = build_slot_instances(train_set, model, *chunker);
    instances = data.size();
    if (train.epochs_slot > 0) log = train_slot(model, data, train);
    save_checkpoint(path, model, config.fingerprint(), train.seed);
  } else {
    SentenceModel model(make_encoder(enc, texts), event, registry, train.sentence_config(), train.seed);
    const auto data = build_sentence_instances(train_set, model);
    instances = data.size();
    if (train.epochs_sentence > 0) log = train_sentence(model, data, train);
    save_checkpoint(path, model, config.fingerprint(), train.seed);
  }
  json j = {{"fingerprint", config.fingerprint()},
            {"family", std::string(to_string(family))},
            {"event", std::string(to_string(event))},
            {"instances", instances},
            {"steps", log.steps},
            {"epoch_loss", log.epoch_loss}};
  auto log_path = path;
  log_path.replace_extension(".log.json");
  write_text(log_path, j.dump(2) + "\n");
  std::cout << "trained " << to_string(family) << " model for " << to_string(event) << " on "
            << instances << " instances (" << log.steps << " steps) -> " << path.string() << "\n";
}

void cmd_tune_thresholds(const RunConfig& config) {
  const SubtaskRegistry registry = make_registry(config);
  const Prepared prepared = load_prepared(config, registry);
  const auto valid = select(prepared.corpus, prepared.split.valid_ids);
  const auto chunker = make_chunker(config, prepared.corpus);
  ThresholdTable table;
  for (EventType event : config.events()) {
    const auto path = config.checkpoint_path(event, ModelFamily::slot);
    if (!std::filesystem::exists(path)) continue;
    check_fingerprint(config, read_checkpoint_info(path).fingerprint, path.string());
    const SlotModel model = load_slot_checkpoint(path, registry);
    const auto items = score_slot_items(model, valid, *chunker, config.eval_threads());
    table[event] = tune_thresholds(items, model.subtasks());
  }
  if (table.empty()) throw ModelError("no slot checkpoints under " + config.models_dir().string());
  save_thresholds(config.thresholds_path(), table, config.fingerprint());
  for (const auto& [event, subs] : table) {
    std::cout << to_string(event) << ":";
    for (const auto& [id, t] : subs) std::cout << " " << id << "=" << t;
    std::cout << "\n";
  }
}

EvalReport cmd_evaluate(const RunConfig& config, const std::string& split_name,
                        const std::filesystem::path& corpus_path) {
  const SubtaskRegistry registry = make_registry(config);
  std::vector<AnnotatedExample> examples;
  std::vector<AnnotatedExample> chunk_corpus;
  if (!corpus_path.empty()) {
    if (!std::filesystem::exists(corpus_path)) throw DataError("corpus not found: " + corpus_path.string());
    examples = apply_label_merge(filter_no_consensus(load_corpus(corpus_path, registry)), registry);
    for (const auto& ex : examples) {
      if (!ex.tweet.text) throw DataError("tweet " + ex.tweet.tweet_id + " in " + corpus_path.string() + " has no text");
    }
    chunk_corpus = examples;
  } else {
    Prepared prepared = load_prepared(config, registry);
    if (split_name == "valid") {
      examples = select(prepared.corpus, prepared.split.valid_ids);
    } else if (split_name == "train") {
      examples = select(prepared.corpus, prepared.split.train_ids);
    } else {
      throw ConfigError("unknown split '" + split_name + "' (expected valid or train)");
    }
    chunk_corpus = std::move(prepared.corpus);
  }
  const auto chunker = make_chunker(config, chunk_corpus);

  std::optional<ThresholdTable> thresholds;
  std::vector<SubtaskScore> scores;
  bool any = false;
  for (EventType event : config.events()) {
    const auto slot_path = config.checkpoint_path(event, ModelFamily::slot);
    if (std::filesystem::exists(slot_path)) {
      check_fingerprint(config, read_checkpoint_info(slot_path).fingerprint, slot_path.string());
      if (!thresholds) {
        if (!std::filesystem::exists(config.thresholds_path())) {
          throw ModelError("no thresholds at " + config.thresholds_path().string() +
                           "; run 'tune-thresholds' first");
        }
        std::string fp;
        thresholds = load_thresholds(config.thresholds_path(), &fp);
        check_fingerprint(config, fp, config.thresholds_path().string());
      }
      const SlotModel model = load_slot_checkpoint(slot_path, registry);
      const auto items = score_slot_items(model, examples, *chunker, config.eval_threads());
      auto it = thresholds->find(event);
      if (it == thresholds->end()) {
        throw ModelError("thresholds.json has no entry for " + std::string(to_string(event)));
      }
      for (auto& s : evaluate_slots(items, event, it->second)) scores.push_back(std::move(s));
      any = true;
    }
    const auto sent_path = config.checkpoint_path(event, ModelFamily::sentence);
    if (std::filesystem::exists(sent_path)) {
      check_fingerprint(config, read_checkpoint_info(sent_path).fingerprint, sent_path.string());
      const SentenceModel model = load_sentence_checkpoint(sent_path, registry);
      for (auto& s : evaluate_sentences(model, examples, config.eval_threads())) scores.push_back(std::move(s));
      any = true;
    }
  }
  if (!any) throw ModelError("no checkpoints under " + config.models_dir().string());

  EvalReport report = build_report(std::move(scores), config.fingerprint());
  write_text(config.output_dir() / "report.json", report.to_json());
  write_text(config.output_dir() / "report.txt", report.to_table());
  std::cout << report.to_table();
  return report;
}

void cmd_predict(const RunConfig& config, const std::filesystem::path& input,
                 const std::filesystem::path& output) {
  std::ifstream in(input);
  if (!in) throw DataError("cannot open input " + input.string());
  std::vector<TweetInput> tweets;
  try {
    tweets = read_tweet_inputs(in);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), input.string());
  }
  auto meta_path = output;
  meta_path += ".meta.json";
  if (tweets.empty()) {
    write_text(output, "");
    write_text(meta_path, json({{"fingerprint", config.fingerprint()}, {"records", 0}}).dump(2) + "\n");
    std::cout << "0 predictions -> " << output.string() << "\n";
    return;
  }

  const SubtaskRegistry registry = make_registry(config);
  std::set<EventType> needed;
  for (const auto& t : tweets) {
    require_event(config, t.event);
    needed.insert(t.event);
  }
  if (!std::filesystem::exists(config.thresholds_path())) {
    throw ModelError("no thresholds at " + config.thresholds_path().string());
  }
  std::string fp;
  const ThresholdTable thresholds = load_thresholds(config.thresholds_path(), &fp);
  check_fingerprint(config, fp, config.thresholds_path().string());

  std::map<EventType, std::unique_ptr<SlotModel>> slots;
  std::map<EventType, std::unique_ptr<SentenceModel>> sentences;
  std::map<EventType, EventModels> models;
  for (EventType event : needed) {
    for (ModelFamily f : {ModelFamily::slot, ModelFamily::sentence}) {
      const auto path = config.checkpoint_path(event, f);
      if (!std::filesystem::exists(path)) {
        throw ModelError("missing " + std::string(to_string(f)) + " checkpoint " + path.string());
      }
      check_fingerprint(config, read_checkpoint_info(path).fingerprint, path.string());
    }
    slots[event] = std::make_unique<SlotModel>(
        load_slot_checkpoint(config.checkpoint_path(event, ModelFamily::slot), registry));
    sentences[event] = std::make_unique<SentenceModel>(
        load_sentence_checkpoint(config.checkpoint_path(event, ModelFamily::sentence), registry));
    EventModels m;
    m.slot = slots[event].get();
    m.sentence = sentences[event].get();
    if (auto it = thresholds.find(event); it != thresholds.end()) m.thresholds = it->second;
    models[event] = std::move(m);
  }

  std::vector<AnnotatedExample> as_corpus;
  for (const auto& t : tweets) {
    AnnotatedExample ex;
    ex.tweet = {t.tweet_id, t.text};
    ex.event = t.event;
    as_corpus.push_back(std::move(ex));
  }
  const auto chunker = make_chunker(config, as_corpus);
  const auto records = predict(models, tweets, *chunker, config.eval_threads());
  std::ostringstream out;
  write_predictions(out, records);
  write_text(output, out.str());
  // The record format has no room for run metadata, so it sits alongside.
  write_text(meta_path, json({{"fingerprint", config.fingerprint()}, {"records", records.size()}}).dump(2) + "\n");
  std::cout << records.size() << " predictions -> " << output.string() << "\n";
}

EvalReport cmd_ablation(const RunConfig& config, const std::string& name) {
  const AblationSpec spec = ablation(name, config.train_config());
  RunConfig run = config;
  run.set_prepared_dir(config.prepared_dir());
  run.set("paths.output", (config.output_dir() / "ablations" / name).string());
  run.set("model.use_pooling", spec.config.use_pooling ? "true" : "false");
  run.set("model.use_ces", spec.config.use_ces ? "true" : "false");
  run.set("encoder.variant", std::string(to_string(spec.config.encoder_variant)));
  if (run.get_bool("encoder.substitute_tiny") && spec.config.encoder_variant != EncoderVariant::tiny_test) {
    spdlog::warn("ablation {}: {} encoder replaced by tiny_test (encoder.substitute_tiny)", name,
                 to_string(spec.config.encoder_variant));
  }
  write_text(run.output_dir() / "config.txt", run.dump());
  for (EventType event : run.events()) {
    for (ModelFamily f : spec.families) cmd_train(run, f, event);
  }
  if (std::find(spec.families.begin(), spec.families.end(), ModelFamily::slot) != spec.families.end()) {
    cmd_tune_thresholds(run);
  }
  return cmd_evaluate(run, "valid", {});
}

void cmd_synth(const std::filesystem::path& output, std::size_t examples_per_event,
               const std::vector<EventType>& events, std::uint64_t seed) {
  const SubtaskRegistry registry = SubtaskRegistry::standard();
  std::vector<AnnotatedExample> all;
  for (EventType e : events) {
    SyntheticOptions o;
    o.examples = examples_per_event;
    o.seed = seed;
    o.event = e;
    for (auto& ex : synthetic_corpus(o, registry)) all.push_back(std::move(ex));
  }
  std::ostringstream out;
  save_corpus(out, all);
  write_text(output, out.str());
  std::cout << all.size() << " synthetic examples -> " << output.string() << "\n";
}

}  // namespace covex::cli
