#include "covex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "covex/archive.hpp"
#include "covex/error.hpp"
#include "covex/text.hpp"
#include "json.hpp"

namespace covex {

using nlohmann::json;

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::slot ? "slot" : "sentence";
}

ModelFamily parse_model_family(std::string_view name) {
  if (name == "slot") return ModelFamily::slot;
  if (name == "sentence") return ModelFamily::sentence;
  throw ConfigError("unknown model family '" + std::string(name) + "' (expected slot or sentence)");
}

SlotModelConfig TrainConfig::slot_config() const {
  SlotModelConfig c;
  c.use_pooling = use_pooling;
  c.use_ces = use_ces;
  c.dropout = dropout;
  c.lambda1 = lambda1;
  return c;
}

SentenceModelConfig TrainConfig::sentence_config() const {
  SentenceModelConfig c;
  c.use_pooling = use_pooling;
  c.use_ces = use_ces;
  c.dropout = dropout;
  c.lambda2 = lambda2;
  return c;
}

namespace {

struct AblationRow {
  std::string_view name;
  bool slot;
  bool sentence;
  bool use_pooling;
  bool use_ces;
  EncoderVariant variant;
};

constexpr AblationRow kAblations[] = {
    {"sf_full", true, false, true, true, EncoderVariant::pretrained_domain},
    {"sf_wo_pool", true, false, false, true, EncoderVariant::pretrained_domain},
    {"sf_wo_ces", true, false, true, false, EncoderVariant::pretrained_domain},
    {"sf_ct_bert", true, false, false, false, EncoderVariant::pretrained_domain},
    {"sf_bert_large", true, false, false, false, EncoderVariant::pretrained_large},
    {"sf_bert_base", true, false, false, false, EncoderVariant::pretrained_base},
    {"sc_full", false, true, true, true, EncoderVariant::pretrained_domain},
    {"sc_wo_ces", false, true, true, false, EncoderVariant::pretrained_domain},
    {"sc_ctbert_multitask", false, true, false, false, EncoderVariant::pretrained_domain},
    {"sc_bert_multitask", false, true, false, false, EncoderVariant::pretrained_base},
    {"bert_separate", true, true, false, false, EncoderVariant::pretrained_base},
};

}  // namespace

std::vector<std::string> ablation_names() {
  std::vector<std::string> out;
  for (const auto& row : kAblations) out.emplace_back(row.name);
  return out;
}

AblationSpec ablation(std::string_view name, const TrainConfig& base) {
  for (const auto& row : kAblations) {
    if (row.name != name) continue;
    AblationSpec spec;
    spec.name = std::string(name);
    if (row.slot) spec.families.push_back(ModelFamily::slot);
    if (row.sentence) spec.families.push_back(ModelFamily::sentence);
    spec.config = base;
    spec.config.use_pooling = row.use_pooling;
    spec.config.use_ces = row.use_ces;
    spec.config.encoder_variant = row.variant;
    return spec;
  }
  std::string valid;
  for (const auto& row : kAblations) valid += (valid.empty() ? "" : ", ") + std::string(row.name);
  throw ConfigError("unknown ablation '" + std::string(name) + "'; valid names: " + valid);
}

std::vector<AblationSpec> ablation_matrix(std::span<const std::string> names, const TrainConfig& base) {
  std::vector<AblationSpec> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(ablation(n, base));
  return out;
}

Encoder make_encoder(const EncoderConfig& config, std::span<const std::string> texts) {
  if (config.variant != EncoderVariant::tiny_test) return Encoder::load_pretrained(config);
  std::vector<std::string> all;
  all.reserve(texts.size() * 2);
  for (const auto& t : texts) {
    all.push_back(t);
    all.push_back(normalize_sentence(t));
  }
  return Encoder::create(config, build_vocabulary(all, config.lower_case));
}

// ---- training data ----

std::vector<SlotInstance> build_slot_instances(std::span<const AnnotatedExample> examples,
                                               const SlotModel& model,
                                               const ChunkerBackend& chunker) {
  const auto& subtasks = model.subtasks();
  const auto& tokenizer = model.encoder().tokenizer();
  const std::size_t limit = model.encoder().config().max_tokens();
  std::vector<SlotInstance> out;
  std::size_t skipped = 0;
  for (const AnnotatedExample& ex : examples) {
    if (ex.event != model.event()) continue;
    if (text::trim(ex.tweet.text_or_empty()).empty()) continue;

    std::vector<std::optional<std::set<std::string>>> gold(subtasks.size());
    bool any_label = false;
    for (std::size_t k = 0; k < subtasks.size(); ++k) {
      auto it = ex.slot_gold.find(subtasks[k]);
      if (it == ex.slot_gold.end()) continue;
      std::set<std::string> normalized;
      for (const auto& g : it->second) normalized.insert(text::normalize_chunk_text(g));
      gold[k] = std::move(normalized);
      any_label = true;
    }
    if (!any_label && !model.config().use_ces) continue;

    for (const CandidateChunk& chunk : extract_candidates(ex.tweet, chunker)) {
      SlotInstance inst;
      inst.sequence = insert_markers(ex.tweet, chunk, tokenizer, limit);
      if (inst.sequence.skipped) {
        ++skipped;
        continue;
      }
      inst.tweet_id = ex.tweet.tweet_id;
      inst.chunk = chunk;
      inst.y_ces = ex.event_label;
      const std::string key = text::normalize_chunk_text(chunk.text);
      for (const auto& g : gold) {
        inst.labels.push_back(g ? std::optional<int>(g->contains(key) ? 1 : 0) : std::nullopt);
      }
      out.push_back(std::move(inst));
    }
  }
  if (skipped > 0) spdlog::warn("{} candidate(s) dropped: markers past the length limit", skipped);
  return out;
}

std::vector<SentenceInstance> build_sentence_instances(std::span<const AnnotatedExample> examples,
                                                       const SentenceModel& model) {
  const auto& subtasks = model.subtasks();
  std::vector<SentenceInstance> out;
  for (const AnnotatedExample& ex : examples) {
    if (ex.event != model.event()) continue;
    SentenceInstance inst;
    inst.tweet_id = ex.tweet.tweet_id;
    inst.y_ces = ex.event_label;
    bool any_label = false;
    for (std::size_t k = 0; k < subtasks.size(); ++k) {
      auto it = ex.sentence_gold.find(subtasks[k]);
      if (it == ex.sentence_gold.end()) {
        inst.labels.emplace_back();
        continue;
      }
      const auto& labels = model.label_sets()[k];
      auto pos = std::find(labels.begin(), labels.end(), it->second);
      if (pos == labels.end()) {
        throw SchemaError("tweet " + ex.tweet.tweet_id + ": label '" + it->second +
                          "' is not in the label set of " + subtasks[k]);
      }
      inst.labels.emplace_back(static_cast<int>(pos - labels.begin()));
      any_label = true;
    }
    if (!any_label && !model.config().use_ces) continue;
    inst.tokens = model.prepare(ex.tweet.text_or_empty());
    out.push_back(std::move(inst));
  }
  return out;
}

// ---- training ----

namespace {

TrainLog train_loop(ParameterStore& store, std::size_t n, int epochs, const TrainConfig& config,
                    const std::function<ag::Var(std::size_t, Rng*)>& item_loss) {
  if (n == 0) throw PreconditionError("training split is empty");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  Adam adam(store, opts);
  store.zero_grad();

  Rng order_rng = Rng::derive(config.seed, "train/order");
  Rng dropout_rng = Rng::derive(config.seed, "train/dropout");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    if (config.max_steps > 0 && log.steps >= config.max_steps) break;
    order_rng.shuffle(order);
    double epoch_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      if (config.max_steps > 0 && log.steps >= config.max_steps) break;
      const std::size_t e = std::min(n, b + config.batch_size);
      std::vector<ag::Var> losses;
      losses.reserve(e - b);
      for (std::size_t i = b; i < e; ++i) losses.push_back(item_loss(order[i], &dropout_rng));
      const ag::Var total = ag::sum(losses);
      epoch_sum += total.scalar();
      seen += e - b;
      ag::backward(ag::scale(total, 1.0 / static_cast<double>(e - b)));
      adam.step();
      ++log.steps;
    }
    log.epoch_loss.push_back(epoch_sum / static_cast<double>(seen));
    spdlog::info("epoch {} loss {:.6f} ({} steps)", epoch + 1, log.epoch_loss.back(), log.steps);
  }
  return log;
}

}  // namespace

TrainLog train_slot(SlotModel& model, std::span<const SlotInstance> data, const TrainConfig& config) {
  const double lambda1 = model.config().lambda1;
  return train_loop(model.parameters(), data.size(), config.epochs_slot, config,
                    [&](std::size_t i, Rng* rng) {
                      const SlotInstance& inst = data[i];
                      return slot_loss(model.forward(inst.sequence, rng), inst.y_ces, inst.labels,
                                       lambda1);
                    });
}

TrainLog train_sentence(SentenceModel& model, std::span<const SentenceInstance> data,
                        const TrainConfig& config) {
  const double lambda2 = model.config().lambda2;
  return train_loop(model.parameters(), data.size(), config.epochs_sentence, config,
                    [&](std::size_t i, Rng* rng) {
                      const SentenceInstance& inst = data[i];
                      return sentence_loss(model.forward(inst.tokens, rng), inst.y_ces, inst.labels,
                                           lambda2);
                    });
}

// ---- checkpoints ----

namespace {

constexpr const char* kCheckpointFormat = "covex-checkpoint-1";

json encoder_json(const EncoderConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"model_id", c.model_id},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"heads", c.heads},
          {"intermediate", c.intermediate},
          {"max_positions", c.max_positions},
          {"type_vocab", c.type_vocab},
          {"layer_norm_eps", c.layer_norm_eps},
          {"dropout", c.dropout},
          {"lower_case", c.lower_case},
          {"seed", c.seed}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig c;
  c.variant = parse_encoder_variant(j.at("variant").get<std::string>());
  c.model_id = j.at("model_id").get<std::string>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.intermediate = j.at("intermediate").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.type_vocab = j.at("type_vocab").get<int>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.lower_case = j.at("lower_case").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

TensorArchive checkpoint_archive(ModelFamily family, EventType event, const Encoder& encoder,
                                 const ParameterStore& store, json model_config, json subtasks,
                                 const std::string& fingerprint, std::uint64_t seed) {
  TensorArchive a;
  a.meta["format"] = kCheckpointFormat;
  a.meta["family"] = std::string(to_string(family));
  a.meta["event"] = std::string(to_string(event));
  a.meta["fingerprint"] = fingerprint;
  a.meta["seed"] = std::to_string(seed);
  a.meta["encoder"] = encoder_json(encoder.config()).dump();
  a.meta["model"] = model_config.dump();
  a.meta["subtasks"] = subtasks.dump();
  a.meta["vocab"] = json(encoder.tokenizer().vocabulary().tokens()).dump();
  store_parameters(store, a);
  return a;
}

struct LoadedCheckpoint {
  TensorArchive archive;
  CheckpointInfo info;
  json model;
  json subtasks;
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  std::vector<std::string> vocab;
};

LoadedCheckpoint open_checkpoint(const std::filesystem::path& path, ModelFamily expected) {
  LoadedCheckpoint c;
  c.archive = read_archive(path);
  try {
    if (c.archive.meta_at("format") != kCheckpointFormat) {
      throw ModelError(path.string() + ": not a model checkpoint");
    }
    c.info.family = parse_model_family(c.archive.meta_at("family"));
    c.info.event = parse_event(c.archive.meta_at("event"));
    c.info.fingerprint = c.archive.meta_at("fingerprint");
    c.seed = std::stoull(c.archive.meta_at("seed"));
    c.encoder = encoder_from_json(json::parse(c.archive.meta_at("encoder")));
    c.model = json::parse(c.archive.meta_at("model"));
    c.subtasks = json::parse(c.archive.meta_at("subtasks"));
    c.vocab = json::parse(c.archive.meta_at("vocab")).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": malformed checkpoint metadata: " + e.what());
  } catch (const std::logic_error& e) {
    throw ModelError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  if (c.info.family != expected) {
    throw ModelError(path.string() + ": holds a " + std::string(to_string(c.info.family)) +
                     " model, expected " + std::string(to_string(expected)));
  }
  return c;
}

json subtasks_json(const std::vector<std::string>& ids,
                   const std::vector<std::vector<std::string>>& labels) {
  json arr = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) arr.push_back({{"id", ids[i]}, {"labels", labels[i]}});
  return arr;
}

void check_subtasks(const std::filesystem::path& path, const json& stored,
                    const std::vector<std::string>& ids,
                    const std::vector<std::vector<std::string>>& labels) {
  if (stored != subtasks_json(ids, labels)) {
    throw ModelError(path.string() + ": subtasks or label sets differ from the registry");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SlotModel& model,
                     const std::string& fingerprint, std::uint64_t seed) {
  const SlotModelConfig& c = model.config();
  json cfg = {{"use_pooling", c.use_pooling},   {"use_ces", c.use_ces},
              {"gate_on_event", c.gate_on_event}, {"event_hidden", c.event_hidden},
              {"fusion_hidden", c.fusion_hidden}, {"fusion_slope", c.fusion_slope},
              {"dropout", c.dropout},           {"lambda1", c.lambda1}};
  std::vector<std::vector<std::string>> labels(model.subtasks().size(), {"negative", "positive"});
  write_archive(path, checkpoint_archive(ModelFamily::slot, model.event(), model.encoder(),
                                         model.parameters(), cfg,
                                         subtasks_json(model.subtasks(), labels), fingerprint, seed));
}

void save_checkpoint(const std::filesystem::path& path, const SentenceModel& model,
                     const std::string& fingerprint, std::uint64_t seed) {
  const SentenceModelConfig& c = model.config();
  json cfg = {{"use_pooling", c.use_pooling}, {"use_ces", c.use_ces},
              {"event_hidden", c.event_hidden}, {"dropout", c.dropout},
              {"lambda2", c.lambda2}};
  write_archive(path, checkpoint_archive(ModelFamily::sentence, model.event(), model.encoder(),
                                         model.parameters(), cfg,
                                         subtasks_json(model.subtasks(), model.label_sets()),
                                         fingerprint, seed));
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  const TensorArchive a = read_archive(path);
  try {
    if (a.meta_at("format") != kCheckpointFormat) throw ModelError(path.string() + ": not a model checkpoint");
    CheckpointInfo info;
    info.family = parse_model_family(a.meta_at("family"));
    info.event = parse_event(a.meta_at("event"));
    info.fingerprint = a.meta_at("fingerprint");
    return info;
  } catch (const ConfigError& e) {
    throw ModelError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

SlotModel load_slot_checkpoint(const std::filesystem::path& path, const SubtaskRegistry& registry) {
  LoadedCheckpoint c = open_checkpoint(path, ModelFamily::slot);
  SlotModelConfig cfg;
  try {
    cfg.use_pooling = c.model.at("use_pooling").get<bool>();
    cfg.use_ces = c.model.at("use_ces").get<bool>();
    cfg.gate_on_event = c.model.at("gate_on_event").get<bool>();
    cfg.event_hidden = c.model.at("event_hidden").get<int>();
    cfg.fusion_hidden = c.model.at("fusion_hidden").get<int>();
    cfg.fusion_slope = c.model.at("fusion_slope").get<double>();
    cfg.dropout = c.model.at("dropout").get<double>();
    cfg.lambda1 = c.model.at("lambda1").get<double>();
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  SlotModel model(Encoder::create(c.encoder, Vocabulary(c.vocab)), c.info.event, registry, cfg, c.seed);
  std::vector<std::vector<std::string>> labels(model.subtasks().size(), {"negative", "positive"});
  check_subtasks(path, c.subtasks, model.subtasks(), labels);
  load_parameters(model.parameters(), c.archive);
  return model;
}

SentenceModel load_sentence_checkpoint(const std::filesystem::path& path,
                                       const SubtaskRegistry& registry) {
  LoadedCheckpoint c = open_checkpoint(path, ModelFamily::sentence);
  SentenceModelConfig cfg;
  try {
    cfg.use_pooling = c.model.at("use_pooling").get<bool>();
    cfg.use_ces = c.model.at("use_ces").get<bool>();
    cfg.event_hidden = c.model.at("event_hidden").get<int>();
    cfg.dropout = c.model.at("dropout").get<double>();
    cfg.lambda2 = c.model.at("lambda2").get<double>();
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  SentenceModel model(Encoder::create(c.encoder, Vocabulary(c.vocab)), c.info.event, registry, cfg,
                      c.seed);
  check_subtasks(path, c.subtasks, model.subtasks(), model.label_sets());
  load_parameters(model.parameters(), c.archive);
  return model;
}

// ---- thresholds and evaluation ----

std::map<std::string, std::vector<SlotItem>> score_slot_items(
    const SlotModel& model, std::span<const AnnotatedExample> examples,
    const ChunkerBackend& chunker, std::size_t threads) {
  const auto& subtasks = model.subtasks();
  std::vector<const AnnotatedExample*> selected;
  for (const auto& ex : examples) {
    if (ex.event == model.event()) selected.push_back(&ex);
  }

  // per example: per subtask item (or nothing when not annotated)
  std::vector<std::vector<std::optional<SlotItem>>> scored(selected.size());
  const std::size_t limit = model.encoder().config().max_tokens();
  parallel_for(selected.size(), threads, [&](std::size_t i) {
    const AnnotatedExample& ex = *selected[i];
    std::vector<std::optional<SlotItem>> row(subtasks.size());
    bool any = false;
    for (std::size_t k = 0; k < subtasks.size(); ++k) {
      auto it = ex.slot_gold.find(subtasks[k]);
      if (it == ex.slot_gold.end()) continue;
      row[k] = SlotItem{ex.tweet.tweet_id, {}, it->second};
      any = true;
    }
    if (any && !text::trim(ex.tweet.text_or_empty()).empty()) {
      for (const CandidateChunk& chunk : extract_candidates(ex.tweet, chunker)) {
        const MarkedSequence seq =
            insert_markers(ex.tweet, chunk, model.encoder().tokenizer(), limit);
        if (seq.skipped) continue;
        const std::vector<double> probs = model.positive_probabilities(seq);
        for (std::size_t k = 0; k < subtasks.size(); ++k) {
          if (row[k]) row[k]->candidates.push_back({chunk.text, probs[k]});
        }
      }
    }
    scored[i] = std::move(row);
  });

  std::map<std::string, std::vector<SlotItem>> out;
  for (const auto& id : subtasks) out[id];
  for (auto& row : scored) {
    for (std::size_t k = 0; k < subtasks.size(); ++k) {
      if (row[k]) out[subtasks[k]].push_back(std::move(*row[k]));
    }
  }
  return out;
}

std::map<std::string, double> tune_thresholds(
    const std::map<std::string, std::vector<SlotItem>>& items,
    const std::vector<std::string>& subtasks) {
  std::map<std::string, double> out;
  for (const auto& id : subtasks) {
    auto it = items.find(id);
    std::optional<double> best;
    if (it != items.end()) best = best_threshold(it->second);
    if (!best) {
      spdlog::warn("subtask {} has no validation examples; threshold defaults to {}", id,
                   kDefaultThreshold);
    }
    out[id] = best.value_or(kDefaultThreshold);
  }
  return out;
}

void save_thresholds(const std::filesystem::path& path, const ThresholdTable& table,
                     const std::string& fingerprint) {
  json j;
  j["fingerprint"] = fingerprint;
  json t = json::object();
  for (const auto& [event, subs] : table) t[std::string(to_string(event))] = subs;
  j["thresholds"] = t;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ThresholdTable load_thresholds(const std::filesystem::path& path, std::string* fingerprint) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ThresholdTable table;
  try {
    const json j = json::parse(in);
    if (fingerprint != nullptr) *fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& [event, subs] : j.at("thresholds").items()) {
      auto& row = table[parse_event(event)];
      for (const auto& [id, value] : subs.items()) {
        const double v = value.get<double>();
        const bool on_grid = std::any_of(kThresholdGrid.begin(), kThresholdGrid.end(),
                                         [v](double g) { return g == v; });
        if (!on_grid && v != kDefaultThreshold) {
          throw SchemaError(path.string() + ": threshold " + std::to_string(v) + " is off the grid");
        }
        row[id] = v;
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return table;
}

std::vector<SubtaskScore> evaluate_slots(const std::map<std::string, std::vector<SlotItem>>& items,
                                         EventType event,
                                         const std::map<std::string, double>& thresholds) {
  std::vector<SubtaskScore> out;
  for (const auto& [id, list] : items) {
    SubtaskScore s;
    s.event = event;
    s.subtask = id;
    s.kind = SubtaskKind::slot_filling;
    auto it = thresholds.find(id);
    s.threshold = it == thresholds.end() ? kDefaultThreshold : it->second;
    s.counts = count_at(list, *s.threshold);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SubtaskScore> evaluate_sentences(const SentenceModel& model,
                                             std::span<const AnnotatedExample> examples,
                                             std::size_t threads) {
  std::vector<const AnnotatedExample*> selected;
  for (const auto& ex : examples) {
    if (ex.event == model.event() && !ex.sentence_gold.empty()) selected.push_back(&ex);
  }
  std::vector<std::vector<int>> predictions(selected.size());
  parallel_for(selected.size(), threads, [&](std::size_t i) {
    predictions[i] = model.predict(model.prepare(selected[i]->tweet.text_or_empty()));
  });

  std::vector<SubtaskScore> out;
  for (std::size_t k = 0; k < model.subtasks().size(); ++k) {
    SubtaskScore s;
    s.event = model.event();
    s.subtask = model.subtasks()[k];
    s.kind = SubtaskKind::sentence_classification;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      auto it = selected[i]->sentence_gold.find(s.subtask);
      if (it == selected[i]->sentence_gold.end()) continue;
      s.counts += count_sentence(model.label_sets()[k][static_cast<std::size_t>(predictions[i][k])],
                                 it->second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---- prediction ----

std::vector<TweetInput> read_tweet_inputs(std::istream& in) {
  std::vector<TweetInput> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      TweetInput t;
      const json& id = j.at("tweet_id");
      t.tweet_id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<std::int64_t>());
      const std::string event = j.at("event").get<std::string>();
      auto parsed = try_parse_event(event);
      if (!parsed) throw ParseError("unknown event '" + event + "'", n);
      t.event = *parsed;
      t.text = j.at("text").get<std::string>();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), n);
    }
  }
  return out;
}

std::string to_json_line(const PredictionRecord& record) {
  json j;
  j["tweet_id"] = record.tweet_id;
  j["event"] = std::string(to_string(record.event));
  json slots = json::object();
  for (const auto& [id, values] : record.slots) slots[id] = std::vector<std::string>(values.begin(), values.end());
  j["slots"] = slots;
  j["sentences"] = record.sentences;
  return j.dump();
}

PredictionRecord parse_prediction_line(std::string_view line, std::size_t line_number,
                                       const SubtaskRegistry& registry) {
  PredictionRecord r;
  try {
    const json j = json::parse(line);
    r.tweet_id = j.at("tweet_id").get<std::string>();
    const std::string event = j.at("event").get<std::string>();
    auto parsed = try_parse_event(event);
    if (!parsed) throw SchemaError("line " + std::to_string(line_number) + ": unknown event '" + event + "'");
    r.event = *parsed;
    for (const auto& [id, values] : j.at("slots").items()) {
      const SubtaskSpec* spec = registry.find(r.event, id);
      if (spec == nullptr || spec->kind != SubtaskKind::slot_filling) {
        throw SchemaError("line " + std::to_string(line_number) + ": '" + id +
                          "' is not a slot subtask of " + event);
      }
      r.slots[id] = values.get<std::set<std::string>>();
    }
    for (const auto& [id, value] : j.at("sentences").items()) {
      const SubtaskSpec* spec = registry.find(r.event, id);
      if (spec == nullptr || spec->kind != SubtaskKind::sentence_classification) {
        throw SchemaError("line " + std::to_string(line_number) + ": '" + id +
                          "' is not a sentence subtask of " + event);
      }
      r.sentences[id] = value.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_number);
  }
  return r;
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<PredictionRecord> read_predictions(std::istream& in, const SubtaskRegistry& registry) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    out.push_back(parse_prediction_line(line, n, registry));
  }
  return out;
}

std::vector<PredictionRecord> predict(const std::map<EventType, EventModels>& models,
                                      std::span<const TweetInput> tweets,
                                      const ChunkerBackend& chunker, std::size_t threads) {
  for (const TweetInput& t : tweets) {
    auto it = models.find(t.event);
    if (it == models.end() || it->second.slot == nullptr || it->second.sentence == nullptr) {
      throw ModelError("no slot and sentence models loaded for event " + std::string(to_string(t.event)));
    }
  }
  std::vector<PredictionRecord> out(tweets.size());
  parallel_for(tweets.size(), threads, [&](std::size_t i) {
    const TweetInput& t = tweets[i];
    const EventModels& m = models.at(t.event);
    PredictionRecord r;
    r.tweet_id = t.tweet_id;
    r.event = t.event;
    const auto& slot_ids = m.slot->subtasks();
    for (const auto& id : slot_ids) r.slots[id];
    if (!text::trim(t.text).empty()) {
      const Tweet tweet{t.tweet_id, t.text};
      const std::size_t limit = m.slot->encoder().config().max_tokens();
      for (const CandidateChunk& chunk : extract_candidates(tweet, chunker)) {
        const MarkedSequence seq = insert_markers(tweet, chunk, m.slot->encoder().tokenizer(), limit);
        if (seq.skipped) continue;
        const std::vector<double> probs = m.slot->positive_probabilities(seq);
        for (std::size_t k = 0; k < slot_ids.size(); ++k) {
          auto th = m.thresholds.find(slot_ids[k]);
          const double threshold = th == m.thresholds.end() ? kDefaultThreshold : th->second;
          if (probs[k] >= threshold) r.slots[slot_ids[k]].insert(chunk.text);
        }
      }
    }
    const std::vector<int> labels = m.sentence->predict(m.sentence->prepare(t.text));
    for (std::size_t k = 0; k < labels.size(); ++k) {
      r.sentences[m.sentence->subtasks()[k]] =
          m.sentence->label_sets()[k][static_cast<std::size_t>(labels[k])];
    }
    out[i] = std::move(r);
  });
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace covex
