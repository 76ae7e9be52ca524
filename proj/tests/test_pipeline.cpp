#include "doctest.h"
#include "support.hpp"

#include <atomic>
#include <sstream>

#include "covex/chunker.hpp"
#include "covex/error.hpp"
#include "covex/pipeline.hpp"
#include "covex/synthetic.hpp"

using namespace covex;

namespace {

std::vector<AnnotatedExample> corpus(EventType event = EventType::tested_positive, std::size_t n = 12) {
  SyntheticOptions o;
  o.examples = n;
  o.seed = 3;
  o.event = event;
  return synthetic_corpus(o, SubtaskRegistry::standard());
}

std::vector<std::string> texts_of(const std::vector<AnnotatedExample>& c) {
  std::vector<std::string> out;
  for (const auto& ex : c) out.push_back(ex.tweet.text_or_empty());
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.epochs_slot = 1;
  c.epochs_sentence = 1;
  c.batch_size = 4;
  c.seed = 5;
  c.dropout = 0.1;
  c.encoder_variant = EncoderVariant::tiny_test;
  c.max_steps = 3;
  return c;
}

EncoderConfig encoder_config(const TrainConfig& c) {
  EncoderConfig e = test::tiny_config(c.seed, c.dropout);
  return e;
}

SlotModel slot_model(const std::vector<AnnotatedExample>& data, const TrainConfig& c) {
  const auto texts = texts_of(data);
  return SlotModel(make_encoder(encoder_config(c), texts), data.front().event, SubtaskRegistry::standard(),
                   c.slot_config(), c.seed);
}

SentenceModel sentence_model(const std::vector<AnnotatedExample>& data, const TrainConfig& c) {
  const auto texts = texts_of(data);
  return SentenceModel(make_encoder(encoder_config(c), texts), data.front().event, SubtaskRegistry::standard(),
                       c.sentence_config(), c.seed);
}

std::vector<ag::Matrix> values(const ParameterStore& store) {
  std::vector<ag::Matrix> out;
  for (const auto& [name, var] : store.entries()) out.push_back(var.value());
  return out;
}

}  // namespace

TEST_CASE("ablation table") {
  const auto names = ablation_names();
  CHECK(names.size() == 11);
  const AblationSpec wo_pool = ablation("sf_wo_pool");
  CHECK_FALSE(wo_pool.config.use_pooling);
  CHECK(wo_pool.config.use_ces);
  CHECK(wo_pool.config.encoder_variant == EncoderVariant::pretrained_domain);
  CHECK(wo_pool.families == std::vector<ModelFamily>{ModelFamily::slot});

  const AblationSpec sep = ablation("bert_separate");
  CHECK(sep.config.encoder_variant == EncoderVariant::pretrained_base);
  CHECK_FALSE(sep.config.use_pooling);
  CHECK_FALSE(sep.config.use_ces);
  CHECK(sep.families.size() == 2);

  CHECK(ablation("sc_wo_ces").families == std::vector<ModelFamily>{ModelFamily::sentence});

  // Only the three ablation flags change.
  TrainConfig base = small_config();
  for (const auto& spec : ablation_matrix(names, base)) {
    TrainConfig c = spec.config;
    c.use_pooling = base.use_pooling;
    c.use_ces = base.use_ces;
    c.encoder_variant = base.encoder_variant;
    CHECK(c == base);
  }
  try {
    ablation("nope");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sf_full") != std::string::npos);
  }
  CHECK(parse_model_family("slot") == ModelFamily::slot);
  CHECK_THROWS_AS(parse_model_family("both"), ConfigError);
}

TEST_CASE("slot instances carry per-subtask labels") {
  const auto data = corpus();
  const TrainConfig c = small_config();
  const SlotModel m = slot_model(data, c);
  const auto inst = build_slot_instances(data, m, RuleChunker{});
  REQUIRE_FALSE(inst.empty());
  std::size_t positives = 0;
  for (const auto& i : inst) {
    CHECK(i.labels.size() == m.subtasks().size());
    CHECK_FALSE(i.sequence.skipped);
    for (const auto& l : i.labels) positives += l && *l == 1;
  }
  CHECK(positives > 0);

  // Every gold answer of an annotated subtask is labelled positive on its chunk.
  const auto& ex = data.front();
  for (std::size_t k = 0; k < m.subtasks().size(); ++k) {
    auto it = ex.slot_gold.find(m.subtasks()[k]);
    if (it == ex.slot_gold.end()) continue;
    for (const auto& gold : it->second) {
      bool found = false;
      for (const auto& i : inst) {
        if (i.tweet_id == ex.tweet.tweet_id && i.chunk.text == gold) found |= i.labels[k] == 1;
      }
      CHECK(found);
    }
  }

  // Other events are ignored.
  const auto other = corpus(EventType::death);
  CHECK(build_slot_instances(other, m, RuleChunker{}).empty());
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = corpus();
  const TrainConfig c = small_config();
  SlotModel a = slot_model(data, c);
  SlotModel b = slot_model(data, c);
  const auto ia = build_slot_instances(data, a, RuleChunker{});
  const auto la = train_slot(a, ia, c);
  const auto lb = train_slot(b, build_slot_instances(data, b, RuleChunker{}), c);
  CHECK(la.steps == 3);
  CHECK(la.epoch_loss == lb.epoch_loss);
  CHECK(values(a.parameters()) == values(b.parameters()));

  SentenceModel s1 = sentence_model(data, c);
  SentenceModel s2 = sentence_model(data, c);
  const auto l1 = train_sentence(s1, build_sentence_instances(data, s1), c);
  const auto l2 = train_sentence(s2, build_sentence_instances(data, s2), c);
  CHECK(l1.epoch_loss == l2.epoch_loss);
  CHECK(values(s1.parameters()) == values(s2.parameters()));

  TrainConfig zero = c;
  zero.epochs_slot = 0;
  SlotModel z = slot_model(data, zero);
  const auto before = values(z.parameters());
  CHECK(train_slot(z, ia, zero).steps == 0);
  CHECK(values(z.parameters()) == before);

  CHECK_THROWS_AS(train_slot(z, std::vector<SlotInstance>{}, c), PreconditionError);
}

TEST_CASE("checkpoints round trip") {
  test::TempDir dir;
  const auto data = corpus();
  const TrainConfig c = small_config();
  const SubtaskRegistry r = SubtaskRegistry::standard();

  SlotModel m = slot_model(data, c);
  train_slot(m, build_slot_instances(data, m, RuleChunker{}), c);
  save_checkpoint(dir / "slot.ckpt", m, "fp1", c.seed);
  const CheckpointInfo info = read_checkpoint_info(dir / "slot.ckpt");
  CHECK(info.family == ModelFamily::slot);
  CHECK(info.event == EventType::tested_positive);
  CHECK(info.fingerprint == "fp1");
  const SlotModel back = load_slot_checkpoint(dir / "slot.ckpt", r);
  CHECK(values(back.parameters()) == values(m.parameters()));
  const auto seq = build_slot_instances(data, m, RuleChunker{}).front().sequence;
  CHECK(back.positive_probabilities(seq) == m.positive_probabilities(seq));
  CHECK_THROWS_AS(load_sentence_checkpoint(dir / "slot.ckpt", r), ModelError);

  SentenceModel s = sentence_model(data, c);
  save_checkpoint(dir / "sent.ckpt", s, "fp2", c.seed);
  const SentenceModel sb = load_sentence_checkpoint(dir / "sent.ckpt", r);
  const auto toks = s.prepare(data.front().tweet.text_or_empty());
  CHECK(sb.predict(toks) == s.predict(toks));
  CHECK(read_checkpoint_info(dir / "sent.ckpt").family == ModelFamily::sentence);

  CHECK_THROWS_AS(read_checkpoint_info(dir / "missing.ckpt"), ModelError);
}

TEST_CASE("threshold files round trip") {
  test::TempDir dir;
  ThresholdTable t;
  t[EventType::cure]["what"] = 0.3;
  t[EventType::death]["who"] = 0.9;
  save_thresholds(dir / "t.json", t, "fp");
  std::string fp;
  CHECK(load_thresholds(dir / "t.json", &fp) == t);
  CHECK(fp == "fp");
  test::write_file(dir / "bad.json", "{");
  CHECK_THROWS_AS(load_thresholds(dir / "bad.json"), DataError);

  const std::map<std::string, std::vector<SlotItem>> items = {
      {"who", {{"1", {{"a", 0.25}}, {}}, {"2", {{"b", 0.55}}, {"b"}}}}};
  const auto tuned = tune_thresholds(items, {"who", "age"});
  CHECK(tuned.at("who") == doctest::Approx(0.3));
  CHECK(tuned.at("age") == kDefaultThreshold);
}

TEST_CASE("prediction files round trip") {
  const SubtaskRegistry r = SubtaskRegistry::standard();
  PredictionRecord rec;
  rec.tweet_id = "9";
  rec.event = EventType::tested_positive;
  rec.slots["who"] = {"My mom", "\"John\""};
  rec.slots["age"] = {};
  rec.sentences["gender"] = "Female";
  std::ostringstream out;
  const std::vector<PredictionRecord> records = {rec, rec};
  write_predictions(out, records);
  std::istringstream in(out.str());
  CHECK(read_predictions(in, r) == records);
  CHECK(to_json_line(rec).find('\n') == std::string::npos);

  std::istringstream bad(to_json_line(rec) + "\n{\"tweet_id\":\"1\"}\n");
  try {
    read_predictions(bad, r);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  std::istringstream inputs(R"({"tweet_id":"1","event":"cure","text":"hi"})" "\n\n"
                            R"({"tweet_id":"2","event":"death","text":"x"})");
  const auto tweets = read_tweet_inputs(inputs);
  REQUIRE(tweets.size() == 2);
  CHECK(tweets[0].event == EventType::cure);
  std::istringstream broken(R"({"tweet_id":"1","event":"flu","text":"hi"})");
  CHECK_THROWS_AS(read_tweet_inputs(broken), DataError);
}

TEST_CASE("predict applies thresholds and labels every subtask") {
  const auto data = corpus();
  const TrainConfig c = small_config();
  const SlotModel slot = slot_model(data, c);
  const SentenceModel sent = sentence_model(data, c);

  std::vector<TweetInput> tweets;
  for (std::size_t i = 0; i < 4; ++i) tweets.push_back({data[i].tweet.tweet_id, data[i].event, *data[i].tweet.text});
  tweets.push_back({"empty", EventType::tested_positive, "  "});

  EventModels everything{&slot, &sent, {}};
  for (const auto& id : slot.subtasks()) everything.thresholds[id] = 0.0;
  EventModels nothing{&slot, &sent, {}};
  for (const auto& id : slot.subtasks()) nothing.thresholds[id] = 1.5;

  const auto all = predict({{EventType::tested_positive, everything}}, tweets, RuleChunker{});
  const auto none = predict({{EventType::tested_positive, nothing}}, tweets, RuleChunker{}, 2);
  REQUIRE(all.size() == tweets.size());
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    CHECK(all[i].tweet_id == tweets[i].tweet_id);
    CHECK(all[i].slots.size() == slot.subtasks().size());
    CHECK(all[i].sentences.size() == sent.subtasks().size());
    CHECK(all[i].sentences == none[i].sentences);
    std::set<std::string> cands;
    if (i < 4) {
      for (const auto& ch : extract_candidates({tweets[i].tweet_id, tweets[i].text}, RuleChunker{})) cands.insert(ch.text);
    }
    for (const auto& [id, set] : all[i].slots) CHECK(set == cands);
    for (const auto& [id, set] : none[i].slots) CHECK(set.empty());
  }

  const std::vector<TweetInput> death = {{"d", EventType::death, "x"}};
  CHECK_THROWS_AS(predict({{EventType::tested_positive, everything}}, death, RuleChunker{}), ModelError);
}

TEST_CASE("scoring and evaluation do not depend on the thread count") {
  const auto data = corpus(EventType::tested_positive, 8);
  const TrainConfig c = small_config();
  const SlotModel slot = slot_model(data, c);
  const SentenceModel sent = sentence_model(data, c);
  const auto one = score_slot_items(slot, data, RuleChunker{}, 1);
  const auto two = score_slot_items(slot, data, RuleChunker{}, 2);
  REQUIRE(one.size() == two.size());
  for (const auto& [id, items] : one) {
    REQUIRE(two.at(id).size() == items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
      CHECK(items[k].tweet_id == two.at(id)[k].tweet_id);
      CHECK(items[k].gold == two.at(id)[k].gold);
      REQUIRE(items[k].candidates.size() == two.at(id)[k].candidates.size());
      for (std::size_t j = 0; j < items[k].candidates.size(); ++j) {
        CHECK(items[k].candidates[j].probability == two.at(id)[k].candidates[j].probability);
      }
    }
  }
  const auto e1 = evaluate_sentences(sent, data, 1);
  const auto e2 = evaluate_sentences(sent, data, 3);
  REQUIRE(e1.size() == e2.size());
  for (std::size_t k = 0; k < e1.size(); ++k) CHECK(e1[k].counts == e2[k].counts);

  const auto scores = evaluate_slots(one, EventType::tested_positive, {});
  CHECK(scores.size() == one.size());
  for (const auto& s : scores) CHECK(s.threshold == kDefaultThreshold);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  for (std::size_t threads : {1u, 2u, 4u}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, threads,
                                 [](std::size_t i) {
                                   if (i == 7) throw DataError("boom");
                                 }),
                    DataError);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
