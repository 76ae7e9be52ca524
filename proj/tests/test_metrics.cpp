#include "doctest.h"
#include "support.hpp"

#include <cmath>

#include "covex/metrics.hpp"
#include "covex/rng.hpp"
#include "covex/text.hpp"
#include "json.hpp"

using namespace covex;

namespace {

// Brute-force counterparts written against the definitions only.
struct Tally {
  long tp = 0, fp = 0, fn = 0;
};

Tally brute_counts(const std::vector<SlotItem>& items, double t) {
  Tally c;
  for (const auto& item : items) {
    std::vector<std::string> pred, gold;
    for (const auto& cand : item.candidates) {
      if (cand.probability >= t) pred.push_back(text::normalize_chunk_text(cand.text));
    }
    for (const auto& g : item.gold) gold.push_back(text::normalize_chunk_text(g));
    std::sort(pred.begin(), pred.end());
    pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
    std::sort(gold.begin(), gold.end());
    gold.erase(std::unique(gold.begin(), gold.end()), gold.end());
    for (const auto& p : pred) (std::binary_search(gold.begin(), gold.end(), p) ? c.tp : c.fp)++;
    for (const auto& g : gold) c.fn += !std::binary_search(pred.begin(), pred.end(), g);
  }
  return c;
}

// F1 as an exact fraction 2tp / (2tp + fp + fn), 0/1 when tp = 0.
std::pair<long, long> f1_fraction(const Tally& c) {
  if (c.tp == 0) return {0, 1};
  return {2 * c.tp, 2 * c.tp + c.fp + c.fn};
}

double brute_threshold(const std::vector<SlotItem>& items) {
  const double grid[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double best = grid[0];
  std::pair<long, long> best_f{-1, 1};
  for (double t : grid) {
    const auto f = f1_fraction(brute_counts(items, t));
    if (f.first * best_f.second > best_f.first * f.second) {
      best_f = f;
      best = t;
    }
  }
  return best;
}

std::vector<SlotItem> random_items(Rng& rng) {
  static const std::vector<std::string> names = {"mom", "Mom", "my mom", "dallas", "Dallas!", "john", "the doctor"};
  std::vector<SlotItem> items;
  for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
    SlotItem item;
    item.tweet_id = std::to_string(i);
    for (std::size_t k = 0, m = rng.below(5); k < m; ++k) {
      // Probabilities on a 0.05 grid so many land exactly on thresholds.
      item.candidates.push_back({names[rng.below(names.size())], static_cast<double>(rng.below(21)) / 20.0});
    }
    for (std::size_t k = 0, m = rng.below(3); k < m; ++k) item.gold.insert(names[rng.below(names.size())]);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

TEST_CASE("precision, recall and F1 from counts") {
  const Prf p = prf({2, 1, 2});
  CHECK(p.precision == doctest::Approx(2.0 / 3.0));
  CHECK(p.recall == doctest::Approx(0.5));
  CHECK(p.f1 == doctest::Approx(4.0 / 7.0));
  const Prf z = prf({0, 0, 0});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(prf({0, 3, 0}).f1 == 0.0);
  CHECK(prf({5, 0, 0}).f1 == 1.0);
  // Same ratio, same double.
  CHECK(prf({1, 1, 3}).f1 == prf({1, 2, 2}).f1);

  const std::vector<Counts> scopes = {{1, 0, 0}, {0, 0, 0}, {1, 1, 0}};
  CHECK(macro_f1(scopes) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(macro_f1(std::vector<Counts>{}) == 0.0);
}

TEST_CASE("slot and sentence counting") {
  CHECK(count_slot({"My Mom", "dallas"}, {"my mom", "Houston"}) == Counts{1, 1, 1});
  CHECK(count_slot({"mom", "Mom", "mom."}, {"MOM"}) == Counts{1, 0, 0});
  CHECK(count_slot({}, {"a"}) == Counts{0, 0, 1});
  CHECK(count_sentence("Yes", "Yes") == Counts{1, 0, 0});
  CHECK(count_sentence("Yes", "No") == Counts{0, 1, 1});
}

TEST_CASE("threshold search prefers the smallest of tied thresholds") {
  const std::vector<SlotItem> items = {{"1", {{"a", 0.25}}, {}}, {"2", {{"b", 0.55}}, {"b"}},
                                       {"3", {{"c", 0.85}}, {"c"}}};
  CHECK(best_threshold(items) == doctest::Approx(0.3));
  CHECK(prf(count_at(items, 0.3)).f1 == 1.0);
  CHECK(prf(count_at(items, 0.5)).f1 == 1.0);
  CHECK(prf(count_at(items, 0.2)).f1 < 1.0);
  CHECK_FALSE(best_threshold(std::vector<SlotItem>{}).has_value());
  // Nothing right anywhere: the first grid value.
  const std::vector<SlotItem> hopeless = {{"1", {{"a", 0.95}}, {"b"}}};
  CHECK(best_threshold(hopeless) == doctest::Approx(0.1));
}

TEST_CASE("metrics agree with brute force on random instances") {
  Rng rng(79);
  for (int i = 0; i < 300; ++i) {
    const auto items = random_items(rng);
    for (double t : kThresholdGrid) {
      const Tally b = brute_counts(items, t);
      const Counts c = count_at(items, t);
      CHECK(c.tp == b.tp);
      CHECK(c.fp == b.fp);
      CHECK(c.fn == b.fn);
    }
    CHECK(*best_threshold(items) == brute_threshold(items));
  }
}

TEST_CASE("raising the threshold never adds predictions") {
  Rng rng(83);
  for (int i = 0; i < 200; ++i) {
    const auto items = random_items(rng);
    for (const auto& item : items) {
      for (std::size_t k = 1; k < kThresholdGrid.size(); ++k) {
        const auto lo = predicted_at(item, kThresholdGrid[k - 1]);
        const auto hi = predicted_at(item, kThresholdGrid[k]);
        CHECK(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
      }
    }
    Counts prev = count_at(items, kThresholdGrid.front());
    for (std::size_t k = 1; k < kThresholdGrid.size(); ++k) {
      const Counts cur = count_at(items, kThresholdGrid[k]);
      CHECK(cur.tp <= prev.tp);
      CHECK(cur.tp + cur.fn == prev.tp + prev.fn);
      prev = cur;
    }
  }
}

TEST_CASE("reports pool scopes and serialize") {
  std::vector<SubtaskScore> subs = {
      {EventType::tested_positive, "who", SubtaskKind::slot_filling, {2, 1, 2}, 0.3},
      {EventType::tested_positive, "gender", SubtaskKind::sentence_classification, {3, 1, 1}, std::nullopt},
      {EventType::cure, "opinion", SubtaskKind::sentence_classification, {1, 1, 1}, std::nullopt},
      {EventType::cure, "what", SubtaskKind::slot_filling, {0, 0, 0}, 0.5},
  };
  const EvalReport r = build_report(subs, "abc");
  CHECK(r.overall.counts == Counts{6, 3, 4});
  CHECK(r.overall.micro.f1 == doctest::Approx(12.0 / 19.0));
  CHECK(r.overall.subtasks == 3);
  CHECK(r.overall.macro_f1 == doctest::Approx((4.0 / 7.0 + 0.75 + 0.5) / 3.0));
  CHECK(r.slot_filling.counts == Counts{2, 1, 2});
  CHECK(r.sentence.counts == Counts{4, 2, 2});
  REQUIRE(r.events.size() == 2);
  CHECK(r.events.at(EventType::cure).micro.f1 == doctest::Approx(0.5));
  CHECK(r.event_micro_mean ==
        doctest::Approx((r.events.at(EventType::cure).micro.f1 + r.events.at(EventType::tested_positive).micro.f1) / 2));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("fingerprint") == "abc");
  CHECK(j.at("subtasks").size() == 4);
  CHECK(j.at("subtasks")[0].at("threshold") == 0.3);
  CHECK_FALSE(j.at("subtasks")[1].contains("threshold"));
  CHECK(j.at("overall").at("counts").at("tp") == 6);
  CHECK(r.to_json() == build_report(subs, "abc").to_json());
  const std::string table = r.to_table();
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("0.571") != std::string::npos);
}
