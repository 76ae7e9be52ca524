#include "doctest.h"
#include "support.hpp"

#include <cmath>

#include "covex/error.hpp"
#include "covex/preprocess.hpp"
#include "covex/slot_model.hpp"

using namespace covex;
using test::gradient_error;
using test::random_matrix;

namespace {

const std::vector<std::string> kTexts = {"my mom tested negative in dallas yesterday",
                                         "john was tested and came back negative"};

SlotModelConfig quiet(SlotModelConfig c = {}) {
  c.dropout = 0.0;
  return c;
}

SlotModel make_model(SlotModelConfig config = quiet(), std::uint64_t seed = 11,
                     EventType event = EventType::tested_negative) {
  return SlotModel(test::tiny_encoder(kTexts, seed), event, SubtaskRegistry::standard(), config, seed);
}

HiddenSequence random_hidden(Rng& rng, Eigen::Index n, Eigen::Index d, std::size_t p, std::size_t q) {
  HiddenSequence h;
  h.vectors = ag::constant(random_matrix(n, d, rng));
  h.cls_index = 0;
  h.sep_index = static_cast<std::size_t>(n - 1);
  h.marker_indices = std::make_pair(p, q);
  return h;
}

void zero_prefix(ParameterStore& store, const std::string& prefix) {
  for (const auto& [name, var] : store.entries()) {
    if (name.rfind(prefix, 0) == 0) ag::Var(var).mutable_value().setZero();
  }
}

}  // namespace

TEST_CASE("span pooling matches the hand-computed softmax") {
  ag::Var x = ag::constant(ag::Matrix{{1.0, 0.0}, {0.0, 1.0}});
  ag::Var a = ag::constant(ag::Matrix{{1.0}, {0.0}});
  const double e = std::exp(1.0);
  const ag::Matrix w = span_attention(x, 0, 1, a).value();
  CHECK(w(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(w(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
  const ag::Matrix pooled = pool_span(x, 0, 1, a).value();
  CHECK(pooled(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(pooled(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));

  // A single-token span returns that row.
  CHECK(pool_span(x, 1, 1, a).value() == x.value().row(1));

  CHECK_THROWS_AS(pool_span(x, 1, 0, a), PreconditionError);
  CHECK_THROWS_AS(pool_span(x, 0, 2, a), PreconditionError);
  CHECK_THROWS_AS(pool_span(x, 0, 1, ag::constant(ag::Matrix::Ones(3, 1))), ShapeError);
}

TEST_CASE("span pooling is a convex combination of the span only") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(10));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(6));
    const std::size_t p = rng.below(static_cast<std::size_t>(n));
    const std::size_t q = p + rng.below(static_cast<std::size_t>(n) - p);
    ag::Matrix xm = random_matrix(n, d, rng, 3.0);
    ag::Var a = ag::constant(random_matrix(d, 1, rng, 2.0));
    const ag::Matrix w = span_attention(ag::constant(xm), p, q, a).value();
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
    CHECK((w.array() >= 0.0).all());
    const ag::Matrix out = pool_span(ag::constant(xm), p, q, a).value();
    const auto span = xm.middleRows(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q - p + 1));
    for (Eigen::Index j = 0; j < d; ++j) {
      CHECK(out(0, j) >= span.col(j).minCoeff() - 1e-12);
      CHECK(out(0, j) <= span.col(j).maxCoeff() + 1e-12);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r >= static_cast<Eigen::Index>(p) && r <= static_cast<Eigen::Index>(q)) continue;
      xm.row(r) = random_matrix(1, d, rng, 100.0);
    }
    CHECK(pool_span(ag::constant(xm), p, q, a).value() == out);
  }
}

TEST_CASE("scoring and fusion match explicit formulas") {
  const ag::Matrix pooled{{2.0, 5.0, 7.0}};
  const ag::Matrix w{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  const ag::Matrix s = score_subtask(ag::constant(pooled), ag::constant(w), ag::constant(ag::Matrix::Zero(1, 2))).value();
  CHECK(s == ag::Matrix{{2.0, 5.0}});
  CHECK_THROWS_AS(score_subtask(ag::constant(pooled), ag::constant(ag::Matrix::Ones(2, 2)),
                                ag::constant(ag::Matrix::Zero(1, 2))),
                  ShapeError);

  ParameterStore store;
  const Mlp fusion = Mlp::create(store, "fusion", 2, 4, 2, Activation::leaky_relu, 0.1, 0.0, 3);
  Rng rng(43);
  for (int i = 0; i < 50; ++i) {
    const ag::Matrix h = random_matrix(1, 2, rng);
    const ag::Matrix hc = random_matrix(1, 2, rng, 3.0);
    const ag::Matrix w1 = store.at("fusion.hidden.weight").value();
    const ag::Matrix b1 = store.at("fusion.hidden.bias").value();
    const ag::Matrix w2 = store.at("fusion.output.weight").value();
    const ag::Matrix b2 = store.at("fusion.output.bias").value();
    const ag::Matrix z = (hc * w1 + b1).unaryExpr([](double v) { return v > 0 ? v : 0.1 * v; });
    const ag::Matrix expected = h + z * w2 + b2;
    const ag::Matrix got = fuse_event_logits(ag::constant(h), ag::constant(hc), fusion, nullptr).value();
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  zero_prefix(store, "fusion.");
  const ag::Matrix h{{0.2, -0.1}};
  CHECK(fuse_event_logits(ag::constant(h), ag::constant(ag::Matrix{{9.0, -4.0}}), fusion, nullptr).value() == h);
}

TEST_CASE("forward produces one logit pair per slot subtask") {
  SlotModel m = make_model();
  CHECK(m.subtasks() == std::vector<std::string>{"who", "age", "when", "where", "duration", "close-contact"});
  const std::string text = "my mom tested negative in dallas";
  const auto seq = insert_markers({"1", text}, {0, 6, "my mom"}, m.encoder().tokenizer());
  const SlotOutputs out = m.forward(seq);
  REQUIRE(out.logits.size() == 6);
  for (const auto& l : out.logits) {
    CHECK(l.rows() == 1);
    CHECK(l.cols() == 2);
  }
  CHECK(out.h_ces.cols() == 2);
  const auto probs = m.positive_probabilities(seq);
  REQUIRE(probs.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    const ag::Matrix z = out.logits[k].value();
    CHECK(probs[k] == doctest::Approx(std::exp(z(0, 1)) / (std::exp(z(0, 0)) + std::exp(z(0, 1)))));
  }

  MarkedSequence skipped = seq;
  skipped.skipped = true;
  CHECK_THROWS_AS(m.forward(skipped), PreconditionError);
  HiddenSequence bare = m.encoder().encode(std::vector<std::string>{"mom"});
  CHECK_THROWS_AS(m.forward(bare), PreconditionError);
}

TEST_CASE("slot loss oracles") {
  for (int n = 1; n <= 6; ++n) {
    SlotOutputs out;
    out.h_ces = ag::constant(ag::Matrix::Zero(1, 2));
    std::vector<std::optional<int>> labels;
    for (int k = 0; k < n; ++k) {
      out.logits.push_back(ag::constant(ag::Matrix::Zero(1, 2)));
      labels.push_back(k % 2);
    }
    CHECK(std::abs(slot_loss(out, 1, labels, 1.0).scalar() - (n + 1) * std::log(2.0)) < 1e-12);
    CHECK(std::abs(slot_loss(out, 1, labels, 0.0).scalar() - n * std::log(2.0)) < 1e-12);
    labels[0] = std::nullopt;
    CHECK(std::abs(slot_loss(out, 1, labels, 1.0).scalar() - n * std::log(2.0)) < 1e-12);
  }

  SlotOutputs confident;
  confident.h_ces = ag::constant(ag::Matrix{{-20.0, 20.0}});
  confident.logits = {ag::constant(ag::Matrix{{20.0, -20.0}})};
  const std::vector<std::optional<int>> zero = {0};
  CHECK(slot_loss(confident, 1, zero, 1.0).scalar() < 1e-6);

  const std::vector<std::optional<int>> none = {std::nullopt};
  CHECK_THROWS_AS(slot_loss(confident, std::nullopt, none, 1.0), PreconditionError);
  const std::vector<std::optional<int>> bad = {2};
  CHECK_THROWS_AS(slot_loss(confident, 1, bad, 1.0), DataError);
}

TEST_CASE("slot head gradients match finite differences") {
  SlotModel m = make_model();
  Rng rng(47);
  const HiddenSequence h = random_hidden(rng, 8, 32, 2, 5);
  const std::vector<std::optional<int>> labels = {1, 0, std::nullopt, 1, 0, 1};
  auto loss = [&] { return slot_loss(m.forward(h), 1, labels, 1.0); };
  CHECK(gradient_error(m.head(0).attention, loss) < 1e-5);
  CHECK(gradient_error(m.head(3).weight, loss) < 1e-5);
  CHECK(gradient_error(m.head(4).bias, loss) < 1e-5);
  CHECK(gradient_error(m.parameters().at("fusion.hidden.weight"), loss) < 1e-5);
  CHECK(gradient_error(m.parameters().at("fusion.output.bias"), loss) < 1e-5);
  CHECK(gradient_error(m.parameters().at("event.hidden.weight"), loss) < 1e-5);
}

TEST_CASE("one fusion MLP is shared by every subtask") {
  SlotModel m = make_model();
  int fusion_params = 0;
  for (const auto& [name, var] : m.parameters().entries()) fusion_params += name.rfind("fusion.", 0) == 0;
  CHECK(fusion_params == 4);

  // Every subtask's logits depend on the same fusion weights.
  Rng rng(53);
  const HiddenSequence h = random_hidden(rng, 6, 32, 1, 3);
  const auto before = m.forward(h);
  ag::Var(m.parameters().at("fusion.output.bias")).mutable_value()(0, 0) += 1.0;
  const auto after = m.forward(h);
  for (std::size_t k = 0; k < before.logits.size(); ++k) {
    CHECK(after.logits[k].value()(0, 0) == doctest::Approx(before.logits[k].value()(0, 0) + 1.0));
  }
}

TEST_CASE("ablation wiring") {
  Rng rng(59);
  const HiddenSequence h = random_hidden(rng, 7, 32, 2, 4);

  SlotModelConfig no_pool = quiet();
  no_pool.use_pooling = false;
  no_pool.use_ces = false;
  SlotModel wo_pool = make_model(no_pool);
  const auto out = wo_pool.forward(h);
  const ag::Matrix start = h.vectors.value().row(2);
  for (std::size_t k = 0; k < out.logits.size(); ++k) {
    const auto& head = wo_pool.head(k);
    const ag::Matrix expected = start * head.weight.value().transpose() + head.bias.value();
    CHECK(out.logits[k].value() == expected);
  }

  SlotModelConfig no_ces = quiet();
  no_ces.use_ces = false;
  SlotModel full = make_model();
  SlotModel plain = make_model(no_ces);
  CHECK(plain.fusion() == nullptr);
  const auto a = full.forward(h);
  const auto b = plain.forward(h);
  CHECK_FALSE(b.h_ces.valid());
  bool differs = false;
  for (std::size_t k = 0; k < a.logits.size(); ++k) differs |= a.logits[k].value() != b.logits[k].value();
  CHECK(differs);
  zero_prefix(full.parameters(), "fusion.");
  const auto z = full.forward(h);
  for (std::size_t k = 0; k < z.logits.size(); ++k) CHECK(z.logits[k].value() == b.logits[k].value());
}

TEST_CASE("event gating zeroes probabilities when enabled") {
  SlotModelConfig gated = quiet();
  gated.gate_on_event = true;
  SlotModel m = make_model(gated);
  ag::Var event_bias = m.parameters().at("event.output.bias");
  auto& bias = event_bias.mutable_value();
  bias(0, 0) = 100.0;
  bias(0, 1) = -100.0;
  const auto seq = insert_markers({"1", "my mom tested negative"}, {0, 6, "my mom"}, m.encoder().tokenizer());
  for (double p : m.positive_probabilities(seq)) CHECK(p == 0.0);
}
