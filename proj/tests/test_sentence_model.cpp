#include "doctest.h"
#include "support.hpp"

#include <cmath>

#include "covex/error.hpp"
#include "covex/sentence_model.hpp"

using namespace covex;
using test::gradient_error;
using test::random_matrix;

namespace {

const std::vector<std::string> kTexts = {"my wife tested positive today", "the cure does not work at all"};

SentenceModelConfig quiet(SentenceModelConfig c = {}) {
  c.dropout = 0.0;
  return c;
}

SentenceModel make_model(SentenceModelConfig config = quiet(), EventType event = EventType::tested_positive,
                         std::uint64_t seed = 13) {
  return SentenceModel(test::tiny_encoder(kTexts, seed), event, SubtaskRegistry::standard(), config, seed);
}

HiddenSequence random_hidden(Rng& rng, Eigen::Index n, Eigen::Index d) {
  HiddenSequence h;
  h.vectors = ag::constant(random_matrix(n, d, rng));
  h.sep_index = static_cast<std::size_t>(n - 1);
  return h;
}

}  // namespace

TEST_CASE("sequence pooling matches the hand-computed softmax") {
  const ag::Matrix x{{1.0, 2.0}, {0.0, -1.0}, {3.0, 0.5}};
  const ag::Var a = ag::constant(ag::Matrix{{1.0}, {0.0}});
  const ag::Var c = ag::constant(ag::Matrix{{0.5}});
  const double s0 = std::exp(1.5), s1 = std::exp(0.5), s2 = std::exp(3.5);
  const double z = s0 + s1 + s2;
  const ag::Matrix expected = (s0 * x.row(0) + s1 * x.row(1) + s2 * x.row(2)) / z;
  CHECK((pool_sequence(ag::constant(x), a, c).value() - expected).cwiseAbs().maxCoeff() < 1e-12);

  const ag::Var zero = ag::constant(ag::Matrix::Zero(2, 1));
  CHECK((pool_sequence(ag::constant(x), zero, c).value() - x.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  const ag::Matrix one = x.topRows(1);
  CHECK(pool_sequence(ag::constant(one), a, c).value() == one);
  CHECK_THROWS_AS(pool_sequence(ag::constant(x), ag::constant(ag::Matrix::Ones(3, 1)), c), ShapeError);
}

TEST_CASE("sequence pooling is convex and shift invariant in c") {
  Rng rng(61);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(12));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(6));
    const ag::Var x = ag::constant(random_matrix(n, d, rng, 3.0));
    const ag::Var a = ag::constant(random_matrix(d, 1, rng));
    const double c0 = rng.normal();
    const ag::Matrix w = sequence_attention(x, a, ag::constant(ag::Matrix{{c0}})).value();
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
    const ag::Matrix out = pool_sequence(x, a, ag::constant(ag::Matrix{{c0}})).value();
    const ag::Matrix shifted = pool_sequence(x, a, ag::constant(ag::Matrix{{c0 + 10.0 * rng.normal()}})).value();
    CHECK((out - shifted).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index j = 0; j < d; ++j) {
      CHECK(out(0, j) >= x.value().col(j).minCoeff() - 1e-12);
      CHECK(out(0, j) <= x.value().col(j).maxCoeff() + 1e-12);
    }
  }
}

TEST_CASE("classification equals concatenate-then-multiply") {
  Rng rng(67);
  for (int i = 0; i < 50; ++i) {
    const ag::Matrix pooled = random_matrix(1, 8, rng);
    const ag::Matrix ev = random_matrix(1, 5, rng);
    const ag::Matrix wp = random_matrix(8, 3, rng);
    const ag::Matrix we = random_matrix(5, 3, rng);
    const ag::Matrix b = random_matrix(1, 3, rng);
    ag::Matrix cat(1, 13), w(13, 3);
    cat << pooled, ev;
    w << wp, we;
    const ag::Matrix expected = cat * w + b;
    const ag::Matrix got = classify_sentence(ag::constant(pooled), ag::constant(ev), ag::constant(wp),
                                             ag::constant(we), ag::constant(b))
                               .value();
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  const ag::Matrix b{{0.1, -0.2, 0.3}};
  CHECK(classify_sentence(ag::constant(ag::Matrix::Ones(1, 4)), ag::Var(), ag::constant(ag::Matrix::Zero(4, 3)),
                          ag::Var(), ag::constant(b))
            .value() == b);
  CHECK_THROWS_AS(classify_sentence(ag::constant(ag::Matrix::Ones(1, 4)), ag::constant(ag::Matrix::Ones(1, 2)),
                                    ag::constant(ag::Matrix::Zero(4, 3)), ag::constant(ag::Matrix::Zero(5, 3)),
                                    ag::constant(b)),
                  ShapeError);
}

TEST_CASE("forward yields label-set-sized logits") {
  SentenceModel m = make_model();
  CHECK(m.subtasks() == std::vector<std::string>{"gender", "relation"});
  const auto toks = m.prepare("My WIFE tested positive!! http://t.co/x");
  CHECK(toks == std::vector<std::string>{"my", "wife", "tested", "positive"});
  const SentenceOutputs out = m.forward(toks);
  REQUIRE(out.logits.size() == 2);
  CHECK(out.logits[0].cols() == 3);
  CHECK(out.logits[1].cols() == 2);
  CHECK(out.h_prime_ces.cols() == 50);
  CHECK(out.v_ces.cols() == 2);
  const auto labels = m.predict(toks);
  REQUIRE(labels.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    Eigen::Index best = 0;
    out.logits[k].value().row(0).maxCoeff(&best);
    CHECK(labels[k] == best);
  }

  CHECK(make_model(quiet(), EventType::cure).forward(toks).logits[0].cols() == 4);
}

TEST_CASE("sentence loss oracles") {
  SentenceOutputs out;
  out.subtasks = {"a", "b"};
  out.v_ces = ag::constant(ag::Matrix::Zero(1, 2));
  out.logits = {ag::constant(ag::Matrix::Zero(1, 2)), ag::constant(ag::Matrix::Zero(1, 4))};
  const std::vector<std::optional<int>> labels = {1, 3};
  const double ln2 = std::log(2.0), ln4 = std::log(4.0);
  CHECK(std::abs(sentence_loss(out, 0, labels, 1.0).scalar() - (ln2 + ln2 + ln4)) < 1e-12);
  CHECK(std::abs(sentence_loss(out, 0, labels, 0.0).scalar() - (ln2 + ln4)) < 1e-12);
  const std::vector<std::optional<int>> partial = {std::nullopt, 0};
  CHECK(std::abs(sentence_loss(out, std::nullopt, partial, 1.0).scalar() - ln4) < 1e-12);

  const std::vector<std::optional<int>> none = {std::nullopt, std::nullopt};
  CHECK_THROWS_AS(sentence_loss(out, std::nullopt, none, 1.0), PreconditionError);
  const std::vector<std::optional<int>> bad = {2, 0};
  CHECK_THROWS_AS(sentence_loss(out, 0, bad, 1.0), DataError);

  SentenceOutputs sure;
  sure.subtasks = {"a"};
  sure.v_ces = ag::constant(ag::Matrix{{20.0, -20.0}});
  sure.logits = {ag::constant(ag::Matrix{{-20.0, 20.0, -20.0}})};
  const std::vector<std::optional<int>> one = {1};
  CHECK(sentence_loss(sure, 0, one, 1.0).scalar() < 1e-6);
}

TEST_CASE("sentence head gradients match finite differences") {
  SentenceModel m = make_model();
  Rng rng(71);
  const HiddenSequence h = random_hidden(rng, 7, 32);
  const std::vector<std::optional<int>> labels = {2, 0};
  auto loss = [&] { return sentence_loss(m.forward(h), 1, labels, 1.0); };
  CHECK(gradient_error(m.head(0).attention, loss) < 1e-5);
  CHECK(gradient_error(m.head(1).attention_bias, loss) < 1e-5);
  CHECK(gradient_error(m.head(0).weight, loss) < 1e-5);
  CHECK(gradient_error(m.head(1).event_weight, loss) < 1e-5);
  CHECK(gradient_error(m.head(0).bias, loss) < 1e-5);
  CHECK(gradient_error(m.parameters().at("event.hidden.weight"), loss) < 1e-5);
}

TEST_CASE("ablation wiring") {
  Rng rng(73);
  const HiddenSequence h = random_hidden(rng, 6, 32);

  SentenceModelConfig no_ces = quiet();
  no_ces.use_ces = false;
  SentenceModel full = make_model();
  SentenceModel plain = make_model(no_ces);
  CHECK(plain.event_head() == nullptr);
  CHECK_FALSE(plain.head(0).event_weight.valid());
  const auto a = full.forward(h);
  const auto b = plain.forward(h);
  CHECK(a.logits[0].value() != b.logits[0].value());
  for (std::size_t k = 0; k < full.subtasks().size(); ++k) ag::Var(full.head(k).event_weight).mutable_value().setZero();
  const auto z = full.forward(h);
  for (std::size_t k = 0; k < z.logits.size(); ++k) CHECK(z.logits[k].value() == b.logits[k].value());

  // CLS mode: no pooling, no event feature.
  SentenceModelConfig cls = quiet();
  cls.use_pooling = false;
  cls.use_ces = false;
  SentenceModel cm = make_model(cls);
  const auto out = cm.forward(h);
  for (std::size_t k = 0; k < out.logits.size(); ++k) {
    const ag::Matrix expected = h.vectors.value().row(0) * cm.head(k).weight.value() + cm.head(k).bias.value();
    CHECK(out.logits[k].value() == expected);
  }
}
