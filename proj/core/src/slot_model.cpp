#include "covex/slot_model.hpp"

#include <cmath>

#include "covex/error.hpp"

namespace covex {

ag::Var span_attention(const ag::Var& hidden, std::size_t p, std::size_t q, const ag::Var& a) {
  if (p > q) throw PreconditionError("span start " + std::to_string(p) + " after end " + std::to_string(q));
  if (q >= static_cast<std::size_t>(hidden.rows())) {
    throw PreconditionError("span end " + std::to_string(q) + " outside sequence of " +
                            std::to_string(hidden.rows()));
  }
  if (a.rows() != hidden.cols() || a.cols() != 1) throw ShapeError("attention vector must be d x 1");
  const ag::Var span = ag::slice_rows(hidden, static_cast<Eigen::Index>(p),
                                      static_cast<Eigen::Index>(q - p + 1));
  return ag::softmax_rows(ag::transpose(ag::matmul(span, a)));
}

ag::Var pool_span(const ag::Var& hidden, std::size_t p, std::size_t q, const ag::Var& a) {
  const ag::Var weights = span_attention(hidden, p, q, a);
  const ag::Var span = ag::slice_rows(hidden, static_cast<Eigen::Index>(p),
                                      static_cast<Eigen::Index>(q - p + 1));
  return ag::matmul(weights, span);
}

ag::Var score_subtask(const ag::Var& pooled, const ag::Var& weight, const ag::Var& bias) {
  if (pooled.rows() != 1 || weight.cols() != pooled.cols() || weight.rows() != bias.cols() ||
      bias.rows() != 1) {
    throw ShapeError("score_subtask: pooled 1x" + std::to_string(pooled.cols()) + " vs weight " +
                     std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()));
  }
  return ag::add_broadcast(ag::matmul_nt(pooled, weight), bias);
}

ag::Var fuse_event_logits(const ag::Var& h, const ag::Var& h_ces, const Mlp& fusion,
                          Rng* dropout_rng) {
  return ag::add(h, fusion.forward(h_ces, dropout_rng).output);
}

SlotModel::SlotModel(Encoder encoder, EventType event, const SubtaskRegistry& registry,
                     SlotModelConfig config, std::uint64_t seed)
    : encoder_(std::move(encoder)), event_(event), config_(config) {
  encoder_.register_special_tokens();
  const auto specs = registry.subtasks(event, SubtaskKind::slot_filling);
  if (specs.empty()) {
    throw ModelError("event " + std::string(to_string(event)) + " has no slot-filling subtasks");
  }
  const int d = encoder_.hidden_dim();
  store_.adopt("", encoder_.parameters());
  for (const SubtaskSpec* spec : specs) {
    const std::string p = "slot." + spec->id + ".";
    Rng a_rng = Rng::derive(seed, p + "attention");
    Rng w_rng = Rng::derive(seed, p + "classifier.weight");
    Rng b_rng = Rng::derive(seed, p + "classifier.bias");
    Head h;
    h.attention = store_.add(p + "attention", init::fan_in_uniform(d, 1, d, a_rng));
    h.weight = store_.add(p + "classifier.weight", init::fan_in_uniform(2, d, d, w_rng));
    h.bias = store_.add(p + "classifier.bias", init::fan_in_uniform(1, 2, d, b_rng));
    subtasks_.push_back(spec->id);
    heads_.push_back(h);
  }
  if (config_.use_ces) {
    event_head_ = Mlp::create(store_, "event", d, config_.event_hidden, 2, Activation::tanh, 0.0,
                              config_.dropout, seed);
    fusion_ = Mlp::create(store_, "fusion", 2, config_.fusion_hidden, 2, Activation::leaky_relu,
                          config_.fusion_slope, config_.dropout, seed);
  }
}

SlotOutputs SlotModel::forward(const MarkedSequence& seq, Rng* dropout_rng) const {
  if (seq.skipped) throw PreconditionError("tweet " + seq.tweet_id + ": sequence was skipped");
  HiddenSequence hidden = encoder_.encode(seq.tokens, dropout_rng);
  // Offsets from insertion, not a token search: the text may itself contain a marker string.
  hidden.marker_indices = std::make_pair(seq.p + 1, seq.q + 1);
  return forward(hidden, dropout_rng);
}

SlotOutputs SlotModel::forward(const HiddenSequence& hidden, Rng* dropout_rng) const {
  if (!hidden.marker_indices) throw PreconditionError("slot model input has no entity markers");
  const auto [p, q] = *hidden.marker_indices;
  SlotOutputs out;
  out.subtasks = subtasks_;
  if (config_.use_ces) {
    const ag::Var cls = ag::slice_rows(hidden.vectors, static_cast<Eigen::Index>(hidden.cls_index), 1);
    out.h_ces = event_head_.forward(cls, dropout_rng).output;
  }
  const ag::Var start = ag::slice_rows(hidden.vectors, static_cast<Eigen::Index>(p), 1);
  for (const Head& h : heads_) {
    const ag::Var pooled = config_.use_pooling ? pool_span(hidden.vectors, p, q, h.attention) : start;
    ag::Var logits = score_subtask(pooled, h.weight, h.bias);
    if (config_.use_ces) logits = fuse_event_logits(logits, out.h_ces, fusion_, dropout_rng);
    out.logits.push_back(logits);
  }
  return out;
}

std::vector<double> SlotModel::positive_probabilities(const MarkedSequence& seq) const {
  ag::NoGradGuard no_grad;
  const SlotOutputs out = forward(seq, nullptr);
  bool gated = false;
  if (config_.gate_on_event && out.h_ces.valid()) gated = out.h_ces.value()(0, 1) < out.h_ces.value()(0, 0);
  std::vector<double> probs;
  probs.reserve(out.logits.size());
  for (const ag::Var& l : out.logits) {
    const double z0 = l.value()(0, 0);
    const double z1 = l.value()(0, 1);
    // softmax(z)[1] in the overflow-safe logistic form.
    probs.push_back(gated ? 0.0 : 1.0 / (1.0 + std::exp(z0 - z1)));
  }
  return probs;
}

ag::Var slot_loss(const SlotOutputs& outputs, std::optional<int> y_ces,
                  std::span<const std::optional<int>> labels, double lambda1) {
  if (labels.size() != outputs.logits.size()) {
    throw ShapeError("slot_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(outputs.logits.size()) + " subtasks");
  }
  if (lambda1 < 0.0) throw ConfigError("lambda1 must be non-negative");
  std::vector<ag::Var> terms;
  if (y_ces && outputs.h_ces.valid()) {
    terms.push_back(ag::scale(ag::cross_entropy(outputs.h_ces, *y_ces), lambda1));
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!labels[k]) continue;
    if (*labels[k] != 0 && *labels[k] != 1) throw DataError("slot label must be 0 or 1");
    terms.push_back(ag::cross_entropy(outputs.logits[k], *labels[k]));
  }
  if (terms.empty()) throw PreconditionError("slot_loss: every term is absent");
  return ag::sum(terms);
}

}  // namespace covex
