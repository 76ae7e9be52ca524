#include "covex/sentence_model.hpp"

#include "covex/error.hpp"
#include "covex/preprocess.hpp"

namespace covex {

ag::Var sequence_attention(const ag::Var& hidden, const ag::Var& a, const ag::Var& c) {
  if (hidden.rows() < 1) throw PreconditionError("empty sequence");
  if (a.rows() != hidden.cols() || a.cols() != 1) throw ShapeError("attention vector must be d x 1");
  if (c.rows() != 1 || c.cols() != 1) throw ShapeError("attention bias must be 1 x 1");
  return ag::softmax_rows(ag::add_broadcast(ag::transpose(ag::matmul(hidden, a)), c));
}

ag::Var pool_sequence(const ag::Var& hidden, const ag::Var& a, const ag::Var& c) {
  return ag::matmul(sequence_attention(hidden, a, c), hidden);
}

ag::Var classify_sentence(const ag::Var& pooled, const ag::Var& event_hidden,
                          const ag::Var& pooled_weight, const ag::Var& event_weight,
                          const ag::Var& bias) {
  if (pooled.rows() != 1 || pooled.cols() != pooled_weight.rows() || bias.rows() != 1 ||
      bias.cols() != pooled_weight.cols()) {
    throw ShapeError("classify_sentence: pooled 1x" + std::to_string(pooled.cols()) +
                     " vs weight " + std::to_string(pooled_weight.rows()) + "x" +
                     std::to_string(pooled_weight.cols()));
  }
  ag::Var logits = ag::matmul(pooled, pooled_weight);
  if (event_hidden.valid() != event_weight.valid()) {
    throw ShapeError("classify_sentence: event feature and event weight must come together");
  }
  if (event_hidden.valid()) {
    if (event_hidden.rows() != 1 || event_hidden.cols() != event_weight.rows() ||
        event_weight.cols() != pooled_weight.cols()) {
      throw ShapeError("classify_sentence: event feature 1x" + std::to_string(event_hidden.cols()) +
                       " vs weight " + std::to_string(event_weight.rows()) + "x" +
                       std::to_string(event_weight.cols()));
    }
    logits = ag::add(logits, ag::matmul(event_hidden, event_weight));
  }
  return ag::add_broadcast(logits, bias);
}

SentenceModel::SentenceModel(Encoder encoder, EventType event, const SubtaskRegistry& registry,
                             SentenceModelConfig config, std::uint64_t seed)
    : encoder_(std::move(encoder)), event_(event), config_(config) {
  const auto specs = registry.subtasks(event, SubtaskKind::sentence_classification);
  if (specs.empty()) {
    throw ModelError("event " + std::string(to_string(event)) + " has no sentence subtasks");
  }
  const int d = encoder_.hidden_dim();
  const int e = config_.event_hidden;
  store_.adopt("", encoder_.parameters());
  for (const SubtaskSpec* spec : specs) {
    const std::string p = "sentence." + spec->id + ".";
    const auto k = static_cast<Eigen::Index>(spec->label_set.size());
    Rng a_rng = Rng::derive(seed, p + "attention");
    Rng c_rng = Rng::derive(seed, p + "attention_bias");
    Rng w_rng = Rng::derive(seed, p + "classifier.weight");
    Rng we_rng = Rng::derive(seed, p + "classifier.event_weight");
    Rng b_rng = Rng::derive(seed, p + "classifier.bias");
    Head h;
    h.attention = store_.add(p + "attention", init::fan_in_uniform(d, 1, d, a_rng));
    h.attention_bias = store_.add(p + "attention_bias", init::fan_in_uniform(1, 1, d, c_rng));
    // Each block is scaled by its own fan-in so that toggling the event
    // feature leaves the pooled block's initial values untouched.
    h.weight = store_.add(p + "classifier.weight", init::fan_in_uniform(d, k, d, w_rng));
    if (config_.use_ces) {
      h.event_weight = store_.add(p + "classifier.event_weight", init::fan_in_uniform(e, k, e, we_rng));
    }
    h.bias = store_.add(p + "classifier.bias", init::fan_in_uniform(1, k, d, b_rng));
    subtasks_.push_back(spec->id);
    label_sets_.push_back(spec->label_set);
    heads_.push_back(h);
  }
  if (config_.use_ces) {
    event_head_ = Mlp::create(store_, "event", d, e, 2, Activation::tanh, 0.0, config_.dropout, seed);
  }
}

std::vector<std::string> SentenceModel::prepare(std::string_view text) const {
  const std::string normalized = normalize_sentence(text);
  std::vector<std::string> tokens;
  for (auto& t : encoder_.tokenizer().tokenize(normalized)) {
    if (tokens.size() == encoder_.config().max_tokens()) break;
    tokens.push_back(std::move(t.text));
  }
  return tokens;
}

SentenceOutputs SentenceModel::forward(std::span<const std::string> tokens, Rng* dropout_rng) const {
  return forward(encoder_.encode(tokens, dropout_rng), dropout_rng);
}

SentenceOutputs SentenceModel::forward(const HiddenSequence& hidden, Rng* dropout_rng) const {
  SentenceOutputs out;
  out.subtasks = subtasks_;
  const ag::Var cls = ag::slice_rows(hidden.vectors, static_cast<Eigen::Index>(hidden.cls_index), 1);
  if (config_.use_ces) {
    const Mlp::Result r = event_head_.forward(cls, dropout_rng);
    out.v_ces = r.output;
    out.h_prime_ces = r.hidden;
  }
  for (const Head& h : heads_) {
    const ag::Var features =
        config_.use_pooling ? pool_sequence(hidden.vectors, h.attention, h.attention_bias) : cls;
    out.logits.push_back(classify_sentence(features, out.h_prime_ces, h.weight, h.event_weight, h.bias));
  }
  return out;
}

std::vector<int> SentenceModel::predict(std::span<const std::string> tokens) const {
  ag::NoGradGuard no_grad;
  const SentenceOutputs out = forward(tokens, nullptr);
  std::vector<int> labels;
  labels.reserve(out.logits.size());
  for (const ag::Var& l : out.logits) {
    Eigen::Index best = 0;
    // First maximum wins, so ties resolve to the earliest label.
    l.value().row(0).maxCoeff(&best);
    labels.push_back(static_cast<int>(best));
  }
  return labels;
}

ag::Var sentence_loss(const SentenceOutputs& outputs, std::optional<int> y_ces,
                      std::span<const std::optional<int>> labels, double lambda2) {
  if (labels.size() != outputs.logits.size()) {
    throw ShapeError("sentence_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(outputs.logits.size()) + " subtasks");
  }
  if (lambda2 < 0.0) throw ConfigError("lambda2 must be non-negative");
  std::vector<ag::Var> terms;
  if (y_ces && outputs.v_ces.valid()) {
    terms.push_back(ag::scale(ag::cross_entropy(outputs.v_ces, *y_ces), lambda2));
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!labels[k]) continue;
    if (*labels[k] < 0 || *labels[k] >= outputs.logits[k].cols()) {
      throw DataError("label index " + std::to_string(*labels[k]) + " outside subtask " +
                      outputs.subtasks[k]);
    }
    terms.push_back(ag::cross_entropy(outputs.logits[k], *labels[k]));
  }
  if (terms.empty()) throw PreconditionError("sentence_loss: every term is absent");
  return ag::sum(terms);
}

}  // namespace covex
