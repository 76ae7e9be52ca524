#ifndef COVEX_SENTENCE_MODEL_HPP
#define COVEX_SENTENCE_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covex/autograd.hpp"
#include "covex/corpus.hpp"
#include "covex/encoder.hpp"
#include "covex/nn.hpp"

namespace covex {

struct SentenceModelConfig {
  bool use_pooling = true;  // false: classify from the [CLS] vector
  bool use_ces = true;      // event head, its hidden state concatenated to the features
  int event_hidden = 50;
  double dropout = 0.1;
  double lambda2 = 1.0;
};

// Softmax over every row of x_i . a + c (1 x n).
ag::Var sequence_attention(const ag::Var& hidden, const ag::Var& a, const ag::Var& c);
// Attention-weighted sum over the whole sequence, [CLS] and [SEP] included.
ag::Var pool_sequence(const ag::Var& hidden, const ag::Var& a, const ag::Var& c);
// [pooled ; h'_ces] W + b. The weight is kept as two blocks, W_pooled (d x k)
// and W_event (50 x k), which is the same affine map as one (d + 50) x k
// matrix. Pass an invalid event_hidden / event_weight to drop that block.
ag::Var classify_sentence(const ag::Var& pooled, const ag::Var& event_hidden,
                          const ag::Var& pooled_weight, const ag::Var& event_weight,
                          const ag::Var& bias);

struct SentenceOutputs {
  ag::Var v_ces;         // event logits, invalid without the event head
  ag::Var h_prime_ces;   // event hidden state (1 x 50)
  std::vector<std::string> subtasks;
  std::vector<ag::Var> logits;  // 1 x k_j per subtask
};

// One model per event. Parameter names: sentence.<subtask>.attention (d x 1),
// sentence.<subtask>.attention_bias (1 x 1), sentence.<subtask>.classifier.
// {weight, event_weight, bias}, event.{hidden,output}.*, encoder.*.
class SentenceModel {
 public:
  SentenceModel(Encoder encoder, EventType event, const SubtaskRegistry& registry,
                SentenceModelConfig config, std::uint64_t seed);

  SentenceOutputs forward(std::span<const std::string> tokens, Rng* dropout_rng = nullptr) const;
  SentenceOutputs forward(const HiddenSequence& hidden, Rng* dropout_rng = nullptr) const;
  // Argmax label index per subtask, inference mode.
  std::vector<int> predict(std::span<const std::string> tokens) const;
  // Encoder tokens for raw tweet text: normalized, tokenized, truncated.
  std::vector<std::string> prepare(std::string_view text) const;

  EventType event() const { return event_; }
  const std::vector<std::string>& subtasks() const { return subtasks_; }
  const std::vector<std::vector<std::string>>& label_sets() const { return label_sets_; }
  const SentenceModelConfig& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const Mlp* event_head() const { return config_.use_ces ? &event_head_ : nullptr; }

  struct Head {
    ag::Var attention;
    ag::Var attention_bias;
    ag::Var weight;
    ag::Var event_weight;  // invalid without the event head
    ag::Var bias;
  };
  const Head& head(std::size_t subtask) const { return heads_.at(subtask); }

 private:
  Encoder encoder_;
  EventType event_;
  SentenceModelConfig config_;
  std::vector<std::string> subtasks_;
  std::vector<std::vector<std::string>> label_sets_;
  std::vector<Head> heads_;
  Mlp event_head_;
  ParameterStore store_;
};

// lambda2 CE(v_ces, y_ces) + sum over present labels of CE(h_f, y).
ag::Var sentence_loss(const SentenceOutputs& outputs, std::optional<int> y_ces,
                      std::span<const std::optional<int>> labels, double lambda2);

}  // namespace covex

#endif  // COVEX_SENTENCE_MODEL_HPP
