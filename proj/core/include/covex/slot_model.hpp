#ifndef COVEX_SLOT_MODEL_HPP
#define COVEX_SLOT_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covex/autograd.hpp"
#include "covex/corpus.hpp"
#include "covex/encoder.hpp"
#include "covex/nn.hpp"
#include "covex/preprocess.hpp"

namespace covex {

struct SlotModelConfig {
  bool use_pooling = true;  // false: classify from the ENTITY_START vector
  bool use_ces = true;      // event-prediction head and logit fusion
  // Inference only: zero every slot probability when the event head says the
  // tweet is not about the event.
  bool gate_on_event = false;
  int event_hidden = 50;
  int fusion_hidden = 4;
  double fusion_slope = 0.1;
  double dropout = 0.1;
  double lambda1 = 1.0;
};

// Softmax weights of x_i . a over rows p..q inclusive (1 x (q - p + 1)).
ag::Var span_attention(const ag::Var& hidden, std::size_t p, std::size_t q, const ag::Var& a);
// Attention-weighted sum of rows p..q (1 x d). `a` is d x 1.
ag::Var pool_span(const ag::Var& hidden, std::size_t p, std::size_t q, const ag::Var& a);
// pooled W^T + b with W stored 2 x d and b 1 x 2.
ag::Var score_subtask(const ag::Var& pooled, const ag::Var& weight, const ag::Var& bias);
// h + fusion(h_ces).
ag::Var fuse_event_logits(const ag::Var& h, const ag::Var& h_ces, const Mlp& fusion,
                          Rng* dropout_rng);

struct SlotOutputs {
  ag::Var h_ces;                  // invalid without the event head
  std::vector<std::string> subtasks;
  std::vector<ag::Var> logits;    // h_f per subtask, 1 x 2
};

// One model per event: a shared encoder, an event head on [CLS], a single
// fusion MLP, and attention + classifier heads per slot subtask. Parameter
// names: slot.<subtask>.attention, slot.<subtask>.classifier.{weight,bias},
// event.{hidden,output}.*, fusion.{hidden,output}.*, encoder.*.
class SlotModel {
 public:
  SlotModel(Encoder encoder, EventType event, const SubtaskRegistry& registry,
            SlotModelConfig config, std::uint64_t seed);

  SlotOutputs forward(const MarkedSequence& seq, Rng* dropout_rng = nullptr) const;
  SlotOutputs forward(const HiddenSequence& hidden, Rng* dropout_rng = nullptr) const;
  // Positive-class probability per subtask, inference mode.
  std::vector<double> positive_probabilities(const MarkedSequence& seq) const;

  EventType event() const { return event_; }
  const std::vector<std::string>& subtasks() const { return subtasks_; }
  const SlotModelConfig& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const Mlp* fusion() const { return config_.use_ces ? &fusion_ : nullptr; }
  const Mlp* event_head() const { return config_.use_ces ? &event_head_ : nullptr; }

  struct Head {
    ag::Var attention;
    ag::Var weight;
    ag::Var bias;
  };
  const Head& head(std::size_t subtask) const { return heads_.at(subtask); }

 private:
  Encoder encoder_;
  EventType event_;
  SlotModelConfig config_;
  std::vector<std::string> subtasks_;
  std::vector<Head> heads_;
  Mlp event_head_;
  Mlp fusion_;
  ParameterStore store_;
};

// lambda1 CE(h_ces, y_ces) + sum over present labels of CE(h_f, y). Absent
// labels (and the event term when y_ces or h_ces is missing) are skipped.
ag::Var slot_loss(const SlotOutputs& outputs, std::optional<int> y_ces,
                  std::span<const std::optional<int>> labels, double lambda1);

}  // namespace covex

#endif  // COVEX_SLOT_MODEL_HPP
