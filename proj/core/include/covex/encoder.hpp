#ifndef COVEX_ENCODER_HPP
#define COVEX_ENCODER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "covex/archive.hpp"
#include "covex/autograd.hpp"
#include "covex/nn.hpp"
#include "covex/tokenizer.hpp"

namespace covex {

enum class EncoderVariant { pretrained_domain, pretrained_large, pretrained_base, tiny_test };

std::string_view to_string(EncoderVariant variant);
// Throws ConfigError for unknown names.
EncoderVariant parse_encoder_variant(std::string_view name);

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::tiny_test;
  // Pretrained variants: weights live in <cache_dir>/<model_id>/.
  std::string model_id;
  std::filesystem::path cache_dir;

  int hidden = 32;
  int layers = 2;
  int heads = 2;
  int intermediate = 64;
  int max_positions = 130;  // includes [CLS] and [SEP]
  int type_vocab = 2;
  double layer_norm_eps = 1e-12;
  double dropout = 0.1;
  bool lower_case = true;
  std::uint64_t seed = 0;

  // Longest token list encode() accepts.
  std::size_t max_tokens() const { return static_cast<std::size_t>(max_positions - 2); }
};

// One row per position: [CLS] tokens... [SEP].
struct HiddenSequence {
  ag::Var vectors;
  std::size_t cls_index = 0;
  std::size_t sep_index = 0;
  // Rows of ENTITY_START / ENTITY_END when the input carried markers.
  std::optional<std::pair<std::size_t, std::size_t>> marker_indices;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
};

// BERT-style post-LayerNorm transformer encoder. Parameters are named like
// the Hugging Face BertModel tensors (see tools/convert_hf_weights.py) with
// Linear weights stored [in x out].
class Encoder {
 public:
  // Randomly initialized (N(0, 0.02) embeddings) for the tiny_test variant;
  // also used to rebuild any variant before loading a checkpoint.
  static Encoder create(const EncoderConfig& config, Vocabulary vocab);
  // Reads config.json, vocab.txt and weights.covex from <cache_dir>/<model_id>.
  static Encoder load_pretrained(const EncoderConfig& config);
  void save_pretrained(const std::filesystem::path& dir) const;

  Encoder(Encoder&&) = default;
  Encoder& operator=(Encoder&&) = default;
  Encoder(const Encoder&) = delete;
  Encoder& operator=(const Encoder&) = delete;

  // Adds ENTITY_START / ENTITY_END as never-split tokens. New embedding rows
  // are the mean of the existing rows plus N(0, 0.01) noise. Idempotent.
  void register_special_tokens();

  // `tokens` excludes [CLS]/[SEP]. Passing a dropout rng selects training mode.
  HiddenSequence encode(std::span<const std::string> tokens, Rng* dropout_rng = nullptr) const;
  HiddenSequence encode_ids(std::span<const int> ids, Rng* dropout_rng = nullptr) const;

  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }
  const EncoderConfig& config() const { return config_; }
  int hidden_dim() const { return config_.hidden; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }

 private:
  struct Layer {
    Linear query, key, value, attention_output;
    ag::Var attention_ln_gamma, attention_ln_beta;
    Linear intermediate, output;
    ag::Var ffn_ln_gamma, ffn_ln_beta;
  };

  Encoder(EncoderConfig config, WordPieceTokenizer tokenizer);
  void build();

  EncoderConfig config_;
  WordPieceTokenizer tokenizer_;
  ParameterStore store_;
  ag::Var word_embeddings_;
  ag::Var position_embeddings_;
  ag::Var type_embeddings_;
  ag::Var embedding_ln_gamma_;
  ag::Var embedding_ln_beta_;
  std::vector<Layer> layers_;
};

// Copies archive tensors into same-named parameters; every parameter must be
// present with a matching shape (ModelError otherwise).
void load_parameters(ParameterStore& store, const TensorArchive& archive);
void store_parameters(const ParameterStore& store, TensorArchive& archive);

}  // namespace covex

#endif  // COVEX_ENCODER_HPP
