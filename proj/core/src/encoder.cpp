#include "covex/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "covex/error.hpp"
#include "covex/preprocess.hpp"
#include "json.hpp"

namespace covex {

namespace {

constexpr const char* kWeightsFile = "weights.covex";

struct VariantName {
  EncoderVariant variant;
  std::string_view name;
};
constexpr VariantName kVariantNames[] = {
    {EncoderVariant::pretrained_domain, "pretrained_domain"},
    {EncoderVariant::pretrained_large, "pretrained_large"},
    {EncoderVariant::pretrained_base, "pretrained_base"},
    {EncoderVariant::tiny_test, "tiny_test"},
};

ag::Var ones_row(ParameterStore& store, const std::string& name, int n) {
  return store.add(name, ag::Matrix::Ones(1, n));
}
ag::Var zeros_row(ParameterStore& store, const std::string& name, int n) {
  return store.add(name, ag::Matrix::Zero(1, n));
}

}  // namespace

std::string_view to_string(EncoderVariant variant) {
  for (const auto& v : kVariantNames) {
    if (v.variant == variant) return v.name;
  }
  return "?";
}

EncoderVariant parse_encoder_variant(std::string_view name) {
  for (const auto& v : kVariantNames) {
    if (v.name == name) return v.variant;
  }
  throw ConfigError("unknown encoder variant '" + std::string(name) +
                    "' (expected pretrained_domain, pretrained_large, pretrained_base or tiny_test)");
}

Encoder::Encoder(EncoderConfig config, WordPieceTokenizer tokenizer)
    : config_(std::move(config)), tokenizer_(std::move(tokenizer)) {
  if (config_.hidden <= 0 || config_.layers < 0 || config_.heads <= 0 ||
      config_.hidden % config_.heads != 0 || config_.intermediate <= 0 ||
      config_.max_positions < 2 || config_.type_vocab <= 0) {
    throw ConfigError("invalid encoder dimensions");
  }
}

void Encoder::build() {
  const int d = config_.hidden;
  const auto vocab = static_cast<Eigen::Index>(tokenizer_.vocabulary().size());
  const std::uint64_t seed = config_.seed;
  auto normal_table = [&](const std::string& name, Eigen::Index rows) {
    Rng rng = Rng::derive(seed, name);
    return store_.add(name, init::normal(rows, d, 0.02, rng));
  };
  word_embeddings_ = normal_table("encoder.embeddings.word_embeddings", vocab);
  position_embeddings_ = normal_table("encoder.embeddings.position_embeddings", config_.max_positions);
  type_embeddings_ = normal_table("encoder.embeddings.token_type_embeddings", config_.type_vocab);
  embedding_ln_gamma_ = ones_row(store_, "encoder.embeddings.layer_norm.gamma", d);
  embedding_ln_beta_ = zeros_row(store_, "encoder.embeddings.layer_norm.beta", d);

  for (int i = 0; i < config_.layers; ++i) {
    const std::string p = "encoder.layer." + std::to_string(i) + ".";
    Layer l;
    l.query = Linear::create(store_, p + "attention.query", d, d, seed);
    l.key = Linear::create(store_, p + "attention.key", d, d, seed);
    l.value = Linear::create(store_, p + "attention.value", d, d, seed);
    l.attention_output = Linear::create(store_, p + "attention.output", d, d, seed);
    l.attention_ln_gamma = ones_row(store_, p + "attention.layer_norm.gamma", d);
    l.attention_ln_beta = zeros_row(store_, p + "attention.layer_norm.beta", d);
    l.intermediate = Linear::create(store_, p + "ffn.intermediate", d, config_.intermediate, seed);
    l.output = Linear::create(store_, p + "ffn.output", config_.intermediate, d, seed);
    l.ffn_ln_gamma = ones_row(store_, p + "ffn.layer_norm.gamma", d);
    l.ffn_ln_beta = zeros_row(store_, p + "ffn.layer_norm.beta", d);
    layers_.push_back(std::move(l));
  }
}

Encoder Encoder::create(const EncoderConfig& config, Vocabulary vocab) {
  Encoder enc(config, WordPieceTokenizer(std::move(vocab), config.lower_case));
  enc.build();
  return enc;
}

Encoder Encoder::load_pretrained(const EncoderConfig& config) {
  if (config.model_id.empty()) {
    throw ConfigError("encoder variant " + std::string(to_string(config.variant)) +
                      " needs a model id");
  }
  const std::filesystem::path dir = config.cache_dir / config.model_id;
  std::ifstream in(dir / "config.json");
  if (!in) throw ModelError("cannot open " + (dir / "config.json").string());

  EncoderConfig cfg = config;
  try {
    const auto j = nlohmann::json::parse(in);
    cfg.hidden = j.at("hidden_size").get<int>();
    cfg.layers = j.at("num_hidden_layers").get<int>();
    cfg.heads = j.at("num_attention_heads").get<int>();
    cfg.intermediate = j.at("intermediate_size").get<int>();
    cfg.max_positions = j.at("max_position_embeddings").get<int>();
    cfg.type_vocab = j.value("type_vocab_size", 2);
    cfg.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
    cfg.dropout = j.value("hidden_dropout_prob", config.dropout);
    if (j.contains("do_lower_case")) cfg.lower_case = j.at("do_lower_case").get<bool>();
    if (j.value("hidden_act", std::string("gelu")) != "gelu") {
      throw ModelError(dir.string() + ": only the erf GELU activation is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError((dir / "config.json").string() + ": " + e.what());
  }

  Encoder enc(cfg, WordPieceTokenizer(Vocabulary::load(dir / "vocab.txt"), cfg.lower_case));
  enc.build();
  load_parameters(enc.store_, read_archive(dir / kWeightsFile));
  return enc;
}

void Encoder::save_pretrained(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["hidden_size"] = config_.hidden;
  j["num_hidden_layers"] = config_.layers;
  j["num_attention_heads"] = config_.heads;
  j["intermediate_size"] = config_.intermediate;
  j["max_position_embeddings"] = config_.max_positions;
  j["type_vocab_size"] = config_.type_vocab;
  j["layer_norm_eps"] = config_.layer_norm_eps;
  j["hidden_dropout_prob"] = config_.dropout;
  j["hidden_act"] = "gelu";
  j["do_lower_case"] = config_.lower_case;
  std::ofstream out(dir / "config.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write " + (dir / "config.json").string());
  out << j.dump(2) << '\n';
  tokenizer_.vocabulary().save(dir / "vocab.txt");
  TensorArchive archive;
  store_parameters(store_, archive);
  write_archive(dir / kWeightsFile, archive);
}

void Encoder::register_special_tokens() {
  for (std::string_view marker : {kEntityStart, kEntityEnd}) {
    const std::string token(marker);
    const int id = tokenizer_.add_special_token(token);
    ag::Matrix& table = word_embeddings_.mutable_value();
    if (id < table.rows()) continue;
    const auto old_rows = table.rows();
    const ag::RowVector mean = table.colwise().mean();
    table.conservativeResize(id + 1, Eigen::NoChange);
    Rng rng = Rng::derive(config_.seed, "encoder.embeddings.marker." + token);
    for (Eigen::Index r = old_rows; r <= id; ++r) {
      for (Eigen::Index c = 0; c < table.cols(); ++c) table(r, c) = mean(c) + 0.01 * rng.normal();
    }
  }
}

HiddenSequence Encoder::encode(std::span<const std::string> tokens, Rng* dropout_rng) const {
  std::vector<int> ids = tokenizer_.ids(tokens);
  HiddenSequence out = encode_ids(ids, dropout_rng);
  std::optional<std::size_t> start;
  std::optional<std::size_t> end;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!start && tokens[i] == kEntityStart) start = i + 1;
    if (tokens[i] == kEntityEnd) end = i + 1;
  }
  if (start && end) out.marker_indices = std::make_pair(*start, *end);
  return out;
}

HiddenSequence Encoder::encode_ids(std::span<const int> content, Rng* dropout_rng) const {
  if (content.size() > config_.max_tokens()) {
    throw PreconditionError("encoder input of " + std::to_string(content.size()) +
                            " tokens exceeds the limit of " + std::to_string(config_.max_tokens()));
  }
  const int cls = tokenizer_.id(kClsToken);
  const int sep = tokenizer_.id(kSepToken);
  std::vector<int> ids;
  ids.reserve(content.size() + 2);
  ids.push_back(cls);
  ids.insert(ids.end(), content.begin(), content.end());
  ids.push_back(sep);
  const auto n = static_cast<Eigen::Index>(ids.size());

  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  const std::vector<int> types(ids.size(), 0);

  const double rate = config_.dropout;
  ag::Var x = ag::add(ag::add(ag::gather_rows(word_embeddings_, ids),
                              ag::gather_rows(position_embeddings_, positions)),
                      ag::gather_rows(type_embeddings_, types));
  x = ag::layer_norm_rows(x, embedding_ln_gamma_, embedding_ln_beta_, config_.layer_norm_eps);
  x = ag::dropout(x, rate, dropout_rng);

  const int head_dim = config_.hidden / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (const Layer& l : layers_) {
    const ag::Var q = l.query(x);
    const ag::Var k = l.key(x);
    const ag::Var v = l.value(x);
    std::vector<ag::Var> heads;
    heads.reserve(static_cast<std::size_t>(config_.heads));
    for (int h = 0; h < config_.heads; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * head_dim;
      ag::Var scores = ag::scale(ag::matmul_nt(ag::slice_cols(q, off, head_dim),
                                               ag::slice_cols(k, off, head_dim)),
                                 scale);
      ag::Var probs = ag::dropout(ag::softmax_rows(scores), rate, dropout_rng);
      heads.push_back(ag::matmul(probs, ag::slice_cols(v, off, head_dim)));
    }
    ag::Var attn = ag::dropout(l.attention_output(ag::concat_cols(heads)), rate, dropout_rng);
    x = ag::layer_norm_rows(ag::add(x, attn), l.attention_ln_gamma, l.attention_ln_beta,
                            config_.layer_norm_eps);
    ag::Var ffn = l.output(ag::gelu(l.intermediate(x)));
    ffn = ag::dropout(ffn, rate, dropout_rng);
    x = ag::layer_norm_rows(ag::add(x, ffn), l.ffn_ln_gamma, l.ffn_ln_beta, config_.layer_norm_eps);
  }

  HiddenSequence out;
  out.vectors = x;
  out.cls_index = 0;
  out.sep_index = static_cast<std::size_t>(n - 1);
  return out;
}

void load_parameters(ParameterStore& store, const TensorArchive& archive) {
  for (const auto& [name, var] : store.entries()) {
    const ag::Matrix* m = archive.find(name);
    if (m == nullptr) throw ModelError("archive has no tensor '" + name + "'");
    if (m->rows() != var.rows() || m->cols() != var.cols()) {
      std::ostringstream msg;
      msg << "tensor '" << name << "' is " << m->rows() << "x" << m->cols() << ", expected "
          << var.rows() << "x" << var.cols();
      throw ModelError(msg.str());
    }
    // Handles share nodes with their modules, so writing through a copy is fine.
    ag::Var handle = var;
    handle.mutable_value() = *m;
  }
}

void store_parameters(const ParameterStore& store, TensorArchive& archive) {
  for (const auto& [name, var] : store.entries()) archive.tensors.emplace_back(name, var.value());
}

}  // namespace covex
