#include "doctest.h"
#include "support.hpp"

#include <cmath>

#include "covex/archive.hpp"
#include "covex/encoder.hpp"
#include "covex/error.hpp"
#include "covex/preprocess.hpp"

using namespace covex;

namespace {

const std::vector<std::string> kTexts = {"my mom tested positive for covid in dallas today",
                                         "no tests available at the clinic"};

std::vector<std::string> words(const Encoder& enc, const std::string& s) {
  std::vector<std::string> out;
  for (const Token& t : enc.tokenizer().tokenize(s)) out.push_back(t.text);
  return out;
}

using M = Eigen::MatrixXd;

M P(const Encoder& enc, const std::string& name) { return enc.parameters().at(name).value(); }

M layer_norm(const M& x, const M& g, const M& b, double eps) {
  M y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    for (Eigen::Index j = 0; j < x.cols(); ++j) y(i, j) = (x(i, j) - mu) / std::sqrt(var + eps) * g(0, j) + b(0, j);
  }
  return y;
}

M linear(const Encoder& enc, const std::string& name, const M& x) {
  M y = x * P(enc, name + ".weight");
  y.rowwise() += P(enc, name + ".bias").row(0);
  return y;
}

// Straightforward re-derivation of a post-LN BERT forward pass, written
// without the autograd layer.
M reference_forward(const Encoder& enc, const std::vector<int>& content) {
  const auto& c = enc.config();
  std::vector<int> ids = {enc.tokenizer().id(kClsToken)};
  ids.insert(ids.end(), content.begin(), content.end());
  ids.push_back(enc.tokenizer().id(kSepToken));
  const auto n = static_cast<Eigen::Index>(ids.size());
  const M we = P(enc, "encoder.embeddings.word_embeddings");
  const M pe = P(enc, "encoder.embeddings.position_embeddings");
  const M te = P(enc, "encoder.embeddings.token_type_embeddings");
  M x(n, c.hidden);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = we.row(ids[static_cast<std::size_t>(i)]) + pe.row(i) + te.row(0);
  x = layer_norm(x, P(enc, "encoder.embeddings.layer_norm.gamma"), P(enc, "encoder.embeddings.layer_norm.beta"),
                 c.layer_norm_eps);
  const int dh = c.hidden / c.heads;
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    const M q = linear(enc, p + "attention.query", x);
    const M k = linear(enc, p + "attention.key", x);
    const M v = linear(enc, p + "attention.value", x);
    M ctx(n, c.hidden);
    for (int h = 0; h < c.heads; ++h) {
      M s = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() / std::sqrt(double(dh));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp().matrix();
        s.row(i) /= s.row(i).sum();
      }
      ctx.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
    }
    x = layer_norm(x + linear(enc, p + "attention.output", ctx), P(enc, p + "attention.layer_norm.gamma"),
                   P(enc, p + "attention.layer_norm.beta"), c.layer_norm_eps);
    M inter = linear(enc, p + "ffn.intermediate", x);
    inter = inter.unaryExpr([](double z) { return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0))); });
    x = layer_norm(x + linear(enc, p + "ffn.output", inter), P(enc, p + "ffn.layer_norm.gamma"),
                   P(enc, p + "ffn.layer_norm.beta"), c.layer_norm_eps);
  }
  return x;
}

}  // namespace

TEST_CASE("encoder output has one row per position") {
  Encoder enc = test::tiny_encoder(kTexts);
  const auto toks = words(enc, "mom tested positive in dallas");
  REQUIRE(toks.size() == 5);
  const HiddenSequence h = enc.encode(toks);
  CHECK(h.vectors.rows() == 7);
  CHECK(h.vectors.cols() == 32);
  CHECK(h.cls_index == 0);
  CHECK(h.sep_index == 6);
  CHECK_FALSE(h.marker_indices.has_value());

  const HiddenSequence empty = enc.encode(std::vector<std::string>{});
  CHECK(empty.size() == 2);
}

TEST_CASE("encoder matches an independent forward pass") {
  Encoder enc = test::tiny_encoder(kTexts, 3);
  const std::vector<int> ids = enc.tokenizer().ids(words(enc, "my mom tested positive for covid"));
  ag::NoGradGuard guard;
  const M ours = enc.encode_ids(ids).vectors.value();
  const M ref = reference_forward(enc, ids);
  CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("encoding is deterministic and context sensitive") {
  Encoder a = test::tiny_encoder(kTexts, 5);
  Encoder b = test::tiny_encoder(kTexts, 5);
  Encoder c = test::tiny_encoder(kTexts, 6);
  const auto toks = words(a, "my mom tested positive");
  const M ha = a.encode(toks).vectors.value();
  CHECK(ha == b.encode(toks).vectors.value());
  CHECK(ha != c.encode(toks).vectors.value());

  // Changing one token changes every row (attention mixes the sequence).
  const auto other = words(a, "my mom tested negative");
  const M hb = a.encode(other).vectors.value();
  for (Eigen::Index i = 0; i < ha.rows(); ++i) CHECK((ha.row(i) - hb.row(i)).norm() > 1e-9);

  // Dropout only with an rng, and then reproducibly.
  Encoder d = test::tiny_encoder(kTexts, 5, 0.1);
  CHECK(d.encode(toks).vectors.value() == ha);
  Rng r1(1), r2(1);
  const M t1 = d.encode(toks, &r1).vectors.value();
  CHECK(t1 == d.encode(toks, &r2).vectors.value());
  CHECK(t1 != ha);
}

TEST_CASE("special tokens register once and are located") {
  Encoder enc = test::tiny_encoder(kTexts);
  const auto before = enc.tokenizer().vocabulary().size();
  enc.register_special_tokens();
  const auto rows = enc.parameters().at("encoder.embeddings.word_embeddings").rows();
  CHECK(enc.tokenizer().vocabulary().size() == before + 2);
  CHECK(static_cast<std::size_t>(rows) == before + 2);
  const M table = P(enc, "encoder.embeddings.word_embeddings");
  enc.register_special_tokens();
  CHECK(enc.tokenizer().vocabulary().size() == before + 2);
  CHECK(P(enc, "encoder.embeddings.word_embeddings") == table);

  const std::vector<std::string> toks = {"my", "<E>", "mom", "</E>", "tested"};
  const HiddenSequence h = enc.encode(toks);
  REQUIRE(h.marker_indices.has_value());
  CHECK(h.marker_indices->first == 2);
  CHECK(h.marker_indices->second == 4);
  CHECK(enc.tokenizer().id("<E>") != enc.tokenizer().id(kUnkToken));
}

TEST_CASE("over-length input is refused") {
  Encoder enc = test::tiny_encoder(kTexts);
  std::vector<std::string> toks(enc.config().max_tokens(), "mom");
  CHECK_NOTHROW(enc.encode(toks));
  toks.push_back("mom");
  CHECK_THROWS_AS(enc.encode(toks), PreconditionError);
}

TEST_CASE("pretrained directories round trip") {
  test::TempDir dir;
  Encoder enc = test::tiny_encoder(kTexts, 9);
  enc.register_special_tokens();
  enc.save_pretrained(dir / "m");

  EncoderConfig cfg;
  cfg.variant = EncoderVariant::pretrained_base;
  cfg.cache_dir = dir.path();
  cfg.model_id = "m";
  cfg.dropout = 0.0;
  const Encoder back = Encoder::load_pretrained(cfg);
  CHECK(back.tokenizer().vocabulary().tokens() == enc.tokenizer().vocabulary().tokens());
  const auto toks = words(enc, "mom tested positive");
  CHECK(back.encode(toks).vectors.value() == enc.encode(toks).vectors.value());

  cfg.model_id = "absent";
  CHECK_THROWS_AS(Encoder::load_pretrained(cfg), ModelError);
  cfg.model_id = "";
  CHECK_THROWS_AS(Encoder::load_pretrained(cfg), ConfigError);

  // Archive shape mismatches are refused.
  TensorArchive archive = read_archive(dir / "m/weights.covex");
  archive.tensors.front().second.resize(1, 1);
  ParameterStore& store = enc.parameters();
  CHECK_THROWS_AS(load_parameters(store, archive), ModelError);

  test::write_file(dir / "garbage.covex", "not an archive");
  CHECK_THROWS_AS(read_archive(dir / "garbage.covex"), ModelError);
}

TEST_CASE("variant names parse") {
  for (auto v : {EncoderVariant::pretrained_domain, EncoderVariant::pretrained_large, EncoderVariant::pretrained_base,
                 EncoderVariant::tiny_test}) {
    CHECK(parse_encoder_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_encoder_variant("gpt"), ConfigError);
}
