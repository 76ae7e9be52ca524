#include <benchmark/benchmark.h>

#include "covex/chunker.hpp"
#include "covex/pipeline.hpp"
#include "covex/preprocess.hpp"
#include "covex/slot_model.hpp"
#include "covex/synthetic.hpp"

using namespace covex;

namespace {

const std::vector<AnnotatedExample>& corpus() {
  static const auto data = [] {
    SyntheticOptions so;
    so.examples = 64;
    so.seed = 3;
    return synthetic_corpus(so, SubtaskRegistry::standard());
  }();
  return data;
}

std::vector<std::string> texts() {
  std::vector<std::string> out;
  for (const auto& ex : corpus()) out.push_back(ex.tweet.text_or_empty());
  return out;
}

void BM_Normalize(benchmark::State& state) {
  const auto t = texts();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_sentence(t[i++ % t.size()]));
  }
}
BENCHMARK(BM_Normalize);

void BM_RuleChunker(benchmark::State& state) {
  const RuleChunker chunker;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_candidates(corpus()[i++ % corpus().size()].tweet, chunker));
  }
}
BENCHMARK(BM_RuleChunker);

void BM_SpanPooling(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(1);
  ag::Matrix h(n, 768), a(768, 1);
  for (auto& v : h.reshaped()) v = rng.normal();
  for (auto& v : a.reshaped()) v = rng.normal();
  const ag::Var hv = ag::constant(h), av = ag::constant(a);
  ag::NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pool_span(hv, 1, static_cast<std::size_t>(n) - 2, av).value());
  }
}
BENCHMARK(BM_SpanPooling)->Arg(16)->Arg(64)->Arg(128);

void BM_TinyEncoderForward(benchmark::State& state) {
  const auto t = texts();
  EncoderConfig ec;
  ec.variant = EncoderVariant::tiny_test;
  const Encoder enc = make_encoder(ec, t);
  std::vector<std::string> tokens;
  for (const auto& tok : enc.tokenizer().tokenize(t[0])) tokens.push_back(tok.text);
  ag::NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(enc.encode(tokens).vectors.value());
  }
  state.counters["tokens"] = static_cast<double>(tokens.size());
}
BENCHMARK(BM_TinyEncoderForward);

}  // namespace

// Own main: the distro libbenchmark_main.a carries LTO bytecode from another compiler release.
BENCHMARK_MAIN();
