#include <benchmark/benchmark.h>

#include <random>

#include "ink2tex/beam_search.hpp"
#include "ink2tex/encoder.hpp"
#include "ink2tex/model.hpp"
#include "ink2tex/optimizer.hpp"
#include "ink2tex/preprocess.hpp"
#include "ink2tex/synth.hpp"

using namespace ink2tex;

namespace {

ModelConfig small_config(std::size_t vocab) {
  ModelConfig c;
  c.encoder_layers = 2;
  c.encoder_hidden = 32;
  c.pooled_layers = {0, 1};
  c.decoder_hidden = 32;
  c.embedding_dim = 32;
  c.attention_dim = 64;
  c.vocab_size = vocab;
  return c;
}

FeatureSequence features(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureSequence x;
  x.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 6; ++k) x.rows[i][k] = u(rng);
    x.rows[i][6] = 1.0;
  }
  return x;
}

void BM_Featurize(benchmark::State& state) {
  SynthSpec spec;
  spec.depth = 2;
  const auto inks = generate(spec, 16);
  for (auto _ : state) {
    for (const auto& ink : inks) benchmark::DoNotOptimize(featurize(ink));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inks.size()));
}
BENCHMARK(BM_Featurize);

void BM_EncodeSmall(benchmark::State& state) {
  const ModelParams p = init_params(small_config(15), 1);
  const auto x = features(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode(p, x));
}
BENCHMARK(BM_EncodeSmall)->Arg(50)->Arg(200);

void BM_EncodeFull(benchmark::State& state) {
  ModelConfig c;
  c.vocab_size = 111;
  const ModelParams p = init_params(c, 1);
  const auto x = features(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode(p, x));
}
BENCHMARK(BM_EncodeFull)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_DecoderStep(benchmark::State& state) {
  ModelConfig c;
  c.vocab_size = 111;
  const ModelParams p = init_params(c, 1);
  const SequenceDecoder dec(p, features(100));
  const auto st = dec.initial();
  for (auto _ : state) benchmark::DoNotOptimize(dec.step(st, Vocabulary::kStart));
}
BENCHMARK(BM_DecoderStep)->Unit(benchmark::kMicrosecond);

void BM_BeamSearch(benchmark::State& state) {
  const std::vector<ModelParams> models = {init_params(small_config(15), 1)};
  const auto x = features(120);
  const BeamConfig cfg{static_cast<std::size_t>(state.range(0)), 30};
  for (auto _ : state) benchmark::DoNotOptimize(beam_search(models, x, cfg));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  ModelParams p = init_params(small_config(15), 1);
  OptimState opt = OptimState::zeros(p);
  const auto x = features(120);
  const std::vector<TokenId> y = {3, 9, 4, 12, 5, 13, Vocabulary::kEnd};
  for (auto _ : state) {
    auto lg = loss_and_gradient(p, x, y);
    benchmark::DoNotOptimize(adadelta_step(p, std::move(lg.grad), opt, AdaDeltaConfig{}));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
