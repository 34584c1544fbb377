#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "cws/crf.h"
#include "cws/encoder.h"
#include "cws/model.h"
#include "cws/train.h"

namespace {

using namespace cws;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (double& x : m.values()) x = dist(gen);
  return m;
}

// A model over a synthetic 500-character vocabulary.
Model bench_model(std::size_t hidden, std::size_t emb) {
  TrainConfig cfg;
  cfg.hidden = hidden;
  cfg.emb_dim = emb;
  Vocab vocab;
  for (int i = 0; i < 500; ++i) vocab.add("c" + std::to_string(i));
  Rng rng(mix_seed(cfg.seed, 0));
  return make_model(cfg, std::move(vocab), Vocab{}, rng);
}

std::vector<EncodedSentence> bench_sentences(const Model& model, std::size_t count, std::size_t length) {
  std::mt19937_64 gen(11);
  std::vector<EncodedSentence> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<std::string> symbols(length);
    for (auto& c : symbols) c = model.vocab.token(static_cast<int>(4 + gen() % 496));
    EncodedSentence e = encode_symbols(model, symbols);
    // S B E S B M E ... is always grammatical.
    for (std::size_t t = 0; t < length; ++t) e.gold.push_back(t + 1 == length ? 3 : (t % 2 == 0 ? 0 : 2));
    if (length % 2 == 0) e.gold.back() = 2;
    out.push_back(std::move(e));
  }
  return out;
}

void BM_Viterbi(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix p = random_matrix(n, 4, gen);
  const Matrix a = random_matrix(6, 6, gen);
  const TransitionMask mask = TransitionMask::bmes();
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(p, a, &mask));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Arg(20)->Arg(100)->Arg(500);

void BM_LogPartition(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix p = random_matrix(n, 4, gen);
  const Matrix a = random_matrix(6, 6, gen);
  for (auto _ : state) benchmark::DoNotOptimize(log_partition(p, a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPartition)->Arg(20)->Arg(100)->Arg(500);

void BM_EncoderForward(benchmark::State& state) {
  const Model model = bench_model(static_cast<std::size_t>(state.range(1)), 100);
  const auto sentence = bench_sentences(model, 1, static_cast<std::size_t>(state.range(0))).front();
  const auto inputs = model_inputs(model, sentence);
  for (auto _ : state) benchmark::DoNotOptimize(bilstm_forward(inputs, model.params.encoder));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Args({20, 50})->Args({50, 150})->Unit(benchmark::kMillisecond);

void BM_EncoderBackward(benchmark::State& state) {
  const Model model = bench_model(static_cast<std::size_t>(state.range(1)), 100);
  const auto sentence = bench_sentences(model, 1, static_cast<std::size_t>(state.range(0))).front();
  const auto inputs = model_inputs(model, sentence);
  EncoderCache cache;
  const Matrix emissions = bilstm_forward(inputs, model.params.encoder, {}, &cache);
  Matrix upstream(emissions.rows(), emissions.cols());
  for (double& x : upstream.values()) x = 0.1;
  EncoderParams grads = model.params.encoder.zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(encoder_backward(model.params.encoder, cache, upstream, grads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderBackward)->Args({20, 50})->Args({50, 150})->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  Model model = bench_model(50, 50);
  const auto data = bench_sentences(model, 50, 20);
  AdagradState adagrad = AdagradState::for_params(model.params);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(model, data, adagrad, rng));
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
