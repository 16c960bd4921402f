// Microbenchmarks for the hot paths: Gibbs sweeps, the cost-weighted
// forward-backward, Viterbi, and the rank-1 power iteration.

#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "crowdlab/chain.hpp"
#include "crowdlab/corpus.hpp"
#include "crowdlab/crf.hpp"
#include "crowdlab/rank1.hpp"
#include "crowdlab/sampler.hpp"
#include "crowdlab/simulate.hpp"

using namespace crowdlab;

namespace {

Corpus synthetic_corpus(int num_sequences, int len, int num_labels) {
  Corpus corpus;
  for (int t = 0; t < num_labels; ++t) corpus.labels.intern("L" + std::to_string(t));
  int k = 0;
  for (int s = 0; s < num_sequences; ++s) {
    Sequence seq;
    for (int j = 0; j < len; ++j, ++k) {
      Token tok;
      tok.surface = "w" + std::to_string(k % 23) + "_" + std::to_string(k % num_labels);
      tok.gold[0] = k % num_labels;
      seq.tokens.push_back(tok);
    }
    corpus.sequences.push_back(seq);
  }
  return corpus;
}

struct SamplerBench {
  Corpus corpus = synthetic_corpus(200, 8, 12);
  SimResult sim = simulate(corpus, make_plan({3, 4, 8}, {{0.7, 0.9}, {0.4, 0.7}, {0.1, 0.4}}, 7));
  SamplerState state{sim.crowd, Hyperparams::defaults(12, 3), 7};
};

SamplerBench& sampler_bench() {
  static SamplerBench bench;
  return bench;
}

void BM_GibbsSweep(benchmark::State& b) {
  auto& fix = sampler_bench();
  std::uint64_t sweep = 0;
  for (auto _ : b) fix.state.sweep(7, sweep++, 20, MhMode::kPlain);
  b.SetItemsProcessed(static_cast<std::int64_t>(b.iterations()) *
                      static_cast<std::int64_t>(fix.state.num_tokens()));
}
BENCHMARK(BM_GibbsSweep)->Unit(benchmark::kMillisecond);

void BM_TruthConditionals(benchmark::State& b) {
  auto& fix = sampler_bench();
  for (auto _ : b)
    for (std::size_t i = 0; i < fix.state.num_tokens(); ++i)
      benchmark::DoNotOptimize(fix.state.truth_log_weights(i));
  b.SetItemsProcessed(static_cast<std::int64_t>(b.iterations()) *
                      static_cast<std::int64_t>(fix.state.num_tokens()));
}
BENCHMARK(BM_TruthConditionals)->Unit(benchmark::kMillisecond);

struct CrfBench {
  Corpus corpus = synthetic_corpus(50, 12, 8);
  CrfModel model;
  std::vector<EncodedSequence> encoded;
  Matrix cost_table = uniform_cost_table(8);

  CrfBench() : model(CrfModel::make(corpus.labels, FeatureMap(), CrfConfig())) {
    std::vector<int> truth;
    for (const auto& seq : corpus.sequences)
      for (const auto& tok : seq.tokens) truth.push_back(tok.gold[0]);
    encoded = encode_sequences(corpus, truth, model, true);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (double& w : model.weights) w = unif(rng);
  }
};

CrfBench& crf_bench() {
  static CrfBench bench;
  return bench;
}

void BM_CostObjective(benchmark::State& b) {
  auto& fix = crf_bench();
  for (auto _ : b)
    for (const auto& seq : fix.encoded)
      benchmark::DoNotOptimize(sequence_objective(fix.model, seq, &fix.cost_table));
}
BENCHMARK(BM_CostObjective)->Unit(benchmark::kMillisecond);

void BM_CostObjectiveNaive(benchmark::State& b) {
  auto& fix = crf_bench();
  for (auto _ : b)
    for (const auto& seq : fix.encoded)
      benchmark::DoNotOptimize(sequence_objective_naive(fix.model, seq, &fix.cost_table));
}
BENCHMARK(BM_CostObjectiveNaive)->Unit(benchmark::kMillisecond);

void BM_LikelihoodObjective(benchmark::State& b) {
  auto& fix = crf_bench();
  for (auto _ : b)
    for (const auto& seq : fix.encoded)
      benchmark::DoNotOptimize(sequence_objective(fix.model, seq, nullptr));
}
BENCHMARK(BM_LikelihoodObjective)->Unit(benchmark::kMillisecond);

void BM_Viterbi(benchmark::State& b) {
  auto& fix = crf_bench();
  for (auto _ : b)
    for (const auto& seq : fix.encoded) benchmark::DoNotOptimize(viterbi(fix.model, seq));
}
BENCHMARK(BM_Viterbi)->Unit(benchmark::kMillisecond);

void BM_Rank1(benchmark::State& b) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix a(15, 40);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = unif(rng);
  for (auto _ : b) benchmark::DoNotOptimize(rank1_factorize(a));
}
BENCHMARK(BM_Rank1);

}  // namespace

BENCHMARK_MAIN();
