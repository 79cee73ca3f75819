#include <benchmark/benchmark.h>

#include <random>

#include "ltt/context.hpp"
#include "ltt/evaluation.hpp"
#include "ltt/minilang.hpp"
#include "ltt/models.hpp"
#include "ltt/sampler.hpp"
#include "ltt/training.hpp"

using namespace ltt;

namespace {

const std::vector<minilang::SourceFile>& sources() {
  static const auto files = minilang::read_source_dir(LTT_CORPUS_DIR);
  return files;
}

const std::vector<Tree>& corpus() {
  static const auto trees = [] {
    std::vector<Tree> out;
    for (const auto& f : sources()) out.push_back(minilang::parse(f.text));
    return out;
  }();
  return trees;
}

std::vector<Tree> head(std::size_t n) {
  return {corpus().begin(), corpus().begin() + static_cast<long>(std::min(n, corpus().size()))};
}

const AnyModel& model(const std::string& variant, int dim) {
  static std::map<std::string, AnyModel> cache;
  const std::string key = variant + "/" + std::to_string(dim);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  TrainConfig cfg;
  cfg.variant = variant;
  cfg.dim = dim;
  cfg.epochs = 1;
  if (is_latent_variant(variant)) cfg.latent_states = 8;
  return cache.emplace(key, train_model(cfg, head(100))).first->second;
}

}  // namespace

static void BM_Parse(benchmark::State& state) {
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& f : sources()) {
      benchmark::DoNotOptimize(minilang::parse(f.text));
      bytes += f.text.size();
    }
  }
  state.SetBytesProcessed(static_cast<int64_t>(bytes));
}
BENCHMARK(BM_Parse)->Unit(benchmark::kMillisecond);

static void BM_TraceProductions(benchmark::State& state) {
  const auto fs = variant_features("ltt-hiseq-scope", 1);
  for (auto _ : state) {
    for (const Tree& t : head(100)) benchmark::DoNotOptimize(trace_productions(t, fs));
  }
}
BENCHMARK(BM_TraceProductions)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 0.0);
  std::vector<double> em(std::size_t(n) * k);
  for (double& x : em) x = u(rng);
  TransitionModel t(k);
  for (double& x : t.logits()) x = u(rng);
  t.refresh();
  for (auto _ : state) benchmark::DoNotOptimize(forward_backward(em, n, t));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ForwardBackward)->Args({200, 8})->Args({200, 32})->Args({1000, 32});

static void BM_EvalCorpus(benchmark::State& state, const std::string& variant) {
  const AnyModel& m = model(variant, 50);
  const auto test = head(100);
  for (auto _ : state) benchmark::DoNotOptimize(eval_corpus(m, test, 1));
}
BENCHMARK_CAPTURE(BM_EvalCorpus, pcfg, std::string("pcfg"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EvalCorpus, ltt_hiseq, std::string("ltt-hiseq"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EvalCorpus, ltt_hiseq_scope, std::string("ltt-hiseq-scope"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EvalCorpus, ltt_latent, std::string("ltt-latent"))->Unit(benchmark::kMillisecond);

static void BM_TrainEpoch(benchmark::State& state) {
  TrainConfig cfg;
  cfg.variant = "ltt-hiseq";
  cfg.dim = static_cast<int>(state.range(0));
  cfg.epochs = 1;
  cfg.use_nce = state.range(1) != 0;
  const auto train = head(100);
  for (auto _ : state) benchmark::DoNotOptimize(train_model(cfg, train));
}
BENCHMARK(BM_TrainEpoch)->Args({20, 0})->Args({50, 0})->Args({50, 1})->Unit(benchmark::kMillisecond);

static void BM_SampleProgram(benchmark::State& state) {
  const LttModel& m = model("ltt-hiseq-scope", 50).tree_model();
  std::mt19937_64 rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(sample_program(m, SampleConfig{}, rng));
}
BENCHMARK(BM_SampleProgram)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
