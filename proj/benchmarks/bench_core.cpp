#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "segfuse/decision.hpp"
#include "segfuse/gbt.hpp"
#include "segfuse/pipeline.hpp"
#include "segfuse/segments.hpp"
#include "segfuse/synth.hpp"

namespace {

using namespace segfuse;

SyntheticFrame frame_of(int size) {
  SceneSpec spec;
  spec.height = size;
  spec.width = size;
  return generate_scene(spec, 0);
}

PriorField flat_priors(const SyntheticFrame& f) {
  const std::vector<LabelMask> masks{f.gt};
  return estimate_priors(masks, f.probs.classes(), PriorMode::kGlobal);
}

void BM_Decide(benchmark::State& state) {
  const SyntheticFrame f = frame_of(static_cast<int>(state.range(0)));
  const PriorField priors = flat_priors(f);
  DecisionConfig cfg;
  cfg.prior_mode = PriorMode::kGlobal;
  for (auto _ : state) benchmark::DoNotOptimize(decide(f.probs, priors, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.probs.pixel_count()));
}
BENCHMARK(BM_Decide)->Arg(64)->Arg(256);

void BM_ConnectedComponents(benchmark::State& state) {
  const SyntheticFrame f = frame_of(static_cast<int>(state.range(0)));
  const LabelMask mask = bayes_decision(f.probs);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(mask));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mask.pixel_count()));
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(256);

void BM_AnalyzeFrame(benchmark::State& state) {
  const SyntheticFrame f = frame_of(static_cast<int>(state.range(0)));
  const PriorField priors = flat_priors(f);
  DecisionConfig cfg;
  cfg.prior_mode = PriorMode::kGlobal;
  for (auto _ : state) benchmark::DoNotOptimize(analyze_frame(f.probs, priors, cfg, 3));
}
BENCHMARK(BM_AnalyzeFrame)->Arg(64)->Arg(256);

void BM_TrainGbt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t q = 25;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> values(n * q);
  for (double& v : values) v = normal(rng);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = values[i * q] + 0.5 * normal(rng) > 0 ? 1 : 0;
  const FeatureMatrix x(n, q, values);
  GbtConfig cfg;
  cfg.max_features = 5;
  for (auto _ : state) benchmark::DoNotOptimize(train_gbt(x, y, cfg));
}
BENCHMARK(BM_TrainGbt)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
