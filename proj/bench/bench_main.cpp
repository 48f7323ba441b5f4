// Serial reference loop vs OpenMP cells, and fast AUROC vs the pairwise oracle.

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "emdot/engine.hpp"
#include "emdot/metrics.hpp"
#include "emdot/rng.hpp"
#include "emdot/synth.hpp"
#include "oracles.hpp"

using namespace emdot;

namespace {

const dataset::TemporalDataset& bench_data() {
  static const auto data = [] {
    auto spec = synth::churn_spec();
    spec.n_t = 400;
    return synth::generate(spec).data;
  }();
  return data;
}

void BM_RunEmdot(benchmark::State& state) {
  engine::ExperimentConfig c;
  c.n_seeds = 2;
  c.grid.candidates[models::Family::LR] = {models::LrParams{0.1}, models::LrParams{1.0}};
  engine::RunOptions o;
  o.jobs = static_cast<int>(state.range(0));
  o.keep_models = false;
  const auto& data = bench_data();
  for (auto _ : state) benchmark::DoNotOptimize(engine::run_emdot(c, data, o).records.size());
}
BENCHMARK(BM_RunEmdot)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

struct Scores {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
};

Scores scores(std::size_t n) {
  Rng rng(n);
  Scores out{std::vector<double>(n), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.s[i] = static_cast<double>(rng.below(50));
    out.y[i] = rng.bernoulli(0.3);
  }
  out.y[0] = 1;
  out.y[1] = 0;
  return out;
}

void BM_AurocFast(benchmark::State& state) {
  const auto d = scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(d.s, d.y).value);
}
BENCHMARK(BM_AurocFast)->Arg(200)->Arg(2000);

void BM_AurocPairwise(benchmark::State& state) {
  const auto d = scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::pairwise_auroc(d.s, d.y));
}
BENCHMARK(BM_AurocPairwise)->Arg(200)->Arg(2000);

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
