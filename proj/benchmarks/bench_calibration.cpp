#include <benchmark/benchmark.h>

#include "ccvpsto/calibration.hpp"

namespace {

using namespace ccvpsto::calibration;

void BM_KBeta(benchmark::State& state) {
  const ConfidenceSpec spec{0.1, 0.05, state.range(0)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(k_beta(spec));
  }
}
BENCHMARK(BM_KBeta)->Arg(100)->Arg(1000)->Arg(10000);

void BM_BinomCdf(benchmark::State& state) {
  const BinomialParams params{state.range(0), 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(binom_cdf(params, state.range(0) / 10));
  }
}
BENCHMARK(BM_BinomCdf)->Arg(100)->Arg(1000);

void BM_ThresholdTable(benchmark::State& state) {
  const ConfidenceSpec spec{0.8, 0.05, 1000};
  for (auto _ : state) {
    benchmark::DoNotOptimize(k_beta_rad(spec, 2, 1, 1));
    benchmark::DoNotOptimize(k_beta_rad_boole(spec, 2, 1, 1));
  }
}
BENCHMARK(BM_ThresholdTable);

}  // namespace
