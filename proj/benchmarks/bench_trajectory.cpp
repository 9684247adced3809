#include <benchmark/benchmark.h>

#include "ccvpsto/trajectory.hpp"

namespace {

using namespace ccvpsto::trajectory;

void BM_Synthesize(benchmark::State& state) {
  const int n_via = static_cast<int>(state.range(0));
  TrajectorySynthesizer synth(n_via);
  Eigen::MatrixXd via(n_via, 2);
  for (int i = 0; i < n_via; ++i) via.row(i) << 1.0 + i, 2.0 * i;
  const auto bc = BoundaryConditions::rest_to_rest(Eigen::Vector2d(0, 0),
                                                   Eigen::Vector2d(10, 10));
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth.synthesize(via, bc, 5.0));
  }
}
BENCHMARK(BM_Synthesize)->Arg(3)->Arg(5);

void BM_MinDuration(benchmark::State& state) {
  const int n_via = static_cast<int>(state.range(0));
  TrajectorySynthesizer synth(n_via);
  Eigen::MatrixXd via(n_via, 2);
  for (int i = 0; i < n_via; ++i) via.row(i) << 1.0 + i, 2.0 * i;
  const auto bc = BoundaryConditions::rest_to_rest(Eigen::Vector2d(0, 0),
                                                   Eigen::Vector2d(10, 10));
  const auto limits = KinodynamicLimits::symmetric(2, 2.0, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth.min_duration(via, bc, limits));
  }
}
BENCHMARK(BM_MinDuration)->Arg(3)->Arg(5);

void BM_BasisConstruction(benchmark::State& state) {
  for (auto _ : state) {
    TrajectorySynthesizer synth(static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(synth.basis());
  }
}
BENCHMARK(BM_BasisConstruction)->Arg(3)->Arg(8);

}  // namespace
