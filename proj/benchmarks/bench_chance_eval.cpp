#include <benchmark/benchmark.h>

#include "ccvpsto/chance_eval.hpp"
#include "ccvpsto/envconfig.hpp"

namespace {

using namespace ccvpsto;

void BM_CountViolations(benchmark::State& state) {
  const auto env = uncertainty::EnvironmentConfig::preset("env0");
  const uncertainty::EnvironmentModel model = env.to_model();
  const auto particles =
      uncertainty::sample_particles(model, static_cast<int>(state.range(0)), 100, 42);
  const auto geometry = chance::CollisionGeometry::for_model(model, env.robot_radius);

  trajectory::TrajectorySynthesizer synth(3);
  Eigen::MatrixXd via(3, 2);
  via << 3, 3, 5, 5, 7, 7;
  const auto bc = trajectory::BoundaryConditions::rest_to_rest(Eigen::Vector2d(1, 1),
                                                               Eigen::Vector2d(9, 9));
  const auto traj = synth.synthesize(via, bc, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(chance::count_violations(traj, particles, geometry, 5.0));
  }
}
BENCHMARK(BM_CountViolations)->Arg(100)->Arg(1000);

void BM_SampleParticles(benchmark::State& state) {
  const auto env = uncertainty::EnvironmentConfig::preset("env0");
  const uncertainty::EnvironmentModel model = env.to_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        uncertainty::sample_particles(model, static_cast<int>(state.range(0)), 100, 42));
  }
}
BENCHMARK(BM_SampleParticles)->Arg(100);

}  // namespace
