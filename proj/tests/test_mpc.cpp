#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccvpsto/mpc.hpp"
#include "ccvpsto/rng.hpp"

using namespace ccvpsto;
using namespace ccvpsto::mpc;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

MpcConfig fast_config(const std::string& env_name, double eta) {
  auto config = make_mpc_config(uncertainty::EnvironmentConfig::preset(env_name), eta);
  config.planner.max_iterations = 12;  // trimmed for unit-test runtime
  config.planner.population = 24;
  return config;
}

}  // namespace

TEST_CASE("config validation") {
  auto config = fast_config("env0", 0.1);
  config.replan_period = 6.0;  // must stay below the horizon
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.replan_period = 0.26;  // not a multiple of dt
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.replan_period = 0.25;
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("zero obstacles: straight run to the goal, no wasted steps") {
  auto config = fast_config("env0", 0.1);
  // push the only obstacles far outside the relevant region
  uncertainty::RandomWalkModel model = std::get<uncertainty::RandomWalkModel>(config.environment);
  model.bounds = uncertainty::Workspace{Vector2d(0.0, 0.0), Vector2d(100.0, 100.0)};
  for (auto& o : model.obstacles) {
    o.position = Vector2d(90.0, 90.0);
    o.velocity = Vector2d::Zero();
    o.accel_variance = 0.0;
  }
  config.environment = model;
  config.planner.max_iterations = 20;

  const auto trace = run_episode(config, 7);
  CHECK(trace.metrics.success);
  CHECK_FALSE(trace.metrics.collided);

  // reference: one offline plan over the same family
  planner::PlannerConfig offline = config.planner;
  offline.goal_weight = 0.0;
  offline.check_horizon = 30.0;
  offline.max_iterations = 60;
  offline.seed = 99;
  const auto bc = trajectory::BoundaryConditions::rest_to_rest(config.start, config.goal);
  const auto single = planner::plan(offline, bc, config.goal, config.environment,
                                    config.robot_radius);
  // Quantized to replanning periods and finished inside the goal tolerance;
  // the endgame costs a handful of extra periods because min-duration plans
  // reach the goal region at speed and must loop back to stop.
  CHECK(trace.metrics.duration >= single.best.duration() - 0.51);
  CHECK(trace.metrics.duration <= single.best.duration() + 2.01);
}

TEST_CASE("executed segments are continuous across step boundaries") {
  const auto config = fast_config("env1", 0.2);
  const auto trace = run_episode(config, 11);
  REQUIRE(trace.steps.size() >= 2);
  for (std::size_t i = 1; i < trace.steps.size(); ++i) {
    const auto& previous_end = trace.steps[i - 1].executed.back();
    CHECK((trace.steps[i].start_position - previous_end.position).norm() < 1e-9);
    CHECK((trace.steps[i].start_velocity - previous_end.velocity).norm() < 1e-6);
  }
}

TEST_CASE("episode determinism and planner-independent ground truth") {
  const auto config = fast_config("env2", 0.2);
  const auto a = run_episode(config, 42);
  const auto b = run_episode(config, 42);
  CHECK(a.to_json() == b.to_json());

  // a different iteration budget changes plans but never the world, as long
  // as the executed motion does not interact with it
  auto more_iters = config;
  more_iters.planner.max_iterations = 18;
  const auto c = run_episode(more_iters, 42);
  const std::size_t shared = std::min(a.steps.size(), c.steps.size());
  for (std::size_t s = 0; s < shared; ++s) {
    REQUIRE(a.steps[s].obstacle_positions.size() == c.steps[s].obstacle_positions.size());
    for (std::size_t o = 0; o < a.steps[s].obstacle_positions.size(); ++o) {
      CHECK((a.steps[s].obstacle_positions[o] - c.steps[s].obstacle_positions[o]).norm() ==
            0.0);
    }
  }
}

TEST_CASE("warm start mean lies on the previous trajectory") {
  trajectory::TrajectorySynthesizer synth(3);
  Eigen::MatrixXd via(3, 2);
  via << 2, 3, 5, 6, 8, 7;
  const auto bc = trajectory::BoundaryConditions::rest_to_rest(Vector2d(1, 1), Vector2d(9, 9));
  const auto traj = synth.synthesize(via, bc, 4.0);

  const auto mean = warm_start_mean(traj, 1.0, 3);
  REQUIRE(mean.has_value());
  for (int v = 0; v < 3; ++v) {
    const double s_new = (v + 1) / 4.0;
    const double s_abs = (1.0 + s_new * 3.0) / 4.0;
    const auto q = traj.position_at_phase(s_abs);
    CHECK((*mean)[2 * v] == doctest::Approx(q[0]).epsilon(1e-12));
    CHECK((*mean)[2 * v + 1] == doctest::Approx(q[1]).epsilon(1e-12));
  }
  // an exhausted plan falls back to a cold start
  CHECK_FALSE(warm_start_mean(traj, 4.0, 3).has_value());
  CHECK_FALSE(warm_start_mean(traj, 5.0, 3).has_value());
}

TEST_CASE("warm start wins most paired comparisons on an unchanged problem") {
  const auto env = uncertainty::EnvironmentConfig::preset("env1");
  const uncertainty::EnvironmentModel model = env.to_model();
  const auto geometry = chance::CollisionGeometry::for_model(model, env.robot_radius);
  const auto bc = trajectory::BoundaryConditions::rest_to_rest(Vector2d(1, 1), Vector2d(9, 9));

  planner::PlannerConfig base = fast_config("env1", 0.2).planner;
  base.check_horizon = 5.0;
  base.goal_weight = 2.0;
  base.max_iterations = 8;

  int warm_wins = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    const auto particles = uncertainty::sample_particles(
        model, 100, 100, Rng::stream(500, static_cast<std::uint64_t>(t)).next());
    // converged reference plan on the same particles
    planner::PlannerConfig full = base;
    full.max_iterations = 30;
    full.seed = Rng::stream(501, static_cast<std::uint64_t>(t)).next();
    const auto reference = planner::plan(full, bc, Vector2d(9, 9), particles, geometry);

    planner::PlannerConfig quick = base;
    quick.seed = Rng::stream(502, static_cast<std::uint64_t>(t)).next();
    const auto warm_mean = warm_start_mean(reference.best, 0.0, quick.via_count);
    const auto warm = planner::plan(quick, bc, Vector2d(9, 9), particles, geometry, warm_mean);
    const auto cold = planner::plan(quick, bc, Vector2d(9, 9), particles, geometry);
    if (warm.best_cost <= cold.best_cost) ++warm_wins;
  }
  CHECK(warm_wins >= static_cast<int>(0.6 * trials));
}

TEST_CASE("ml baseline equals chance planning with a hard policy on a deterministic model") {
  auto config = fast_config("env0", 0.3);
  uncertainty::RandomWalkModel model = std::get<uncertainty::RandomWalkModel>(config.environment);
  for (auto& o : model.obstacles) o.accel_variance = 0.0;  // rollouts collapse to one path
  config.environment = model;
  config.max_steps = 12;

  auto ml = config;
  ml.ml_baseline = true;
  auto hard = config;
  hard.planner.policy = calibration::ThresholdPolicy::hard();

  const auto trace_ml = run_episode(ml, 13);
  const auto trace_hard = run_episode(hard, 13);
  REQUIRE(trace_ml.steps.size() == trace_hard.steps.size());
  for (std::size_t s = 0; s < trace_ml.steps.size(); ++s) {
    const auto& a = trace_ml.steps[s].executed.back();
    const auto& b = trace_hard.steps[s].executed.back();
    CHECK((a.position - b.position).norm() < 1e-9);
  }
}

TEST_CASE("metrics: collision voids success; straight-line reference is logged") {
  const auto config = fast_config("env0", 0.8);
  const auto trace = run_episode(config, 3);
  const auto recomputed = episode_metrics(trace, config);
  CHECK(recomputed.collided == trace.metrics.collided);
  CHECK(recomputed.goal_reached == trace.metrics.goal_reached);
  CHECK(recomputed.success == trace.metrics.success);
  CHECK(recomputed.success == (recomputed.goal_reached && !recomputed.collided));
  if (trace.metrics.goal_reached)
    CHECK(trace.metrics.duration ==
          doctest::Approx(trace.metrics.steps_to_goal * config.replan_period));

  // T_straight for env0 limits: start and goal are fixed across episodes
  trajectory::TrajectorySynthesizer synth(0);
  const double t_straight = synth.min_duration(
      Eigen::MatrixXd::Zero(0, 2),
      trajectory::BoundaryConditions::rest_to_rest(config.start, config.goal),
      config.planner.limits);
  CHECK(trace.straight_line_duration == doctest::Approx(t_straight));
}

TEST_CASE("conveyor environment runs in the receding-horizon loop") {
  uncertainty::ConveyorModel belt;
  belt.speed = 0.4;
  belt.alpha = 0.1;
  belt.belt_lo = 2.0;
  belt.belt_hi = 8.0;
  belt.start = Vector2d(5.0, 5.0);
  belt.radius = 0.5;

  MpcConfig config;
  config.environment = belt;
  config.robot_radius = 0.25;
  config.start = Vector2d(5.0, 2.0);
  config.goal = Vector2d(5.0, 8.0);  // crosses the belt line
  config.planner.chance = {0.1, 0.05, 100};
  config.planner.limits = trajectory::KinodynamicLimits::symmetric(2, 1.2, 3.0);
  config.planner.penalty = chance::PenaltyParams::for_budget(30.0, 100);
  config.planner.max_iterations = 12;
  config.planner.population = 24;
  config.planner.goal_weight = 2.0;
  config.planner.inject_waiting = true;

  const auto trace = run_episode(config, 21);
  CHECK_FALSE(trace.steps.empty());
  // the box never leaves the belt segment and keeps its speed
  for (const auto& step : trace.steps) {
    for (const auto& sample : step.executed) {
      REQUIRE(sample.obstacles.size() == 1);
      CHECK(sample.obstacles[0].x() >= belt.belt_lo - 1e-9);
      CHECK(sample.obstacles[0].x() <= belt.belt_hi + 1e-9);
      CHECK(sample.obstacles[0].y() == doctest::Approx(5.0));
    }
  }
  const auto again = run_episode(config, 21);
  CHECK(trace.to_json() == again.to_json());
}

TEST_CASE("grazing tangent contact has zero clearance") {
  ExecSample sample;
  sample.position = Vector2d(0.0, 0.0);
  sample.obstacles = {Vector2d(1.0, 0.0)};
  const double robot_r = 0.4, obs_r = 0.6;
  const double clearance = (sample.position - sample.obstacles[0]).norm() - (robot_r + obs_r);
  CHECK(clearance == doctest::Approx(0.0));
  CHECK_FALSE(clearance < 0.0);  // touching is not penetration
}
