#include "ccvpsto/mpc.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccvpsto::mpc {

using trajectory::BoundaryConditions;
using trajectory::Trajectory;
using trajectory::TrajectorySynthesizer;

namespace {

constexpr std::uint64_t kWorldStream = 0x776f726c64;
constexpr std::uint64_t kParticleStream = 0x706c616e;
constexpr std::uint64_t kCmaStream = 0x636d61;

// Velocity-continuous fallback for steps where the planner failed: a cubic
// that brakes to rest over one replanning period. From rest it degenerates
// to holding the current position.
Trajectory braking_trajectory(const Vector2d& position, const Vector2d& velocity,
                              double period) {
  BoundaryConditions bc;
  bc.start = position;
  bc.start_velocity = velocity;
  bc.goal = position + 0.5 * period * velocity;
  bc.goal_velocity = Vector2d::Zero();
  TrajectorySynthesizer synth(0);
  return synth.synthesize(Eigen::MatrixXd::Zero(0, 2), bc, period);
}

}  // namespace

void MpcConfig::validate() const {
  if (!(replan_period > 0.0 && replan_period < horizon))
    throw std::invalid_argument("MpcConfig: requires 0 < replan_period < horizon");
  if (max_steps < 1) throw std::invalid_argument("MpcConfig: max_steps must be >= 1");
  const double dt = uncertainty::model_dt(environment);
  const double sub = replan_period / dt;
  if (std::abs(sub - std::round(sub)) > 1e-9)
    throw std::invalid_argument("MpcConfig: replan_period must be a multiple of the model dt");
}

std::optional<planner::VectorXd> warm_start_mean(const Trajectory& previous, double elapsed,
                                                 int via_count) {
  if (elapsed >= previous.duration()) return std::nullopt;
  const double remaining = previous.duration() - elapsed;
  const int dof = previous.dof();
  planner::VectorXd mean(via_count * dof);
  for (int v = 0; v < via_count; ++v) {
    const double s_new = static_cast<double>(v + 1) / static_cast<double>(via_count + 1);
    const double s_abs = (elapsed + s_new * remaining) / previous.duration();
    mean.segment(v * dof, dof) = previous.position_at_phase(std::min(s_abs, 1.0));
  }
  return mean;
}

EpisodeTrace run_episode(const MpcConfig& config, std::uint64_t seed) {
  config.validate();
  const double dt = uncertainty::model_dt(config.environment);
  const int substeps = static_cast<int>(std::round(config.replan_period / dt));
  const int horizon_steps = static_cast<int>(std::round(config.horizon / dt));
  const auto geometry =
      chance::CollisionGeometry::for_model(config.environment, config.robot_radius);

  EpisodeTrace trace;
  {
    TrajectorySynthesizer synth(0);
    trace.straight_line_duration = synth.min_duration(
        Eigen::MatrixXd::Zero(0, 2),
        BoundaryConditions::rest_to_rest(config.start, config.goal),
        config.planner.limits);
  }

  Rng world_rng = Rng::stream(seed, kWorldStream);
  auto world_state = uncertainty::initial_state(config.environment);

  Vector2d robot_pos = config.start;
  Vector2d robot_vel = Vector2d::Zero();
  std::optional<Trajectory> previous_plan;

  EpisodeMetrics metrics;
  metrics.min_distance = std::numeric_limits<double>::infinity();

  for (int step = 0; step < config.max_steps; ++step) {
    StepRecord record;
    record.index = step;
    record.start_time = step * config.replan_period;
    record.start_position = robot_pos;
    record.start_velocity = robot_vel;
    record.obstacle_positions = uncertainty::state_positions(config.environment, world_state);

    // Fresh rollouts conditioned on the exact current obstacle state.
    const std::uint64_t particle_seed =
        Rng::stream(seed, kParticleStream, static_cast<std::uint64_t>(step)).next();
    auto particles =
        uncertainty::sample_particles_from(config.environment, world_state,
                                           static_cast<int>(config.planner.chance.particles),
                                           horizon_steps, particle_seed);

    planner::PlannerConfig step_planner = config.planner;
    step_planner.seed = Rng::stream(seed, kCmaStream, static_cast<std::uint64_t>(step)).next();
    step_planner.check_horizon = config.horizon;
    if (config.ml_baseline) {
      particles = uncertainty::mean_rollout(particles);
      step_planner.policy = calibration::ThresholdPolicy::hard();
      step_planner.chance.particles = 1;
    }

    BoundaryConditions bc;
    bc.start = robot_pos;
    bc.start_velocity = robot_vel;
    bc.goal = config.goal;
    bc.goal_velocity = Vector2d::Zero();

    std::optional<planner::VectorXd> warm;
    if (previous_plan)
      warm = warm_start_mean(*previous_plan, config.replan_period, step_planner.via_count);

    Trajectory executed = braking_trajectory(robot_pos, robot_vel, config.replan_period);
    record.plan.particle_seed = particle_seed;
    record.plan.warm_started = warm.has_value();
    bool planned = false;
    try {
      auto result = planner::plan(step_planner, bc, config.goal, particles, geometry, warm);
      record.plan.duration = result.best.duration();
      record.plan.cost = result.best_cost;
      record.plan.violations = result.best_violations;
      record.plan.feasible = result.feasible;
      if (result.feasible) {
        executed = result.best;
        previous_plan = result.best;
        planned = true;
      }
    } catch (const std::runtime_error&) {
      record.plan.feasible = false;
    }
    if (!planned) {
      // Planner failure: brake to rest for this step (logged as waiting).
      record.plan.waiting = true;
      previous_plan.reset();
    }

    // Execute the first replan_period of the chosen trajectory while the
    // ground truth evolves on its own stream.
    record.executed.reserve(substeps);
    for (int u = 1; u <= substeps; ++u) {
      const double local_t = u * dt;
      world_state = uncertainty::step_state(config.environment, world_state, world_rng);
      ExecSample sample;
      sample.time = record.start_time + local_t;
      sample.position = executed.position_at_time(local_t);
      sample.velocity = executed.velocity_at_time(local_t);
      sample.obstacles = uncertainty::state_positions(config.environment, world_state);
      double clearance = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < sample.obstacles.size(); ++o) {
        const double center = (sample.position - sample.obstacles[o]).norm();
        clearance = std::min(clearance,
                             center - (config.robot_radius + geometry.obstacle_radii[o]));
      }
      sample.min_clearance = clearance;
      sample.collided = clearance < 0.0;
      metrics.collided = metrics.collided || sample.collided;
      metrics.min_distance = std::min(metrics.min_distance, clearance);
      record.executed.push_back(std::move(sample));
    }

    robot_pos = executed.position_at_time(config.replan_period);
    robot_vel = executed.velocity_at_time(config.replan_period);
    trace.steps.push_back(std::move(record));

    if ((robot_pos - config.goal).norm() <= config.goal_position_tolerance &&
        robot_vel.norm() <= config.goal_speed_tolerance) {
      metrics.goal_reached = true;
      metrics.steps_to_goal = step + 1;
      break;
    }
  }

  metrics.success = metrics.goal_reached && !metrics.collided;
  metrics.duration =
      metrics.goal_reached ? metrics.steps_to_goal * config.replan_period : 0.0;
  trace.metrics = metrics;
  return trace;
}

EpisodeMetrics episode_metrics(const EpisodeTrace& trace, const MpcConfig& config) {
  EpisodeMetrics metrics;
  metrics.min_distance = std::numeric_limits<double>::infinity();
  for (const auto& step : trace.steps) {
    for (const auto& sample : step.executed) {
      metrics.collided = metrics.collided || sample.collided;
      metrics.min_distance = std::min(metrics.min_distance, sample.min_clearance);
    }
  }
  if (!trace.steps.empty()) {
    const auto& last = trace.steps.back().executed.back();
    if ((last.position - config.goal).norm() <= config.goal_position_tolerance &&
        last.velocity.norm() <= config.goal_speed_tolerance) {
      metrics.goal_reached = true;
      metrics.steps_to_goal = static_cast<int>(trace.steps.size());
    }
  }
  metrics.success = metrics.goal_reached && !metrics.collided;
  metrics.duration =
      metrics.goal_reached ? metrics.steps_to_goal * config.replan_period : 0.0;
  return metrics;
}

std::string EpisodeTrace::to_json() const {
  nlohmann::json j;
  j["straight_line_duration"] = straight_line_duration;
  j["metrics"] = {{"goal_reached", metrics.goal_reached}, {"collided", metrics.collided},
                  {"success", metrics.success},           {"steps_to_goal", metrics.steps_to_goal},
                  {"duration", metrics.duration},         {"min_distance", metrics.min_distance}};
  auto steps_json = nlohmann::json::array();
  for (const auto& step : steps) {
    nlohmann::json s;
    s["index"] = step.index;
    s["start_time"] = step.start_time;
    auto obstacles = nlohmann::json::array();
    for (const auto& p : step.obstacle_positions) obstacles.push_back({p.x(), p.y()});
    s["obstacles"] = obstacles;
    s["plan"] = {{"duration", step.plan.duration},
                 {"cost", step.plan.cost},
                 {"violations", step.plan.violations},
                 {"feasible", step.plan.feasible},
                 {"waiting", step.plan.waiting},
                 {"warm_started", step.plan.warm_started},
                 {"particle_seed", step.plan.particle_seed}};
    auto executed = nlohmann::json::array();
    for (const auto& sample : step.executed) {
      executed.push_back({{"t", sample.time},
                          {"q", {sample.position.x(), sample.position.y()}},
                          {"qdot", {sample.velocity.x(), sample.velocity.y()}},
                          {"min_clearance", sample.min_clearance},
                          {"collided", sample.collided}});
    }
    s["executed"] = executed;
    steps_json.push_back(std::move(s));
  }
  j["steps"] = steps_json;
  return j.dump();
}

MpcConfig make_mpc_config(const uncertainty::EnvironmentConfig& env, double eta) {
  MpcConfig config;
  config.environment = env.to_model();
  config.robot_radius = env.robot_radius;
  config.planner.chance = {eta, 0.05, 100};
  config.planner.policy = calibration::ThresholdPolicy::binomial();
  // Per-step search budget large enough for converged plans: an
  // under-converged planner wanders with incidental clearance, which masks
  // the risk appetite the eta sweep is meant to show.
  config.planner.max_iterations = 40;
  config.planner.population = 32;
  config.planner.via_count = 3;
  // The robot is modestly faster than the obstacles; with generous limits
  // every policy can outrun trouble and the sweep flattens.
  config.planner.limits = trajectory::KinodynamicLimits::symmetric(2, 1.2, 3.0);
  config.planner.penalty = chance::PenaltyParams::for_budget(30.0, 100);
  config.planner.goal_weight = 2.0;
  config.planner.inject_waiting = true;
  return config;
}

}  // namespace ccvpsto::mpc
