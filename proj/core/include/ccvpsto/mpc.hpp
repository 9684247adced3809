#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccvpsto/envconfig.hpp"
#include "ccvpsto/planner.hpp"

namespace ccvpsto::mpc {

using Eigen::Vector2d;

struct MpcConfig {
  double replan_period = 0.25;  // Delta_MPC, 4 Hz
  double horizon = 5.0;         // T_MPC rollout/check horizon
  int max_steps = 100;
  planner::PlannerConfig planner;
  uncertainty::EnvironmentModel environment;
  double robot_radius = 0.25;
  Vector2d start{1.0, 1.0};
  Vector2d goal{9.0, 9.0};
  double goal_position_tolerance = 0.1;
  double goal_speed_tolerance = 0.05;
  // Plan against the per-obstacle mean rollout with a hard constraint
  // instead of the chance-constrained evaluation.
  bool ml_baseline = false;

  void validate() const;
};

struct PlanSummary {
  double duration = 0.0;
  double cost = 0.0;
  std::int64_t violations = 0;
  bool feasible = false;
  bool waiting = false;       // executed the hold/brake fallback
  bool warm_started = false;
  std::uint64_t particle_seed = 0;
};

// One executed sub-step at the rollout resolution.
struct ExecSample {
  double time = 0.0;  // absolute episode time
  Vector2d position{0.0, 0.0};
  Vector2d velocity{0.0, 0.0};
  std::vector<Vector2d> obstacles;
  double min_clearance = 0.0;  // min over obstacles of center dist - radius sum
  bool collided = false;
};

struct StepRecord {
  int index = 0;
  double start_time = 0.0;
  Vector2d start_position{0.0, 0.0};  // boundary state handed to the planner
  Vector2d start_velocity{0.0, 0.0};
  std::vector<Vector2d> obstacle_positions;  // exact ground truth at replan time
  PlanSummary plan;
  std::vector<ExecSample> executed;
};

struct EpisodeMetrics {
  bool goal_reached = false;
  bool collided = false;
  bool success = false;       // goal reached and never collided
  int steps_to_goal = 0;
  double duration = 0.0;      // steps_to_goal * replan_period, successes only
  double min_distance = 0.0;  // min clearance over the executed motion
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  EpisodeMetrics metrics;
  double straight_line_duration = 0.0;  // T_straight, obstacle-free reference
  std::string to_json() const;
};

// Receding-horizon episode: replan every replan_period from exact obstacle
// state, execute the plan prefix against the independently evolving ground
// truth, stop at the goal or after max_steps.
EpisodeTrace run_episode(const MpcConfig& config, std::uint64_t seed);

// Metrics recomputed from the executed record.
EpisodeMetrics episode_metrics(const EpisodeTrace& trace, const MpcConfig& config);

// Via-point mean resampled from the previous plan shifted by the elapsed
// time; nullopt when the previous plan is exhausted.
std::optional<planner::VectorXd> warm_start_mean(const trajectory::Trajectory& previous,
                                                 double elapsed, int via_count);

// MpcConfig for a random-walk environment with the defaults used in the
// studies (4 Hz replanning, 5 s horizon, N = 100 particles).
MpcConfig make_mpc_config(const uncertainty::EnvironmentConfig& env, double eta);

}  // namespace ccvpsto::mpc
