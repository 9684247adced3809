#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccvpsto/calibration.hpp"
#include "ccvpsto/chance_eval.hpp"
#include "ccvpsto/cmaes.hpp"
#include "ccvpsto/trajectory.hpp"
#include "ccvpsto/uncertainty.hpp"

namespace ccvpsto::planner {

struct PlannerConfig {
  int via_count = 3;
  int max_iterations = 100;
  int population = 32;  // M
  calibration::ConfidenceSpec chance{0.1, 0.05, 100};
  calibration::ThresholdPolicy policy = calibration::ThresholdPolicy::binomial();
  chance::PenaltyParams penalty = chance::PenaltyParams::for_budget(30.0, 100);
  trajectory::KinodynamicLimits limits = trajectory::KinodynamicLimits::symmetric(2, 2.0, 5.0);
  bool inject_waiting = false;
  std::uint64_t seed = 0;

  // Collision checking window; also the duration of injected waiting
  // candidates. In the offline setting this simply covers the whole plan.
  double check_horizon = 30.0;
  // Cost weight on the plan-end-to-goal distance (s per workspace unit);
  // zero in the offline setting where every candidate already ends at the
  // goal, nonzero in MPC mode so waiting candidates are rankable.
  double goal_weight = 0.0;
  // Resample the particle set every iteration instead of holding it fixed.
  bool resample_each_iteration = false;
  // Return the best evaluated candidate whenever it outscores the final
  // CMA-ES mean (both are reported either way).
  bool prefer_elitist = true;
  int jobs = 1;

  double init_sigma_scale = 0.25;
  double init_sigma_floor = 0.1;

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  double best_cost = 0.0;
  std::int64_t best_violations = 0;
  double sigma = 0.0;
};

struct PlanResult {
  explicit PlanResult(trajectory::Trajectory initial) : best(std::move(initial)) {}

  trajectory::Trajectory best;
  double best_cost = 0.0;
  std::int64_t best_violations = 0;
  std::int64_t threshold = 0;
  bool feasible = false;          // best_violations <= threshold
  bool waiting_selected = false;  // an injected waiting candidate won
  // The trajectory synthesized from the final CMA-ES mean, for comparison
  // with the elitist best.
  std::optional<trajectory::Trajectory> final_mean;
  std::optional<double> final_mean_cost;
  std::optional<std::int64_t> final_mean_violations;
  std::vector<IterationStats> log;
  std::uint64_t particle_hash_before = 0;
  std::uint64_t particle_hash_after = 0;

  std::string to_json() const;
  void write_log_csv(std::ostream& out) const;
};

// Initial search distribution: mean via points on the straight line between
// the boundary positions, isotropic sigma0 = 0.25 |qT - q0| (floored).
SearchDistribution init_distribution(const PlannerConfig& config,
                                     const trajectory::BoundaryConditions& bc);

// Penalized candidate cost: duration, goal attraction and barrier.
double candidate_cost(double duration, double goal_distance, std::int64_t violations,
                      std::int64_t threshold, const PlannerConfig& config);

// Convenience wrapper evaluating a synthesized trajectory against a fixed
// particle set.
double cost(const trajectory::Trajectory& traj, const uncertainty::ParticleSet& particles,
            const chance::CollisionGeometry& geometry, std::int64_t threshold,
            const Eigen::Vector2d& goal, const PlannerConfig& config);

// CC-VPSTO: CMA-ES over via points, duration-minimal synthesis, penalized
// evaluation against a particle set sampled once up front. Deterministic
// given (config, bc, particles). An optional warm mean seeds the search.
PlanResult plan(const PlannerConfig& config, const trajectory::BoundaryConditions& bc,
                const Eigen::Vector2d& goal, const uncertainty::ParticleSet& particles,
                const chance::CollisionGeometry& geometry,
                const std::optional<VectorXd>& warm_mean = std::nullopt);

// Samples the particle set from the model first (stream (seed, "particles")).
PlanResult plan(const PlannerConfig& config, const trajectory::BoundaryConditions& bc,
                const Eigen::Vector2d& goal, const uncertainty::EnvironmentModel& model,
                double robot_radius);

}  // namespace ccvpsto::planner
