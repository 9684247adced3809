#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccvpsto/trajectory.hpp"
#include "ccvpsto/uncertainty.hpp"

namespace ccvpsto::chance {

struct CollisionGeometry {
  double robot_radius = 0.0;
  std::vector<double> obstacle_radii;

  static CollisionGeometry for_model(const uncertainty::EnvironmentModel& model,
                                     double robot_radius);
  void validate(int obstacles) const;
};

// Discontinuous barrier: zero up to the threshold, then
// min_penalty + slope * (k - threshold - 1).
struct PenaltyParams {
  double min_penalty = 1e4;
  double slope = 0.0;

  // min_penalty = 1e4 * duration_ceiling dominates every violation-free
  // cost; the slope min_penalty / N gives the optimizer a direction.
  static PenaltyParams for_budget(double duration_ceiling, std::int64_t particles);
  void validate(double max_violation_free_cost) const;
};

struct ViolationReport {
  std::int64_t violations = 0;  // k
  std::int64_t particles = 0;   // N
  // Index of the first violating rollout step per particle, -1 if none.
  // Populated only when requested.
  std::vector<int> first_violation_step;

  double ratio() const {
    return static_cast<double>(violations) / static_cast<double>(particles);
  }
  std::string to_json() const;
  void write_steps_csv(std::ostream& out) const;
};

// Joint, trajectory-wise violation count: a particle counts once if the
// robot disc intersects any obstacle disc at any rollout step within the
// check horizon. Rollout step j is the obstacle state at time (j+1)*dt;
// the robot is held at its final position past the end of the plan.
ViolationReport count_violations(const trajectory::Trajectory& traj,
                                 const uncertainty::ParticleSet& particles,
                                 const CollisionGeometry& geometry, double check_horizon,
                                 bool record_steps = false);

double penalty(std::int64_t violations, std::int64_t threshold, const PenaltyParams& params);

// Separable-constraint evaluator around a nominal point: particle i violates
// iff h2(delta_i) > clearance, with h2 the largest distance from the nominal
// point to any point of any obstacle across the rollout.
ViolationReport nominal_point_violations(double clearance,
                                         const uncertainty::ParticleSet& particles,
                                         const Eigen::Vector2d& nominal_point);

// Empirical violation probability on a fresh particle set of size n_eval.
double evaluate_solution(const trajectory::Trajectory& traj,
                         const uncertainty::EnvironmentModel& model,
                         const CollisionGeometry& geometry, std::int64_t n_eval,
                         std::uint64_t seed, double check_horizon);

}  // namespace ccvpsto::chance
