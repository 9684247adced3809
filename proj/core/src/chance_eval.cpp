#include "ccvpsto/chance_eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ccvpsto::chance {

using trajectory::Trajectory;
using uncertainty::ParticleSet;

CollisionGeometry CollisionGeometry::for_model(const uncertainty::EnvironmentModel& model,
                                               double robot_radius) {
  return {robot_radius, uncertainty::obstacle_radii(model)};
}

void CollisionGeometry::validate(int obstacles) const {
  if (robot_radius <= 0.0)
    throw std::invalid_argument("CollisionGeometry: robot radius must be > 0");
  if (static_cast<int>(obstacle_radii.size()) != obstacles)
    throw std::invalid_argument("CollisionGeometry: obstacle radii count mismatch");
  for (double r : obstacle_radii)
    if (r <= 0.0) throw std::invalid_argument("CollisionGeometry: radii must be > 0");
}

PenaltyParams PenaltyParams::for_budget(double duration_ceiling, std::int64_t particles) {
  PenaltyParams p;
  p.min_penalty = 1e4 * duration_ceiling;
  p.slope = p.min_penalty / static_cast<double>(particles);
  return p;
}

void PenaltyParams::validate(double max_violation_free_cost) const {
  if (!(min_penalty > 0.0)) throw std::invalid_argument("PenaltyParams: min_penalty must be > 0");
  if (slope < 0.0) throw std::invalid_argument("PenaltyParams: slope must be >= 0");
  if (min_penalty <= max_violation_free_cost)
    throw std::invalid_argument(
        "PenaltyParams: min_penalty must exceed the maximum violation-free cost");
}

std::string ViolationReport::to_json() const {
  nlohmann::json j;
  j["violations"] = violations;
  j["particles"] = particles;
  j["ratio"] = ratio();
  if (!first_violation_step.empty()) j["first_violation_step"] = first_violation_step;
  return j.dump();
}

void ViolationReport::write_steps_csv(std::ostream& out) const {
  out << "particle,first_violation_step\n";
  for (std::size_t i = 0; i < first_violation_step.size(); ++i)
    out << i << "," << first_violation_step[i] << "\n";
}

ViolationReport count_violations(const Trajectory& traj, const ParticleSet& particles,
                                 const CollisionGeometry& geometry, double check_horizon,
                                 bool record_steps) {
  geometry.validate(particles.obstacles);
  if (traj.dof() != 2)
    throw std::invalid_argument("count_violations: expects a planar trajectory");
  if (!(check_horizon > 0.0))
    throw std::invalid_argument("count_violations: check_horizon must be > 0");
  if (!particles.static_rollouts &&
      check_horizon > particles.horizon_seconds() + 1e-9)
    throw std::invalid_argument("count_violations: check_horizon exceeds the rollout horizon");

  const int m = particles.obstacles;
  const double dt = particles.dt;
  const double duration = traj.duration();

  std::vector<double> rr2(m);
  for (int o = 0; o < m; ++o) {
    const double r = geometry.robot_radius + geometry.obstacle_radii[o];
    rr2[o] = r * r;
  }

  // Robot positions at the rollout instants (j+1)*dt, clamped to the end of
  // the plan. For static rollouts the scan can stop once the plan has ended:
  // all later checks repeat the same robot/obstacle pair.
  int scan_steps;
  if (particles.static_rollouts) {
    const double t_last = std::min(check_horizon, duration);
    scan_steps = static_cast<int>(std::ceil(t_last / dt - 1e-9));
    scan_steps = std::max(scan_steps, 1);
  } else {
    scan_steps = std::min(particles.horizon_steps,
                          static_cast<int>(std::floor(check_horizon / dt + 1e-9)));
  }

  const int wdim = traj.basis().weight_dim();
  std::vector<double> row(wdim);
  std::vector<double> robot(static_cast<std::size_t>(scan_steps) * 2);
  const auto& weights = traj.weights();
  for (int j = 0; j < scan_steps; ++j) {
    const double t = std::min((j + 1) * dt, duration);
    traj.basis().position_row(std::min(t / duration, 1.0), row.data());
    double x = 0.0, y = 0.0;
    for (int c = 0; c < wdim; ++c) {
      x += row[c] * weights(c, 0);
      y += row[c] * weights(c, 1);
    }
    robot[2 * j] = x;
    robot[2 * j + 1] = y;
  }

  ViolationReport report;
  report.particles = particles.particles;
  if (record_steps) report.first_violation_step.assign(particles.particles, -1);

  const double* data = particles.data.data();
  const int stored_steps = particles.steps;
  for (int i = 0; i < particles.particles; ++i) {
    bool hit = false;
    const double* rollout = data + static_cast<std::size_t>(i) * stored_steps * m * 2;
    for (int j = 0; j < scan_steps && !hit; ++j) {
      const double rx = robot[2 * j];
      const double ry = robot[2 * j + 1];
      const int jj = particles.static_rollouts ? 0 : j;
      const double* row = rollout + static_cast<std::size_t>(jj) * m * 2;
      for (int o = 0; o < m; ++o) {
        const double dx = rx - row[2 * o];
        const double dy = ry - row[2 * o + 1];
        if (dx * dx + dy * dy < rr2[o]) {
          hit = true;
          if (record_steps) report.first_violation_step[i] = j;
          break;
        }
      }
    }
    if (hit) ++report.violations;
  }
  return report;
}

double penalty(std::int64_t violations, std::int64_t threshold, const PenaltyParams& params) {
  if (violations <= threshold) return 0.0;
  return params.min_penalty +
         params.slope * static_cast<double>(violations - threshold - 1);
}

ViolationReport nominal_point_violations(double clearance, const ParticleSet& particles,
                                         const Eigen::Vector2d& nominal_point) {
  ViolationReport report;
  report.particles = particles.particles;
  for (int i = 0; i < particles.particles; ++i) {
    double reach = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < particles.obstacles; ++o) {
      for (int j = 0; j < particles.steps; ++j) {
        const double* p = particles.at(i, o, j);
        const double dx = p[0] - nominal_point.x();
        const double dy = p[1] - nominal_point.y();
        reach = std::max(reach, std::sqrt(dx * dx + dy * dy) + particles.radii[o]);
      }
    }
    if (reach > clearance) ++report.violations;
  }
  return report;
}

double evaluate_solution(const Trajectory& traj, const uncertainty::EnvironmentModel& model,
                         const CollisionGeometry& geometry, std::int64_t n_eval,
                         std::uint64_t seed, double check_horizon) {
  const double dt = uncertainty::model_dt(model);
  const int horizon_steps =
      std::max(1, static_cast<int>(std::ceil(check_horizon / dt - 1e-9)));
  const auto particles =
      uncertainty::sample_particles(model, static_cast<int>(n_eval), horizon_steps, seed);
  return count_violations(traj, particles, geometry, check_horizon).ratio();
}

}  // namespace ccvpsto::chance
