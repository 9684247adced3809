#include "ccvpsto/planner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ccvpsto/parallel.hpp"
#include "ccvpsto/rng.hpp"

namespace ccvpsto::planner {

using trajectory::BoundaryConditions;
using trajectory::Trajectory;
using trajectory::TrajectorySynthesizer;
using uncertainty::ParticleSet;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kParticleStream = 0x70617274;  // particle sampling tag
}  // namespace

void PlannerConfig::validate() const {
  if (via_count < 1) throw std::invalid_argument("PlannerConfig: via_count must be >= 1");
  if (max_iterations < 1)
    throw std::invalid_argument("PlannerConfig: max_iterations must be >= 1");
  if (population < 4) throw std::invalid_argument("PlannerConfig: population must be >= 4");
  chance.validate();
  policy.validate();
  if (!(check_horizon > 0.0))
    throw std::invalid_argument("PlannerConfig: check_horizon must be > 0");
}

SearchDistribution init_distribution(const PlannerConfig& config,
                                     const BoundaryConditions& bc) {
  config.validate();
  bc.validate();
  const int dof = bc.dof();
  const int n = config.via_count;
  VectorXd mean(n * dof);
  for (int v = 0; v < n; ++v) {
    const double s = static_cast<double>(v + 1) / static_cast<double>(n + 1);
    const VectorXd q = bc.start + s * (bc.goal - bc.start);
    mean.segment(v * dof, dof) = q;
  }
  const double sigma0 = std::max((bc.goal - bc.start).norm() * config.init_sigma_scale,
                                 config.init_sigma_floor);
  return make_distribution(std::move(mean), sigma0);
}

double candidate_cost(double duration, double goal_distance, std::int64_t violations,
                      std::int64_t threshold, const PlannerConfig& config) {
  return duration + config.goal_weight * goal_distance +
         chance::penalty(violations, threshold, config.penalty);
}

double cost(const Trajectory& traj, const ParticleSet& particles,
            const chance::CollisionGeometry& geometry, std::int64_t threshold,
            const Eigen::Vector2d& goal, const PlannerConfig& config) {
  const auto report = chance::count_violations(traj, particles, geometry,
                                               config.check_horizon);
  const double goal_distance = (traj.end() - goal).norm();
  return candidate_cost(traj.duration(), goal_distance, report.violations, threshold, config);
}

std::string PlanResult::to_json() const {
  nlohmann::json j;
  j["best_cost"] = best_cost;
  j["best_violations"] = best_violations;
  j["threshold"] = threshold;
  j["feasible"] = feasible;
  j["waiting_selected"] = waiting_selected;
  if (final_mean_cost) j["final_mean_cost"] = *final_mean_cost;
  if (final_mean_violations) j["final_mean_violations"] = *final_mean_violations;
  j["trajectory"] = nlohmann::json::parse(trajectory::trajectory_to_json(best));
  auto log_rows = nlohmann::json::array();
  for (const auto& row : log)
    log_rows.push_back({{"iteration", row.iteration},
                        {"best_cost", row.best_cost},
                        {"best_k", row.best_violations},
                        {"sigma", row.sigma}});
  j["log"] = log_rows;
  return j.dump(2);
}

void PlanResult::write_log_csv(std::ostream& out) const {
  out << "iter,best_cost,best_k,sigma\n";
  for (const auto& row : log)
    out << row.iteration << "," << row.best_cost << "," << row.best_violations << ","
        << row.sigma << "\n";
}

namespace {

using Resampler = std::function<ParticleSet(int iteration)>;

PlanResult plan_impl(const PlannerConfig& config, const BoundaryConditions& bc,
                     const Eigen::Vector2d& goal, const ParticleSet& particles,
                     const chance::CollisionGeometry& geometry,
                     const std::optional<VectorXd>& warm_mean, const Resampler& resampler) {
  config.validate();
  bc.validate();
  const int dof = bc.dof();
  if (dof != 2) throw std::invalid_argument("plan: expects a planar problem");

  const std::int64_t threshold = calibration::resolve_threshold(config.policy, config.chance);
  const TrajectorySynthesizer synth(config.via_count);
  const auto params = CmaesParams::defaults(config.via_count * dof, config.population);

  SearchDistribution dist;
  if (warm_mean && warm_mean->size() == config.via_count * dof) {
    const double sigma0 = 0.5 * std::max((bc.goal - bc.start).norm() * config.init_sigma_scale,
                                         config.init_sigma_floor);
    dist = make_distribution(*warm_mean, sigma0);
  } else {
    dist = init_distribution(config, bc);
  }

  PlanResult result(trajectory::waiting_trajectory(
      bc.start, std::max(config.check_horizon, trajectory::kMinDuration)));
  result.threshold = threshold;
  result.particle_hash_before = particles.content_hash();
  result.best_cost = kInf;

  // Waiting candidates only make sense from rest; a nonzero current
  // velocity cannot be matched by a constant trajectory.
  const bool can_wait = config.inject_waiting && bc.start_velocity.norm() < 1e-9;
  if (can_wait) {
    const auto waiting =
        trajectory::waiting_trajectory(bc.start, config.check_horizon);
    const auto report =
        chance::count_violations(waiting, particles, geometry, config.check_horizon);
    const double c = candidate_cost(config.check_horizon, (bc.start - goal).norm(),
                                    report.violations, threshold, config);
    if (c < result.best_cost) {
      result.best = waiting;
      result.best_cost = c;
      result.best_violations = report.violations;
      result.waiting_selected = true;
    }
  }

  struct Candidate {
    double cost = kInf;
    std::int64_t violations = 0;
    double duration = 0.0;
    bool valid = false;
  };

  std::optional<ParticleSet> resampled;
  const ParticleSet* active = &particles;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (resampler && iter > 0) {
      resampled = resampler(iter);
      active = &*resampled;
    }
    const MatrixXd population = sample_population(dist, params, config.seed, iter);
    std::vector<Candidate> evals(config.population);
    parallel_for(config.population, config.jobs, [&](int c) {
      Eigen::Map<const MatrixXd> via(population.col(c).data(), dof, config.via_count);
      Candidate& out = evals[c];
      try {
        const MatrixXd via_points = via.transpose();
        const double duration = synth.min_duration(via_points, bc, config.limits);
        const Trajectory traj = synth.synthesize(via_points, bc, duration);
        const auto report =
            chance::count_violations(traj, *active, geometry, config.check_horizon);
        out.duration = duration;
        out.violations = report.violations;
        out.cost = candidate_cost(duration, (traj.end() - goal).norm(), report.violations,
                                  threshold, config);
        out.valid = true;
      } catch (const trajectory::InfeasibleError&) {
        out.valid = false;
        out.cost = kInf;
      }
    });

    std::vector<double> costs(config.population);
    for (int c = 0; c < config.population; ++c) costs[c] = evals[c].cost;

    int best_index = -1;
    for (int c = 0; c < config.population; ++c) {
      if (evals[c].valid && evals[c].cost < result.best_cost) {
        result.best_cost = evals[c].cost;
        best_index = c;
      }
    }
    if (best_index >= 0) {
      Eigen::Map<const MatrixXd> via(population.col(best_index).data(), dof, config.via_count);
      result.best = synth.synthesize(via.transpose(), bc, evals[best_index].duration);
      result.best_violations = evals[best_index].violations;
      result.waiting_selected = false;
    }

    result.log.push_back({iter, result.best_cost, result.best_violations, dist.sigma});
    cmaes_update(dist, params, population, costs);
  }

  // Alg. 1 returns the final-mean trajectory. The mean averages away the
  // sample noise that the elitist best exploits, which keeps the accepted
  // solutions calibrated; the elitist best takes over only when the mean
  // lands on a penalized or unsynthesizable point of the discontinuous
  // landscape.
  try {
    Eigen::Map<const MatrixXd> via(dist.mean.data(), dof, config.via_count);
    const MatrixXd via_points = via.transpose();
    const double duration = synth.min_duration(via_points, bc, config.limits);
    const Trajectory mean_traj = synth.synthesize(via_points, bc, duration);
    const auto report =
        chance::count_violations(mean_traj, *active, geometry, config.check_horizon);
    const double mean_cost = candidate_cost(
        duration, (mean_traj.end() - goal).norm(), report.violations, threshold, config);
    result.final_mean = mean_traj;
    result.final_mean_cost = mean_cost;
    result.final_mean_violations = report.violations;
    const bool mean_feasible = report.violations <= threshold;
    const bool best_feasible = result.best_violations <= threshold;
    if ((mean_feasible && (!best_feasible || !config.prefer_elitist)) ||
        mean_cost < result.best_cost) {
      result.best = mean_traj;
      result.best_cost = mean_cost;
      result.best_violations = report.violations;
      result.waiting_selected = false;
    }
  } catch (const trajectory::InfeasibleError&) {
    // final mean not synthesizable; the elitist best stands
  }

  if (!(result.best_cost < kInf))
    throw std::runtime_error("plan: no feasible candidate was synthesized");

  result.feasible = result.best_violations <= threshold;
  result.particle_hash_after = particles.content_hash();
  return result;
}

}  // namespace

PlanResult plan(const PlannerConfig& config, const BoundaryConditions& bc,
                const Eigen::Vector2d& goal, const ParticleSet& particles,
                const chance::CollisionGeometry& geometry,
                const std::optional<VectorXd>& warm_mean) {
  if (config.resample_each_iteration)
    throw std::invalid_argument(
        "plan: resample_each_iteration needs a generative model; use the model overload");
  return plan_impl(config, bc, goal, particles, geometry, warm_mean, nullptr);
}

PlanResult plan(const PlannerConfig& config, const BoundaryConditions& bc,
                const Eigen::Vector2d& goal, const uncertainty::EnvironmentModel& model,
                double robot_radius) {
  const double dt = uncertainty::model_dt(model);
  const int horizon_steps =
      std::max(1, static_cast<int>(std::ceil(config.check_horizon / dt - 1e-9)));
  const int count = static_cast<int>(config.chance.particles);
  const auto particles = uncertainty::sample_particles(
      model, count, horizon_steps, Rng::stream(config.seed, kParticleStream).next());
  const auto geometry = chance::CollisionGeometry::for_model(model, robot_radius);
  Resampler resampler;
  if (config.resample_each_iteration) {
    resampler = [&model, count, horizon_steps, &config](int iteration) {
      return uncertainty::sample_particles(
          model, count, horizon_steps,
          Rng::stream(config.seed, kParticleStream, static_cast<std::uint64_t>(iteration))
              .next());
    };
  }
  return plan_impl(config, bc, goal, particles, geometry, std::nullopt, resampler);
}

}  // namespace ccvpsto::planner
