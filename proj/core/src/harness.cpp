#include "ccvpsto/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ccvpsto/parallel.hpp"

namespace ccvpsto::harness {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile: empty sample set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q must be in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<std::int64_t>(samples.size());
  std::int64_t rank = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::int64_t>(rank, 1, n);
  return samples[static_cast<std::size_t>(rank - 1)];
}

std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

OfflineStudyConfig OfflineStudyConfig::desk_scale() {
  OfflineStudyConfig cfg;
  cfg.runs = 2000;
  cfg.eval_particles = 2000;
  cfg.grid = {{100, 0.05}, {100, 0.1}, {100, 0.2}};
  cfg.beta = 0.05;
  // The blob blocks the corridor (radius comparable to the detour scale)
  // while sigma keeps the robot tube wide relative to the particle spacing
  // in the tail, so accepted solutions stay calibrated instead of threading
  // between individual samples.
  cfg.obstacle.mean = Eigen::Vector2d(5.0, 5.0);
  cfg.obstacle.covariance = 0.64 * Eigen::Matrix2d::Identity();  // sigma = 0.8
  cfg.obstacle.radius = 1.0;
  cfg.robot_radius = 0.25;
  cfg.planner.via_count = 2;
  cfg.planner.population = 32;
  cfg.planner.max_iterations = 60;
  cfg.planner.limits = trajectory::KinodynamicLimits::symmetric(2, 2.0, 5.0);
  cfg.planner.penalty = chance::PenaltyParams::for_budget(30.0, 100);
  cfg.planner.check_horizon = 30.0;
  cfg.planner.goal_weight = 0.0;
  return cfg;
}

std::string OfflineStudyConfig::to_json() const {
  nlohmann::json j;
  j["runs"] = runs;
  j["eval_particles"] = eval_particles;
  j["beta"] = beta;
  j["seed"] = seed;
  auto grid_json = nlohmann::json::array();
  for (const auto& cell : grid) grid_json.push_back({{"N", cell.particles}, {"eta", cell.eta}});
  j["grid"] = grid_json;
  j["obstacle"] = {{"mean", {obstacle.mean.x(), obstacle.mean.y()}},
                   {"covariance",
                    {obstacle.covariance(0, 0), obstacle.covariance(0, 1),
                     obstacle.covariance(1, 0), obstacle.covariance(1, 1)}},
                   {"radius", obstacle.radius}};
  j["robot_radius"] = robot_radius;
  j["start"] = {start.x(), start.y()};
  j["goal"] = {goal.x(), goal.y()};
  j["planner"] = {{"via_count", planner.via_count},
                  {"population", planner.population},
                  {"max_iterations", planner.max_iterations}};
  return j.dump(2);
}

OfflineStudyConfig OfflineStudyConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open study config: " + path);
  nlohmann::json j;
  in >> j;
  OfflineStudyConfig cfg = desk_scale();
  cfg.runs = j.value("runs", cfg.runs);
  cfg.eval_particles = j.value("eval_particles", cfg.eval_particles);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("grid")) {
    cfg.grid.clear();
    for (const auto& cell : j.at("grid"))
      cfg.grid.push_back({cell.at("N").get<std::int64_t>(), cell.at("eta").get<double>()});
  }
  if (j.contains("obstacle")) {
    const auto& o = j.at("obstacle");
    cfg.obstacle.mean =
        Eigen::Vector2d(o.at("mean")[0].get<double>(), o.at("mean")[1].get<double>());
    if (o.contains("covariance")) {
      const auto& c = o.at("covariance");
      cfg.obstacle.covariance << c[0].get<double>(), c[1].get<double>(), c[2].get<double>(),
          c[3].get<double>();
    }
    cfg.obstacle.radius = o.value("radius", cfg.obstacle.radius);
  }
  cfg.robot_radius = j.value("robot_radius", cfg.robot_radius);
  if (j.contains("start"))
    cfg.start = Eigen::Vector2d(j.at("start")[0].get<double>(), j.at("start")[1].get<double>());
  if (j.contains("goal"))
    cfg.goal = Eigen::Vector2d(j.at("goal")[0].get<double>(), j.at("goal")[1].get<double>());
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    cfg.planner.via_count = p.value("via_count", cfg.planner.via_count);
    cfg.planner.population = p.value("population", cfg.planner.population);
    cfg.planner.max_iterations = p.value("max_iterations", cfg.planner.max_iterations);
  }
  return cfg;
}

StudyReport run_offline_study(const OfflineStudyConfig& config, int jobs) {
  StudyReport report;
  report.config = config;
  const uncertainty::EnvironmentModel model = config.obstacle;
  const auto geometry = chance::CollisionGeometry::for_model(model, config.robot_radius);

  for (std::size_t cell_index = 0; cell_index < config.grid.size(); ++cell_index) {
    const auto& cell = config.grid[cell_index];
    OfflineCellReport out;
    out.particles = cell.particles;
    out.eta = cell.eta;

    const calibration::ConfidenceSpec spec{cell.eta, config.beta, cell.particles};
    const auto kb = calibration::k_beta(spec);
    out.eta_binom = static_cast<double>(kb.value_or(0)) / static_cast<double>(cell.particles);
    const double margin = calibration::rademacher_margin(spec, 2, 1, 1);
    if (margin >= 0.0) out.eta_rad = margin;

    planner::PlannerConfig planner_config = config.planner;
    planner_config.chance = spec;
    planner_config.policy = calibration::ThresholdPolicy::binomial();

    const auto bc = trajectory::BoundaryConditions::rest_to_rest(config.start, config.goal);
    std::vector<double> ratios(static_cast<std::size_t>(config.runs));
    parallel_for(config.runs, jobs, [&](int run) {
      const std::uint64_t run_seed =
          Rng::stream(config.seed, cell_index, static_cast<std::uint64_t>(run)).next();
      planner::PlannerConfig run_config = planner_config;
      run_config.seed = run_seed;
      const auto particles = uncertainty::sample_particles(
          model, static_cast<int>(cell.particles), 1,
          Rng::stream(run_seed, 0x706c616e).next());
      const auto result = planner::plan(run_config, bc, config.goal, particles, geometry);
      ratios[static_cast<std::size_t>(run)] = chance::evaluate_solution(
          result.best, model, geometry, config.eval_particles,
          Rng::stream(run_seed, 0x6576616c).next(), planner_config.check_horizon);
    });

    double sum = 0.0;
    std::int64_t exceed = 0;
    for (double r : ratios) {
      sum += r;
      if (r > cell.eta) ++exceed;
    }
    out.eta_avg = sum / static_cast<double>(config.runs);
    out.eta_percentile = percentile(ratios, 1.0 - config.beta);
    out.beta_hat = static_cast<double>(exceed) / static_cast<double>(config.runs);
    if (config.keep_raw) out.raw = std::move(ratios);
    report.cells.push_back(std::move(out));
  }
  return report;
}

void StudyReport::write_csv(std::ostream& out) const {
  out << "N,eta,eta_binom,eta_rad,eta_avg,eta_percentile,beta_hat\n";
  for (const auto& cell : cells) {
    out << cell.particles << "," << format_double(cell.eta) << ","
        << format_double(cell.eta_binom) << ","
        << (cell.eta_rad ? format_double(*cell.eta_rad) : "n/a") << ","
        << format_double(cell.eta_avg) << "," << format_double(cell.eta_percentile) << ","
        << format_double(cell.beta_hat) << "\n";
  }
}

void StudyReport::write_raw_csv(std::ostream& out) const {
  out << "N,eta,run,eta_hat\n";
  for (const auto& cell : cells) {
    for (std::size_t run = 0; run < cell.raw.size(); ++run) {
      out << cell.particles << "," << format_double(cell.eta) << "," << run << ","
          << format_double(cell.raw[run]) << "\n";
    }
  }
}

std::vector<ThresholdRow> emit_threshold_table(const std::vector<std::int64_t>& particle_counts,
                                               const std::vector<double>& etas, double beta) {
  std::vector<ThresholdRow> rows;
  for (const auto n : particle_counts) {
    for (const double eta : etas) {
      ThresholdRow row;
      row.particles = n;
      row.eta = eta;
      const calibration::ConfidenceSpec spec{eta, beta, n};
      row.k_beta = calibration::k_beta(spec);
      row.k_rad = calibration::k_beta_rad(spec, 2, 1, 1);
      row.k_rad_boole = calibration::k_beta_rad_boole(spec, 2, 1, 1);
      row.k_naive =
          calibration::resolve_threshold(calibration::ThresholdPolicy::naive(), spec);
      row.eta_binom =
          static_cast<double>(row.k_beta.value_or(0)) / static_cast<double>(n);
      const double margin = calibration::rademacher_margin(spec, 2, 1, 1);
      if (margin >= 0.0) row.eta_rad = margin;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_threshold_csv(const std::vector<ThresholdRow>& rows, std::ostream& out) {
  out << "N,eta,k_naive,k_beta,k_rad,k_rad_boole,eta_binom,eta_rad\n";
  for (const auto& row : rows) {
    out << row.particles << "," << format_double(row.eta) << "," << row.k_naive << ",";
    if (row.k_beta) out << *row.k_beta;
    else out << "n/a";
    out << ",";
    if (row.k_rad) out << *row.k_rad;
    else out << "n/a";
    out << ",";
    if (row.k_rad_boole) out << *row.k_rad_boole;
    else out << "n/a";
    out << "," << format_double(row.eta_binom) << ","
        << (row.eta_rad ? format_double(*row.eta_rad) : "n/a") << "\n";
  }
}

double MpcCellResult::median_duration() const {
  if (durations.empty()) return std::numeric_limits<double>::quiet_NaN();
  return percentile(durations, 0.5);
}

double MpcCellResult::median_min_distance() const {
  if (min_distances.empty()) return std::numeric_limits<double>::quiet_NaN();
  return percentile(min_distances, 0.5);
}

std::vector<MpcCellResult> run_mpc_study(const MpcStudyConfig& config, int jobs) {
  struct Cell {
    std::string env;
    std::optional<double> eta;
  };
  std::vector<Cell> cells;
  for (const auto& env : config.envs) {
    for (const double eta : config.etas) cells.push_back({env, eta});
    if (config.include_ml_baseline) cells.push_back({env, std::nullopt});
  }

  std::vector<MpcCellResult> results;
  for (std::size_t cell_index = 0; cell_index < cells.size(); ++cell_index) {
    const auto& cell = cells[cell_index];
    const auto env_config = uncertainty::EnvironmentConfig::is_preset(cell.env)
                                ? uncertainty::EnvironmentConfig::preset(cell.env)
                                : uncertainty::EnvironmentConfig::from_json_file(cell.env);
    mpc::MpcConfig mpc_config = mpc::make_mpc_config(env_config, cell.eta.value_or(0.0));
    mpc_config.ml_baseline = !cell.eta.has_value();

    MpcCellResult out;
    out.env = env_config.id;
    out.eta = cell.eta;
    out.episodes = config.episodes;

    struct EpisodeOutcome {
      bool success = false, collided = false;
      double duration = 0.0, min_distance = 0.0, straight = 0.0;
    };
    std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(config.episodes));
    parallel_for(config.episodes, jobs, [&](int episode) {
      // The episode seed depends on (env, episode) only, so every eta-cell
      // and the ML baseline replay the same ground-truth worlds, pairing the
      // comparisons across cells.
      const std::uint64_t episode_seed =
          Rng::stream(config.seed, fnv1a(env_config.id), static_cast<std::uint64_t>(episode))
              .next();
      const auto trace = mpc::run_episode(mpc_config, episode_seed);
      auto& o = outcomes[static_cast<std::size_t>(episode)];
      o.success = trace.metrics.success;
      o.collided = trace.metrics.collided;
      o.duration = trace.metrics.duration;
      o.min_distance = trace.metrics.min_distance;
      o.straight = trace.straight_line_duration;
    });

    int successes = 0, collisions = 0;
    for (const auto& o : outcomes) {
      if (o.collided) ++collisions;
      if (o.success) {
        ++successes;
        out.durations.push_back(o.duration);
        out.min_distances.push_back(o.min_distance);
      }
      out.straight_line_duration = o.straight;
    }
    out.success_rate = static_cast<double>(successes) / config.episodes;
    out.collision_rate = static_cast<double>(collisions) / config.episodes;
    results.push_back(std::move(out));
  }
  return results;
}

void write_mpc_csv(const std::vector<MpcCellResult>& cells, std::ostream& out) {
  out << "env,eta,episodes,success_rate,collision_rate,median_duration,median_min_distance,"
         "t_straight\n";
  for (const auto& cell : cells) {
    out << cell.env << "," << (cell.eta ? format_double(*cell.eta) : "ml") << ","
        << cell.episodes << "," << format_double(cell.success_rate) << ","
        << format_double(cell.collision_rate) << ","
        << (cell.durations.empty() ? "n/a" : format_double(cell.median_duration())) << ","
        << (cell.min_distances.empty() ? "n/a" : format_double(cell.median_min_distance()))
        << "," << format_double(cell.straight_line_duration) << "\n";
  }
}

std::string mpc_study_to_json(const std::vector<MpcCellResult>& cells) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& cell : cells) {
    nlohmann::json c;
    c["env"] = cell.env;
    if (cell.eta)
      c["eta"] = *cell.eta;
    else
      c["eta"] = "ml";
    c["episodes"] = cell.episodes;
    c["success_rate"] = cell.success_rate;
    c["collision_rate"] = cell.collision_rate;
    c["durations"] = cell.durations;
    c["min_distances"] = cell.min_distances;
    c["t_straight"] = cell.straight_line_duration;
    j.push_back(std::move(c));
  }
  return j.dump(2);
}

}  // namespace ccvpsto::harness
