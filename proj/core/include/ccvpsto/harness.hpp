#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccvpsto/mpc.hpp"
#include "ccvpsto/planner.hpp"

namespace ccvpsto::harness {

// Nearest-rank percentile: sorted[ceil(q * n) - 1], 1-indexed and clamped.
double percentile(std::vector<double> samples, double q);

// Serializes a double to the shortest round-trip decimal form, so reports
// are byte-stable across runs and worker counts.
std::string format_double(double value);

struct OfflineCell {
  std::int64_t particles = 100;  // N used in the optimisation
  double eta = 0.1;
};

struct OfflineStudyConfig {
  int runs = 2000;                    // N_exp planner runs per cell
  std::int64_t eval_particles = 2000; // N_eval fresh particles per run
  std::vector<OfflineCell> grid;
  double beta = 0.05;
  std::uint64_t seed = 1;

  // Canonical static-Gaussian environment: the straight start-goal line
  // crosses the 2-sigma region, so the eta trade-off is active.
  uncertainty::StaticGaussianModel obstacle;
  double robot_radius = 0.25;
  Eigen::Vector2d start{1.0, 5.0};
  Eigen::Vector2d goal{9.0, 5.0};
  planner::PlannerConfig planner;  // template; chance spec overridden per cell
  bool keep_raw = true;

  static OfflineStudyConfig desk_scale();
  static OfflineStudyConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct OfflineCellReport {
  std::int64_t particles = 0;
  double eta = 0.0;
  double eta_binom = 0.0;                // k_beta / N
  std::optional<double> eta_rad;         // continuous Rademacher bound, d = 3
  double eta_avg = 0.0;                  // mean of the evaluated ratios
  double eta_percentile = 0.0;           // nearest-rank (1 - beta) percentile
  double beta_hat = 0.0;                 // fraction with eta_hat > eta
  std::vector<double> raw;               // per-run eta_hat, in run order
};

struct StudyReport {
  OfflineStudyConfig config;
  std::vector<OfflineCellReport> cells;
  void write_csv(std::ostream& out) const;
  void write_raw_csv(std::ostream& out) const;
};

StudyReport run_offline_study(const OfflineStudyConfig& config, int jobs);

struct ThresholdRow {
  std::int64_t particles = 0;
  double eta = 0.0;
  std::optional<std::int64_t> k_beta;
  std::optional<std::int64_t> k_rad;
  std::optional<std::int64_t> k_rad_boole;
  std::int64_t k_naive = 0;
  double eta_binom = 0.0;             // k_beta / N
  std::optional<double> eta_rad;      // continuous bound, n/a when negative
};

// Analytic table for d = 3 (planar problems), m = H = 1.
std::vector<ThresholdRow> emit_threshold_table(const std::vector<std::int64_t>& particle_counts,
                                               const std::vector<double>& etas, double beta);
void write_threshold_csv(const std::vector<ThresholdRow>& rows, std::ostream& out);

struct MpcStudyConfig {
  std::vector<std::string> envs{"env0", "env1", "env2"};
  std::vector<double> etas{0.05, 0.2, 0.4, 0.6, 0.8};
  int episodes = 200;
  std::uint64_t seed = 1;
  bool include_ml_baseline = true;
};

struct MpcCellResult {
  std::string env;
  std::optional<double> eta;  // nullopt for the ML baseline
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double straight_line_duration = 0.0;
  std::vector<double> durations;      // successful episodes, in episode order
  std::vector<double> min_distances;  // successful episodes
  double median_duration() const;
  double median_min_distance() const;
};

std::vector<MpcCellResult> run_mpc_study(const MpcStudyConfig& config, int jobs);
void write_mpc_csv(const std::vector<MpcCellResult>& cells, std::ostream& out);
// Per-cell distributions for box plots.
std::string mpc_study_to_json(const std::vector<MpcCellResult>& cells);

}  // namespace ccvpsto::harness
