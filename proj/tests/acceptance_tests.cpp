// Acceptance suite: one criterion per test case, each printing a single
// PASS/FAIL line. The two study criteria are long-running; the others are
// seconds. Run order follows the numbering.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "ccvpsto/harness.hpp"
#include "ccvpsto/parallel.hpp"
#include "ccvpsto/planner.hpp"
#include "ccvpsto/rng.hpp"
#include "spline_oracle.hpp"

using namespace ccvpsto;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, const char* name, bool pass, double elapsed) {
  std::printf("criterion %2d (%s): %s  [%.2f s]\n", criterion, name, pass ? "PASS" : "FAIL",
              elapsed);
  std::fflush(stdout);
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

const std::vector<double> kTableEtas{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.6, 0.8};

}  // namespace

TEST_CASE("criterion 1: eta_binom column of the threshold table, exact at 3 decimals") {
  Stopwatch watch;
  const auto rows = harness::emit_threshold_table({100, 1000}, kTableEtas, 0.05);
  const std::vector<double> expected_100{0.01, 0.04, 0.08, 0.13, 0.17,
                                         0.22, 0.26, 0.31, 0.51, 0.72};
  const std::vector<double> expected_1000{0.038, 0.084, 0.131, 0.178, 0.227,
                                          0.275, 0.324, 0.374, 0.573, 0.778};
  bool pass = rows.size() == 20;
  for (std::size_t i = 0; pass && i < 10; ++i) {
    pass = round3(rows[i].eta_binom) == expected_100[i] &&
           round3(rows[10 + i].eta_binom) == expected_1000[i];
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 1.0;
  report(1, "threshold table eta_binom exactness", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 2: eta_rad column with d=3, m=H=1; n/a maps to infeasible") {
  Stopwatch watch;
  const auto rows = harness::emit_threshold_table({100, 1000}, kTableEtas, 0.05);
  // n/a everywhere except (100, 0.8) and (1000, eta >= 0.25)
  const std::vector<double> expected_1000{0.009, 0.059, 0.109, 0.159, 0.359, 0.559};
  bool pass = true;
  for (std::size_t i = 0; i < 9; ++i) pass = pass && !rows[i].eta_rad.has_value();
  pass = pass && rows[9].eta_rad && round3(*rows[9].eta_rad) == 0.158;
  for (std::size_t i = 0; i < 4; ++i) pass = pass && !rows[10 + i].eta_rad.has_value();
  for (std::size_t i = 4; i < 10; ++i)
    pass = pass && rows[10 + i].eta_rad &&
           round3(*rows[10 + i].eta_rad) == expected_1000[i - 4];
  // infeasible cells also carry no integer threshold
  for (const auto& row : rows)
    pass = pass && (row.eta_rad.has_value() == row.k_rad.has_value());
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 1.0;
  report(2, "threshold table eta_rad exactness", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 3: statistical rejection guarantee on a synthetic indicator") {
  Stopwatch watch;
  const std::int64_t n = 100;
  const double eta = 0.1, beta = 0.05, p = eta + 0.02;
  const auto kb = calibration::k_beta({eta, beta, n});
  bool pass = kb.has_value();
  double fraction = 1.0;
  if (pass) {
    const int trials = 10000;
    int accepted = 0;
    Rng rng(112233);
    for (int t = 0; t < trials; ++t) {
      std::int64_t k = 0;
      for (std::int64_t i = 0; i < n; ++i)
        if (rng.uniform01() < p) ++k;
      if (k <= *kb) ++accepted;
    }
    fraction = static_cast<double>(accepted) / trials;
    pass = fraction <= beta + 0.01;
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 10.0;
  report(3, "prop-1 synthetic acceptance fraction", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 4: threshold ordering across the whole table grid") {
  Stopwatch watch;
  bool pass = true;
  const auto value = [](const std::optional<std::int64_t>& v) {
    return v ? *v : std::int64_t{-1};  // Infeasible orders below 0
  };
  for (const std::int64_t n : {std::int64_t{100}, std::int64_t{1000}}) {
    for (const double eta : kTableEtas) {
      const calibration::ConfidenceSpec spec{eta, 0.05, n};
      const auto boole = calibration::k_beta_rad_boole(spec, 2, 1, 1);
      const auto rad = calibration::k_beta_rad(spec, 2, 1, 1);
      const auto kb = calibration::k_beta(spec);
      const auto naive =
          calibration::resolve_threshold(calibration::ThresholdPolicy::naive(), spec);
      pass = pass && value(boole) <= value(rad) && value(rad) <= value(kb) &&
             value(kb) <= naive;
    }
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 1.0;
  report(4, "ordering boole <= rad <= k_beta <= naive", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 5: spline synthesis against the dense QP oracle, 100 fuzz cases") {
  Stopwatch watch;
  Rng rng(5150);
  bool pass = true;
  for (int trial = 0; trial < 100 && pass; ++trial) {
    const auto inst = testing::random_spline_instance(rng, trial % 2 == 0);
    const double duration = rng.uniform(0.5, 4.0);
    const auto traj =
        trajectory::synthesize(trajectory::ViaPoints{inst.via, inst.timings}, inst.bc, duration);
    const int dof = inst.bc.dof();

    for (int i = 0; i < inst.via.rows() && pass; ++i) {
      const auto q = traj.position_at_phase(inst.timings[i]);
      for (int d = 0; d < dof; ++d) pass = pass && std::abs(q[d] - inst.via(i, d)) < 1e-9;
    }

    double oracle_effort = 0.0;
    for (int d = 0; d < dof; ++d) {
      const auto oracle = testing::make_oracle(inst.via, inst.timings, inst.bc, duration, d);
      oracle_effort += oracle.effort();
      for (int g = 0; g <= 100 && pass; ++g) {
        const double s = g / 100.0;
        pass = pass && std::abs(traj.position_at_phase(s)[d] - oracle.position(s)) < 1e-8;
      }
    }
    const double denom = std::max(oracle_effort, 1e-12);
    pass = pass && std::abs(traj.effort_phase() - oracle_effort) / denom < 1e-7;

    // finite differences away from the knots
    double max_vel = 1e-9;
    for (int g = 0; g <= 50; ++g)
      max_vel = std::max(max_vel,
                         traj.velocity_at_phase(0.02 + 0.96 * g / 50.0).cwiseAbs().maxCoeff());
    const double h = 1e-5;
    for (int g = 0; g < 10 && pass; ++g) {
      const double s = g / 10.0 + 0.0137;
      const VectorXd fd =
          (traj.position_at_phase(s + h) - traj.position_at_phase(s - h)) / (2.0 * h * duration);
      for (int d = 0; d < dof; ++d)
        pass = pass && std::abs(fd[d] - traj.velocity_at_phase(s)[d]) < 1e-6 * max_vel;
    }
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 30.0;
  report(5, "spline oracle fuzz", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 6: minimal duration analytic case and sharpness under scaling") {
  Stopwatch watch;
  VectorXd q0(1), qT(1);
  q0 << 0.0;
  qT << 1.0;
  const auto analytic_bc = trajectory::BoundaryConditions::rest_to_rest(q0, qT);
  const double t_star = trajectory::min_duration(
      trajectory::ViaPoints::none(1), analytic_bc,
      trajectory::KinodynamicLimits::symmetric(1, 1.5, 6.0));
  bool pass = std::abs(t_star - 1.0) < 1e-3;

  Rng rng(6006);
  int fuzzed = 0;
  while (fuzzed < 100 && pass) {
    const auto inst = testing::random_spline_instance(rng, true);
    const int dof = inst.bc.dof();
    const auto limits = trajectory::KinodynamicLimits::symmetric(dof, 1.2, 3.0);
    const trajectory::ViaPoints via{inst.via, inst.timings};
    const double t = trajectory::min_duration(via, inst.bc, limits);
    if (t <= trajectory::kMinDuration * 1.5) continue;  // no binding limit
    ++fuzzed;
    const auto shrunk = trajectory::synthesize(via, inst.bc, 0.999 * t);
    const MatrixXd vel = shrunk.basis().grid_velocity() * shrunk.weights() / shrunk.duration();
    const MatrixXd acc = shrunk.basis().grid_acceleration() * shrunk.weights() /
                         (shrunk.duration() * shrunk.duration());
    bool violated = false;
    for (int g = 0; g < trajectory::SplineBasis::kCheckGridSize && !violated; ++g) {
      for (int d = 0; d < dof && !violated; ++d) {
        violated = vel(g, d) > limits.vel_max[d] || vel(g, d) < limits.vel_min[d] ||
                   acc(g, d) > limits.acc_max[d] || acc(g, d) < limits.acc_min[d];
      }
    }
    pass = pass && violated;
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 10.0;
  report(6, "min-duration analytic value and sharpness", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 7: desk-scale offline study calibration") {
  Stopwatch watch;
  harness::OfflineStudyConfig config = harness::OfflineStudyConfig::desk_scale();
  config.runs = 2000;
  config.eval_particles = 2000;
  config.grid = {{100, 0.05}, {100, 0.1}, {100, 0.2}};
  config.seed = 7;
  const auto study = harness::run_offline_study(config, hardware_jobs());
  bool pass = true;
  for (const auto& cell : study.cells) {
    const bool beta_ok = cell.beta_hat <= config.beta + 0.02;
    const bool percentile_ok = cell.eta_percentile <= cell.eta + 0.02;
    std::printf("  offline cell N=%lld eta=%.2f: eta_binom=%.3f eta_avg=%.4f "
                "eta_(1-beta)=%.4f beta_hat=%.4f  [beta_ok=%d percentile_ok=%d]\n",
                static_cast<long long>(cell.particles), cell.eta, cell.eta_binom, cell.eta_avg,
                cell.eta_percentile, cell.beta_hat, beta_ok, percentile_ok);
    pass = pass && beta_ok && percentile_ok;
  }
  const double elapsed = watch.seconds();
  report(7, "offline study beta_hat and percentile bounds", pass, elapsed);
  CHECK(pass);
}

TEST_CASE("criterion 8: joint counting equals the brute-force oracle, 200 instances") {
  Stopwatch watch;
  Rng rng(8814);
  bool pass = true;
  for (int trial = 0; trial < 200 && pass; ++trial) {
    const int n = 1 + static_cast<int>(rng.next() % 50);
    const int m = 1 + static_cast<int>(rng.next() % 3);
    const int h = 1 + static_cast<int>(rng.next() % 20);
    uncertainty::ParticleSet set;
    set.particles = n;
    set.obstacles = m;
    set.steps = h;
    set.horizon_steps = h;
    set.dt = 0.05;
    set.data.resize(static_cast<std::size_t>(n) * m * h * 2);
    set.radii.resize(static_cast<std::size_t>(m));
    for (int o = 0; o < m; ++o) set.radii[static_cast<std::size_t>(o)] = rng.uniform(0.2, 0.6);
    for (auto& v : set.data) v = rng.uniform(0.0, 10.0);

    const int n_via = static_cast<int>(rng.next() % 4);
    MatrixXd via(n_via, 2);
    for (int i = 0; i < n_via; ++i)
      via.row(i) << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0);
    VectorXd q0(2), qT(2);
    q0 << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0);
    qT << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0);
    const auto traj = trajectory::synthesize(
        trajectory::ViaPoints::uniform(via), trajectory::BoundaryConditions::rest_to_rest(q0, qT),
        rng.uniform(0.4, 2.0));

    chance::CollisionGeometry geom;
    geom.robot_radius = rng.uniform(0.2, 0.5);
    geom.obstacle_radii = set.radii;
    const double horizon = h * set.dt;

    // exhaustive (particle, step, obstacle) enumeration
    std::int64_t oracle = 0;
    for (int i = 0; i < n; ++i) {
      bool hit = false;
      for (int j = 0; j < h; ++j) {
        const double t = std::min((j + 1) * set.dt, traj.duration());
        const VectorXd q = traj.position_at_phase(std::min(t / traj.duration(), 1.0));
        for (int o = 0; o < m; ++o) {
          const double r = geom.robot_radius + geom.obstacle_radii[static_cast<std::size_t>(o)];
          if ((Vector2d(q[0], q[1]) - set.position(i, o, j)).norm() < r) hit = true;
        }
      }
      if (hit) ++oracle;
    }
    pass = chance::count_violations(traj, set, geom, horizon).violations == oracle;
  }
  const double elapsed = watch.seconds();
  const bool in_time = elapsed < 10.0;
  report(8, "brute-force equivalence of joint counting", pass && in_time, elapsed);
  CHECK(pass);
  CHECK(in_time);
}

TEST_CASE("criterion 9: MPC trend study across env0-env2") {
  Stopwatch watch;
  harness::MpcStudyConfig config;
  config.envs = {"env0", "env1", "env2"};
  config.etas = {0.05, 0.8};
  config.episodes = 200;
  config.seed = 9;
  config.include_ml_baseline = true;
  const auto cells = harness::run_mpc_study(config, hardware_jobs());

  const auto find = [&](const std::string& env,
                        std::optional<double> eta) -> const harness::MpcCellResult& {
    for (const auto& cell : cells) {
      if (cell.env == env && ((!eta && !cell.eta) ||
                              (eta && cell.eta && std::abs(*cell.eta - *eta) < 1e-12)))
        return cell;
    }
    throw std::logic_error("cell not found");
  };

  bool pass = true;
  for (const std::string env : {"env0", "env1", "env2"}) {
    const auto& low = find(env, 0.05);
    const auto& high = find(env, 0.8);
    const auto& ml = find(env, std::nullopt);
    const bool low_safe = low.collision_rate <= 0.05;
    const bool duration_trend = high.median_duration() < low.median_duration();
    const bool ml_fastest = ml.median_duration() <= low.median_duration();
    std::printf("  %s: collision(0.05)=%.3f collision(0.8)=%.3f collision(ml)=%.3f "
                "median dur 0.05/0.8/ml = %.2f/%.2f/%.2f t_straight=%.2f "
                "[safe=%d trend=%d ml=%d]\n",
                env.c_str(), low.collision_rate, high.collision_rate, ml.collision_rate,
                low.median_duration(), high.median_duration(), ml.median_duration(),
                low.straight_line_duration, low_safe, duration_trend, ml_fastest);
    pass = pass && low_safe && duration_trend && ml_fastest;
  }
  const bool ml_env0_collides = find("env0", std::nullopt).collision_rate >= 0.3;
  std::printf("  env0 ML-baseline collision rate: %.3f (needs >= 0.3)\n",
              find("env0", std::nullopt).collision_rate);
  pass = pass && ml_env0_collides;

  const double elapsed = watch.seconds();
  report(9, "MPC eta trends, safety and ML baseline", pass, elapsed);
  CHECK(pass);
}

TEST_CASE("criterion 10: studies are byte-identical across reruns and worker counts") {
  Stopwatch watch;
  bool pass = true;

  harness::OfflineStudyConfig offline = harness::OfflineStudyConfig::desk_scale();
  offline.runs = 16;
  offline.eval_particles = 200;
  offline.grid = {{100, 0.2}};
  offline.planner.max_iterations = 8;
  offline.planner.population = 16;
  offline.seed = 10;
  std::string first_offline;
  for (const int jobs : {1, 2, 4}) {
    const auto study = harness::run_offline_study(offline, jobs);
    std::ostringstream csv, raw;
    study.write_csv(csv);
    study.write_raw_csv(raw);
    const std::string text = csv.str() + raw.str();
    if (first_offline.empty())
      first_offline = text;
    else
      pass = pass && text == first_offline;
  }

  harness::MpcStudyConfig mpc_study;
  mpc_study.envs = {"env2"};
  mpc_study.etas = {0.4};
  mpc_study.episodes = 4;
  mpc_study.seed = 11;
  mpc_study.include_ml_baseline = false;
  std::string first_mpc;
  for (const int jobs : {1, 3}) {
    const auto cells = harness::run_mpc_study(mpc_study, jobs);
    std::ostringstream csv;
    harness::write_mpc_csv(cells, csv);
    const std::string with_json = csv.str() + harness::mpc_study_to_json(cells);
    if (first_mpc.empty())
      first_mpc = with_json;
    else
      pass = pass && with_json == first_mpc;
  }

  // the analytic table is bit-stable as well
  std::ostringstream t1, t2;
  harness::write_threshold_csv(harness::emit_threshold_table({100, 1000}, kTableEtas, 0.05), t1);
  harness::write_threshold_csv(harness::emit_threshold_table({100, 1000}, kTableEtas, 0.05), t2);
  pass = pass && t1.str() == t2.str();

  const double elapsed = watch.seconds();
  report(10, "byte-identical reports across jobs", pass, elapsed);
  CHECK(pass);
}
