#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ccvpsto/envconfig.hpp"
#include "ccvpsto/harness.hpp"
#include "ccvpsto/mpc.hpp"
#include "ccvpsto/parallel.hpp"
#include "ccvpsto/planner.hpp"

namespace {

using namespace ccvpsto;

struct CalibrateOptions {
  std::int64_t n = 100;
  double eta = 0.1;
  double beta = 0.05;
  std::string policy;  // empty = all variants
  int dim = 2, obstacles = 1, horizon = 1;
  std::string format = "text";
};

struct VariantRow {
  std::string name;
  std::optional<std::int64_t> threshold;
};

int run_calibrate(const CalibrateOptions& opt) {
  const calibration::ConfidenceSpec spec{opt.eta, opt.beta, opt.n};
  std::vector<VariantRow> rows;
  const auto add = [&](calibration::ThresholdVariant variant) {
    VariantRow row;
    row.name = calibration::to_string(variant);
    switch (variant) {
      case calibration::ThresholdVariant::Naive:
        row.threshold = calibration::resolve_threshold(calibration::ThresholdPolicy::naive(), spec);
        break;
      case calibration::ThresholdVariant::Binomial:
        row.threshold = calibration::k_beta(spec);
        break;
      case calibration::ThresholdVariant::Rademacher:
        row.threshold = calibration::k_beta_rad(spec, opt.dim, opt.obstacles, opt.horizon);
        break;
      case calibration::ThresholdVariant::BooleRademacher:
        row.threshold = calibration::k_beta_rad_boole(spec, opt.dim, opt.obstacles, opt.horizon);
        break;
      case calibration::ThresholdVariant::Hard:
        row.threshold = 0;
        break;
    }
    rows.push_back(std::move(row));
  };
  if (opt.policy.empty()) {
    add(calibration::ThresholdVariant::Naive);
    add(calibration::ThresholdVariant::Binomial);
    add(calibration::ThresholdVariant::Rademacher);
    add(calibration::ThresholdVariant::BooleRademacher);
    add(calibration::ThresholdVariant::Hard);
  } else {
    add(calibration::threshold_variant_from_string(opt.policy));
  }

  const auto ratio = [&](const VariantRow& row) {
    return static_cast<double>(row.threshold.value_or(0)) / static_cast<double>(opt.n);
  };
  if (opt.format == "json") {
    std::cout << "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      std::cout << (i ? "," : "") << "\n  {\"policy\": \"" << row.name << "\", ";
      if (row.threshold)
        std::cout << "\"k\": " << *row.threshold << ", \"ratio\": " << ratio(row)
                  << ", \"feasible\": true}";
      else
        std::cout << "\"k\": null, \"ratio\": null, \"feasible\": false}";
    }
    std::cout << "\n]\n";
  } else if (opt.format == "csv") {
    std::cout << "policy,k,ratio,feasible\n";
    for (const auto& row : rows) {
      if (row.threshold)
        std::cout << row.name << "," << *row.threshold << "," << ratio(row) << ",true\n";
      else
        std::cout << row.name << ",n/a,n/a,false\n";
    }
  } else {
    std::cout << std::left << std::setw(18) << "policy" << std::setw(10) << "k"
              << std::setw(12) << "k/N" << "feasible\n";
    for (const auto& row : rows) {
      std::cout << std::left << std::setw(18) << row.name;
      if (row.threshold)
        std::cout << std::setw(10) << *row.threshold << std::setw(12) << ratio(row) << "yes\n";
      else
        std::cout << std::setw(10) << "n/a" << std::setw(12) << "n/a" << "no (hard)\n";
    }
  }
  return 0;
}

uncertainty::EnvironmentConfig resolve_env(const std::string& name) {
  if (uncertainty::EnvironmentConfig::is_preset(name))
    return uncertainty::EnvironmentConfig::preset(name);
  return uncertainty::EnvironmentConfig::from_json_file(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chance-constrained via-point trajectory optimization toolkit"};
  app.require_subcommand(1);

  CalibrateOptions calibrate_opt;
  auto* calibrate = app.add_subcommand("calibrate", "Violation-count thresholds for (N, eta, beta)");
  calibrate->add_option("--n", calibrate_opt.n, "Particle count N")->required();
  calibrate->add_option("--eta", calibrate_opt.eta, "Violation probability bound")->required();
  calibrate->add_option("--beta", calibrate_opt.beta, "Confidence complement")->required();
  calibrate->add_option("--policy", calibrate_opt.policy,
                        "naive|binomial|rademacher|boole-rademacher|hard (default: all)");
  calibrate->add_option("--dim", calibrate_opt.dim, "State dimension n (Rademacher)");
  calibrate->add_option("--obstacles", calibrate_opt.obstacles, "Obstacle count m (Rademacher)");
  calibrate->add_option("--horizon", calibrate_opt.horizon, "Horizon steps H (Rademacher)");
  calibrate->add_option("--format", calibrate_opt.format, "text|json|csv");

  std::string plan_config_path, plan_out = "plan.json", plan_log;
  auto* plan_cmd = app.add_subcommand("plan", "Single offline plan from a JSON config");
  plan_cmd->add_option("--config", plan_config_path, "Plan config JSON")->required();
  plan_cmd->add_option("--out", plan_out, "Output trace path");
  plan_cmd->add_option("--log", plan_log, "Iteration log CSV path");

  std::string mpc_env = "env0", mpc_out_dir = "mpc_out";
  double mpc_eta = 0.1;
  int mpc_episodes = 1;
  std::uint64_t mpc_seed = 1;
  bool mpc_ml = false;
  auto* mpc_cmd = app.add_subcommand("mpc", "Receding-horizon episodes on an environment");
  mpc_cmd->add_option("--env", mpc_env, "env0|env1|env2 or config file");
  mpc_cmd->add_option("--eta", mpc_eta, "Violation probability bound");
  mpc_cmd->add_option("--episodes", mpc_episodes, "Episode count");
  mpc_cmd->add_option("--seed", mpc_seed, "Base seed");
  mpc_cmd->add_option("--out", mpc_out_dir, "Output directory");
  mpc_cmd->add_flag("--ml-baseline", mpc_ml, "Plan against the mean rollout (ML-VPSTO)");

  std::string offline_config_path, offline_out_dir = "offline_out";
  int offline_jobs = hardware_jobs();
  auto* offline_cmd = app.add_subcommand("offline-study", "Offline calibration study");
  offline_cmd->add_option("--config", offline_config_path, "Study config JSON (default: desk scale)");
  offline_cmd->add_option("--out", offline_out_dir, "Output directory");
  offline_cmd->add_option("--jobs", offline_jobs, "Worker count");
  std::uint64_t offline_seed = 0;
  bool offline_seed_set = false;
  offline_cmd->add_option("--seed", offline_seed, "Base seed")
      ->each([&](const std::string&) { offline_seed_set = true; });

  std::string study_envs = "env0,env1,env2", study_etas = "0.05,0.2,0.4,0.6,0.8";
  std::string study_out_dir = "mpc_study_out";
  int study_episodes = 200, study_jobs = hardware_jobs();
  std::uint64_t study_seed = 1;
  bool study_no_ml = false;
  auto* study_cmd = app.add_subcommand("mpc-study", "MPC eta-sweep study");
  study_cmd->add_option("--envs", study_envs, "Comma-separated env names/files");
  study_cmd->add_option("--etas", study_etas, "Comma-separated eta values");
  study_cmd->add_option("--episodes", study_episodes, "Episodes per cell");
  study_cmd->add_option("--seed", study_seed, "Base seed");
  study_cmd->add_option("--jobs", study_jobs, "Worker count");
  study_cmd->add_option("--out", study_out_dir, "Output directory");
  study_cmd->add_flag("--no-ml-baseline", study_no_ml, "Skip the ML-VPSTO baseline cells");

  double thresholds_beta = 0.05;
  auto* thresholds_cmd = app.add_subcommand("thresholds", "Analytic threshold table");
  thresholds_cmd->add_option("--beta", thresholds_beta, "Confidence complement");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return run_calibrate(calibrate_opt);

    if (plan_cmd->parsed()) {
      // Reuses the offline-study schema: environment plus planner block;
      // the first grid cell selects (N, eta).
      const auto cfg = harness::OfflineStudyConfig::from_json_file(plan_config_path);
      planner::PlannerConfig pc = cfg.planner;
      pc.chance = {cfg.grid.front().eta, cfg.beta, cfg.grid.front().particles};
      pc.seed = cfg.seed;
      const uncertainty::EnvironmentModel model = cfg.obstacle;
      const auto bc = trajectory::BoundaryConditions::rest_to_rest(cfg.start, cfg.goal);
      const auto result = planner::plan(pc, bc, cfg.goal, model, cfg.robot_radius);
      std::ofstream out(plan_out);
      out << result.to_json() << "\n";
      if (!plan_log.empty()) {
        std::ofstream log(plan_log);
        result.write_log_csv(log);
      }
      std::cout << "best cost " << result.best_cost << ", duration "
                << result.best.duration() << " s, k = " << result.best_violations << "/"
                << pc.chance.particles << " (threshold " << result.threshold << ")\n";
      return 0;
    }

    if (mpc_cmd->parsed()) {
      const auto env = resolve_env(mpc_env);
      auto config = mpc::make_mpc_config(env, mpc_eta);
      config.ml_baseline = mpc_ml;
      std::filesystem::create_directories(mpc_out_dir);
      std::ofstream csv(mpc_out_dir + "/episodes.csv");
      csv << "eta,env,episode,duration,success,collided,min_distance\n";
      for (int e = 0; e < mpc_episodes; ++e) {
        const auto trace = mpc::run_episode(config, Rng::stream(mpc_seed, e).next());
        std::ofstream out(mpc_out_dir + "/episode_" + std::to_string(e) + ".json");
        out << trace.to_json() << "\n";
        csv << mpc_eta << "," << env.id << "," << e << "," << trace.metrics.duration << ","
            << trace.metrics.success << "," << trace.metrics.collided << ","
            << trace.metrics.min_distance << "\n";
        std::cout << "episode " << e << ": success=" << trace.metrics.success
                  << " collided=" << trace.metrics.collided
                  << " duration=" << trace.metrics.duration << "\n";
      }
      return 0;
    }

    if (offline_cmd->parsed()) {
      auto cfg = offline_config_path.empty()
                     ? harness::OfflineStudyConfig::desk_scale()
                     : harness::OfflineStudyConfig::from_json_file(offline_config_path);
      if (offline_seed_set) cfg.seed = offline_seed;
      const auto report = harness::run_offline_study(cfg, offline_jobs);
      std::filesystem::create_directories(offline_out_dir + "/raw");
      {
        std::ofstream out(offline_out_dir + "/config.json");
        out << cfg.to_json() << "\n";
      }
      {
        std::ofstream out(offline_out_dir + "/report.csv");
        report.write_csv(out);
      }
      {
        std::ofstream out(offline_out_dir + "/raw/eta_hat.csv");
        report.write_raw_csv(out);
      }
      report.write_csv(std::cout);
      return 0;
    }

    if (study_cmd->parsed()) {
      harness::MpcStudyConfig cfg;
      cfg.envs.clear();
      for (std::stringstream ss(study_envs); ss.good();) {
        std::string item;
        std::getline(ss, item, ',');
        if (!item.empty()) cfg.envs.push_back(item);
      }
      cfg.etas.clear();
      for (std::stringstream ss(study_etas); ss.good();) {
        std::string item;
        std::getline(ss, item, ',');
        if (!item.empty()) cfg.etas.push_back(std::stod(item));
      }
      cfg.episodes = study_episodes;
      cfg.seed = study_seed;
      cfg.include_ml_baseline = !study_no_ml;
      const auto cells = harness::run_mpc_study(cfg, study_jobs);
      std::filesystem::create_directories(study_out_dir);
      {
        std::ofstream out(study_out_dir + "/aggregate.csv");
        harness::write_mpc_csv(cells, out);
      }
      {
        std::ofstream out(study_out_dir + "/distributions.json");
        out << harness::mpc_study_to_json(cells) << "\n";
      }
      harness::write_mpc_csv(cells, std::cout);
      return 0;
    }

    if (thresholds_cmd->parsed()) {
      const auto rows = harness::emit_threshold_table(
          {100, 1000}, {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.6, 0.8},
          thresholds_beta);
      harness::write_threshold_csv(rows, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
