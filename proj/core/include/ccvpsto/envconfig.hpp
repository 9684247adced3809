#pragma once

#include <string>
#include <vector>

#include "ccvpsto/uncertainty.hpp"

namespace ccvpsto::uncertainty {

// Environment description for the MPC experiments: identifier, obstacle
// initial conditions, radii and random-walk acceleration variances, plus
// the workspace box. Matches the JSON config schema one to one.
struct EnvironmentConfig {
  std::string id;
  double robot_radius = 0.5;
  std::vector<ObstacleSpec> obstacles;
  Workspace workspace = Workspace::square(10.0);
  double dt = kDefaultStepDt;

  int obstacle_count() const { return static_cast<int>(obstacles.size()); }
  RandomWalkModel to_model() const;

  // env0, env1, env2.
  static EnvironmentConfig preset(const std::string& name);
  static bool is_preset(const std::string& name);
  static EnvironmentConfig from_json(const std::string& json_text);
  static EnvironmentConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

}  // namespace ccvpsto::uncertainty
