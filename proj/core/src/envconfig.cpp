#include "ccvpsto/envconfig.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccvpsto::uncertainty {

namespace {

EnvironmentConfig build(std::string id, double robot_radius,
                        std::vector<std::array<double, 2>> x0,
                        std::vector<std::array<double, 2>> v0, std::vector<double> radii,
                        std::vector<double> variances) {
  EnvironmentConfig cfg;
  cfg.id = std::move(id);
  cfg.robot_radius = robot_radius;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    ObstacleSpec o;
    o.position = Vector2d(x0[i][0], x0[i][1]);
    o.velocity = Vector2d(v0[i][0], v0[i][1]);
    o.radius = radii[i];
    o.accel_variance = variances[i];
    cfg.obstacles.push_back(o);
  }
  return cfg;
}

}  // namespace

RandomWalkModel EnvironmentConfig::to_model() const {
  RandomWalkModel model;
  model.obstacles = obstacles;
  model.bounds = workspace;
  model.dt = dt;
  return model;
}

bool EnvironmentConfig::is_preset(const std::string& name) {
  return name == "env0" || name == "env1" || name == "env2";
}

EnvironmentConfig EnvironmentConfig::preset(const std::string& name) {
  if (name == "env0") {
    return build("env0", 0.25,
                 {{2.0, 4.0}, {3.5, 8.0}, {7.5, 2.5}, {9.0, 1.5}, {4.5, 8.0}},
                 {{0.7, 0.0}, {0.25, -0.5}, {-0.5, 0.5}, {-0.1, 0.1}, {0.0, -1.0}},
                 {0.5, 0.4, 0.3, 0.35, 0.55}, {0.5, 0.75, 0.65, 0.8, 0.6});
  }
  if (name == "env1") {
    return build("env1", 0.5, {{7.9, 5.7}, {1.3, 3.5}, {4.9, 9.4}, {5.2, 3.0}},
                 {{0.6, 0.1}, {0.0, 0.2}, {-0.4, 0.1}, {-0.2, 0.0}},
                 {0.32, 0.51, 0.49, 0.34}, {0.54, 0.64, 0.51, 0.8});
  }
  if (name == "env2") {
    return build("env2", 0.5,
                 {{2.1, 3.1}, {6.8, 5.0}, {7.3, 6.7}, {4.2, 4.2}, {8.5, 2.8}},
                 {{0.5, -0.2}, {0.5, 0.0}, {0.0, -0.2}, {0.4, 0.6}, {0.2, -0.3}},
                 {0.54, 0.45, 0.55, 0.35, 0.34}, {0.64, 0.66, 0.62, 0.57, 0.75});
  }
  throw std::invalid_argument("unknown environment preset: " + name);
}

EnvironmentConfig EnvironmentConfig::from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  EnvironmentConfig cfg;
  cfg.id = j.value("id", "custom");
  cfg.robot_radius = j.at("robot_radius").get<double>();
  cfg.dt = j.value("dt", kDefaultStepDt);
  if (j.contains("workspace")) {
    const auto& w = j.at("workspace");
    cfg.workspace.lo = Vector2d(w.at("lo")[0].get<double>(), w.at("lo")[1].get<double>());
    cfg.workspace.hi = Vector2d(w.at("hi")[0].get<double>(), w.at("hi")[1].get<double>());
  }
  const auto& x0 = j.at("x0");
  const auto& v0 = j.at("v0");
  const auto& radii = j.at("radii");
  const auto& variances = j.at("accel_variances");
  if (x0.size() != v0.size() || x0.size() != radii.size() || x0.size() != variances.size())
    throw std::invalid_argument("environment config: obstacle field lengths disagree");
  for (std::size_t i = 0; i < x0.size(); ++i) {
    ObstacleSpec o;
    o.position = Vector2d(x0[i][0].get<double>(), x0[i][1].get<double>());
    o.velocity = Vector2d(v0[i][0].get<double>(), v0[i][1].get<double>());
    o.radius = radii[i].get<double>();
    o.accel_variance = variances[i].get<double>();
    o.validate();
    cfg.obstacles.push_back(o);
  }
  cfg.workspace.validate();
  return cfg;
}

EnvironmentConfig EnvironmentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open environment config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string EnvironmentConfig::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["robot_radius"] = robot_radius;
  j["dt"] = dt;
  j["workspace"] = {{"lo", {workspace.lo.x(), workspace.lo.y()}},
                    {"hi", {workspace.hi.x(), workspace.hi.y()}}};
  auto x0 = nlohmann::json::array();
  auto v0 = nlohmann::json::array();
  auto radii = nlohmann::json::array();
  auto variances = nlohmann::json::array();
  for (const auto& o : obstacles) {
    x0.push_back({o.position.x(), o.position.y()});
    v0.push_back({o.velocity.x(), o.velocity.y()});
    radii.push_back(o.radius);
    variances.push_back(o.accel_variance);
  }
  j["x0"] = x0;
  j["v0"] = v0;
  j["radii"] = radii;
  j["accel_variances"] = variances;
  return j.dump(2);
}

}  // namespace ccvpsto::uncertainty
