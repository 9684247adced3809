#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ccvpsto/rng.hpp"

namespace ccvpsto::uncertainty {

using Eigen::Matrix2d;
using Eigen::Vector2d;

inline constexpr double kDefaultStepDt = 0.05;  // 100 steps over a 5 s horizon

struct Workspace {
  Vector2d lo{0.0, 0.0};
  Vector2d hi{10.0, 10.0};
  static Workspace square(double size) { return {Vector2d::Zero(), Vector2d::Constant(size)}; }
  bool contains(const Vector2d& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  void validate() const;
};

struct ObstacleSpec {
  Vector2d position{0.0, 0.0};  // x0
  Vector2d velocity{0.0, 0.0};  // v0
  double radius = 0.3;
  double accel_variance = 0.0;  // var(xddot), per axis, random walk only
  void validate() const;
};

// One static obstacle whose position is Gaussian-distributed.
struct StaticGaussianModel {
  Vector2d mean{5.0, 5.0};
  Matrix2d covariance = Matrix2d::Identity();
  double radius = 0.5;
};

// Obstacles following a reflecting random walk on accelerations.
struct RandomWalkModel {
  std::vector<ObstacleSpec> obstacles;
  Workspace bounds;
  double dt = kDefaultStepDt;
};

// One box moving along a velocity-controlled belt whose direction flips
// stochastically; the lateral coordinate stays fixed.
struct ConveyorModel {
  double speed = 0.05;       // |xdot| on the belt axis, conserved
  double alpha = 0.1;        // direction-change rate parameter
  double belt_lo = 0.0;
  double belt_hi = 1.0;
  Vector2d start{0.5, 0.0};  // x() along belt, y() fixed lateral offset
  double direction = 1.0;    // initial sign of the belt velocity
  double radius = 0.1;
  double dt = kDefaultStepDt;
  // The printed update is p <- p*(1-alpha); this switches to the
  // alternative p <- p + alpha*(1-p) in which flips become more likely
  // over time.
  bool additive_probability = false;
};

using EnvironmentModel = std::variant<StaticGaussianModel, RandomWalkModel, ConveyorModel>;

int obstacle_count(const EnvironmentModel& model);
std::vector<double> obstacle_radii(const EnvironmentModel& model);
double model_dt(const EnvironmentModel& model);

// N particle rollouts; particle i, obstacle o, step j holds the obstacle
// position at time (j+1)*dt. Static models store a single step that is
// valid at every time (static_rollouts = true).
struct ParticleSet {
  int particles = 0;       // N
  int obstacles = 0;       // m
  int steps = 0;           // stored steps per rollout
  int horizon_steps = 0;   // H requested at sampling time
  double dt = kDefaultStepDt;
  bool static_rollouts = false;
  std::uint64_t seed = 0;
  std::vector<double> radii;
  // Step-major within a particle so the (step, obstacle) scan of the
  // violation counter walks contiguous memory.
  std::vector<double> data;  // [particle][step][obstacle][xy]

  double* mutable_at(int i, int o, int j) {
    return data.data() + (((static_cast<std::size_t>(i) * steps + j) * obstacles + o) * 2);
  }
  const double* at(int i, int o, int j) const {
    const int jj = static_rollouts ? 0 : j;
    return data.data() + (((static_cast<std::size_t>(i) * steps + jj) * obstacles + o) * 2);
  }
  Vector2d position(int i, int o, int j) const {
    const double* p = at(i, o, j);
    return {p[0], p[1]};
  }
  double horizon_seconds() const { return horizon_steps * dt; }
  std::uint64_t content_hash() const;  // FNV-1a over the raw rollout bytes
  std::string to_json() const;
};

// Kinematic state of the environment, used for conditioned sampling in the
// MPC loop and for ground-truth evolution.
struct RandomWalkState {
  Vector2d position, velocity;
};
struct ConveyorState {
  double position = 0.0;
  double velocity = 0.0;
  double flip_probability = 0.0;  // p_k
};
using EnvironmentState = std::variant<std::monostate,                // static models
                                      std::vector<RandomWalkState>,  // random walk
                                      ConveyorState>;                // conveyor

EnvironmentState initial_state(const EnvironmentModel& model);
EnvironmentState step_state(const EnvironmentModel& model, const EnvironmentState& state,
                            Rng& rng);
std::vector<Vector2d> state_positions(const EnvironmentModel& model,
                                      const EnvironmentState& state);

// One reflecting random-walk step: v' = v + a*dt with a ~ N(0, var) per
// axis, x' = x + v'*dt; exits are reflected back into the box with the
// velocity component inverted.
RandomWalkState step_random_walk(const RandomWalkState& state, double accel_variance,
                                 const Workspace& bounds, double dt, Rng& rng);

// One conveyor step following the four-stage update: probability decay,
// uniform draw, flip on r < p or projected boundary exit, position update.
ConveyorState step_conveyor(const ConveyorState& state, double alpha, double dt,
                            double belt_lo, double belt_hi, Rng& rng,
                            bool additive_probability = false);

// Particle i consumes a stream derived from (seed, i) only, so rollouts are
// identical regardless of evaluation order or thread count.
ParticleSet sample_particles(const EnvironmentModel& model, int count, int horizon_steps,
                             std::uint64_t seed);
ParticleSet sample_particles_from(const EnvironmentModel& model, const EnvironmentState& state,
                                  int count, int horizon_steps, std::uint64_t seed);

// Collapses a particle set to the per-obstacle mean rollout (N = 1).
ParticleSet mean_rollout(const ParticleSet& particles);

}  // namespace ccvpsto::uncertainty
