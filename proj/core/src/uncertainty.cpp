#include "ccvpsto/uncertainty.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ccvpsto::uncertainty {

namespace {

Matrix2d covariance_sqrt(const Matrix2d& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix2d> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::invalid_argument("covariance eigendecomposition failed");
  Vector2d vals = eig.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (vals[i] < -1e-12) throw std::invalid_argument("covariance must be PSD");
    vals[i] = std::sqrt(std::max(vals[i], 0.0));
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

double reflect_into(double x, double lo, double hi, double& velocity) {
  // A couple of reflections suffice for any physically sensible step; the
  // loop guarantees in-box positions regardless of dt.
  while (x < lo || x > hi) {
    if (x < lo)
      x = 2.0 * lo - x;
    else
      x = 2.0 * hi - x;
    velocity = -velocity;
  }
  return x;
}

}  // namespace

void Workspace::validate() const {
  if (!(lo.x() < hi.x() && lo.y() < hi.y()))
    throw std::invalid_argument("Workspace: bounds must form a nonempty box");
}

void ObstacleSpec::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("ObstacleSpec: radius must be > 0");
  if (accel_variance < 0.0)
    throw std::invalid_argument("ObstacleSpec: accel_variance must be >= 0");
}

int obstacle_count(const EnvironmentModel& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomWalkModel>)
          return static_cast<int>(m.obstacles.size());
        else
          return 1;
      },
      model);
}

std::vector<double> obstacle_radii(const EnvironmentModel& model) {
  return std::visit(
      [](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomWalkModel>) {
          std::vector<double> r;
          r.reserve(m.obstacles.size());
          for (const auto& o : m.obstacles) r.push_back(o.radius);
          return r;
        } else {
          return {m.radius};
        }
      },
      model);
}

double model_dt(const EnvironmentModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StaticGaussianModel>)
          return kDefaultStepDt;
        else
          return m.dt;
      },
      model);
}

std::uint64_t ParticleSet::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  mix(data.data(), data.size() * sizeof(double));
  mix(radii.data(), radii.size() * sizeof(double));
  return h;
}

std::string ParticleSet::to_json() const {
  nlohmann::json j;
  j["particles"] = particles;
  j["obstacles"] = obstacles;
  j["steps"] = steps;
  j["horizon_steps"] = horizon_steps;
  j["dt"] = dt;
  j["static"] = static_rollouts;
  j["seed"] = seed;
  j["radii"] = radii;
  j["positions"] = data;
  return j.dump();
}

EnvironmentState initial_state(const EnvironmentModel& model) {
  return std::visit(
      [](const auto& m) -> EnvironmentState {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomWalkModel>) {
          std::vector<RandomWalkState> states;
          states.reserve(m.obstacles.size());
          for (const auto& o : m.obstacles) states.push_back({o.position, o.velocity});
          return states;
        } else if constexpr (std::is_same_v<T, ConveyorModel>) {
          return ConveyorState{m.start.x(), m.direction * m.speed, m.alpha};
        } else {
          return std::monostate{};
        }
      },
      model);
}

RandomWalkState step_random_walk(const RandomWalkState& state, double accel_variance,
                                 const Workspace& bounds, double dt, Rng& rng) {
  const double sigma = std::sqrt(accel_variance);
  RandomWalkState next;
  next.velocity = state.velocity + dt * Vector2d(rng.normal(0.0, sigma), rng.normal(0.0, sigma));
  next.position = state.position + dt * next.velocity;
  next.position.x() = reflect_into(next.position.x(), bounds.lo.x(), bounds.hi.x(),
                                   next.velocity.x());
  next.position.y() = reflect_into(next.position.y(), bounds.lo.y(), bounds.hi.y(),
                                   next.velocity.y());
  return next;
}

ConveyorState step_conveyor(const ConveyorState& state, double alpha, double dt,
                            double belt_lo, double belt_hi, Rng& rng,
                            bool additive_probability) {
  ConveyorState next = state;
  next.flip_probability = additive_probability
                              ? state.flip_probability + alpha * (1.0 - state.flip_probability)
                              : state.flip_probability * (1.0 - alpha);
  const double r = rng.uniform01();
  const double projected = state.position + state.velocity * dt;
  const bool flip = (r < next.flip_probability) || projected < belt_lo || projected > belt_hi;
  next.velocity = flip ? -state.velocity : state.velocity;
  if (flip) next.flip_probability = alpha;
  next.position = state.position + next.velocity * dt;
  return next;
}

EnvironmentState step_state(const EnvironmentModel& model, const EnvironmentState& state,
                            Rng& rng) {
  if (std::holds_alternative<StaticGaussianModel>(model)) return state;
  if (const auto* walk = std::get_if<RandomWalkModel>(&model)) {
    const auto& states = std::get<std::vector<RandomWalkState>>(state);
    std::vector<RandomWalkState> next;
    next.reserve(states.size());
    for (std::size_t o = 0; o < states.size(); ++o)
      next.push_back(step_random_walk(states[o], walk->obstacles[o].accel_variance,
                                      walk->bounds, walk->dt, rng));
    return next;
  }
  const auto& belt = std::get<ConveyorModel>(model);
  return step_conveyor(std::get<ConveyorState>(state), belt.alpha, belt.dt, belt.belt_lo,
                       belt.belt_hi, rng, belt.additive_probability);
}

std::vector<Vector2d> state_positions(const EnvironmentModel& model,
                                      const EnvironmentState& state) {
  if (const auto* gauss = std::get_if<StaticGaussianModel>(&model)) return {gauss->mean};
  if (const auto* walkers = std::get_if<std::vector<RandomWalkState>>(&state)) {
    std::vector<Vector2d> p;
    p.reserve(walkers->size());
    for (const auto& w : *walkers) p.push_back(w.position);
    return p;
  }
  const auto& belt = std::get<ConveyorModel>(model);
  const auto& s = std::get<ConveyorState>(state);
  return {Vector2d(s.position, belt.start.y())};
}

ParticleSet sample_particles(const EnvironmentModel& model, int count, int horizon_steps,
                             std::uint64_t seed) {
  return sample_particles_from(model, initial_state(model), count, horizon_steps, seed);
}

ParticleSet sample_particles_from(const EnvironmentModel& model, const EnvironmentState& state,
                                  int count, int horizon_steps, std::uint64_t seed) {
  if (count < 1 || horizon_steps < 1)
    throw std::invalid_argument("sample_particles: count and horizon_steps must be >= 1");
  ParticleSet set;
  set.particles = count;
  set.obstacles = obstacle_count(model);
  set.horizon_steps = horizon_steps;
  set.dt = model_dt(model);
  set.seed = seed;
  set.radii = obstacle_radii(model);

  if (const auto* gauss = std::get_if<StaticGaussianModel>(&model)) {
    set.steps = 1;
    set.static_rollouts = true;
    set.data.resize(static_cast<std::size_t>(count) * 2);
    const Matrix2d root = covariance_sqrt(gauss->covariance);
    for (int i = 0; i < count; ++i) {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
      const Vector2d z(rng.normal(), rng.normal());
      const Vector2d p = gauss->mean + root * z;
      double* out = set.mutable_at(i, 0, 0);
      out[0] = p.x();
      out[1] = p.y();
    }
    return set;
  }

  set.steps = horizon_steps;
  set.data.resize(static_cast<std::size_t>(count) * set.obstacles * horizon_steps * 2);

  if (const auto* walk = std::get_if<RandomWalkModel>(&model)) {
    const auto& states = std::get<std::vector<RandomWalkState>>(state);
    if (states.size() != walk->obstacles.size())
      throw std::invalid_argument("sample_particles: state/model obstacle count mismatch");
    for (int i = 0; i < count; ++i) {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
      for (int o = 0; o < set.obstacles; ++o) {
        RandomWalkState s = states[static_cast<std::size_t>(o)];
        for (int j = 0; j < horizon_steps; ++j) {
          s = step_random_walk(s, walk->obstacles[static_cast<std::size_t>(o)].accel_variance,
                               walk->bounds, walk->dt, rng);
          double* out = set.mutable_at(i, o, j);
          out[0] = s.position.x();
          out[1] = s.position.y();
        }
      }
    }
    return set;
  }

  const auto& belt = std::get<ConveyorModel>(model);
  const auto& belt_state = std::get<ConveyorState>(state);
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    ConveyorState s = belt_state;
    for (int j = 0; j < horizon_steps; ++j) {
      s = step_conveyor(s, belt.alpha, belt.dt, belt.belt_lo, belt.belt_hi, rng,
                        belt.additive_probability);
      double* out = set.mutable_at(i, 0, j);
      out[0] = s.position;
      out[1] = belt.start.y();
    }
  }
  return set;
}

ParticleSet mean_rollout(const ParticleSet& particles) {
  ParticleSet mean;
  mean.particles = 1;
  mean.obstacles = particles.obstacles;
  mean.steps = particles.steps;
  mean.horizon_steps = particles.horizon_steps;
  mean.dt = particles.dt;
  mean.static_rollouts = particles.static_rollouts;
  mean.seed = particles.seed;
  mean.radii = particles.radii;
  mean.data.assign(static_cast<std::size_t>(mean.obstacles) * mean.steps * 2, 0.0);
  const double scale = 1.0 / static_cast<double>(particles.particles);
  for (int i = 0; i < particles.particles; ++i) {
    for (int o = 0; o < particles.obstacles; ++o) {
      for (int j = 0; j < particles.steps; ++j) {
        const double* p = particles.at(i, o, j);
        double* out = mean.mutable_at(0, o, j);
        out[0] += scale * p[0];
        out[1] += scale * p[1];
      }
    }
  }
  return mean;
}

}  // namespace ccvpsto::uncertainty
