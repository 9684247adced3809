#include "ccvpsto/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ccvpsto::trajectory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json vector_to_json(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vector_from_json(const nlohmann::json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

BoundaryConditions BoundaryConditions::rest_to_rest(VectorXd q0, VectorXd qT) {
  BoundaryConditions bc;
  const auto dof = q0.size();
  bc.start = std::move(q0);
  bc.goal = std::move(qT);
  bc.start_velocity = VectorXd::Zero(dof);
  bc.goal_velocity = VectorXd::Zero(dof);
  return bc;
}

void BoundaryConditions::validate() const {
  const auto d = start.size();
  if (d < 1) throw std::invalid_argument("BoundaryConditions: empty state");
  if (goal.size() != d || start_velocity.size() != d || goal_velocity.size() != d)
    throw std::invalid_argument("BoundaryConditions: dimension mismatch");
}

VectorXd ViaPoints::uniform_timings(int count) {
  VectorXd t(count);
  for (int i = 0; i < count; ++i)
    t[i] = static_cast<double>(i + 1) / static_cast<double>(count + 1);
  return t;
}

ViaPoints ViaPoints::none(int dof) {
  ViaPoints v;
  v.points = MatrixXd::Zero(0, dof);
  v.timings = VectorXd::Zero(0);
  return v;
}

ViaPoints ViaPoints::uniform(MatrixXd pts) {
  ViaPoints v;
  v.timings = uniform_timings(static_cast<int>(pts.rows()));
  v.points = std::move(pts);
  return v;
}

void ViaPoints::validate(int dof) const {
  if (points.rows() != timings.size())
    throw std::invalid_argument("ViaPoints: point/timing count mismatch");
  if (points.rows() > 0 && points.cols() != dof)
    throw std::invalid_argument("ViaPoints: dimension mismatch");
  double prev = 0.0;
  for (Eigen::Index i = 0; i < timings.size(); ++i) {
    if (!(timings[i] > prev && timings[i] < 1.0))
      throw std::invalid_argument(
          "ViaPoints: timings must be strictly increasing inside (0, 1)");
    prev = timings[i];
  }
}

KinodynamicLimits KinodynamicLimits::symmetric(int dof, double vel, double acc) {
  KinodynamicLimits l;
  l.vel_min = VectorXd::Constant(dof, -vel);
  l.vel_max = VectorXd::Constant(dof, vel);
  l.acc_min = VectorXd::Constant(dof, -acc);
  l.acc_max = VectorXd::Constant(dof, acc);
  return l;
}

void KinodynamicLimits::validate(int dof) const {
  if (vel_min.size() != dof || vel_max.size() != dof || acc_min.size() != dof ||
      acc_max.size() != dof)
    throw std::invalid_argument("KinodynamicLimits: dimension mismatch");
  for (int d = 0; d < dof; ++d) {
    if (!(vel_min[d] < vel_max[d]) || !(acc_min[d] < acc_max[d]))
      throw std::invalid_argument("KinodynamicLimits: min must be < max componentwise");
  }
}

SplineBasis::SplineBasis(const VectorXd& via_timings)
    : via_count_(static_cast<int>(via_timings.size())), timings_(via_timings) {
  {
    double prev = 0.0;
    for (Eigen::Index i = 0; i < timings_.size(); ++i) {
      if (!(timings_[i] > prev && timings_[i] < 1.0))
        throw std::invalid_argument("SplineBasis: singular constraint system, timings must be "
                                    "strictly increasing inside (0, 1)");
      prev = timings_[i];
    }
  }
  const int n = via_count_;
  const int segments = n + 1;
  knots_.resize(segments + 1);
  knots_[0] = 0.0;
  for (int i = 0; i < n; ++i) knots_[i + 1] = timings_[i];
  knots_[segments] = 1.0;

  const int coeffs = 4 * segments;   // per-segment cubic coefficients
  const int constraints = 3 * n + 4; // interpolation + C1 + boundary
  const int wdim = n + 4;

  // Quadratic objective: int (q'')^2 over each segment, value form
  //   4 c^2 h + 12 c d h^2 + 12 d^2 h^3  ->  Hessian entries on (c, d).
  MatrixXd Q = MatrixXd::Zero(coeffs, coeffs);
  for (int j = 0; j < segments; ++j) {
    const double h = knots_[j + 1] - knots_[j];
    Q(4 * j + 2, 4 * j + 2) = 8.0 * h;
    Q(4 * j + 2, 4 * j + 3) = 12.0 * h * h;
    Q(4 * j + 3, 4 * j + 2) = 12.0 * h * h;
    Q(4 * j + 3, 4 * j + 3) = 24.0 * h * h * h;
  }

  // Constraint rows A c = E w, with E selecting weight-vector entries.
  // Weight layout: [via_1 .. via_n, q0, q'0, qT, q'T].
  MatrixXd A = MatrixXd::Zero(constraints, coeffs);
  MatrixXd E = MatrixXd::Zero(constraints, wdim);
  int row = 0;
  A(row, 0) = 1.0;              // q(0) = q0
  E(row, n) = 1.0;
  ++row;
  A(row, 1) = 1.0;              // q'(0) = q'0
  E(row, n + 1) = 1.0;
  ++row;
  for (int i = 0; i < n; ++i) {
    const int left = i;
    const double h = knots_[i + 1] - knots_[i];
    // left segment reaches the via point
    A(row, 4 * left + 0) = 1.0;
    A(row, 4 * left + 1) = h;
    A(row, 4 * left + 2) = h * h;
    A(row, 4 * left + 3) = h * h * h;
    E(row, i) = 1.0;
    ++row;
    // right segment starts at the via point
    A(row, 4 * (left + 1) + 0) = 1.0;
    E(row, i) = 1.0;
    ++row;
    // first-derivative continuity
    A(row, 4 * left + 1) = 1.0;
    A(row, 4 * left + 2) = 2.0 * h;
    A(row, 4 * left + 3) = 3.0 * h * h;
    A(row, 4 * (left + 1) + 1) = -1.0;
    ++row;
  }
  {
    const int last = segments - 1;
    const double h = knots_[segments] - knots_[last];
    A(row, 4 * last + 0) = 1.0;
    A(row, 4 * last + 1) = h;
    A(row, 4 * last + 2) = h * h;
    A(row, 4 * last + 3) = h * h * h;
    E(row, n + 2) = 1.0;        // q(1) = qT
    ++row;
    A(row, 4 * last + 1) = 1.0;
    A(row, 4 * last + 2) = 2.0 * h;
    A(row, 4 * last + 3) = 3.0 * h * h;
    E(row, n + 3) = 1.0;        // q'(1) = q'T
    ++row;
  }

  const int kkt = coeffs + constraints;
  MatrixXd K = MatrixXd::Zero(kkt, kkt);
  K.topLeftCorner(coeffs, coeffs) = Q;
  K.topRightCorner(coeffs, constraints) = A.transpose();
  K.bottomLeftCorner(constraints, coeffs) = A;
  MatrixXd rhs = MatrixXd::Zero(kkt, wdim);
  rhs.bottomRows(constraints) = E;
  Eigen::PartialPivLU<MatrixXd> lu(K);
  const MatrixXd solution = lu.solve(rhs);
  coefficients_ = solution.topRows(coeffs);

  grid_pos_.resize(kCheckGridSize, wdim);
  grid_vel_.resize(kCheckGridSize, wdim);
  grid_acc_.resize(kCheckGridSize, wdim);
  std::vector<double> buf(wdim);
  for (int g = 0; g < kCheckGridSize; ++g) {
    const double s = static_cast<double>(g) / static_cast<double>(kCheckGridSize - 1);
    basis_row(s, 0, buf.data());
    for (int c = 0; c < wdim; ++c) grid_pos_(g, c) = buf[c];
    basis_row(s, 1, buf.data());
    for (int c = 0; c < wdim; ++c) grid_vel_(g, c) = buf[c];
    basis_row(s, 2, buf.data());
    for (int c = 0; c < wdim; ++c) grid_acc_(g, c) = buf[c];
  }

  gram_ = MatrixXd::Zero(wdim, wdim);
  for (int j = 0; j < segments; ++j) {
    const double h = knots_[j + 1] - knots_[j];
    Eigen::Matrix2d M;
    M << 4.0 * h, 6.0 * h * h, 6.0 * h * h, 12.0 * h * h * h;
    const MatrixXd cd = coefficients_.middleRows(4 * j + 2, 2);
    gram_ += cd.transpose() * M * cd;
  }
}

int SplineBasis::segment_index(double s) const {
  const int segments = via_count_ + 1;
  int lo = 0, hi = segments - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (s >= knots_[mid])
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

void SplineBasis::basis_row(double s, int derivative, double* out) const {
  const int j = segment_index(s);
  const double tau = s - knots_[j];
  double b[4];
  switch (derivative) {
    case 0: b[0] = 1.0; b[1] = tau; b[2] = tau * tau; b[3] = tau * tau * tau; break;
    case 1: b[0] = 0.0; b[1] = 1.0; b[2] = 2.0 * tau; b[3] = 3.0 * tau * tau; break;
    default: b[0] = 0.0; b[1] = 0.0; b[2] = 2.0; b[3] = 6.0 * tau; break;
  }
  const int wdim = weight_dim();
  for (int c = 0; c < wdim; ++c) {
    out[c] = b[0] * coefficients_(4 * j + 0, c) + b[1] * coefficients_(4 * j + 1, c) +
             b[2] * coefficients_(4 * j + 2, c) + b[3] * coefficients_(4 * j + 3, c);
  }
}

void SplineBasis::position_row(double s, double* out) const { basis_row(s, 0, out); }
void SplineBasis::velocity_row(double s, double* out) const { basis_row(s, 1, out); }
void SplineBasis::acceleration_row(double s, double* out) const { basis_row(s, 2, out); }

Trajectory::Trajectory(std::shared_ptr<const SplineBasis> basis, MatrixXd weights,
                       double duration)
    : basis_(std::move(basis)), weights_(std::move(weights)), duration_(duration) {
  if (duration_ <= 0.0) throw std::invalid_argument("Trajectory: duration must be > 0");
  if (weights_.rows() != basis_->weight_dim())
    throw std::invalid_argument("Trajectory: weight dimension mismatch");
}

VectorXd Trajectory::position_at_phase(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("phase outside [0, 1]");
  VectorXd row(basis_->weight_dim());
  basis_->position_row(s, row.data());
  return weights_.transpose() * row;
}

VectorXd Trajectory::velocity_at_phase(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("phase outside [0, 1]");
  VectorXd row(basis_->weight_dim());
  basis_->velocity_row(s, row.data());
  return (weights_.transpose() * row) / duration_;
}

VectorXd Trajectory::acceleration_at_phase(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("phase outside [0, 1]");
  VectorXd row(basis_->weight_dim());
  basis_->acceleration_row(s, row.data());
  return (weights_.transpose() * row) / (duration_ * duration_);
}

VectorXd Trajectory::position_at_time(double t) const {
  const double s = std::clamp(t / duration_, 0.0, 1.0);
  return position_at_phase(s);
}

VectorXd Trajectory::velocity_at_time(double t) const {
  if (t > duration_) return VectorXd::Zero(dof());
  return velocity_at_phase(std::clamp(t / duration_, 0.0, 1.0));
}

Trajectory::Samples Trajectory::evaluate(const VectorXd& phase_grid) const {
  const auto g = phase_grid.size();
  Samples out;
  out.position.resize(g, dof());
  out.velocity.resize(g, dof());
  out.acceleration.resize(g, dof());
  for (Eigen::Index i = 0; i < g; ++i) {
    const double s = phase_grid[i];
    out.position.row(i) = position_at_phase(s).transpose();
    out.velocity.row(i) = velocity_at_phase(s).transpose();
    out.acceleration.row(i) = acceleration_at_phase(s).transpose();
  }
  return out;
}

double Trajectory::effort_phase() const {
  double total = 0.0;
  for (int d = 0; d < dof(); ++d) {
    const VectorXd w = weights_.col(d);
    total += w.dot(basis_->effort_gram() * w);
  }
  return total;
}

double Trajectory::effort_time() const {
  return effort_phase() / (duration_ * duration_ * duration_);
}

MatrixXd Trajectory::via_points() const {
  const int n = basis_->via_count();
  return weights_.topRows(n);
}

BoundaryConditions Trajectory::boundary_conditions() const {
  const int n = basis_->via_count();
  BoundaryConditions bc;
  bc.start = weights_.row(n).transpose();
  bc.start_velocity = weights_.row(n + 1).transpose() / duration_;
  bc.goal = weights_.row(n + 2).transpose();
  bc.goal_velocity = weights_.row(n + 3).transpose() / duration_;
  return bc;
}

TrajectorySynthesizer::TrajectorySynthesizer(int via_count)
    : basis_(std::make_shared<SplineBasis>(ViaPoints::uniform_timings(via_count))) {}

TrajectorySynthesizer::TrajectorySynthesizer(const VectorXd& via_timings)
    : basis_(std::make_shared<SplineBasis>(via_timings)) {}

Trajectory TrajectorySynthesizer::synthesize(const MatrixXd& via_points,
                                             const BoundaryConditions& bc,
                                             double duration) const {
  bc.validate();
  if (duration <= 0.0) throw std::invalid_argument("synthesize: duration must be > 0");
  const int n = basis_->via_count();
  if (via_points.rows() != n)
    throw std::invalid_argument("synthesize: via point count does not match the basis");
  const int dof = bc.dof();
  if (n > 0 && via_points.cols() != dof)
    throw std::invalid_argument("synthesize: via point dimension mismatch");
  MatrixXd w(n + 4, dof);
  if (n > 0) w.topRows(n) = via_points;
  w.row(n) = bc.start.transpose();
  w.row(n + 1) = duration * bc.start_velocity.transpose();
  w.row(n + 2) = bc.goal.transpose();
  w.row(n + 3) = duration * bc.goal_velocity.transpose();
  return Trajectory(basis_, std::move(w), duration);
}

namespace {

// Admissible-duration ray for one velocity constraint a/T + b <= bound
// (upper = true) or a/T + b >= bound (upper = false): smallest T0 so the
// constraint holds for every T >= T0, or +inf when there is none.
double velocity_ray(double a, double b, double bound, bool upper) {
  if (!upper) return velocity_ray(-a, -b, -bound, true);
  const double room = bound - b;
  if (room > 0.0) return a > 0.0 ? a / room : 0.0;
  if (room == 0.0) return a <= 0.0 ? 0.0 : kInf;
  return kInf;
}

// Same for one acceleration constraint a/T^2 + b/T <= bound (or >=),
// equivalent to bound*T^2 - b*T - a >= 0 for all T >= T0.
double acceleration_ray(double a, double b, double bound, bool upper) {
  if (!upper) return acceleration_ray(-a, -b, -bound, true);
  if (bound > 0.0) {
    const double disc = b * b + 4.0 * bound * a;
    if (disc < 0.0) return 0.0;
    const double root = (b + std::sqrt(disc)) / (2.0 * bound);
    return root > 0.0 ? root : 0.0;
  }
  if (bound == 0.0) {
    if (b < 0.0) return std::max(0.0, a / -b);
    return (b == 0.0 && a <= 0.0) ? 0.0 : kInf;
  }
  return kInf;  // opens downward, eventually violated
}

}  // namespace

double TrajectorySynthesizer::min_duration(const MatrixXd& via_points,
                                           const BoundaryConditions& bc,
                                           const KinodynamicLimits& limits) const {
  bc.validate();
  const int dof = bc.dof();
  limits.validate(dof);
  const int n = basis_->via_count();
  if (via_points.rows() != n)
    throw std::invalid_argument("min_duration: via point count does not match the basis");

  for (int d = 0; d < dof; ++d) {
    if (bc.start_velocity[d] < limits.vel_min[d] || bc.start_velocity[d] > limits.vel_max[d] ||
        bc.goal_velocity[d] < limits.vel_min[d] || bc.goal_velocity[d] > limits.vel_max[d])
      throw InfeasibleError("min_duration: boundary velocity already exceeds a limit");
  }

  // w(T) = w_const + T * w_vel, so along the check grid
  //   qdot  = (A_vel + T B_vel) / T   and   qddot = (A_acc + T B_acc) / T^2
  // are rational in T with closed-form admissible rays per grid point.
  MatrixXd w_const = MatrixXd::Zero(n + 4, dof);
  MatrixXd w_vel = MatrixXd::Zero(n + 4, dof);
  if (n > 0) w_const.topRows(n) = via_points;
  w_const.row(n) = bc.start.transpose();
  w_const.row(n + 2) = bc.goal.transpose();
  w_vel.row(n + 1) = bc.start_velocity.transpose();
  w_vel.row(n + 3) = bc.goal_velocity.transpose();

  const MatrixXd a_vel = basis_->grid_velocity() * w_const;
  const MatrixXd b_vel = basis_->grid_velocity() * w_vel;
  const MatrixXd a_acc = basis_->grid_acceleration() * w_const;
  const MatrixXd b_acc = basis_->grid_acceleration() * w_vel;

  double min_t = kMinDuration;
  for (int d = 0; d < dof; ++d) {
    const double vmax = limits.vel_max[d], vmin = limits.vel_min[d];
    const double amax = limits.acc_max[d], amin = limits.acc_min[d];
    for (int g = 0; g < SplineBasis::kCheckGridSize; ++g) {
      min_t = std::max(min_t, velocity_ray(a_vel(g, d), b_vel(g, d), vmax, true));
      min_t = std::max(min_t, velocity_ray(a_vel(g, d), b_vel(g, d), vmin, false));
      min_t = std::max(min_t, acceleration_ray(a_acc(g, d), b_acc(g, d), amax, true));
      min_t = std::max(min_t, acceleration_ray(a_acc(g, d), b_acc(g, d), amin, false));
      if (min_t == kInf) throw InfeasibleError("min_duration: limits unreachable");
    }
  }
  return min_t;
}

Trajectory TrajectorySynthesizer::synthesize_min_duration(const MatrixXd& via_points,
                                                          const BoundaryConditions& bc,
                                                          const KinodynamicLimits& limits) const {
  return synthesize(via_points, bc, min_duration(via_points, bc, limits));
}

Trajectory synthesize(const ViaPoints& via, const BoundaryConditions& bc, double duration) {
  bc.validate();
  via.validate(bc.dof());
  TrajectorySynthesizer synth(via.timings);
  return synth.synthesize(via.points, bc, duration);
}

double min_duration(const ViaPoints& via, const BoundaryConditions& bc,
                    const KinodynamicLimits& limits) {
  bc.validate();
  via.validate(bc.dof());
  TrajectorySynthesizer synth(via.timings);
  return synth.min_duration(via.points, bc, limits);
}

Trajectory waiting_trajectory(const VectorXd& q_hold, double duration) {
  if (duration <= 0.0) throw std::invalid_argument("waiting_trajectory: duration must be > 0");
  TrajectorySynthesizer synth(0);
  return synth.synthesize(MatrixXd::Zero(0, q_hold.size()),
                          BoundaryConditions::rest_to_rest(q_hold, q_hold), duration);
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::json j;
  const auto bc = traj.boundary_conditions();
  const auto via = traj.via_points();
  j["dof"] = traj.dof();
  j["duration"] = traj.duration();
  j["boundary"] = {{"q0", vector_to_json(bc.start)},
                   {"qT", vector_to_json(bc.goal)},
                   {"qdot0", vector_to_json(bc.start_velocity)},
                   {"qdotT", vector_to_json(bc.goal_velocity)}};
  nlohmann::json vias = nlohmann::json::array();
  for (Eigen::Index r = 0; r < via.rows(); ++r)
    vias.push_back(vector_to_json(via.row(r).transpose()));
  j["via"] = vias;
  nlohmann::json timings = nlohmann::json::array();
  for (Eigen::Index i = 0; i < traj.basis().timings().size(); ++i)
    timings.push_back(traj.basis().timings()[i]);
  j["via_timings"] = timings;
  return j.dump(2);
}

Trajectory trajectory_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  BoundaryConditions bc;
  bc.start = vector_from_json(j.at("boundary").at("q0"));
  bc.goal = vector_from_json(j.at("boundary").at("qT"));
  bc.start_velocity = vector_from_json(j.at("boundary").at("qdot0"));
  bc.goal_velocity = vector_from_json(j.at("boundary").at("qdotT"));
  const auto& vias = j.at("via");
  ViaPoints via;
  via.points.resize(vias.size(), bc.dof());
  for (std::size_t r = 0; r < vias.size(); ++r)
    via.points.row(static_cast<Eigen::Index>(r)) =
        vector_from_json(vias[r]).transpose();
  via.timings = vector_from_json(j.at("via_timings"));
  return synthesize(via, bc, j.at("duration").get<double>());
}

void write_trace_csv(const Trajectory& traj, const VectorXd& phase_grid, std::ostream& out) {
  const int dof = traj.dof();
  out << "s,t";
  for (int d = 0; d < dof; ++d) out << ",q" << d;
  for (int d = 0; d < dof; ++d) out << ",qdot" << d;
  for (int d = 0; d < dof; ++d) out << ",qddot" << d;
  out << "\n";
  const auto samples = traj.evaluate(phase_grid);
  for (Eigen::Index i = 0; i < phase_grid.size(); ++i) {
    out << phase_grid[i] << "," << phase_grid[i] * traj.duration();
    for (int d = 0; d < dof; ++d) out << "," << samples.position(i, d);
    for (int d = 0; d < dof; ++d) out << "," << samples.velocity(i, d);
    for (int d = 0; d < dof; ++d) out << "," << samples.acceleration(i, d);
    out << "\n";
  }
}

}  // namespace ccvpsto::trajectory
