#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccvpsto::trajectory {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown when no duration can satisfy the kinodynamic limits.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floor on synthesized durations; guards the 1/T velocity scaling for
// zero-displacement cases.
inline constexpr double kMinDuration = 1e-3;

struct BoundaryConditions {
  VectorXd start;           // q0
  VectorXd goal;            // qT
  VectorXd start_velocity;  // qdot0, units/s
  VectorXd goal_velocity;   // qdotT, units/s

  static BoundaryConditions rest_to_rest(VectorXd q0, VectorXd qT);
  int dof() const { return static_cast<int>(start.size()); }
  void validate() const;
};

struct ViaPoints {
  MatrixXd points;   // one row per via point, dof columns; may be empty
  VectorXd timings;  // strictly increasing phase values in (0, 1)

  // n interior timings at i/(n+1).
  static VectorXd uniform_timings(int count);
  static ViaPoints none(int dof);
  static ViaPoints uniform(MatrixXd pts);

  int count() const { return static_cast<int>(points.rows()); }
  void validate(int dof) const;
};

struct KinodynamicLimits {
  VectorXd vel_min, vel_max;  // units/s
  VectorXd acc_min, acc_max;  // units/s^2

  static KinodynamicLimits symmetric(int dof, double vel, double acc);
  void validate(int dof) const;
};

// Cubic-spline basis for a fixed via-point layout: the minimizer of
// int |q''(s)|^2 ds subject to interpolation and boundary-derivative
// constraints, obtained from the KKT system over per-segment cubic
// coefficients. The basis maps the weight vector
//     w = [q_via_1 .. q_via_n, q0, q'0, qT, q'T]
// (per degree of freedom, with q' = T * qdot) to positions and phase
// derivatives; it is shared by every trajectory with the same timings.
class SplineBasis {
 public:
  static constexpr int kCheckGridSize = 1001;

  explicit SplineBasis(const VectorXd& via_timings);

  int via_count() const { return via_count_; }
  int weight_dim() const { return via_count_ + 4; }
  const VectorXd& timings() const { return timings_; }

  // Basis rows at an arbitrary phase s in [0, 1]; `out` has weight_dim()
  // entries. q(s) = position_row(s) . w, q'(s) = velocity_row(s) . w, ...
  void position_row(double s, double* out) const;
  void velocity_row(double s, double* out) const;
  void acceleration_row(double s, double* out) const;

  // Rows sampled on the uniform 1001-point check grid.
  const MatrixXd& grid_position() const { return grid_pos_; }
  const MatrixXd& grid_velocity() const { return grid_vel_; }
  const MatrixXd& grid_acceleration() const { return grid_acc_; }

  // Gram matrix G with int |q''|^2 ds = sum_d w_d^T G w_d.
  const MatrixXd& effort_gram() const { return gram_; }

 private:
  int segment_index(double s) const;
  void basis_row(double s, int derivative, double* out) const;

  int via_count_;
  VectorXd timings_;
  VectorXd knots_;        // 0, s_1..s_n, 1
  MatrixXd coefficients_; // 4*(n+1) x (n+4): segment cubic coeffs per weight
  MatrixXd grid_pos_, grid_vel_, grid_acc_;
  MatrixXd gram_;
};

class Trajectory {
 public:
  Trajectory(std::shared_ptr<const SplineBasis> basis, MatrixXd weights, double duration);

  double duration() const { return duration_; }
  int dof() const { return static_cast<int>(weights_.cols()); }
  const MatrixXd& weights() const { return weights_; }
  const SplineBasis& basis() const { return *basis_; }
  std::shared_ptr<const SplineBasis> basis_ptr() const { return basis_; }

  VectorXd position_at_phase(double s) const;
  VectorXd velocity_at_phase(double s) const;      // qdot = phi' w / T
  VectorXd acceleration_at_phase(double s) const;  // qddot = phi'' w / T^2

  // Time-domain accessors; t beyond the duration holds the end point at
  // zero velocity (the robot keeps occupying space after the plan ends).
  VectorXd position_at_time(double t) const;
  VectorXd velocity_at_time(double t) const;

  VectorXd start() const { return position_at_phase(0.0); }
  VectorXd end() const { return position_at_phase(1.0); }

  struct Samples {
    MatrixXd position, velocity, acceleration;  // grid rows x dof
  };
  // Throws std::domain_error for grid values outside [0, 1].
  Samples evaluate(const VectorXd& phase_grid) const;

  double effort_phase() const;  // int |q''(s)|^2 ds
  double effort_time() const;   // int |qddot(t)|^2 dt = effort_phase / T^3

  // Constituents recovered from the weight layout.
  MatrixXd via_points() const;
  BoundaryConditions boundary_conditions() const;

 private:
  std::shared_ptr<const SplineBasis> basis_;
  MatrixXd weights_;  // weight_dim x dof
  double duration_;
};

// Reusable synthesizer; building the basis factorizes the KKT system once.
class TrajectorySynthesizer {
 public:
  explicit TrajectorySynthesizer(int via_count);
  explicit TrajectorySynthesizer(const VectorXd& via_timings);

  std::shared_ptr<const SplineBasis> basis() const { return basis_; }

  Trajectory synthesize(const MatrixXd& via_points, const BoundaryConditions& bc,
                        double duration) const;
  // Smallest duration satisfying the limits on the check grid, exact for the
  // grid discretization: with w affine in T, every grid constraint yields a
  // closed-form admissible-T ray and the minimum is their intersection.
  double min_duration(const MatrixXd& via_points, const BoundaryConditions& bc,
                      const KinodynamicLimits& limits) const;
  Trajectory synthesize_min_duration(const MatrixXd& via_points, const BoundaryConditions& bc,
                                     const KinodynamicLimits& limits) const;

 private:
  std::shared_ptr<const SplineBasis> basis_;
};

Trajectory synthesize(const ViaPoints& via, const BoundaryConditions& bc, double duration);
double min_duration(const ViaPoints& via, const BoundaryConditions& bc,
                    const KinodynamicLimits& limits);

// Constant trajectory holding q_hold for the given duration.
Trajectory waiting_trajectory(const VectorXd& q_hold, double duration);

// {via, bc, T, D} round-trip.
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& json_text);

// CSV with columns s, t, q.., qdot.., qddot.. on the given phase grid.
void write_trace_csv(const Trajectory& traj, const VectorXd& phase_grid, std::ostream& out);

}  // namespace ccvpsto::trajectory
