#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ccvpsto::planner {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Standard (mu/mu_w, lambda)-CMA-ES constants with the published default
// weights and learning rates.
struct CmaesParams {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  VectorXd weights;  // mu recombination weights, sum 1
  double mu_eff = 0.0;
  double c_sigma = 0.0, d_sigma = 0.0;
  double c_c = 0.0, c1 = 0.0, c_mu = 0.0;
  double chi_n = 0.0;

  static CmaesParams defaults(int dim, int lambda);
};

struct SearchDistribution {
  VectorXd mean;
  MatrixXd covariance;
  double sigma = 0.0;
  VectorXd path_sigma, path_cov;
  int generation = 0;
  int repair_count = 0;  // eigenvalue floorings applied so far

  // Cached eigendecomposition of the covariance, refreshed on update.
  MatrixXd eigen_basis;     // B
  VectorXd eigen_scale;     // sqrt of eigenvalues, floored

  void refresh_eigen();
};

SearchDistribution make_distribution(VectorXd mean, double sigma0);

// One column per candidate: x_i = mean + sigma * B * D * z_i with z_i drawn
// from the stream (seed, iteration, candidate index), so results do not
// depend on evaluation order.
MatrixXd sample_population(const SearchDistribution& dist, const CmaesParams& params,
                           std::uint64_t seed, int iteration);

// Weighted-recombination mean update, cumulative step-size adaptation and
// rank-one + rank-mu covariance update. Ranking is by cost ascending with a
// lexicographic tie-break on the candidate vector, which makes the update
// invariant to candidate permutation.
void cmaes_update(SearchDistribution& dist, const CmaesParams& params,
                  const MatrixXd& candidates, const std::vector<double>& costs);

}  // namespace ccvpsto::planner
