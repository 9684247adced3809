#include "ccvpsto/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ccvpsto/rng.hpp"

namespace ccvpsto::planner {

namespace {
constexpr double kEigenvalueFloor = 1e-12;
}

CmaesParams CmaesParams::defaults(int dim, int lambda) {
  if (dim < 1) throw std::invalid_argument("CmaesParams: dim must be >= 1");
  if (lambda < 4) throw std::invalid_argument("CmaesParams: lambda must be >= 4");
  CmaesParams p;
  p.dim = dim;
  p.lambda = lambda;
  p.mu = lambda / 2;
  VectorXd raw(p.mu);
  for (int i = 0; i < p.mu; ++i)
    raw[i] = std::log((lambda + 1) / 2.0) - std::log(static_cast<double>(i + 1));
  p.weights = raw / raw.sum();
  p.mu_eff = 1.0 / p.weights.squaredNorm();
  const double n = dim;
  p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
  p.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
  p.c_mu = std::min(1.0 - p.c1, 2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) /
                                    ((n + 2.0) * (n + 2.0) + p.mu_eff));
  p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return p;
}

void SearchDistribution::refresh_eigen() {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("SearchDistribution: covariance eigendecomposition failed");
  eigen_basis = solver.eigenvectors();
  VectorXd values = solver.eigenvalues();
  bool repaired = false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < kEigenvalueFloor) {
      values[i] = kEigenvalueFloor;
      repaired = true;
    }
  }
  if (repaired) {
    ++repair_count;
    covariance = eigen_basis * values.asDiagonal() * eigen_basis.transpose();
  }
  eigen_scale = values.cwiseSqrt();
}

SearchDistribution make_distribution(VectorXd mean, double sigma0) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("make_distribution: sigma0 must be > 0");
  SearchDistribution dist;
  const auto dim = mean.size();
  dist.mean = std::move(mean);
  dist.covariance = MatrixXd::Identity(dim, dim);
  dist.sigma = sigma0;
  dist.path_sigma = VectorXd::Zero(dim);
  dist.path_cov = VectorXd::Zero(dim);
  dist.refresh_eigen();
  return dist;
}

MatrixXd sample_population(const SearchDistribution& dist, const CmaesParams& params,
                           std::uint64_t seed, int iteration) {
  const int dim = params.dim;
  MatrixXd population(dim, params.lambda);
  for (int i = 0; i < params.lambda; ++i) {
    Rng rng = Rng::stream(seed, 0x636d6165, static_cast<std::uint64_t>(iteration),
                          static_cast<std::uint64_t>(i));
    VectorXd z(dim);
    for (int d = 0; d < dim; ++d) z[d] = rng.normal();
    population.col(i) =
        dist.mean + dist.sigma * (dist.eigen_basis * (dist.eigen_scale.asDiagonal() * z));
  }
  return population;
}

void cmaes_update(SearchDistribution& dist, const CmaesParams& params,
                  const MatrixXd& candidates, const std::vector<double>& costs) {
  if (candidates.cols() != params.lambda || static_cast<int>(costs.size()) != params.lambda)
    throw std::invalid_argument("cmaes_update: population size mismatch");
  const int dim = params.dim;

  std::vector<int> order(params.lambda);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    // Lexicographic tie-break keeps the update permutation-invariant on
    // plateaus of the penalty landscape.
    for (int d = 0; d < dim; ++d) {
      if (candidates(d, a) != candidates(d, b)) return candidates(d, a) < candidates(d, b);
    }
    return false;
  });

  const VectorXd old_mean = dist.mean;
  VectorXd new_mean = VectorXd::Zero(dim);
  for (int r = 0; r < params.mu; ++r) new_mean += params.weights[r] * candidates.col(order[r]);

  const VectorXd shift = (new_mean - old_mean) / dist.sigma;

  // C^{-1/2} * shift via the cached eigendecomposition.
  const VectorXd whitened = dist.eigen_basis * (dist.eigen_scale.cwiseInverse().asDiagonal() *
                                                (dist.eigen_basis.transpose() * shift));

  dist.path_sigma = (1.0 - params.c_sigma) * dist.path_sigma +
                    std::sqrt(params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff) * whitened;

  const double ps_norm = dist.path_sigma.norm();
  const double expected = std::sqrt(
      1.0 - std::pow(1.0 - params.c_sigma, 2.0 * (dist.generation + 1)));
  const bool stall = ps_norm / expected < (1.4 + 2.0 / (dim + 1.0)) * params.chi_n;

  dist.path_cov = (1.0 - params.c_c) * dist.path_cov;
  if (stall)
    dist.path_cov += std::sqrt(params.c_c * (2.0 - params.c_c) * params.mu_eff) * shift;

  MatrixXd rank_mu = MatrixXd::Zero(dim, dim);
  for (int r = 0; r < params.mu; ++r) {
    const VectorXd y = (candidates.col(order[r]) - old_mean) / dist.sigma;
    rank_mu += params.weights[r] * (y * y.transpose());
  }

  const double missing = stall ? 0.0 : params.c_c * (2.0 - params.c_c);
  dist.covariance = (1.0 - params.c1 - params.c_mu) * dist.covariance +
                    params.c1 * (dist.path_cov * dist.path_cov.transpose() +
                                 missing * dist.covariance) +
                    params.c_mu * rank_mu;

  dist.sigma *= std::exp((params.c_sigma / params.d_sigma) * (ps_norm / params.chi_n - 1.0));
  dist.mean = new_mean;
  ++dist.generation;
  dist.refresh_eigen();
}

}  // namespace ccvpsto::planner
