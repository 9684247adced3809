#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ccvpsto::calibration {

// Parameters of a Binomial(N, p) distribution over violation counts.
struct BinomialParams {
  std::int64_t trials = 1;      // N
  double success_prob = 0.0;    // p
  void validate() const;
};

// User-facing chance-constraint specification: accept solutions whose true
// violation probability is at most eta, with confidence 1 - beta, judged
// from N sampled particles.
struct ConfidenceSpec {
  double eta = 0.1;
  double beta = 0.05;
  std::int64_t particles = 100;  // N
  void validate() const;
};

enum class ThresholdVariant {
  Naive,            // floor(eta * N)
  Binomial,         // k_beta from the binomial inverse CDF
  Rademacher,       // distribution-free complexity bound
  BooleRademacher,  // per-constraint split via Boole's inequality
  Hard,             // zero violations allowed
};

std::string to_string(ThresholdVariant variant);
ThresholdVariant threshold_variant_from_string(const std::string& name);

// How the violation-count threshold is derived. The Rademacher variants
// additionally need the problem geometry: workspace dimension n (the bound
// uses d = n + 1), obstacle count m and horizon steps H.
struct ThresholdPolicy {
  ThresholdVariant variant = ThresholdVariant::Binomial;
  int state_dim = 0;
  int obstacles = 0;
  int horizon_steps = 0;

  static ThresholdPolicy naive() { return {ThresholdVariant::Naive, 0, 0, 0}; }
  static ThresholdPolicy binomial() { return {ThresholdVariant::Binomial, 0, 0, 0}; }
  static ThresholdPolicy hard() { return {ThresholdVariant::Hard, 0, 0, 0}; }
  static ThresholdPolicy rademacher(int state_dim, int obstacles, int horizon_steps) {
    return {ThresholdVariant::Rademacher, state_dim, obstacles, horizon_steps};
  }
  static ThresholdPolicy boole_rademacher(int state_dim, int obstacles, int horizon_steps) {
    return {ThresholdVariant::BooleRademacher, state_dim, obstacles, horizon_steps};
  }
  void validate() const;
};

// log P(K = k) for K ~ Binomial(N, p), stable for N up to 1e6.
double binom_log_pmf(const BinomialParams& params, std::int64_t k);
double binom_pmf(const BinomialParams& params, std::int64_t k);

// C(k; N, p) = sum_{l<=k} pmf(l), Kahan-summed.
double binom_cdf(const BinomialParams& params, std::int64_t k);

// k_beta = max{k : C(k; N, eta) <= beta}; nullopt when even k = 0 fails.
std::optional<std::int64_t> k_beta(const ConfidenceSpec& spec);

// Rademacher-complexity threshold:
//   max{k : k/N + m*H*sqrt(2*d*log(e*N/d)/N) + sqrt(log(1/beta)/(2N)) <= eta}
// with d = state_dim + 1. nullopt when the slack alone exceeds eta.
std::optional<std::int64_t> k_beta_rad(const ConfidenceSpec& spec, int state_dim,
                                       int obstacles, int horizon_steps);

// Boole's-inequality variant: per-constraint levels eta/(mH) and beta/(mH),
//   max{k : k/N + sqrt(2*d*log(e*N/d)/N) + sqrt(log(mH/beta)/(2N)) <= eta/(mH)}.
std::optional<std::int64_t> k_beta_rad_boole(const ConfidenceSpec& spec, int state_dim,
                                             int obstacles, int horizon_steps);

// Largest admissible violation *ratio* k/N (k treated as continuous), i.e.
// eta minus the Rademacher slack. Negative means infeasible. This is the
// quantity reported as eta_rad in the threshold tables.
double rademacher_margin(const ConfidenceSpec& spec, int state_dim, int obstacles,
                         int horizon_steps);
double boole_rademacher_margin(const ConfidenceSpec& spec, int state_dim, int obstacles,
                               int horizon_steps);

// Dispatch over the variants. Infeasible bounds resolve to 0, i.e. hard
// "no violations" semantics, which keeps the planner runnable.
std::int64_t resolve_threshold(const ThresholdPolicy& policy, const ConfidenceSpec& spec);

}  // namespace ccvpsto::calibration
