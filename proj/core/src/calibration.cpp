#include "ccvpsto/calibration.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccvpsto::calibration {

namespace {

constexpr double kEuler = 2.718281828459045235360287471352662498;

// Kahan-compensated accumulator for the CDF scans.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;
  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// max{k in [0, N] : k/N <= margin}, or nullopt when margin < 0.
std::optional<std::int64_t> count_below_margin(std::int64_t n, double margin) {
  if (margin < 0.0) return std::nullopt;
  auto k = static_cast<std::int64_t>(std::floor(margin * static_cast<double>(n)));
  while (k + 1 <= n && static_cast<double>(k + 1) <= margin * static_cast<double>(n)) ++k;
  while (k > 0 && static_cast<double>(k) > margin * static_cast<double>(n)) --k;
  if (k < 0) k = 0;
  if (k > n) k = n;
  return k;
}

}  // namespace

void BinomialParams::validate() const {
  if (trials < 1) throw std::invalid_argument("BinomialParams: trials must be >= 1");
  if (!(success_prob >= 0.0 && success_prob <= 1.0))
    throw std::invalid_argument("BinomialParams: success_prob must be in [0, 1]");
}

void ConfidenceSpec::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("ConfidenceSpec: eta must be in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("ConfidenceSpec: beta must be in (0, 1]");
  if (particles < 1) throw std::invalid_argument("ConfidenceSpec: particles must be >= 1");
}

void ThresholdPolicy::validate() const {
  if (variant == ThresholdVariant::Rademacher || variant == ThresholdVariant::BooleRademacher) {
    if (state_dim < 1 || obstacles < 1 || horizon_steps < 1)
      throw std::invalid_argument(
          "ThresholdPolicy: Rademacher variants require state_dim, obstacles and "
          "horizon_steps >= 1");
  }
}

std::string to_string(ThresholdVariant variant) {
  switch (variant) {
    case ThresholdVariant::Naive: return "naive";
    case ThresholdVariant::Binomial: return "binomial";
    case ThresholdVariant::Rademacher: return "rademacher";
    case ThresholdVariant::BooleRademacher: return "boole-rademacher";
    case ThresholdVariant::Hard: return "hard";
  }
  return "unknown";
}

ThresholdVariant threshold_variant_from_string(const std::string& name) {
  if (name == "naive") return ThresholdVariant::Naive;
  if (name == "binomial") return ThresholdVariant::Binomial;
  if (name == "rademacher") return ThresholdVariant::Rademacher;
  if (name == "boole-rademacher" || name == "boole") return ThresholdVariant::BooleRademacher;
  if (name == "hard") return ThresholdVariant::Hard;
  throw std::invalid_argument("unknown threshold policy: " + name);
}

double binom_log_pmf(const BinomialParams& params, std::int64_t k) {
  params.validate();
  const auto n = params.trials;
  const double p = params.success_prob;
  if (k < 0 || k > n) throw std::domain_error("binom_log_pmf: k out of [0, N]");
  if (p == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p == 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

double binom_pmf(const BinomialParams& params, std::int64_t k) {
  return std::exp(binom_log_pmf(params, k));
}

double binom_cdf(const BinomialParams& params, std::int64_t k) {
  params.validate();
  if (k < 0 || k > params.trials) throw std::domain_error("binom_cdf: k out of [0, N]");
  Accumulator acc;
  for (std::int64_t l = 0; l <= k; ++l) acc.add(binom_pmf(params, l));
  return acc.sum > 1.0 ? 1.0 : acc.sum;
}

std::optional<std::int64_t> k_beta(const ConfidenceSpec& spec) {
  spec.validate();
  const BinomialParams params{spec.particles, spec.eta};
  // The CDF is nondecreasing in k, so a linear scan from k = 0 terminates at
  // the first exceedance. The comparison is tie-inclusive: a hair of relative
  // tolerance keeps exact rational ties C(k; N, eta) = beta on the feasible
  // side despite representation noise in the log-gamma path.
  const double bound = spec.beta * (1.0 + 1e-12);
  Accumulator acc;
  std::optional<std::int64_t> best;
  for (std::int64_t k = 0; k <= spec.particles; ++k) {
    acc.add(binom_pmf(params, k));
    if (acc.sum <= bound)
      best = k;
    else
      break;
  }
  return best;
}

double rademacher_margin(const ConfidenceSpec& spec, int state_dim, int obstacles,
                         int horizon_steps) {
  spec.validate();
  if (state_dim < 1 || obstacles < 1 || horizon_steps < 1)
    throw std::invalid_argument("rademacher_margin: geometry must be >= 1");
  const auto n = static_cast<double>(spec.particles);
  const double d = static_cast<double>(state_dim) + 1.0;
  const double complexity = static_cast<double>(obstacles) * static_cast<double>(horizon_steps) *
                            std::sqrt(2.0 * d * std::log(kEuler * n / d) / n);
  const double confidence = std::sqrt(std::log(1.0 / spec.beta) / (2.0 * n));
  return spec.eta - complexity - confidence;
}

double boole_rademacher_margin(const ConfidenceSpec& spec, int state_dim, int obstacles,
                               int horizon_steps) {
  spec.validate();
  if (state_dim < 1 || obstacles < 1 || horizon_steps < 1)
    throw std::invalid_argument("boole_rademacher_margin: geometry must be >= 1");
  const auto n = static_cast<double>(spec.particles);
  const double d = static_cast<double>(state_dim) + 1.0;
  const double mh = static_cast<double>(obstacles) * static_cast<double>(horizon_steps);
  const double complexity = std::sqrt(2.0 * d * std::log(kEuler * n / d) / n);
  const double confidence = std::sqrt(std::log(mh / spec.beta) / (2.0 * n));
  return spec.eta / mh - complexity - confidence;
}

std::optional<std::int64_t> k_beta_rad(const ConfidenceSpec& spec, int state_dim,
                                       int obstacles, int horizon_steps) {
  return count_below_margin(spec.particles,
                            rademacher_margin(spec, state_dim, obstacles, horizon_steps));
}

std::optional<std::int64_t> k_beta_rad_boole(const ConfidenceSpec& spec, int state_dim,
                                             int obstacles, int horizon_steps) {
  return count_below_margin(
      spec.particles, boole_rademacher_margin(spec, state_dim, obstacles, horizon_steps));
}

std::int64_t resolve_threshold(const ThresholdPolicy& policy, const ConfidenceSpec& spec) {
  policy.validate();
  spec.validate();
  switch (policy.variant) {
    case ThresholdVariant::Naive:
      return static_cast<std::int64_t>(
          std::floor(spec.eta * static_cast<double>(spec.particles) + 1e-9));
    case ThresholdVariant::Binomial:
      return k_beta(spec).value_or(0);
    case ThresholdVariant::Rademacher:
      return k_beta_rad(spec, policy.state_dim, policy.obstacles, policy.horizon_steps)
          .value_or(0);
    case ThresholdVariant::BooleRademacher:
      return k_beta_rad_boole(spec, policy.state_dim, policy.obstacles, policy.horizon_steps)
          .value_or(0);
    case ThresholdVariant::Hard:
      return 0;
  }
  throw std::logic_error("resolve_threshold: unhandled variant");
}

}  // namespace ccvpsto::calibration
