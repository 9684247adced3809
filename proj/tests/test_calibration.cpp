#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ccvpsto/calibration.hpp"
#include "ccvpsto/rng.hpp"

#ifdef CCVPSTO_HAVE_BOOST_MP
#include <boost/multiprecision/cpp_int.hpp>
#endif

using namespace ccvpsto::calibration;

namespace {

#ifdef CCVPSTO_HAVE_BOOST_MP
using BigInt = boost::multiprecision::cpp_int;

BigInt binomial_coefficient(std::int64_t n, std::int64_t k) {
  BigInt result = 1;
  for (std::int64_t i = 0; i < k; ++i) {
    result *= (n - i);
    result /= (i + 1);
  }
  return result;
}

// Exact CDF for a rational success probability p = num/den: compares
// C(k; N, p) <= beta by cross-multiplied integer arithmetic.
struct ExactBinomial {
  std::int64_t trials;
  std::int64_t num, den;  // p = num / den

  // sum_{l<=k} C(N,l) num^l (den-num)^(N-l), to be divided by den^N
  BigInt cdf_numerator(std::int64_t k) const {
    BigInt sum = 0;
    for (std::int64_t l = 0; l <= k; ++l) {
      BigInt term = binomial_coefficient(trials, l);
      for (std::int64_t i = 0; i < l; ++i) term *= num;
      for (std::int64_t i = 0; i < trials - l; ++i) term *= (den - num);
      sum += term;
    }
    return sum;
  }

  // C(k; N, p) <= beta_num / beta_den, exactly.
  bool cdf_at_most(std::int64_t k, std::int64_t beta_num, std::int64_t beta_den) const {
    BigInt lhs = cdf_numerator(k) * beta_den;
    BigInt rhs = BigInt(beta_num);
    for (std::int64_t i = 0; i < trials; ++i) rhs *= den;
    return lhs <= rhs;
  }

  double cdf(std::int64_t k) const {
    BigInt numerator = cdf_numerator(k);
    BigInt denominator = 1;
    for (std::int64_t i = 0; i < trials; ++i) denominator *= den;
    // 60 extra bits of quotient precision
    BigInt scaled = (numerator << 60) / denominator;
    return static_cast<double>(scaled.convert_to<long double>() / std::pow(2.0L, 60));
  }

  std::int64_t k_beta_exact(std::int64_t beta_num, std::int64_t beta_den) const {
    std::int64_t best = -1;
    for (std::int64_t k = 0; k <= trials; ++k) {
      if (cdf_at_most(k, beta_num, beta_den))
        best = k;
      else
        break;
    }
    return best;  // -1 encodes infeasible
  }
};
#endif

}  // namespace

TEST_CASE("pmf basics and domain errors") {
  CHECK(binom_pmf({1, 0.5}, 0) == doctest::Approx(0.5));
  CHECK(binom_pmf({10, 0.0}, 0) == doctest::Approx(1.0));
  CHECK(binom_pmf({10, 0.0}, 3) == doctest::Approx(0.0));
  CHECK(binom_pmf({10, 1.0}, 10) == doctest::Approx(1.0));
  CHECK_THROWS_AS(binom_pmf({10, 0.5}, -1), std::domain_error);
  CHECK_THROWS_AS(binom_pmf({10, 0.5}, 11), std::domain_error);
  CHECK_THROWS_AS(binom_pmf({0, 0.5}, 0), std::invalid_argument);
  CHECK_THROWS_AS(binom_pmf({10, 1.5}, 0), std::invalid_argument);
}

TEST_CASE("pmf recurrence pmf(k+1)/pmf(k) = (N-k)/(k+1) * p/(1-p)") {
  const BinomialParams params{100, 0.05};
  for (std::int64_t k = 0; k < 20; ++k) {
    const double ratio = binom_pmf(params, k + 1) / binom_pmf(params, k);
    const double expected = static_cast<double>(100 - k) / static_cast<double>(k + 1) *
                            (0.05 / 0.95);
    CHECK(ratio == doctest::Approx(expected).epsilon(1e-11));
  }
  // anchor: pmf(0) = 0.95^100, extended by the recurrence to k = 2
  double expected = std::pow(0.95, 100);
  for (std::int64_t k = 0; k < 2; ++k)
    expected *= static_cast<double>(100 - k) / static_cast<double>(k + 1) * (0.05 / 0.95);
  CHECK(binom_pmf(params, 2) == doctest::Approx(expected).epsilon(1e-12));
}

#ifdef CCVPSTO_HAVE_BOOST_MP
TEST_CASE("pmf and cdf match exact rational arithmetic for N <= 30") {
  for (std::int64_t n : {1, 2, 5, 13, 30}) {
    for (std::int64_t num : {1, 5, 50, 95}) {
      const ExactBinomial exact{n, num, 100};
      const BinomialParams params{n, static_cast<double>(num) / 100.0};
      for (std::int64_t k = 0; k <= n; ++k) {
        CHECK(binom_cdf(params, k) == doctest::Approx(exact.cdf(k)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("k_beta equals the exact rational version for N <= 50") {
  const std::vector<std::pair<std::int64_t, std::int64_t>> betas = {
      {1, 100}, {5, 100}, {10, 100}};
  for (std::int64_t n = 1; n <= 50; ++n) {
    for (std::int64_t eta_pct = 5; eta_pct <= 95; eta_pct += 5) {
      const ExactBinomial exact{n, eta_pct, 100};
      for (const auto& [bn, bd] : betas) {
        const ConfidenceSpec spec{static_cast<double>(eta_pct) / 100.0,
                                  static_cast<double>(bn) / static_cast<double>(bd), n};
        const auto ours = k_beta(spec);
        const auto truth = exact.k_beta_exact(bn, bd);
        if (truth < 0) {
          CHECK_FALSE(ours.has_value());
        } else {
          REQUIRE(ours.has_value());
          CHECK(*ours == truth);
        }
      }
    }
  }
}
#endif

TEST_CASE("cdf examples") {
  CHECK(binom_cdf({100, 0.05}, 100) == doctest::Approx(1.0).epsilon(1e-12));
  // direct evaluation: 0.95^100 + 100 * 0.05 * 0.95^99
  const double direct = std::pow(0.95, 100) + 100.0 * 0.05 * std::pow(0.95, 99);
  CHECK(binom_cdf({100, 0.05}, 1) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(binom_cdf({100, 0.05}, 1) == doctest::Approx(0.0371).epsilon(1e-3));
  CHECK(binom_cdf({100, 0.1}, 4) < 0.05);
  CHECK(binom_cdf({100, 0.1}, 5) >= 0.05);
}

TEST_CASE("cdf is nondecreasing in k and strictly decreasing in p") {
  for (std::int64_t n : {10, 100}) {
    for (double p : {0.05, 0.3, 0.7}) {
      double prev = -1.0;
      for (std::int64_t k = 0; k <= n; ++k) {
        const double c = binom_cdf({n, p}, k);
        CHECK(c >= prev);
        prev = c;
      }
    }
    // Strict decrease in p holds mathematically; in doubles the tail
    // saturates at 1, so strictness is only checkable below saturation.
    for (std::int64_t k = 1; k < n; ++k) {
      const double lo = binom_cdf({n, 0.3}, k);
      const double hi = binom_cdf({n, 0.2}, k);
      if (hi < 1.0 - 1e-12)
        CHECK(hi > lo);
      else
        CHECK(hi >= lo);
      const double lo2 = binom_cdf({n, 0.5}, k);
      if (lo < 1.0 - 1e-12)
        CHECK(lo > lo2);
      else
        CHECK(lo >= lo2);
    }
  }
}

TEST_CASE("k_beta matches the reference thresholds") {
  CHECK(k_beta({0.05, 0.05, 100}) == 1);
  CHECK(k_beta({0.05, 0.05, 1000}) == 38);
  CHECK(k_beta({0.1, 0.05, 100}) == 4);
  CHECK_FALSE(k_beta({0.0, 0.05, 100}).has_value());
}

TEST_CASE("k_beta at most the naive threshold for beta < 0.5") {
  for (std::int64_t n : {20, 100, 1000}) {
    for (double eta : {0.05, 0.1, 0.3, 0.6, 0.9}) {
      if (eta * static_cast<double>(n) < 1.0) continue;
      for (double beta : {0.01, 0.05, 0.2, 0.49}) {
        const auto kb = k_beta({eta, beta, n});
        const auto naive = resolve_threshold(ThresholdPolicy::naive(), {eta, beta, n});
        if (kb) CHECK(*kb <= naive);
      }
    }
  }
}

TEST_CASE("k_beta at beta = 0.5 approaches eta N") {
  const auto kb = k_beta({0.1, 0.5, 100000});
  REQUIRE(kb.has_value());
  CHECK(std::abs(static_cast<double>(*kb) / 1e5 - 0.1) < 0.005);
}

TEST_CASE("rademacher thresholds and margins") {
  // (N=100, eta=0.8): margin 0.1576.. prints as 0.158; integer threshold 15
  const ConfidenceSpec top{0.8, 0.05, 100};
  CHECK(rademacher_margin(top, 2, 1, 1) == doctest::Approx(0.158).epsilon(5e-3));
  const auto k100 = k_beta_rad(top, 2, 1, 1);
  REQUIRE(k100.has_value());
  CHECK(*k100 == 15);

  const auto k1000 = k_beta_rad({0.25, 0.05, 1000}, 2, 1, 1);
  REQUIRE(k1000.has_value());
  CHECK(*k1000 == 9);
  CHECK(static_cast<double>(*k1000) / 1000.0 == doctest::Approx(0.009));

  CHECK_FALSE(k_beta_rad({0.05, 0.05, 100}, 2, 1, 1).has_value());
}

TEST_CASE("boole variant: scanning oracle at N = 1e6 and dominance") {
  const ConfidenceSpec spec{0.8, 0.05, 1000000};
  const auto ours = k_beta_rad_boole(spec, 2, 2, 2);
  REQUIRE(ours.has_value());

  // oracle: scan the closed-form inequality directly
  const double n = 1e6, d = 3.0, mh = 4.0;
  const double slack = std::sqrt(2.0 * d * std::log(std::exp(1.0) * n / d) / n) +
                       std::sqrt(std::log(mh / 0.05) / (2.0 * n));
  std::int64_t scanned = -1;
  for (std::int64_t k = 0; k <= 1000000; ++k) {
    if (static_cast<double>(k) / n + slack <= 0.8 / mh)
      scanned = k;
    else
      break;
  }
  REQUIRE(scanned >= 0);
  CHECK(*ours == scanned);

  // any infeasible k_rad input is infeasible for the boole variant too
  CHECK_FALSE(k_beta_rad({0.05, 0.05, 100}, 2, 1, 1).has_value());
  CHECK_FALSE(k_beta_rad_boole({0.05, 0.05, 100}, 2, 1, 1).has_value());

  // m = H = 1: the two bounds coincide, so boole <= rad holds with equality
  for (std::int64_t cells_n : {100, 1000}) {
    for (double eta : {0.3, 0.5, 0.8}) {
      const ConfidenceSpec s{eta, 0.05, cells_n};
      const auto rad = k_beta_rad(s, 2, 1, 1);
      const auto boole = k_beta_rad_boole(s, 2, 1, 1);
      if (rad)
        CHECK(boole.value_or(-1) <= *rad);
      else
        CHECK_FALSE(boole.has_value());
    }
  }
}

TEST_CASE("ordering k_rad_boole <= k_rad <= k_beta <= naive across the table grid") {
  for (std::int64_t n : {100, 1000}) {
    for (double eta : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.6, 0.8}) {
      const ConfidenceSpec spec{eta, 0.05, n};
      const auto boole = k_beta_rad_boole(spec, 2, 1, 1);
      const auto rad = k_beta_rad(spec, 2, 1, 1);
      const auto kb = k_beta(spec);
      const auto naive = resolve_threshold(ThresholdPolicy::naive(), spec);
      const auto value = [](const std::optional<std::int64_t>& v) {
        return v ? *v : std::int64_t{-1};  // Infeasible orders below 0
      };
      CHECK(value(boole) <= value(rad));
      CHECK(value(rad) <= value(kb));
      CHECK(value(kb) <= naive);
    }
  }
}

TEST_CASE("resolve_threshold dispatch") {
  CHECK(resolve_threshold(ThresholdPolicy::naive(), {0.1, 0.05, 100}) == 10);
  CHECK(resolve_threshold(ThresholdPolicy::naive(), {0.35, 0.05, 100}) == 35);
  CHECK(resolve_threshold(ThresholdPolicy::binomial(), {0.1, 0.05, 100}) == 4);
  CHECK(resolve_threshold(ThresholdPolicy::hard(), {0.1, 0.05, 100}) == 0);
  CHECK(resolve_threshold(ThresholdPolicy::hard(), {0.8, 0.05, 100000}) == 0);
  // infeasible maps to hard semantics
  CHECK(resolve_threshold(ThresholdPolicy::binomial(), {0.0, 0.05, 100}) == 0);
  CHECK(resolve_threshold(ThresholdPolicy::rademacher(2, 1, 1), {0.05, 0.05, 100}) == 0);
  CHECK_THROWS_AS(resolve_threshold(ThresholdPolicy::rademacher(0, 1, 1), {0.1, 0.05, 100}),
                  std::invalid_argument);
}

TEST_CASE("statistical guarantee: violating solutions rarely pass the k_beta test") {
  // A fixed indicator with true violation probability p > eta; the fraction
  // of particle sets accepting it (k <= k_beta) must stay below beta plus
  // sampling noise.
  const std::int64_t n = 100;
  const double eta = 0.1, beta = 0.05, p = eta + 0.02;
  const auto kb = k_beta({eta, beta, n});
  REQUIRE(kb.has_value());
  const int trials = 10000;
  int accepted = 0;
  ccvpsto::Rng rng(20240917);
  for (int t = 0; t < trials; ++t) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (rng.uniform01() < p) ++k;
    if (k <= *kb) ++accepted;
  }
  const double fraction = static_cast<double>(accepted) / trials;
  CHECK(fraction <= beta + 3.0 * std::sqrt(beta / trials));
}
