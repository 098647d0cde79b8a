#pragma once

// Complete-sample Weibull fitting and goodness of fit: single-sample and
// common-shape MLEs, Kolmogorov-Smirnov distances and p-values, and the
// likelihood-ratio test for equal shapes.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "jpcw/errors.hpp"
#include "jpcw/likelihood.hpp"
#include "jpcw/mle.hpp"
#include "jpcw/rng.hpp"

namespace jpcw {

/// Uncensored lifetimes after subtracting a location offset `shift`.
class CompleteSample {
 public:
  CompleteSample() = default;
  explicit CompleteSample(std::vector<double> raw, double shift = 0.0) : shift_(shift) {
    if (raw.empty()) throw validation_error("non-empty", "complete sample has no values");
    values_.reserve(raw.size());
    for (double x : raw) {
      const double y = x - shift;
      if (!(y > 0.0) || !std::isfinite(y))
        throw validation_error("positive-after-shift", "value " + std::to_string(x) + " is not positive after shift");
      values_.push_back(y);
    }
  }

  const std::vector<double>& values() const noexcept { return values_; }
  double shift() const noexcept { return shift_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  double shift_ = 0.0;
};

struct WeibullParams {
  double alpha = 1.0;
  double lambda = 1.0;
};

namespace detail {

struct CompleteTerms {
  std::vector<double> log_t, ones;
  double sum_log_t = 0.0;
  double n = 0.0;

  explicit CompleteTerms(const CompleteSample& s) {
    for (double x : s.values()) {
      log_t.push_back(std::log(x));
      sum_log_t += log_t.back();
    }
    ones.assign(log_t.size(), 1.0);
    n = static_cast<double>(log_t.size());
  }
  PowerSum sum(double alpha) const { return power_sum(ones, log_t, alpha); }
};

inline void require_spread(const CompleteSample& s) {
  if (s.size() < 2) throw degenerate_data_error("complete-sample fit needs at least two values");
  const auto [lo, hi] = std::minmax_element(s.values().begin(), s.values().end());
  if (*lo == *hi) throw degenerate_data_error("all values are equal");
}

}  // namespace detail

inline double weibull_loglik(const CompleteSample& data, const WeibullParams& p) {
  const detail::CompleteTerms t(data);
  return t.n * (std::log(p.alpha) + std::log(p.lambda)) + (p.alpha - 1.0) * t.sum_log_t -
         p.lambda * t.sum(p.alpha).value();
}

/// MLE (alpha, lambda) of WE(alpha, lambda) from an uncensored sample:
/// alpha solves n/alpha + sum ln t - n S'(alpha)/S(alpha) = 0, lambda = n / S(alpha).
inline WeibullParams fit_weibull_complete(const CompleteSample& data) {
  detail::require_spread(data);
  const detail::CompleteTerms t(data);
  const auto root =
      detail::bisect_decreasing([&](double a) { return t.n / a + t.sum_log_t - t.n * t.sum(a).d1; });
  return {root.x, t.n / t.sum(root.x).value()};
}

struct CommonShapeFit {
  double alpha = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

/// Joint MLE with a shared shape for two uncensored samples.
inline CommonShapeFit fit_common_shape(const CompleteSample& data1, const CompleteSample& data2) {
  detail::require_spread(data1);
  detail::require_spread(data2);
  const detail::CompleteTerms t1(data1), t2(data2);
  const auto root = detail::bisect_decreasing([&](double a) {
    return (t1.n + t2.n) / a + t1.sum_log_t + t2.sum_log_t - t1.n * t1.sum(a).d1 - t2.n * t2.sum(a).d1;
  });
  return {root.x, t1.n / t1.sum(root.x).value(), t2.n / t2.sum(root.x).value()};
}

/// sup |F_n - F| evaluated on both sides of every order statistic.
inline double ks_distance(const CompleteSample& data, double alpha, double lambda) {
  if (!(alpha > 0.0) || !(lambda > 0.0)) throw domain_error("ks_distance: parameters must be positive");
  std::vector<double> x = data.values();
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = weibull_cdf(alpha, lambda, x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

/// Survival function of the Kolmogorov limit law, P(K > x).
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.0) {
    // Theta-function form, fast for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double odd = 2.0 * j - 1.0;
      cdf += std::exp(-odd * odd * pi2 / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    q += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

/// Asymptotic p-value Q(sqrt(n) * D).
inline double ks_pvalue_asymptotic(double distance, std::size_t n) {
  if (!(distance >= 0.0)) throw domain_error("distance must be non-negative");
  return kolmogorov_survival(std::sqrt(static_cast<double>(n)) * distance);
}

/// Monte Carlo p-value of a K-S distance from a sample of size n. The null is
/// simulated from WE(1, 1); with `refit` every replicate is refitted before
/// its distance is taken (Lilliefors-type calibration, exact for estimated
/// Weibull parameters because the statistic is invariant to scale and power).
inline double ks_pvalue_monte_carlo(double distance, std::size_t n, bool refit, std::size_t n_mc,
                                    const RngStream& rng) {
  if (!(distance >= 0.0)) throw domain_error("distance must be non-negative");
  if (n_mc == 0 || n < 2) throw domain_error("Monte Carlo p-value needs n >= 2 and n_mc >= 1");
  std::size_t exceed = 0;
  std::vector<double> sim(n);
  for (std::size_t r = 0; r < n_mc; ++r) {
    RngStream s = rng.derive(r);
    for (auto& x : sim) x = sample_weibull(1.0, 1.0, s);
    const CompleteSample cs(sim);
    double d;
    if (refit) {
      const WeibullParams f = fit_weibull_complete(cs);
      d = ks_distance(cs, f.alpha, f.lambda);
    } else {
      d = ks_distance(cs, 1.0, 1.0);
    }
    if (d >= distance) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(n_mc);
}

/// Known parameters: asymptotic Kolmogorov law. Estimated parameters: Monte
/// Carlo with refitting over `n_mc` replicates.
inline double ks_pvalue(double distance, std::size_t n, bool estimated, std::size_t n_mc, const RngStream& rng) {
  if (!estimated) return ks_pvalue_asymptotic(distance, n);
  return ks_pvalue_monte_carlo(distance, n, true, n_mc, rng);
}

struct LikelihoodRatio {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// -2 (l_common - l_separate) against chi-square with one degree of freedom.
inline LikelihoodRatio lr_test_common_shape(const CompleteSample& data1, const CompleteSample& data2) {
  const WeibullParams f1 = fit_weibull_complete(data1);
  const WeibullParams f2 = fit_weibull_complete(data2);
  const CommonShapeFit c = fit_common_shape(data1, data2);
  const double separate = weibull_loglik(data1, f1) + weibull_loglik(data2, f2);
  const double common = weibull_loglik(data1, {c.alpha, c.lambda1}) + weibull_loglik(data2, {c.alpha, c.lambda2});
  LikelihoodRatio out;
  out.statistic = std::max(0.0, -2.0 * (common - separate));
  // Tiny positive statistics are optimizer noise; treat them as exact zero.
  if (out.statistic < 1e-9) out.statistic = 0.0;
  out.p_value = out.statistic == 0.0
                    ? 1.0
                    : boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1.0),
                                                               out.statistic));
  return out;
}

}  // namespace jpcw
