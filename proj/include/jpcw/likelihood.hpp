#pragma once

// Sufficient statistics U(alpha), V(alpha), W(alpha) and the JPC log-likelihood.
//
//   U(alpha) = sum_j s_j t_j^alpha + sum_{delta_j=1} t_j^alpha
//   V(alpha) = sum_j w_j t_j^alpha + sum_{delta_j=0} t_j^alpha,   w_j = R_j - s_j
//   W(alpha) = min(U, V)
//   l = k ln(alpha) + k1 ln(lambda1) + k2 ln(lambda2) + (alpha-1) sum ln t_j
//       - lambda1 U(alpha) - lambda2 V(alpha)

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "jpcw/sample.hpp"

namespace jpcw {

/// Weighted power sum S(alpha) = sum c_j t_j^alpha together with the
/// log-derivative ratios S'/S and S''/S. Terms are accumulated directly
/// unless some alpha*ln(t_j) exceeds `overflow_guard`, in which case the whole
/// sum is carried in the log domain.
struct PowerSum {
  double log_value = -std::numeric_limits<double>::infinity();
  double d1 = 0.0;  // S'/S
  double d2 = 0.0;  // S''/S

  double value() const noexcept { return std::exp(log_value); }
  double derivative() const noexcept { return d1 * value(); }
  double second_derivative() const noexcept { return d2 * value(); }
};

inline constexpr double overflow_guard = 700.0;

inline PowerSum power_sum(std::span<const double> weights, std::span<const double> log_t, double alpha) {
  PowerSum out;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (weights[j] > 0.0) top = std::max(top, alpha * log_t[j]);
  if (!std::isfinite(top)) return out;
  // rescale only when exp would overflow or underflow, so ordinary values stay bit-stable
  const double shift = std::fabs(top) > overflow_guard ? top : 0.0;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    const double term = weights[j] * std::exp(alpha * log_t[j] - shift);
    s0 += term;
    s1 += term * log_t[j];
    s2 += term * log_t[j] * log_t[j];
  }
  out.log_value = std::log(s0) + shift;
  out.d1 = s1 / s0;
  out.d2 = s2 / s0;
  return out;
}

/// Per-sample cache of log t_j and the U/V weights.
class SampleTerms {
 public:
  explicit SampleTerms(const JpcSample& sample) {
    const auto& obs = sample.observations();
    log_t_.reserve(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
      log_t_.push_back(std::log(obs[j].t));
      cu_.push_back(static_cast<double>(obs[j].s) + (obs[j].from_group1 ? 1.0 : 0.0));
      cv_.push_back(static_cast<double>(sample.w(j)) + (obs[j].from_group1 ? 0.0 : 1.0));
      ctot_.push_back(static_cast<double>(sample.R(j)) + 1.0);
      sum_log_t_ += log_t_.back();
    }
    k_ = static_cast<double>(sample.k());
    k1_ = static_cast<double>(sample.k1());
    k2_ = static_cast<double>(sample.k2());
  }

  PowerSum U(double alpha) const { return power_sum(cu_, log_t_, alpha); }
  PowerSum V(double alpha) const { return power_sum(cv_, log_t_, alpha); }
  PowerSum total(double alpha) const { return power_sum(ctot_, log_t_, alpha); }

  double sum_log_t() const noexcept { return sum_log_t_; }
  double k() const noexcept { return k_; }
  double k1() const noexcept { return k1_; }
  double k2() const noexcept { return k2_; }
  std::span<const double> log_t() const noexcept { return log_t_; }
  std::span<const double> u_weights() const noexcept { return cu_; }
  std::span<const double> v_weights() const noexcept { return cv_; }

 private:
  std::vector<double> log_t_, cu_, cv_, ctot_;
  double sum_log_t_ = 0.0;
  double k_ = 0.0, k1_ = 0.0, k2_ = 0.0;
};

/// U(alpha). alpha = 0 is accepted and returns the counting limit m.
inline double u_stat(const JpcSample& sample, double alpha) {
  if (!(alpha >= 0.0)) throw domain_error("u_stat: alpha must be non-negative");
  return SampleTerms(sample).U(alpha).value();
}

/// V(alpha). alpha = 0 returns n.
inline double v_stat(const JpcSample& sample, double alpha) {
  if (!(alpha >= 0.0)) throw domain_error("v_stat: alpha must be non-negative");
  return SampleTerms(sample).V(alpha).value();
}

inline double w_stat(const JpcSample& sample, double alpha) {
  const SampleTerms terms(sample);
  return std::min(terms.U(alpha).value(), terms.V(alpha).value());
}

inline double log_likelihood(const SampleTerms& terms, const JointParams& p) {
  p.validate();
  const PowerSum u = terms.U(p.alpha);
  const PowerSum v = terms.V(p.alpha);
  double ll = terms.k() * std::log(p.alpha) + (p.alpha - 1.0) * terms.sum_log_t();
  if (terms.k1() > 0.0) ll += terms.k1() * std::log(p.lambda1);
  if (terms.k2() > 0.0) ll += terms.k2() * std::log(p.lambda2);
  ll -= p.lambda1 * u.value() + p.lambda2 * v.value();
  return ll;
}

/// Log-likelihood without the additive constant.
inline double log_likelihood(const JpcSample& sample, const JointParams& p) {
  return log_likelihood(SampleTerms(sample), p);
}

}  // namespace jpcw
