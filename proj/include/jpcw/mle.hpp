#pragma once

// Maximum likelihood for the two-group Weibull JPC model: unrestricted and
// order-restricted fits through the one-dimensional shape profile, observed
// Fisher information, and asymptotic / parametric-bootstrap intervals.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "jpcw/errors.hpp"
#include "jpcw/likelihood.hpp"
#include "jpcw/rng.hpp"
#include "jpcw/sample.hpp"
#include "jpcw/simulate.hpp"

namespace jpcw {

/// Direction of the order restriction on the rates.
enum class Ordering {
  increasing,  // lambda1 <= lambda2
  decreasing,  // lambda1 >= lambda2
};

struct MleFit {
  JointParams params;
  double loglik = 0.0;  // log-likelihood without additive constant, at params
  bool ordered = false;
  bool boundary = false;  // order-restricted fit landed on lambda1 == lambda2
  std::size_t iterations = 0;
  bool converged = false;
};

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.9;

  double length() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Negative Hessian of the log-likelihood in (alpha, lambda1, lambda2).
struct InfoMatrix {
  Eigen::Matrix3d entries = Eigen::Matrix3d::Zero();
  double operator()(int i, int j) const { return entries(i, j); }
};

namespace detail {

struct RootResult {
  double x = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr double bracket_min = 1e-8;
inline constexpr double bracket_max = 1e8;
inline constexpr double relative_tolerance = 1e-10;
inline constexpr std::size_t max_iterations = 200;

/// Zero of a decreasing function by bisection on a bracket expanded from 1.
inline RootResult bisect_decreasing(const std::function<double(double)>& f) {
  double lo = 1.0, hi = 1.0;
  if (f(1.0) > 0.0) {
    do {
      lo = hi;
      hi *= 2.0;
      if (hi > bracket_max) throw non_convergence_error("shape bracket expansion exhausted (upper)");
    } while (f(hi) > 0.0);
  } else {
    do {
      hi = lo;
      lo *= 0.5;
      if (lo < bracket_min) throw non_convergence_error("shape bracket expansion exhausted (lower)");
    } while (f(lo) <= 0.0);
  }
  RootResult r;
  while (r.iterations < max_iterations) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo < relative_tolerance * mid) {
      r.converged = true;
      break;
    }
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    ++r.iterations;
  }
  r.x = 0.5 * (lo + hi);
  return r;
}

inline void require_both_groups(const SampleTerms& terms) {
  if (terms.k1() <= 0.0 || terms.k2() <= 0.0)
    throw no_mle_error("MLE requires failures from both groups (k1 > 0 and k2 > 0)");
}

inline double profile_derivative(const SampleTerms& t, double alpha) {
  return t.k() / alpha + t.sum_log_t() - t.k1() * t.U(alpha).d1 - t.k2() * t.V(alpha).d1;
}

// Restricted rates lambda1 <= lambda2 for fixed alpha; second is true on the boundary.
inline std::pair<JointParams, bool> restricted_rates(const SampleTerms& t, double alpha) {
  const double u = t.U(alpha).value();
  const double v = t.V(alpha).value();
  const double l1 = t.k1() / u;
  const double l2 = t.k2() / v;
  if (l1 < l2) return {{alpha, l1, l2}, false};
  const double pooled = t.k() / t.total(alpha).value();
  return {{alpha, pooled, pooled}, true};
}

inline double restricted_profile_derivative(const SampleTerms& t, double alpha) {
  const auto [p, boundary] = restricted_rates(t, alpha);
  if (!boundary) return profile_derivative(t, alpha);
  return t.k() / alpha + t.sum_log_t() - t.k() * t.total(alpha).d1;
}

}  // namespace detail

/// Conditional MLEs of the rates for fixed shape: (k1/U, k2/V).
inline std::pair<double, double> lambda_hats(const JpcSample& sample, double alpha) {
  const SampleTerms t(sample);
  detail::require_both_groups(t);
  if (!(alpha > 0.0)) throw domain_error("alpha must be positive");
  return {t.k1() / t.U(alpha).value(), t.k2() / t.V(alpha).value()};
}

/// Profile log-likelihood of the shape without additive constant:
/// k ln(alpha) - k1 ln U - k2 ln V + (alpha-1) sum ln t.
inline double profile_loglik(const SampleTerms& t, double alpha) {
  detail::require_both_groups(t);
  if (!(alpha > 0.0)) throw domain_error("alpha must be positive");
  return t.k() * std::log(alpha) - t.k1() * t.U(alpha).log_value - t.k2() * t.V(alpha).log_value +
         (alpha - 1.0) * t.sum_log_t();
}

inline double profile_loglik(const JpcSample& sample, double alpha) {
  return profile_loglik(SampleTerms(sample), alpha);
}

/// Log-likelihood at the order-restricted rates (lambda1 <= lambda2) for fixed shape.
inline double restricted_profile_loglik(const SampleTerms& t, double alpha) {
  detail::require_both_groups(t);
  if (!(alpha > 0.0)) throw domain_error("alpha must be positive");
  return log_likelihood(t, detail::restricted_rates(t, alpha).first);
}

inline double restricted_profile_loglik(const JpcSample& sample, double alpha) {
  return restricted_profile_loglik(SampleTerms(sample), alpha);
}

inline MleFit fit_mle(const JpcSample& sample) {
  const SampleTerms t(sample);
  detail::require_both_groups(t);
  const auto root = detail::bisect_decreasing([&](double a) { return detail::profile_derivative(t, a); });
  MleFit fit;
  fit.params = {root.x, t.k1() / t.U(root.x).value(), t.k2() / t.V(root.x).value()};
  fit.loglik = log_likelihood(t, fit.params);
  fit.iterations = root.iterations;
  fit.converged = root.converged;
  return fit;
}

/// Order-restricted MLE. `Ordering::decreasing` is handled by exchanging the
/// group labels, fitting under lambda1 <= lambda2, and exchanging back.
inline MleFit fit_mle_ordered(const JpcSample& sample, Ordering order = Ordering::increasing) {
  if (order == Ordering::decreasing) {
    MleFit fit = fit_mle_ordered(sample.swapped_groups(), Ordering::increasing);
    std::swap(fit.params.lambda1, fit.params.lambda2);
    return fit;
  }
  const SampleTerms t(sample);
  detail::require_both_groups(t);
  const auto root =
      detail::bisect_decreasing([&](double a) { return detail::restricted_profile_derivative(t, a); });
  const auto [params, boundary] = detail::restricted_rates(t, root.x);
  MleFit fit;
  fit.params = params;
  fit.loglik = log_likelihood(t, params);
  fit.ordered = true;
  fit.boundary = boundary;
  fit.iterations = root.iterations;
  fit.converged = root.converged;
  return fit;
}

inline InfoMatrix fisher_info(const JpcSample& sample, const JointParams& p) {
  p.validate();
  const SampleTerms t(sample);
  const PowerSum u = t.U(p.alpha);
  const PowerSum v = t.V(p.alpha);
  InfoMatrix A;
  A.entries(0, 0) = t.k() / (p.alpha * p.alpha) + p.lambda1 * u.second_derivative() +
                    p.lambda2 * v.second_derivative();
  A.entries(0, 1) = A.entries(1, 0) = u.derivative();
  A.entries(0, 2) = A.entries(2, 0) = v.derivative();
  A.entries(1, 1) = t.k1() / (p.lambda1 * p.lambda1);
  A.entries(2, 2) = t.k2() / (p.lambda2 * p.lambda2);
  A.entries(1, 2) = A.entries(2, 1) = 0.0;
  return A;
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

/// Wald intervals theta_i +- z * sqrt((A^-1)_ii) for (alpha, lambda1, lambda2).
inline std::array<IntervalEstimate, 3> asymptotic_ci(const JpcSample& sample, const MleFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw domain_error("level must lie in (0, 1)");
  if (!fit.converged) throw non_convergence_error("asymptotic intervals need a converged fit");
  if (fit.boundary) throw domain_error("asymptotic intervals need an interior fit");
  const InfoMatrix A = fisher_info(sample, fit.params);
  Eigen::LLT<Eigen::Matrix3d> llt(A.entries);
  if (llt.info() != Eigen::Success) throw singular_information_error("information matrix is not positive definite");
  const Eigen::Matrix3d cov = llt.solve(Eigen::Matrix3d::Identity());
  const double z = normal_quantile(0.5 * (1.0 + level));
  const std::array<double, 3> est{fit.params.alpha, fit.params.lambda1, fit.params.lambda2};
  std::array<IntervalEstimate, 3> out;
  for (int i = 0; i < 3; ++i) {
    const double var = cov(i, i);
    if (!(var > 0.0) || !std::isfinite(var)) throw singular_information_error("non-positive asymptotic variance");
    const double half = z * std::sqrt(var);
    out[static_cast<std::size_t>(i)] = {est[static_cast<std::size_t>(i)] - half,
                                        est[static_cast<std::size_t>(i)] + half, level};
  }
  return out;
}

/// Linear-interpolation quantile of sorted data (type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw domain_error("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapResult {
  std::array<IntervalEstimate, 3> intervals;
  MleFit fit;  // fit of the original sample, used as the resampling truth
  std::size_t used = 0;
  std::size_t skipped = 0;  // resamples with k1 * k2 == 0
};

/// Parametric percentile bootstrap: B samples simulated from the fitted model
/// under the observed scheme, each refitted. Replicate b uses rng.derive(b),
/// so results do not depend on execution order.
inline BootstrapResult bootstrap_ci(const JpcSample& sample, double level, std::size_t B, bool ordered,
                                   const RngStream& rng, Ordering order = Ordering::increasing) {
  if (!(level > 0.0 && level < 1.0)) throw domain_error("level must lie in (0, 1)");
  if (B == 0) throw domain_error("bootstrap needs B >= 1");
  BootstrapResult out;
  out.fit = ordered ? fit_mle_ordered(sample, order) : fit_mle(sample);
  std::array<std::vector<double>, 3> reps;
  for (auto& r : reps) r.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    RngStream stream = rng.derive(b);
    const JpcSample sim = simulate_jpc(sample.scheme(), out.fit.params, stream);
    if (sim.k1() == 0 || sim.k2() == 0) {
      ++out.skipped;
      continue;
    }
    const MleFit refit = ordered ? fit_mle_ordered(sim, order) : fit_mle(sim);
    reps[0].push_back(refit.params.alpha);
    reps[1].push_back(refit.params.lambda1);
    reps[2].push_back(refit.params.lambda2);
  }
  if (2 * out.skipped > B || reps[0].empty())
    throw unstable_bootstrap_error("more than half of the bootstrap resamples had k1 * k2 == 0");
  out.used = reps[0].size();
  for (std::size_t i = 0; i < 3; ++i) {
    std::sort(reps[i].begin(), reps[i].end());
    out.intervals[i] = {quantile_sorted(reps[i], 0.5 * (1.0 - level)), quantile_sorted(reps[i], 0.5 * (1.0 + level)),
                        level};
  }
  return out;
}

}  // namespace jpcw
