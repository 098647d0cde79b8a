#pragma once

// Bayesian inference for the JPC Weibull model by importance sampling.
//
// With a GA(a, b) prior on the shape and a Beta-Gamma prior on the rates the
// posterior factorises as
//
//   pi(alpha, l1, l2 | data) ∝ pi1*(l1, l2 | alpha) * pi2*(alpha) * g(alpha, l1, l2)
//
// where pi1* is BG(a0+k, b0+W, a1+k1, a2+k2), pi2* is the shape marginal
//
//   pi2*(alpha) ∝ alpha^(k+a-1) exp(-alpha (b - sum ln t)) / (b0 + W(alpha))^(a0+k)
//
// and g = exp(-l1 (U-W)) exp(-l2 (V-W)) is the importance weight. Under the
// order restriction l1 < l2 with an ordered Beta-Gamma prior, J = min(k1, k2)
// replaces k1, k2 in the BG update (giving OBG(a0+2J, b0+W, a1+J, a2+J)), the
// marginal exponent becomes a0+2J, and g gains the factor l1^(k1-J) l2^(k2-J).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "jpcw/errors.hpp"
#include "jpcw/likelihood.hpp"
#include "jpcw/log_concave.hpp"
#include "jpcw/mle.hpp"
#include "jpcw/rng.hpp"
#include "jpcw/sample.hpp"

namespace jpcw {

struct ShapeHyper {
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const ShapeHyper&, const ShapeHyper&) = default;
};

struct PriorSpec {
  BetaGammaHyper bg{};
  ShapeHyper shape{};
  bool ordered = false;
  Ordering order = Ordering::increasing;

  void validate() const {
    for (double x : {bg.a0, bg.b0, bg.a1, bg.a2, shape.a, shape.b})
      if (!(x >= 0.0) || !std::isfinite(x)) throw domain_error("prior hyperparameters must be finite and >= 0");
  }

  /// All hyperparameters zero except, optionally, the shape rate b.
  static PriorSpec non_informative(double b = 0.0) { return {{0, 0, 0, 0}, {0.0, b}, false, Ordering::increasing}; }
};

struct PosteriorDraw {
  double alpha = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double g = 0.0;      // importance weight
  double log_g = 0.0;  // its logarithm (kept because ordered weights span many decades)

  JointParams params() const noexcept { return {alpha, lambda1, lambda2}; }
};

struct WeightedPosterior {
  std::vector<PosteriorDraw> draws;
  std::vector<double> normalized;  // v_i = g_i / sum g
  double effective_sample_size = 0.0;
  double shape_acceptance_rate = 1.0;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return draws.size(); }
};

/// Fills `normalized` and the effective sample size from the draws' log-weights.
inline void normalize_weights(WeightedPosterior& post) {
  if (post.draws.empty()) throw domain_error("posterior has no draws");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& d : post.draws) top = std::max(top, d.log_g);
  if (!std::isfinite(top)) throw degenerate_weights_error("all importance weights are zero");
  post.normalized.resize(post.draws.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < post.draws.size(); ++i) {
    post.normalized[i] = std::exp(post.draws[i].log_g - top);
    sum += post.normalized[i];
  }
  double sq = 0.0;
  for (double& v : post.normalized) {
    v /= sum;
    sq += v * v;
  }
  post.effective_sample_size = 1.0 / sq;
}

/// Log of the (unnormalised) shape marginal pi2*(alpha | data), its
/// derivative, and the points where U and V cross (where W switches branch).
class ShapeMarginal {
 public:
  ShapeMarginal(const JpcSample& sample, const PriorSpec& prior)
      : terms_(sample), prior_(prior) {
    prior.validate();
    if (sample.k() == 0) throw domain_error("posterior needs at least one failure");
    const double J = std::min(terms_.k1(), terms_.k2());
    exponent_ = prior.ordered ? prior.bg.a0 + 2.0 * J : prior.bg.a0 + terms_.k();
    shape_power_ = terms_.k() + prior.shape.a - 1.0;
    linear_ = prior.shape.b - terms_.sum_log_t();
    locate_crossings();
  }

  double log_density(double alpha) const {
    if (!(alpha > 0.0)) return -std::numeric_limits<double>::infinity();
    return shape_power_ * std::log(alpha) - alpha * linear_ - exponent_ * log_b0_plus_w(alpha);
  }

  double derivative(double alpha) const {
    const PowerSum u = terms_.U(alpha);
    const PowerSum v = terms_.V(alpha);
    const PowerSum& w = u.log_value <= v.log_value ? u : v;
    // d/dalpha ln(b0 + W) = W' / (b0 + W) = d1 * W / (b0 + W)
    const double share = prior_.bg.b0 > 0.0 ? 1.0 / (1.0 + prior_.bg.b0 * std::exp(-w.log_value)) : 1.0;
    return shape_power_ / alpha - linear_ - exponent_ * w.d1 * share;
  }

  LogConcaveTarget target() const {
    return {[this](double a) { return log_density(a); }, [this](double a) { return derivative(a); }, crossings_};
  }

  /// The density must decay at the upper probe and be integrable at zero.
  void check_proper() const {
    if (!(shape_power_ > -1.0)) throw improper_posterior_error("shape marginal is not integrable at zero");
    if (!(derivative(AdaptiveRejectionSampler::probe_hi) < 0.0))
      throw improper_posterior_error("shape marginal does not decay; posterior is improper for this prior");
  }

  const std::vector<double>& crossings() const noexcept { return crossings_; }
  const SampleTerms& terms() const noexcept { return terms_; }
  double exponent() const noexcept { return exponent_; }

 private:
  double log_b0_plus_w(double alpha) const {
    const double lw = std::min(terms_.U(alpha).log_value, terms_.V(alpha).log_value);
    if (prior_.bg.b0 <= 0.0) return lw;
    const double lb = std::log(prior_.bg.b0);
    const double hi = std::max(lb, lw);
    return hi + std::log1p(std::exp(std::min(lb, lw) - hi));
  }

  double log_ratio(double alpha) const { return terms_.U(alpha).log_value - terms_.V(alpha).log_value; }

  // Sign changes of ln U - ln V on a log grid over [1e-6, 1e6], refined by bisection.
  void locate_crossings() {
    constexpr int grid = 2400;
    const double lo = std::log(1e-6), hi = std::log(1e6);
    double prev_a = std::exp(lo);
    double prev = log_ratio(prev_a);
    for (int i = 1; i <= grid; ++i) {
      const double a = std::exp(lo + (hi - lo) * i / grid);
      const double cur = log_ratio(a);
      if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
        double x0 = prev_a, x1 = a;
        const bool rising = prev < 0.0;
        for (int it = 0; it < 200 && x1 - x0 > 1e-14 * x1; ++it) {
          const double mid = 0.5 * (x0 + x1);
          if ((log_ratio(mid) < 0.0) == rising)
            x0 = mid;
          else
            x1 = mid;
        }
        crossings_.push_back(0.5 * (x0 + x1));
      }
      prev = cur;
      prev_a = a;
    }
  }

  SampleTerms terms_;
  PriorSpec prior_;
  double exponent_ = 0.0;
  double shape_power_ = 0.0;
  double linear_ = 0.0;
  std::vector<double> crossings_;
};

/// log pi2*(alpha | data) without normalising constant.
inline double log_marginal_shape(const JpcSample& sample, const PriorSpec& prior, double alpha) {
  if (!(alpha > 0.0)) throw domain_error("alpha must be positive");
  const PriorSpec p = prior.ordered && prior.order == Ordering::decreasing
                          ? PriorSpec{{prior.bg.a0, prior.bg.b0, prior.bg.a2, prior.bg.a1}, prior.shape, true,
                                      Ordering::increasing}
                          : prior;
  const JpcSample s = prior.ordered && prior.order == Ordering::decreasing ? sample.swapped_groups() : sample;
  ShapeMarginal marginal(s, p);
  marginal.check_proper();
  return marginal.log_density(alpha);
}

namespace detail {

inline WeightedPosterior draw_posterior_increasing(const JpcSample& sample, const PriorSpec& prior, std::size_t N,
                                                   RngStream& rng) {
  ShapeMarginal marginal(sample, prior);
  marginal.check_proper();
  const SampleTerms& t = marginal.terms();
  const double J = std::min(t.k1(), t.k2());
  const double e1 = prior.ordered ? J : t.k1();
  const double e2 = prior.ordered ? J : t.k2();
  const BetaGammaHyper shape_free{prior.bg.a0 + e1 + e2, prior.bg.b0, prior.bg.a1 + e1, prior.bg.a2 + e2};
  if (!(shape_free.a0 > 0.0 && shape_free.a1 > 0.0 && shape_free.a2 > 0.0))
    throw improper_posterior_error("rate posterior is improper: a group has no failures and a zero prior weight");

  AdaptiveRejectionSampler sampler(marginal.target(), 0.0);
  WeightedPosterior post;
  post.draws.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    PosteriorDraw d;
    d.alpha = sampler.draw(rng);
    const PowerSum u = t.U(d.alpha);
    const PowerSum v = t.V(d.alpha);
    const double lw = std::min(u.log_value, v.log_value);
    BetaGammaHyper h = shape_free;
    h.b0 = prior.bg.b0 + std::exp(lw);
    const auto [l1, l2] = prior.ordered ? sample_ordered_beta_gamma(h, rng) : sample_beta_gamma(h, rng);
    d.lambda1 = l1;
    d.lambda2 = l2;
    // U - W and V - W computed relative to W to avoid cancellation.
    const double du = u.log_value > lw ? std::exp(lw) * std::expm1(u.log_value - lw) : 0.0;
    const double dv = v.log_value > lw ? std::exp(lw) * std::expm1(v.log_value - lw) : 0.0;
    d.log_g = -l1 * du - l2 * dv;
    if (prior.ordered) d.log_g += (t.k1() - J) * std::log(l1) + (t.k2() - J) * std::log(l2);
    d.g = std::exp(d.log_g);
    post.draws.push_back(d);
  }
  post.shape_acceptance_rate = sampler.acceptance_rate();
  if (sampler.envelope_violations() > 0)
    post.warnings.push_back("shape sampler envelope violated " + std::to_string(sampler.envelope_violations()) +
                            " times");
  return post;
}

}  // namespace detail

/// Importance-sampling posterior: shape draws from the log-concave marginal,
/// rates from the conditional (ordered) Beta-Gamma, weights g.
inline WeightedPosterior draw_posterior(const JpcSample& sample, const PriorSpec& prior, std::size_t N,
                                        RngStream& rng) {
  if (N == 0) throw domain_error("posterior needs N >= 1");
  prior.validate();
  WeightedPosterior post;
  if (prior.ordered && prior.order == Ordering::decreasing) {
    PriorSpec swapped{{prior.bg.a0, prior.bg.b0, prior.bg.a2, prior.bg.a1}, prior.shape, true, Ordering::increasing};
    post = detail::draw_posterior_increasing(sample.swapped_groups(), swapped, N, rng);
    for (auto& d : post.draws) std::swap(d.lambda1, d.lambda2);
  } else {
    post = detail::draw_posterior_increasing(sample, prior, N, rng);
  }
  normalize_weights(post);
  if (post.effective_sample_size < 0.01 * static_cast<double>(N))
    post.warnings.push_back("effective sample size " + std::to_string(post.effective_sample_size) +
                            " is below 1% of the draws");
  return post;
}

using ParamFunction = std::function<double(const JointParams&)>;

/// sum_i v_i h(theta_i).
inline double bayes_estimate(const WeightedPosterior& post, const ParamFunction& h) {
  if (post.draws.empty()) throw domain_error("posterior has no draws");
  double sum_v = 0.0;
  for (double v : post.normalized) sum_v += v;
  if (!(sum_v > 0.0)) throw degenerate_weights_error("all normalized weights are zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < post.draws.size(); ++i) acc += post.normalized[i] * h(post.draws[i].params());
  return acc / sum_v;
}

/// Shortest interval (h_(j1), h_(j2)) over the weighted sample such that
///   sum_{i=j1..j2} v_(i) <= level < sum_{i=j1..j2+1} v_(i),   j1 < j2,
/// with h sorted ascending and v carried along. Ties in width go to the
/// smallest j1. If no pair qualifies (a single point carries more than
/// `level`, or N = 1) the shortest interval holding at least `level` is used.
inline IntervalEstimate hpd_interval(std::span<const double> values, std::span<const double> weights, double level) {
  if (!(level > 0.0 && level < 1.0)) throw domain_error("level must lie in (0, 1)");
  if (values.empty() || values.size() != weights.size()) throw domain_error("hpd needs matching non-empty inputs");
  const std::size_t N = values.size();
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> h(N), prefix(N + 1, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) total += weights[idx[i]];
  for (std::size_t i = 0; i < N; ++i) {
    h[i] = values[idx[i]];
    prefix[i + 1] = prefix[i] + weights[idx[i]] / total;
  }
  constexpr double eps = 1e-12;
  auto mass = [&](std::size_t a, std::size_t b) { return prefix[b + 1] - prefix[a]; };

  bool found = false;
  std::size_t best1 = 0, best2 = 0;
  std::size_t j2 = 0;
  for (std::size_t j1 = 0; j1 + 1 < N; ++j1) {
    if (j2 < j1) j2 = j1;
    while (j2 + 1 < N && mass(j1, j2 + 1) <= level + eps) ++j2;
    // j2 is the largest index with mass(j1, j2) <= level; the condition also
    // needs a next point that pushes the mass past `level`.
    if (j2 + 1 >= N || j2 <= j1 || mass(j1, j2) > level + eps) continue;
    if (!found || h[j2] - h[j1] < h[best2] - h[best1]) {
      best1 = j1;
      best2 = j2;
      found = true;
    }
  }
  if (!found) {
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < N; ++lo) {
      if (hi < lo) hi = lo;
      while (hi + 1 < N && mass(lo, hi) < level - eps) ++hi;
      if (mass(lo, hi) < level - eps) break;
      if (!found || h[hi] - h[lo] < h[best2] - h[best1]) {
        best1 = lo;
        best2 = hi;
        found = true;
      }
    }
    if (!found) best1 = best2 = 0;
  }
  return {h[best1], h[best2], level};
}

inline IntervalEstimate hpd_interval(const WeightedPosterior& post, const ParamFunction& h, double level) {
  if (post.draws.empty()) throw domain_error("posterior has no draws");
  std::vector<double> values(post.draws.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = h(post.draws[i].params());
  return hpd_interval(values, post.normalized, level);
}

inline double param_alpha(const JointParams& p) { return p.alpha; }
inline double param_lambda1(const JointParams& p) { return p.lambda1; }
inline double param_lambda2(const JointParams& p) { return p.lambda2; }

}  // namespace jpcw
