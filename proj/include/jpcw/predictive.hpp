#pragma once

// Posterior for uncensored Weibull samples and posterior predictive p-values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "jpcw/bayes.hpp"
#include "jpcw/gof.hpp"
#include "jpcw/rng.hpp"
#include "jpcw/sample.hpp"
#include "jpcw/simulate.hpp"

namespace jpcw {

/// Posterior of WE(alpha, lambda) from a complete sample under a GA(a0, b0)
/// prior on lambda and GA(a, b) on alpha. Only bg.a0, bg.b0 and the shape
/// hyperparameters are used. The shape is drawn from its log-concave marginal
///   alpha^(n+a-1) exp(-alpha (b - sum ln t)) / (b0 + sum t^alpha)^(a0+n)
/// and lambda | alpha ~ GA(a0+n, b0 + sum t^alpha); the draws are exact so
/// every weight is 1. lambda is stored in both rate slots.
inline WeightedPosterior draw_posterior_complete(const CompleteSample& data, const PriorSpec& prior, std::size_t N,
                                                 RngStream& rng) {
  if (N == 0) throw domain_error("posterior needs N >= 1");
  prior.validate();
  detail::require_spread(data);
  const detail::CompleteTerms t(data);
  const double power = t.n + prior.shape.a - 1.0;
  const double linear = prior.shape.b - t.sum_log_t;
  const double exponent = prior.bg.a0 + t.n;
  const double b0 = prior.bg.b0;

  auto log_b0_plus_s = [&](double a) {
    const double ls = t.sum(a).log_value;
    if (b0 <= 0.0) return ls;
    const double lb = std::log(b0), hi = std::max(lb, ls);
    return hi + std::log1p(std::exp(std::min(lb, ls) - hi));
  };
  LogConcaveTarget target{
      [&](double a) {
        if (!(a > 0.0)) return -std::numeric_limits<double>::infinity();
        return power * std::log(a) - a * linear - exponent * log_b0_plus_s(a);
      },
      [&](double a) {
        const PowerSum s = t.sum(a);
        const double share = b0 > 0.0 ? 1.0 / (1.0 + b0 * std::exp(-s.log_value)) : 1.0;
        return power / a - linear - exponent * s.d1 * share;
      },
      {}};
  if (!(power > -1.0) || target.log_density_derivative(AdaptiveRejectionSampler::probe_hi) >= 0.0)
    throw improper_posterior_error("complete-sample shape posterior is not integrable");

  AdaptiveRejectionSampler sampler(target, 0.0);
  WeightedPosterior post;
  post.draws.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    PosteriorDraw d;
    d.alpha = sampler.draw(rng);
    d.lambda1 = d.lambda2 = sample_gamma(exponent, b0 + t.sum(d.alpha).value(), rng);
    d.g = 1.0;
    d.log_g = 0.0;
    post.draws.push_back(d);
  }
  post.shape_acceptance_rate = sampler.acceptance_rate();
  normalize_weights(post);
  return post;
}

/// Two complete samples as one JPC sample with every R_j = 0. Repeated values
/// are separated by position-stable offsets of 1e-9 so failure times are
/// strictly increasing; stored data are untouched.
inline JpcSample pooled_complete_sample(const CompleteSample& data1, const CompleteSample& data2) {
  std::vector<JpcObservation> obs;
  for (double x : data1.values()) obs.push_back({x, true, 0});
  for (double x : data2.values()) obs.push_back({x, false, 0});
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (std::size_t j = 1; j < obs.size(); ++j)
    if (!(obs[j].t > obs[j - 1].t)) obs[j].t = obs[j - 1].t + 1e-9;
  CensoringScheme scheme{data1.size(), data2.size(), std::vector<std::size_t>(obs.size(), 0)};
  return JpcSample(std::move(scheme), std::move(obs));
}

struct PredictiveCheck {
  double p_value = 1.0;                // share of replicates with D(rep, theta) >= D(obs, theta)
  double expected_discrepancy = 0.0;   // posterior mean of D(obs, theta)
  std::size_t replicates = 0;
};

/// Posterior predictive p-value. For each of `n_rep` replicates a draw theta
/// is picked with probability v_i, a data set of the observed design is
/// simulated by `simulate(theta, rng)`, and D(replicate, theta) is compared
/// with D(observed, theta). Ties count as exceedances.
template <class Data, class Simulate, class Discrepancy>
PredictiveCheck posterior_predictive_pvalue(const Data& observed, const WeightedPosterior& post, Simulate&& simulate,
                                            Discrepancy&& discrepancy, std::size_t n_rep, const RngStream& rng) {
  if (post.draws.empty() || post.normalized.size() != post.draws.size())
    throw domain_error("predictive check needs a normalised posterior");
  if (n_rep == 0) throw domain_error("predictive check needs at least one replicate");

  std::vector<double> observed_d(post.draws.size());
  PredictiveCheck out;
  for (std::size_t i = 0; i < post.draws.size(); ++i) {
    observed_d[i] = discrepancy(observed, post.draws[i].params());
    out.expected_discrepancy += post.normalized[i] * observed_d[i];
  }

  std::vector<double> cumulative(post.normalized.size());
  std::partial_sum(post.normalized.begin(), post.normalized.end(), cumulative.begin());
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < n_rep; ++r) {
    RngStream s = rng.derive(r);
    const double u = uniform01(s) * cumulative.back();
    const std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()),
        cumulative.size() - 1);
    const JointParams theta = post.draws[i].params();
    const auto replicate = simulate(theta, s);
    if (discrepancy(replicate, theta) >= observed_d[i]) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / static_cast<double>(n_rep);
  out.replicates = n_rep;
  return out;
}

/// Complete data, K-S discrepancy to WE(alpha, lambda1) at the drawn parameters.
inline PredictiveCheck posterior_predictive_pvalue(const CompleteSample& data, const PriorSpec& prior,
                                                   std::size_t n_rep, const RngStream& rng,
                                                   std::size_t n_draws = 0) {
  RngStream post_rng = rng.derive(0xC0FFEE);
  const WeightedPosterior post = draw_posterior_complete(data, prior, n_draws ? n_draws : n_rep, post_rng);
  const std::size_t n = data.size();
  return posterior_predictive_pvalue(
      data, post,
      [n](const JointParams& p, RngStream& s) {
        std::vector<double> x(n);
        for (auto& v : x) v = sample_weibull(p.alpha, p.lambda1, s);
        return CompleteSample(std::move(x));
      },
      [](const CompleteSample& d, const JointParams& p) { return ks_distance(d, p.alpha, p.lambda1); }, n_rep, rng);
}

/// Sup distance between the pooled Kaplan-Meier estimate and the mixture CDF
///   1 - (m exp(-l1 t^a) + n exp(-l2 t^a)) / (m + n)
/// at the observed failures, comparing both sides of each KM step. The risk
/// set before the j-th failure is m + n - sum_{i<j} (R_i + 1).
inline double km_mixture_distance(const JpcSample& sample, const JointParams& p) {
  const double m = static_cast<double>(sample.m()), n = static_cast<double>(sample.n());
  double at_risk = m + n;
  double surv = 1.0;
  double d = 0.0;
  for (std::size_t j = 0; j < sample.k(); ++j) {
    const double t = sample.observations()[j].t;
    const double ta = std::pow(t, p.alpha);
    const double F = 1.0 - (m * std::exp(-p.lambda1 * ta) + n * std::exp(-p.lambda2 * ta)) / (m + n);
    const double before = 1.0 - surv;
    surv *= 1.0 - 1.0 / at_risk;
    const double after = 1.0 - surv;
    d = std::max({d, std::abs(after - F), std::abs(before - F)});
    at_risk -= static_cast<double>(sample.R(j)) + 1.0;
  }
  return d;
}

/// JPC data: replicates reuse the observed scheme; discrepancy is
/// km_mixture_distance.
inline PredictiveCheck posterior_predictive_pvalue(const JpcSample& sample, const PriorSpec& prior, std::size_t n_rep,
                                                   const RngStream& rng, std::size_t n_draws = 0) {
  RngStream post_rng = rng.derive(0xC0FFEE);
  const WeightedPosterior post = draw_posterior(sample, prior, n_draws ? n_draws : n_rep, post_rng);
  const CensoringScheme scheme = sample.scheme();
  return posterior_predictive_pvalue(
      sample, post, [&scheme](const JointParams& p, RngStream& s) { return simulate_jpc(scheme, p, s); },
      km_mixture_distance, n_rep, rng);
}

}  // namespace jpcw
