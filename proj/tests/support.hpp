#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the library's estimation code.

#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "jpcw/jpcw.hpp"

namespace testing_support {

using namespace jpcw;

inline std::string data_path(const std::string& name) { return std::string(JPCW_DATA_DIR) + "/" + name; }

inline JpcSample carbon_sample() { return parse_jpc_file(data_path("carbon_jpc.txt")).shifted(0.75); }
inline CompleteSample dataset1() { return parse_complete_file(data_path("dataset1.txt"), 0.75); }
inline CompleteSample dataset2() { return parse_complete_file(data_path("dataset2.txt"), 0.75); }

/// k=2: obs (1.0, delta=1, s=1), (2.0, delta=0, s=0) with m=2, n=2, R=(1,1).
inline JpcSample two_point_sample() {
  return JpcSample(CensoringScheme{2, 2, {1, 1}}, {{1.0, true, 1}, {2.0, false, 0}});
}

/// k=4, m=n=3, R=(1,0,0,1).
inline JpcSample four_point_sample() {
  return JpcSample(CensoringScheme{3, 3, {1, 0, 0, 1}},
                   {{0.3, true, 0}, {0.5, false, 0}, {0.9, true, 0}, {1.4, false, 1}});
}

/// Random scheme with m, n in [5, 25] and k in [2, m+n], withdrawals spread at random.
inline CensoringScheme random_scheme(RngStream& rng) {
  const std::size_t m = 5 + uniform_index(rng, 21), n = 5 + uniform_index(rng, 21);
  const std::size_t k = 2 + uniform_index(rng, m + n - 1);
  std::vector<std::size_t> R(k, 0);
  for (std::size_t left = m + n - k; left > 0; --left) ++R[uniform_index(rng, k)];
  return {m, n, R};
}

/// Simulated sample guaranteed to contain failures from both groups.
inline JpcSample random_two_group_sample(RngStream& rng, const JointParams& truth = {1.5, 0.5, 1.0}) {
  for (;;) {
    const JpcSample s = simulate_jpc(random_scheme(rng), truth, rng);
    if (s.k1() > 0 && s.k2() > 0 && s.k() >= 4) return s;
  }
}

// ---- direct re-implementations of the model formulas (no shared code) ----

inline double direct_U(const JpcSample& s, double a) {
  long double acc = 0;
  for (const auto& o : s.observations())
    acc += (static_cast<long double>(o.s) + (o.from_group1 ? 1 : 0)) * std::pow(static_cast<long double>(o.t), a);
  return static_cast<double>(acc);
}

inline double direct_V(const JpcSample& s, double a) {
  long double acc = 0;
  for (std::size_t j = 0; j < s.k(); ++j) {
    const auto& o = s.observations()[j];
    acc += (static_cast<long double>(s.R(j) - o.s) + (o.from_group1 ? 0 : 1)) *
           std::pow(static_cast<long double>(o.t), a);
  }
  return static_cast<double>(acc);
}

inline double direct_loglik(const JpcSample& s, double a, double l1, double l2) {
  double slog = 0;
  for (const auto& o : s.observations()) slog += std::log(o.t);
  const double k = static_cast<double>(s.k()), k1 = static_cast<double>(s.k1()), k2 = k - k1;
  return k * std::log(a) + k1 * std::log(l1) + k2 * std::log(l2) + (a - 1) * slog - l1 * direct_U(s, a) -
         l2 * direct_V(s, a);
}

/// log pi2*(alpha) written out directly: (k+a-1) ln a - a (b - sum ln t) - e ln(b0 + W),
/// with e = a0 + k, or a0 + 2 min(k1, k2) when `ordered`.
inline double direct_log_shape(const JpcSample& s, const BetaGammaHyper& bg, double a, double b, bool ordered,
                               double al) {
  double slog = 0;
  for (const auto& o : s.observations()) slog += std::log(o.t);
  const double k = static_cast<double>(s.k()), k1 = static_cast<double>(s.k1()), k2 = k - k1;
  const double e = ordered ? bg.a0 + 2 * std::min(k1, k2) : bg.a0 + k;
  const double W = std::min(direct_U(s, al), direct_V(s, al));
  return (k + a - 1) * std::log(al) - al * (b - slog) - e * std::log(bg.b0 + W);
}

// ---- quadrature oracles ----

inline double integrate(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, tol);
}

/// Interval [lo, hi] outside which exp(logf - max) < e^-40, found on a log grid.
inline std::pair<double, double> effective_support(const std::function<double(double)>& logf, double lo = 1e-4,
                                                   double hi = 1e3) {
  const int G = 4000;
  std::vector<double> x(G + 1), y(G + 1);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= G; ++i) {
    x[i] = lo * std::pow(hi / lo, static_cast<double>(i) / G);
    y[i] = logf(x[i]);
    top = std::max(top, y[i]);
  }
  int a = 0, b = G;
  while (a < G && y[a] < top - 40) ++a;
  while (b > 0 && y[b] < top - 40) --b;
  return {x[std::max(a - 1, 0)], x[std::min(b + 1, G)]};
}

/// Mean and variance of the density proportional to exp(logf) by quadrature.
struct Moments {
  double mean, var;
};
inline Moments density_moments(const std::function<double(double)>& logf, double lo = 1e-4, double hi = 1e3) {
  const auto [a, b] = effective_support(logf, lo, hi);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 2000; ++i) top = std::max(top, logf(a + (b - a) * i / 2000.0));
  auto f = [&](double x) { return std::exp(logf(x) - top); };
  const double z = integrate(f, a, b);
  const double m1 = integrate([&](double x) { return x * f(x); }, a, b) / z;
  const double m2 = integrate([&](double x) { return x * x * f(x); }, a, b) / z;
  return {m1, m2 - m1 * m1};
}

/// Posterior means of (alpha, lambda1, lambda2) under a Beta-Gamma x GA(a, b)
/// prior, by integrating the joint posterior directly. The rates are written
/// lambda1 = p L, lambda2 = (1-p) L; the L integral is done in closed form and
/// the remaining (alpha, p) integral by nested adaptive quadrature. With
/// `ordered` the prior is the sorted-pair law on lambda1 < lambda2 (p < 1/2),
/// whose density symmetrises the two Beta exponents.
inline std::array<double, 3> quadrature_posterior_means(const JpcSample& s, const BetaGammaHyper& bg, double a,
                                                        double b, bool ordered = false) {
  const double k = static_cast<double>(s.k()), k1 = static_cast<double>(s.k1()), k2 = k - k1;
  double slog = 0;
  for (const auto& o : s.observations()) slog += std::log(o.t);
  const double A = bg.a0 + k;
  auto log_beta_part = [&](double p) {
    const double x = (bg.a1 - 1) * std::log(p) + (bg.a2 - 1) * std::log1p(-p);
    if (!ordered) return x;
    const double y = (bg.a2 - 1) * std::log(p) + (bg.a1 - 1) * std::log1p(-p);
    const double hi = std::max(x, y);
    return hi + std::log(std::exp(x - hi) + std::exp(y - hi));
  };
  // log of the (alpha, p) kernel after integrating L, with extra L power `e`
  auto log_kernel = [&](double al, double p, double e) {
    const double rate = bg.b0 + p * direct_U(s, al) + (1 - p) * direct_V(s, al);
    return (k + a - 1) * std::log(al) - al * (b - slog) + log_beta_part(p) + k1 * std::log(p) +
           k2 * std::log1p(-p) + std::lgamma(A + e) - (A + e) * std::log(rate);
  };
  const double p_hi = ordered ? 0.5 : 1.0;
  auto inner = [&](double al, double e, int which) {
    const double ref = log_kernel(al, 0.5 * p_hi, 0);
    auto f = [&](double p) {
      const double w = which == 1 ? p : which == 2 ? 1 - p : 1.0;
      return w * std::exp(log_kernel(al, p, e) - ref);
    };
    return integrate(f, 0.0, p_hi, 1e-9) * std::exp(ref);
  };
  const auto [lo, hi] = effective_support([&](double al) { return std::log(inner(al, 0, 0)); }, 1e-3, 50);
  const double ref = std::log(inner(0.5 * (lo + hi), 0, 0));
  auto scaled = [&](double e, int which, bool times_alpha) {
    return integrate(
        [&](double al) { return (times_alpha ? al : 1.0) * inner(al, e, which) * std::exp(-ref); }, lo, hi, 1e-9);
  };
  const double z = scaled(0, 0, false);
  return {scaled(0, 0, true) / z, scaled(1, 1, false) / z, scaled(1, 2, false) / z};
}

/// HPD interval of GA(shape, rate): equal-density endpoints holding `level`.
inline std::pair<double, double> gamma_hpd(double shape, double rate, double level) {
  const boost::math::gamma_distribution<double> g(shape, 1.0 / rate);
  const double mode = (shape - 1) / rate;
  auto logpdf = [&](double x) { return (shape - 1) * std::log(x) - rate * x; };
  auto upper_for = [&](double l) {
    const double target = logpdf(l);
    double u0 = mode, u1 = mode + 1.0 / rate;
    while (logpdf(u1) > target) u1 *= 2;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (u0 + u1);
      (logpdf(mid) > target ? u0 : u1) = mid;
    }
    return 0.5 * (u0 + u1);
  };
  double l0 = 1e-12, l1 = mode;
  for (int i = 0; i < 200; ++i) {
    const double l = 0.5 * (l0 + l1);
    const double mass = boost::math::cdf(g, upper_for(l)) - boost::math::cdf(g, l);
    (mass > level ? l0 : l1) = l;
  }
  const double l = 0.5 * (l0 + l1);
  return {l, upper_for(l)};
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Standard error of the sample mean.
inline double std_error(const std::vector<double>& x) { return std::sqrt(variance(x) / static_cast<double>(x.size())); }

}  // namespace testing_support
