#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace jpcw;
using namespace testing_support;

namespace {

// Number of sign changes of the forward-difference slope of f on a log grid.
int slope_sign_changes(const std::function<double(double)>& f, double lo, double hi, int points) {
  int changes = 0, last = 0;
  double prev = f(lo);
  for (int i = 1; i < points; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const double cur = f(x);
    const int sign = cur > prev ? 1 : cur < prev ? -1 : 0;
    if (sign != 0) {
      if (last != 0 && sign != last) ++changes;
      last = sign;
    }
    prev = cur;
  }
  return changes;
}

// Sample whose unrestricted fit has lambda1 < lambda2.
JpcSample increasing_sample(RngStream& rng) {
  for (;;) {
    const JpcSample s = random_two_group_sample(rng, {1.5, 0.4, 1.2});
    const MleFit f = fit_mle(s);
    if (f.params.lambda1 < f.params.lambda2) return s;
  }
}

}  // namespace

TEST(LambdaHats, TwoPointSample) {
  const auto [l1, l2] = lambda_hats(two_point_sample(), 1.0);
  EXPECT_DOUBLE_EQ(l1, 0.5);
  EXPECT_DOUBLE_EQ(l2, 0.25);
}

TEST(LambdaHats, StationaryInRates) {
  const JpcSample s = carbon_sample();
  for (double a : {1.0, 3.0, 4.495, 7.0}) {
    const auto [l1, l2] = lambda_hats(s, a);
    const double h1 = 1e-6 * l1, h2 = 1e-6 * l2;
    const double g1 = (direct_loglik(s, a, l1 + h1, l2) - direct_loglik(s, a, l1 - h1, l2)) / (2 * h1);
    const double g2 = (direct_loglik(s, a, l1, l2 + h2) - direct_loglik(s, a, l1, l2 - h2)) / (2 * h2);
    // relative to the size of each gradient term, k_i / lambda_i
    EXPECT_LT(std::abs(g1) * l1 / s.k1(), 1e-8);
    EXPECT_LT(std::abs(g2) * l2 / s.k2(), 1e-8);
  }
}

TEST(LambdaHats, CarbonSampleAtReportedShape) {
  const auto [l1, l2] = lambda_hats(carbon_sample(), 4.495);
  EXPECT_NEAR(l1, 0.071, 5e-4);
  EXPECT_NEAR(l2, carbon_sample().k2() / direct_V(carbon_sample(), 4.495), 1e-12);
  // the published 0.016 is this value cut to three decimals, not rounded
  EXPECT_NEAR(l2, 0.01678, 5e-6);
  EXPECT_DOUBLE_EQ(std::floor(l2 * 1000) / 1000, 0.016);
}

TEST(LambdaHats, NeedsBothGroups) {
  const JpcSample s(CensoringScheme{3, 1, {1, 1}}, {{1.0, true, 0}, {2.0, true, 1}});
  EXPECT_THROW(lambda_hats(s, 1.0), no_mle_error);
  EXPECT_THROW(fit_mle(s), no_mle_error);
  EXPECT_THROW(profile_loglik(s, 1.0), no_mle_error);
}

TEST(Profile, TwoPointHandValue) { EXPECT_NEAR(profile_loglik(two_point_sample(), 1.0), -std::log(8.0), 1e-14); }

TEST(Profile, UnimodalOnCarbonSample) {
  const JpcSample s = carbon_sample();
  EXPECT_EQ(slope_sign_changes([&](double a) { return profile_loglik(s, a); }, 1e-2, 1e2, 1000), 1);
}

TEST(Profile, UnimodalOnSimulatedSamples) {
  RngStream rng(31);
  for (int i = 0; i < 100; ++i) {
    const JpcSample s = random_two_group_sample(rng);
    const SampleTerms t(s);
    ASSERT_EQ(slope_sign_changes([&](double a) { return profile_loglik(t, a); }, 1e-2, 1e2, 2000), 1) << i;
    ASSERT_EQ(slope_sign_changes([&](double a) { return restricted_profile_loglik(t, a); }, 1e-2, 1e2, 2000), 1)
        << i;
  }
}

TEST(Fit, CarbonSample) {
  const MleFit f = fit_mle(carbon_sample());
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.params.alpha, 4.495, 5e-4);
  EXPECT_NEAR(f.params.lambda1, 0.071, 5e-4);
  // oracle value from an independent root solve; see LambdaHats.CarbonSampleAtReportedShape
  EXPECT_NEAR(f.params.alpha, 4.495155, 1e-5);
  EXPECT_NEAR(f.params.lambda2, 0.016781, 1e-5);
}

TEST(Fit, AgreesWithGridSearch) {
  RngStream rng(32);
  for (int rep = 0; rep < 3; ++rep) {
    const JpcSample s = random_two_group_sample(rng);
    const SampleTerms t(s);
    std::vector<double> lt, cu, cv;
    for (std::size_t j = 0; j < s.k(); ++j) {
      const auto& o = s.observations()[j];
      lt.push_back(std::log(o.t));
      cu.push_back(o.s + (o.from_group1 ? 1.0 : 0.0));
      cv.push_back(s.R(j) - o.s + (o.from_group1 ? 0.0 : 1.0));
    }
    auto wsum = [&](const std::vector<double>& c, double x) {
      double acc = 0;
      for (std::size_t j = 0; j < lt.size(); ++j) acc += c[j] * std::exp(x * lt[j]);
      return acc;
    };
    const int G = 1000000;
    const double lo = 0.01, hi = 100, ratio = std::pow(hi / lo, 1.0 / (G - 1));
    double best = -1e300, arg = lo, x = lo;
    for (int i = 0; i < G; ++i, x *= ratio) {
      const double v = t.k() * std::log(x) - t.k1() * std::log(wsum(cu, x)) - t.k2() * std::log(wsum(cv, x)) +
                       (x - 1) * t.sum_log_t();
      if (v > best) best = v, arg = x;
    }
    EXPECT_NEAR(fit_mle(s).params.alpha, arg, arg * (ratio - 1));
  }
}

TEST(Fit, StationaryAtOptimum) {
  RngStream rng(33);
  for (int i = 0; i < 100; ++i) {
    const JpcSample s = random_two_group_sample(rng);
    const MleFit f = fit_mle(s);
    ASSERT_TRUE(f.converged);
    const auto& p = f.params;
    const SampleTerms t(s);
    const PowerSum u = t.U(p.alpha), v = t.V(p.alpha);
    // analytic gradient of the log-likelihood, each component scaled by its largest term
    const double ga = t.k() / p.alpha + t.sum_log_t() - p.lambda1 * u.derivative() - p.lambda2 * v.derivative();
    const double sa = t.k() / p.alpha + std::abs(t.sum_log_t()) + p.lambda1 * std::abs(u.derivative()) +
                      p.lambda2 * std::abs(v.derivative());
    const double g1 = t.k1() / p.lambda1 - u.value(), g2 = t.k2() / p.lambda2 - v.value();
    ASSERT_LT(std::abs(ga) / sa, 1e-8);
    ASSERT_LT(std::abs(g1) / u.value(), 1e-8);
    ASSERT_LT(std::abs(g2) / v.value(), 1e-8);
  }
}

TEST(Fit, ScaleEquivariance) {
  RngStream rng(34);
  for (int i = 0; i < 20; ++i) {
    const JpcSample s = random_two_group_sample(rng);
    const double c = 0.1 + 5 * uniform01(rng);
    const MleFit a = fit_mle(s), b = fit_mle(s.scaled(c));
    EXPECT_NEAR(b.params.alpha, a.params.alpha, 1e-8 * a.params.alpha);
    const double factor = std::pow(c, -a.params.alpha);
    EXPECT_NEAR(b.params.lambda1, a.params.lambda1 * factor, 1e-7 * a.params.lambda1 * factor);
    EXPECT_NEAR(b.params.lambda2, a.params.lambda2 * factor, 1e-7 * a.params.lambda2 * factor);
  }
}

TEST(Ordered, InactiveRestrictionMatchesUnrestricted) {
  RngStream rng(35);
  const JpcSample s = increasing_sample(rng);
  const MleFit a = fit_mle(s), b = fit_mle_ordered(s);
  EXPECT_FALSE(b.boundary);
  EXPECT_TRUE(b.ordered);
  EXPECT_DOUBLE_EQ(a.params.alpha, b.params.alpha);
  EXPECT_DOUBLE_EQ(a.params.lambda1, b.params.lambda1);
  EXPECT_DOUBLE_EQ(a.params.lambda2, b.params.lambda2);
}

TEST(Ordered, SwappedLabelsHitBoundary) {
  RngStream rng(36);
  const JpcSample s = increasing_sample(rng).swapped_groups();
  const MleFit f = fit_mle_ordered(s);
  EXPECT_TRUE(f.boundary);
  EXPECT_DOUBLE_EQ(f.params.lambda1, f.params.lambda2);
  long double total = 0;
  for (std::size_t j = 0; j < s.k(); ++j)
    total += (s.R(j) + 1.0L) * std::pow(static_cast<long double>(s.observations()[j].t), f.params.alpha);
  EXPECT_NEAR(f.params.lambda1, s.k() / static_cast<double>(total), 1e-12 * f.params.lambda1);
}

TEST(Ordered, NeverExceedsUnrestrictedAndRespectsOrder) {
  RngStream rng(37);
  for (int i = 0; i < 1000; ++i) {
    const JpcSample s = random_two_group_sample(rng, {1.2, 0.8, 1.0});
    const MleFit a = fit_mle(s), b = fit_mle_ordered(s);
    ASSERT_LE(b.loglik, a.loglik + 1e-9 * std::abs(a.loglik));
    ASSERT_LE(b.params.lambda1, b.params.lambda2);
    const MleFit d = fit_mle_ordered(s, Ordering::decreasing);
    ASSERT_GE(d.params.lambda1, d.params.lambda2);
  }
}

TEST(Fisher, TwoPointHandValues) {
  const InfoMatrix A = fisher_info(two_point_sample(), {1, 1, 1});
  EXPECT_DOUBLE_EQ(A(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(A(2, 2), 1.0);
  EXPECT_EQ(A(1, 2), 0.0);
  EXPECT_EQ(A(2, 1), 0.0);
}

TEST(Fisher, MatchesFiniteDifferenceHessian) {
  RngStream rng(38);
  for (int rep = 0; rep < 100; ++rep) {
    const JpcSample s = random_two_group_sample(rng);
    const MleFit f = fit_mle(s);
    const double x0[3] = {f.params.alpha, f.params.lambda1, f.params.lambda2};
    auto l = [&](const double* x) { return direct_loglik(s, x[0], x[1], x[2]); };
    const InfoMatrix A = fisher_info(s, f.params);
    EXPECT_EQ(A(1, 2), 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double hi = 1e-3 * x0[i], hj = 1e-3 * x0[j];
        // fourth-order central stencils
        double fd;
        if (i == j) {
          double xs[5][3];
          for (int q = 0; q < 5; ++q) {
            std::copy(x0, x0 + 3, xs[q]);
            xs[q][i] += (q - 2) * hi;
          }
          fd = (-l(xs[0]) + 16 * l(xs[1]) - 30 * l(xs[2]) + 16 * l(xs[3]) - l(xs[4])) / (12 * hi * hi);
        } else {
          auto at = [&](int a, int b) {
            double x[3] = {x0[0], x0[1], x0[2]};
            x[i] += a * hi;
            x[j] += b * hj;
            return l(x);
          };
          fd = (8 * (at(1, -2) + at(2, -1) + at(-2, 1) + at(-1, 2)) - 8 * (at(-1, -2) + at(-2, -1) + at(1, 2) + at(2, 1)) -
                (at(2, -2) + at(-2, 2) - at(-2, -2) - at(2, 2)) + 64 * (at(-1, -1) + at(1, 1) - at(1, -1) - at(-1, 1))) /
               (144 * hi * hj);
        }
        const double scale = std::sqrt(A(i, i) * A(j, j));
        ASSERT_NEAR(-fd, A(i, j), 1e-5 * scale) << "rep " << rep << " entry " << i << j;
      }
  }
}

TEST(Fisher, PositiveDefiniteAtInteriorMle) {
  const JpcSample s = carbon_sample();
  const InfoMatrix A = fisher_info(s, fit_mle(s).params);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A.entries);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Asymptotic, QuantileAndContainment) {
  EXPECT_NEAR(normal_quantile(0.95), 1.6449, 1e-4);
  const JpcSample s = carbon_sample();
  const MleFit f = fit_mle(s);
  const auto ci = asymptotic_ci(s, f, 0.9);
  EXPECT_TRUE(ci[0].contains(f.params.alpha));
  EXPECT_TRUE(ci[1].contains(f.params.lambda1));
  EXPECT_TRUE(ci[2].contains(f.params.lambda2));
  EXPECT_NEAR(ci[0].upper - f.params.alpha, f.params.alpha - ci[0].lower, 1e-12);
  EXPECT_THROW(asymptotic_ci(s, f, 1.0), domain_error);
}

TEST(Asymptotic, WidthShrinksWithK) {
  // Same proportion of withdrawals, growing k: mean alpha width ~ 1/sqrt(k).
  const JointParams truth{1, 0.5, 1};
  std::vector<double> ks, widths;
  for (std::size_t k : {20, 25, 45}) {
    const std::size_t m = k, n = k + 2;
    std::vector<std::size_t> R(k, 0);
    R.back() = m + n - k;
    RngStream rng(39);
    double w = 0;
    int used = 0;
    for (int rep = 0; rep < 400; ++rep) {
      const JpcSample s = simulate_jpc({m, n, R}, truth, rng);
      if (s.k1() == 0 || s.k2() == 0) continue;
      w += asymptotic_ci(s, fit_mle(s), 0.9)[0].length();
      ++used;
    }
    ks.push_back(static_cast<double>(k));
    widths.push_back(w / used);
  }
  for (std::size_t i = 1; i < ks.size(); ++i) {
    const double expected = widths[0] * std::sqrt(ks[0] / ks[i]);
    EXPECT_NEAR(widths[i], expected, 0.1 * expected);
  }
}

TEST(Bootstrap, CarbonSampleInterval) {
  // A single B=500 upper endpoint has a seed-to-seed sd of about 0.14, so the
  // band is applied to the mean over seeds.
  const JpcSample s = carbon_sample();
  double lo = 0, hi = 0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    const BootstrapResult b = bootstrap_ci(s, 0.9, 500, false, RngStream(seed));
    EXPECT_EQ(b.used + b.skipped, 500u);
    EXPECT_LT(b.intervals[0].lower, b.fit.params.alpha);
    EXPECT_GT(b.intervals[0].upper, b.fit.params.alpha);
    lo += b.intervals[0].lower / seeds;
    hi += b.intervals[0].upper / seeds;
  }
  EXPECT_NEAR(lo, 3.461, 0.15);
  EXPECT_NEAR(hi, 6.693, 0.15);
}

TEST(Bootstrap, SingleResampleCollapses) {
  const BootstrapResult b = bootstrap_ci(carbon_sample(), 0.9, 1, false, RngStream(4));
  for (const auto& iv : b.intervals) EXPECT_EQ(iv.lower, iv.upper);
}

TEST(Bootstrap, DeterministicGivenStream) {
  const JpcSample s = carbon_sample();
  const auto a = bootstrap_ci(s, 0.9, 50, true, RngStream(5)), b = bootstrap_ci(s, 0.9, 50, true, RngStream(5));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.intervals[i].lower, b.intervals[i].lower);
    EXPECT_EQ(a.intervals[i].upper, b.intervals[i].upper);
  }
}

TEST(Bootstrap, UnstableExactlyWhenMostResamplesDegenerate) {
  // One group-2 unit among 21: about a third of resamples have k2 = 0. With
  // B = 3 some seeds lose two of three and must throw.
  const JpcSample s(CensoringScheme{20, 1, {0, 0, 0, 0, 0, 15}}, {{0.6, true, 0},
                                                                  {0.7, true, 0},
                                                                  {0.8, true, 0},
                                                                  {0.9, true, 0},
                                                                  {1.0, true, 0},
                                                                  {1.05, false, 15}});
  int threw = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    try {
      const BootstrapResult b = bootstrap_ci(s, 0.9, 3, false, RngStream(seed));
      EXPECT_LE(2 * b.skipped, 3u);
      EXPECT_EQ(b.used + b.skipped, 3u);
    } catch (const unstable_bootstrap_error&) {
      ++threw;
    }
  }
  EXPECT_GT(threw, 0);
  EXPECT_LT(threw, 60);
}
