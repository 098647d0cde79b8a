#pragma once

// Counter-based random streams and the variate generators used throughout
// the library. Every generator takes its stream explicitly; nothing here
// touches global state, so distinct streams may be used from distinct threads.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "jpcw/errors.hpp"

namespace jpcw {

// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output of stream `seed` is
/// mix64(mix64(seed) + i * 0x9E3779B97F4A7C15). The output depends only on
/// (seed, counter), never on platform or call history, which keeps Monte
/// Carlo tables bit-reproducible.
///
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter), key_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
  }

  /// Independent child stream; children of the same parent with different
  /// indices do not overlap in practice.
  constexpr RngStream derive(std::uint64_t index) const noexcept {
    return RngStream(mix64(seed_ ^ mix64(index + 0xD1B54A32D192ED03ULL)), 0);
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  friend constexpr bool operator==(const RngStream& a, const RngStream& b) noexcept {
    return a.seed_ == b.seed_ && a.counter_ == b.counter_;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  std::uint64_t key_;
};

/// Uniform on the open interval (0, 1): 53 random bits centred in their cell.
inline double uniform01(RngStream& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, bound). Lemire's nearly-divisionless method.
inline std::uint64_t uniform_index(RngStream& rng, std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal via the Marsaglia polar method (one value per accepted pair;
/// the second is discarded to keep the generator stateless).
inline double sample_standard_normal(RngStream& rng) noexcept {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

/// Gamma with shape `shape` and rate `rate` (mean shape/rate).
/// Marsaglia-Tsang squeeze for shape >= 1, boosted by U^(1/shape) below 1.
/// Shape 0 is an improper-prior marker and is rejected here.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw domain_error("sample_gamma: shape and rate must be positive and finite");
  if (shape < 1.0) {
    const double boost = std::pow(uniform01(rng), 1.0 / shape);
    return sample_gamma(shape + 1.0, rate, rng) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

inline double sample_beta(double a, double b, RngStream& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw domain_error("sample_beta: parameters must be positive");
  for (;;) {
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    const double s = x + y;
    // Both gammas can underflow to zero for tiny shapes; redraw.
    if (s > 0.0) return x / s;
  }
}

/// WE(alpha, lambda) with density alpha*lambda*t^(alpha-1)*exp(-lambda*t^alpha),
/// by inversion: t = (-ln(1-u)/lambda)^(1/alpha).
inline double weibull_quantile(double alpha, double lambda, double u) {
  if (!(alpha > 0.0) || !(lambda > 0.0))
    throw domain_error("weibull: alpha and lambda must be positive");
  return std::pow(-std::log1p(-u) / lambda, 1.0 / alpha);
}

inline double weibull_cdf(double alpha, double lambda, double t) noexcept {
  if (t <= 0.0) return 0.0;
  return -std::expm1(-lambda * std::pow(t, alpha));
}

inline double sample_weibull(double alpha, double lambda, RngStream& rng) {
  return weibull_quantile(alpha, lambda, uniform01(rng));
}

/// Hyperparameters (a0, b0, a1, a2) of the Beta-Gamma law: the total rate
/// lambda1+lambda2 is GA(a0, b0) and the share lambda1/(lambda1+lambda2) is
/// Beta(a1, a2), independently. Zeros are allowed in priors (improper,
/// non-informative choice); samplers require strictly positive values.
struct BetaGammaHyper {
  double a0 = 0.0;
  double b0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  bool proper() const noexcept { return a0 > 0.0 && b0 > 0.0 && a1 > 0.0 && a2 > 0.0; }
  friend bool operator==(const BetaGammaHyper&, const BetaGammaHyper&) = default;
};

inline std::pair<double, double> sample_beta_gamma(const BetaGammaHyper& h, RngStream& rng) {
  if (!h.proper()) throw domain_error("sample_beta_gamma: all hyperparameters must be positive");
  for (;;) {
    const double total = sample_gamma(h.a0, h.b0, rng);
    const double share = sample_beta(h.a1, h.a2, rng);
    const double l1 = share * total;
    const double l2 = (1.0 - share) * total;
    if (l1 > 0.0 && l2 > 0.0) return {l1, l2};
  }
}

/// Sorted Beta-Gamma pair (min, max). Exact ties are redrawn so the result is
/// strictly increasing.
inline std::pair<double, double> sample_ordered_beta_gamma(const BetaGammaHyper& h, RngStream& rng) {
  for (;;) {
    auto [l1, l2] = sample_beta_gamma(h, rng);
    if (l1 < l2) return {l1, l2};
    if (l2 < l1) return {l2, l1};
  }
}

/// Number of population-1 items among `draws` taken without replacement from
/// pop1 + pop2 items. Sequential urn draws; O(draws).
inline std::uint64_t sample_hypergeometric(std::uint64_t pop1, std::uint64_t pop2, std::uint64_t draws,
                                           RngStream& rng) {
  if (draws > pop1 + pop2) throw domain_error("sample_hypergeometric: draws exceed population");
  std::uint64_t taken = 0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    if (pop1 == 0) break;
    if (pop2 == 0) {
      taken += draws - i;
      break;
    }
    if (uniform_index(rng, pop1 + pop2) < pop1) {
      ++taken;
      --pop1;
    } else {
      --pop2;
    }
  }
  return taken;
}

}  // namespace jpcw
