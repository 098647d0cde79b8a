#pragma once

// Data model for joint progressively censored (JPC) samples.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "jpcw/errors.hpp"

namespace jpcw {

/// m units of group 1 and n units of group 2 go on test together; at the j-th
/// failure R[j] survivors are withdrawn at random from the pooled survivors.
struct CensoringScheme {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::size_t> R;

  std::size_t k() const noexcept { return R.size(); }

  void validate() const {
    if (m == 0 || n == 0) throw validation_error("group-sizes", "m and n must be positive");
    if (R.empty()) throw validation_error("k-positive", "at least one failure must be observed");
    if (R.size() > m + n) throw validation_error("k-at-most-m-plus-n", "k exceeds m + n");
    const std::size_t removed = std::accumulate(R.begin(), R.end(), std::size_t{0});
    if (removed != m + n - R.size())
      throw validation_error("withdrawals-sum", "sum of R must equal m + n - k (got " + std::to_string(removed) +
                                                    ", expected " + std::to_string(m + n - R.size()) + ")");
  }

  friend bool operator==(const CensoringScheme&, const CensoringScheme&) = default;
};

struct JpcObservation {
  double t = 0.0;          // failure time
  bool from_group1 = false;  // delta
  std::size_t s = 0;       // group-1 units among the R_j withdrawn at t

  friend bool operator==(const JpcObservation&, const JpcObservation&) = default;
};

struct JointParams {
  double alpha = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;

  bool valid() const noexcept {
    return alpha > 0.0 && lambda1 > 0.0 && lambda2 > 0.0 && std::isfinite(alpha) && std::isfinite(lambda1) &&
           std::isfinite(lambda2);
  }
  void validate() const {
    if (!valid()) throw domain_error("alpha, lambda1 and lambda2 must be positive and finite");
  }
  friend bool operator==(const JointParams&, const JointParams&) = default;
};

class JpcSample {
 public:
  JpcSample() = default;

  /// Throws validation_error naming the violated invariant.
  JpcSample(CensoringScheme scheme, std::vector<JpcObservation> obs)
      : scheme_(std::move(scheme)), obs_(std::move(obs)) {
    validate();
  }

  const CensoringScheme& scheme() const noexcept { return scheme_; }
  const std::vector<JpcObservation>& observations() const noexcept { return obs_; }
  std::size_t k() const noexcept { return obs_.size(); }
  std::size_t m() const noexcept { return scheme_.m; }
  std::size_t n() const noexcept { return scheme_.n; }
  std::size_t R(std::size_t j) const noexcept { return scheme_.R[j]; }
  std::size_t w(std::size_t j) const noexcept { return scheme_.R[j] - obs_[j].s; }

  std::size_t k1() const noexcept {
    std::size_t c = 0;
    for (const auto& o : obs_) c += o.from_group1 ? 1 : 0;
    return c;
  }
  std::size_t k2() const noexcept { return k() - k1(); }

  double sum_log_t() const noexcept {
    double acc = 0.0;
    for (const auto& o : obs_) acc += std::log(o.t);
    return acc;
  }

  /// Same experiment with the group labels exchanged (delta -> 1-delta, s -> R-s, m <-> n).
  JpcSample swapped_groups() const {
    CensoringScheme sc{scheme_.n, scheme_.m, scheme_.R};
    std::vector<JpcObservation> o = obs_;
    for (std::size_t j = 0; j < o.size(); ++j) {
      o[j].from_group1 = !o[j].from_group1;
      o[j].s = scheme_.R[j] - obs_[j].s;
    }
    return JpcSample(std::move(sc), std::move(o));
  }

  /// All failure times multiplied by c > 0.
  JpcSample scaled(double c) const {
    if (!(c > 0.0)) throw domain_error("scale factor must be positive");
    std::vector<JpcObservation> o = obs_;
    for (auto& x : o) x.t *= c;
    return JpcSample(scheme_, std::move(o));
  }

  /// All failure times reduced by a location offset c.
  JpcSample shifted(double c) const {
    std::vector<JpcObservation> o = obs_;
    for (auto& x : o) x.t -= c;
    return JpcSample(scheme_, std::move(o));
  }

  friend bool operator==(const JpcSample&, const JpcSample&) = default;

 private:
  void validate() const {
    scheme_.validate();
    if (obs_.size() != scheme_.k())
      throw validation_error("observation-count", "expected " + std::to_string(scheme_.k()) + " observations, got " +
                                                      std::to_string(obs_.size()));
    std::size_t surv1 = scheme_.m;
    std::size_t surv2 = scheme_.n;
    double prev = 0.0;
    for (std::size_t j = 0; j < obs_.size(); ++j) {
      const auto& o = obs_[j];
      if (!(o.t > 0.0) || !std::isfinite(o.t))
        throw validation_error("positive-times", "failure time " + std::to_string(j + 1) + " is not positive");
      if (j > 0 && !(o.t > prev))
        throw validation_error("strictly-increasing-times", "failure times must be strictly increasing at stage " +
                                                                std::to_string(j + 1));
      prev = o.t;
      if (o.s > scheme_.R[j])
        throw validation_error("withdrawn-within-R", "s exceeds R at stage " + std::to_string(j + 1));
      const std::size_t need1 = (o.from_group1 ? 1 : 0) + o.s;
      const std::size_t need2 = (o.from_group1 ? 0 : 1) + (scheme_.R[j] - o.s);
      if (need1 > surv1 || need2 > surv2)
        throw validation_error("nonnegative-survivors", "more units leave a group than survive at stage " +
                                                            std::to_string(j + 1));
      surv1 -= need1;
      surv2 -= need2;
    }
    // With sum R = m+n-k the stage checks force both counts to zero; kept explicit.
    if (surv1 != 0 || surv2 != 0)
      throw validation_error("units-accounted", "k1 + sum s must equal m and k2 + sum w must equal n");
  }

  CensoringScheme scheme_;
  std::vector<JpcObservation> obs_;
};

}  // namespace jpcw
