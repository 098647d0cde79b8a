#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "jpcw/rng.hpp"
#include "jpcw/sample.hpp"

namespace jpcw {

/// Runs one JPC experiment: m WE(alpha, lambda1) and n WE(alpha, lambda2)
/// lifetimes, recording the earliest survivor at each stage and then
/// withdrawing R_j survivors uniformly at random from the pooled survivors.
inline JpcSample simulate_jpc(const CensoringScheme& scheme, const JointParams& params, RngStream& rng) {
  scheme.validate();
  params.validate();

  std::vector<double> group1(scheme.m), group2(scheme.n);
  for (auto& t : group1) t = sample_weibull(params.alpha, params.lambda1, rng);
  for (auto& t : group2) t = sample_weibull(params.alpha, params.lambda2, rng);

  // Exact ties have probability zero; redraw any that occur so failure times
  // are strictly ordered.
  for (;;) {
    std::vector<double> all(group1);
    all.insert(all.end(), group2.begin(), group2.end());
    std::sort(all.begin(), all.end());
    const auto dup = std::adjacent_find(all.begin(), all.end());
    if (dup == all.end()) break;
    const double tied = *dup;
    bool redrawn = false;
    for (auto& t : group1)
      if (t == tied && !redrawn) {
        t = sample_weibull(params.alpha, params.lambda1, rng);
        redrawn = true;
      }
    for (auto& t : group2)
      if (t == tied && !redrawn) {
        t = sample_weibull(params.alpha, params.lambda2, rng);
        redrawn = true;
      }
  }

  auto remove_random = [&rng](std::vector<double>& pool, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t idx = static_cast<std::size_t>(uniform_index(rng, pool.size()));
      pool[idx] = pool.back();
      pool.pop_back();
    }
  };

  std::vector<JpcObservation> obs;
  obs.reserve(scheme.k());
  for (std::size_t j = 0; j < scheme.k(); ++j) {
    const auto min1 = std::min_element(group1.begin(), group1.end());
    const auto min2 = std::min_element(group2.begin(), group2.end());
    const bool first = min2 == group2.end() || (min1 != group1.end() && *min1 < *min2);
    JpcObservation o;
    if (first) {
      o.t = *min1;
      o.from_group1 = true;
      *min1 = group1.back();
      group1.pop_back();
    } else {
      o.t = *min2;
      o.from_group1 = false;
      *min2 = group2.back();
      group2.pop_back();
    }
    const std::size_t r = scheme.R[j];
    o.s = static_cast<std::size_t>(sample_hypergeometric(group1.size(), group2.size(), r, rng));
    remove_random(group1, o.s);
    remove_random(group2, r - o.s);
    obs.push_back(o);
  }
  return JpcSample(scheme, std::move(obs));
}

}  // namespace jpcw
