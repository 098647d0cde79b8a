#pragma once

// Monte Carlo studies: average estimate / MSE and interval length / coverage
// over replications simulated from a fixed truth and censoring scheme.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jpcw/bayes.hpp"
#include "jpcw/errors.hpp"
#include "jpcw/mle.hpp"
#include "jpcw/rng.hpp"
#include "jpcw/sample.hpp"
#include "jpcw/simulate.hpp"

namespace jpcw {

enum class Method {
  mle,
  bayes_ip,
  bayes_nip,
  bootstrap,
  mle_ordered,
  bayes_ordered_ip,
  bayes_ordered_nip,
};

inline constexpr std::array<Method, 7> all_methods{Method::mle,         Method::bayes_ip,         Method::bayes_nip,
                                                   Method::bootstrap,   Method::mle_ordered,      Method::bayes_ordered_ip,
                                                   Method::bayes_ordered_nip};

inline std::string method_name(Method m) {
  switch (m) {
    case Method::mle: return "mle";
    case Method::bayes_ip: return "bayes-ip";
    case Method::bayes_nip: return "bayes-nip";
    case Method::bootstrap: return "bootstrap";
    case Method::mle_ordered: return "mle-ordered";
    case Method::bayes_ordered_ip: return "bayes-ordered-ip";
    case Method::bayes_ordered_nip: return "bayes-ordered-nip";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  for (Method m : all_methods)
    if (method_name(m) == name) return m;
  throw domain_error("unknown method '" + name + "'");
}

/// Informative prior used in the simulation tables: b0=1, a0=1.5, a1=2, a2=4,
/// with GA(2, 2) on the shape when alpha=1 and GA(4, 2) otherwise.
inline PriorSpec informative_preset(double true_alpha) {
  PriorSpec p;
  p.bg = {1.5, 1.0, 2.0, 4.0};
  p.shape = {true_alpha == 1.0 ? 2.0 : 4.0, 2.0};
  return p;
}

inline PriorSpec non_informative_preset() { return PriorSpec::non_informative(0.0); }

struct StudyConfig {
  CensoringScheme scheme;
  JointParams truth;
  std::size_t replications = 1000;
  std::vector<Method> methods{Method::mle};
  PriorSpec prior_ip = informative_preset(1.0);
  PriorSpec prior_nip = non_informative_preset();
  double level = 0.9;
  std::size_t n_posterior = 1000;
  std::size_t b_bootstrap = 500;
  std::uint64_t base_seed = 2024;
  std::size_t threads = 1;  // 0 = hardware concurrency

  void validate() const {
    scheme.validate();
    truth.validate();
    if (replications == 0) throw domain_error("replications must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw domain_error("level must lie in (0, 1)");
    if (methods.empty()) throw domain_error("no methods requested");
    if (n_posterior == 0 || b_bootstrap == 0) throw domain_error("posterior size and B must be >= 1");
    prior_ip.validate();
    prior_nip.validate();
  }
};

inline constexpr std::array<const char*, 3> parameter_names{"alpha", "lambda1", "lambda2"};

struct McRow {
  std::string scheme;
  std::string parameter;
  std::string method;
  double AE = std::numeric_limits<double>::quiet_NaN();
  double MSE = std::numeric_limits<double>::quiet_NaN();
  double AL = std::numeric_limits<double>::quiet_NaN();
  double CP = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  std::size_t skipped = 0;
};

struct McReport {
  std::vector<McRow> rows;
  std::size_t replications = 0;
  std::size_t used = 0;
  std::size_t skipped = 0;

  /// Row for (method, parameter index 0..2); throws if absent.
  const McRow& at(Method m, std::size_t parameter) const {
    for (const auto& r : rows)
      if (r.method == method_name(m) && r.parameter == parameter_names.at(parameter)) return r;
    throw domain_error("report has no row for " + method_name(m));
  }
};

/// Compact scheme label, e.g. "k=20;R=(7,0*18,15)".
inline std::string scheme_label(const CensoringScheme& s) {
  std::ostringstream out;
  out << "k=" << s.k() << ";R=(";
  for (std::size_t j = 0; j < s.R.size();) {
    std::size_t run = 1;
    while (j + run < s.R.size() && s.R[j + run] == s.R[j]) ++run;
    if (j) out << ',';
    out << s.R[j];
    if (run > 1) out << '*' << run;
    j += run;
  }
  out << ')';
  return out.str();
}

/// Seed of replication r: base ^ mix(r), passed through the mixer once more.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) { return mix64(base ^ mix64(r)); }

namespace detail {

// Outcome of one replication, one entry per requested method.
struct RepOutcome {
  bool skipped = false;
  std::vector<std::array<double, 3>> estimate;        // per requested method
  std::vector<std::array<IntervalEstimate, 3>> interval;
};

inline PriorSpec method_prior(const StudyConfig& c, Method m) {
  PriorSpec p;
  switch (m) {
    case Method::bayes_ip:
    case Method::bayes_ordered_ip: p = c.prior_ip; break;
    default: p = c.prior_nip; break;
  }
  p.ordered = m == Method::bayes_ordered_ip || m == Method::bayes_ordered_nip;
  p.order = Ordering::increasing;
  return p;
}

inline bool is_bayes(Method m) {
  return m == Method::bayes_ip || m == Method::bayes_nip || m == Method::bayes_ordered_ip ||
         m == Method::bayes_ordered_nip;
}

inline RepOutcome run_replication(const StudyConfig& c, std::size_t r, bool intervals) {
  RepOutcome out;
  const RngStream root(replication_seed(c.base_seed, r));
  RngStream sim_rng = root.derive(0);
  const JpcSample sample = simulate_jpc(c.scheme, c.truth, sim_rng);
  if (sample.k1() == 0 || sample.k2() == 0) {
    out.skipped = true;
    return out;
  }
  try {
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
      const Method m = c.methods[i];
      // Each method owns a sub-stream so adding a method leaves the others unchanged.
      const RngStream method_rng = root.derive(1 + static_cast<std::uint64_t>(m));
      std::array<double, 3> est{};
      std::array<IntervalEstimate, 3> iv{};
      if (is_bayes(m)) {
        RngStream s = method_rng;
        const WeightedPosterior post = draw_posterior(sample, method_prior(c, m), c.n_posterior, s);
        const ParamFunction h[3] = {param_alpha, param_lambda1, param_lambda2};
        for (int p = 0; p < 3; ++p) {
          est[p] = bayes_estimate(post, h[p]);
          if (intervals) iv[p] = hpd_interval(post, h[p], c.level);
        }
      } else if (intervals && (m == Method::bootstrap || m == Method::mle_ordered)) {
        const bool ordered = m == Method::mle_ordered;
        const BootstrapResult b = bootstrap_ci(sample, c.level, c.b_bootstrap, ordered, method_rng);
        est = {b.fit.params.alpha, b.fit.params.lambda1, b.fit.params.lambda2};
        iv = b.intervals;
      } else {
        const MleFit f = m == Method::mle_ordered ? fit_mle_ordered(sample) : fit_mle(sample);
        est = {f.params.alpha, f.params.lambda1, f.params.lambda2};
        if (intervals) iv = asymptotic_ci(sample, f, c.level);  // only reached for mle
      }
      out.estimate.push_back(est);
      out.interval.push_back(iv);
    }
  } catch (const no_mle_error&) {
    out.skipped = true;
  } catch (const improper_posterior_error&) {
    out.skipped = true;
  } catch (const unstable_bootstrap_error&) {
    out.skipped = true;
  } catch (const singular_information_error&) {
    out.skipped = true;
  }
  return out;
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline McReport run_study(const StudyConfig& c, bool intervals) {
  c.validate();
  std::vector<RepOutcome> reps(c.replications);
  parallel_for(c.replications, c.threads, [&](std::size_t r) { reps[r] = run_replication(c, r, intervals); });

  McReport report;
  report.replications = c.replications;
  const double truth[3] = {c.truth.alpha, c.truth.lambda1, c.truth.lambda2};
  const std::size_t M = c.methods.size();
  std::vector<std::array<double, 3>> sum(M, {0, 0, 0}), sq(M, {0, 0, 0}), len(M, {0, 0, 0}), hit(M, {0, 0, 0});
  // Fixed summation order (by replication index) keeps results independent of threading.
  for (const auto& rep : reps) {
    if (rep.skipped) {
      ++report.skipped;
      continue;
    }
    ++report.used;
    for (std::size_t i = 0; i < M; ++i)
      for (int p = 0; p < 3; ++p) {
        const double e = rep.estimate[i][p] - truth[p];
        sum[i][p] += rep.estimate[i][p];
        sq[i][p] += e * e;
        if (intervals) {
          len[i][p] += rep.interval[i][p].length();
          hit[i][p] += rep.interval[i][p].contains(truth[p]) ? 1.0 : 0.0;
        }
      }
  }
  if (report.used == 0) throw study_failed_error("every replication was skipped");

  const std::string label = scheme_label(c.scheme);
  const double used = static_cast<double>(report.used);
  for (std::size_t i = 0; i < M; ++i)
    for (int p = 0; p < 3; ++p) {
      McRow row;
      row.scheme = label;
      row.parameter = parameter_names[p];
      row.method = method_name(c.methods[i]);
      row.AE = sum[i][p] / used;
      row.MSE = sq[i][p] / used;
      if (intervals) {
        row.AL = len[i][p] / used;
        row.CP = hit[i][p] / used;
      }
      row.used = report.used;
      row.skipped = report.skipped;
      report.rows.push_back(row);
    }
  return report;
}

}  // namespace detail

/// AE and MSE per parameter and method. A replication with k1 * k2 = 0, or in
/// which any requested method has no estimate (improper posterior, unstable
/// bootstrap), is skipped for every method and counted.
inline McReport run_point_study(const StudyConfig& config) { return detail::run_study(config, false); }

/// As run_point_study plus AL and CP. Intervals: asymptotic Fisher CI for
/// mle, percentile parametric bootstrap for bootstrap (unrestricted) and
/// mle-ordered (order-restricted refits), HPD for the Bayes methods.
inline McReport run_interval_study(const StudyConfig& config) { return detail::run_study(config, true); }

/// CSV with header scheme,parameter,method,AE,MSE,AL,CP,skipped. Values not
/// computed by the study are left empty. Numbers use 6 significant digits.
inline void write_csv(std::ostream& out, const McReport& report) {
  auto num = [](double x) -> std::string {
    if (std::isnan(x)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
  };
  out << "scheme,parameter,method,AE,MSE,AL,CP,skipped\n";
  for (const auto& r : report.rows)
    out << '"' << r.scheme << '"' << ',' << r.parameter << ',' << r.method << ',' << num(r.AE) << ',' << num(r.MSE)
        << ',' << num(r.AL) << ',' << num(r.CP) << ',' << r.skipped << '\n';
}

}  // namespace jpcw
