#pragma once

// Command-line driver. Results go to `out` as CSV (`quantity,value` rows, or
// the study CSV); diagnostics go to `err`.
//
// Exit codes: 0 success, 1 usage or other failure, 2 no MLE (a group has no
// failures), 3 improper posterior, 4 parse or validation error.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "jpcw/jpcw.hpp"

namespace jpcw::cli {

enum ExitCode : int { ok = 0, failure = 1, no_mle = 2, improper_posterior = 3, bad_input = 4 };

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// "4*19,36" or "4 4 36" -> expanded list.
inline std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::string tok;
  std::istringstream in(text);
  auto number = [&](std::string_view part) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
      throw parse_error(0, "bad scheme entry '" + tok + "'");
    return v;
  };
  auto flush = [&] {
    if (tok.empty()) return;
    const std::string_view t = tok;
    const auto star = t.find('*');
    const std::size_t v = number(t.substr(0, star));
    const std::size_t count = star == std::string_view::npos ? 1 : number(t.substr(star + 1));
    out.insert(out.end(), count, v);
    tok.clear();
  };
  for (char c; in.get(c);) {
    if (c == ',' || c == ' ' || c == '\t')
      flush();
    else
      tok += c;
  }
  flush();
  if (out.empty()) throw parse_error(0, "empty censoring scheme");
  return out;
}

struct Row {
  std::ostream& out;
  void operator()(const std::string& key, double v) const { out << key << ',' << fmt(v) << '\n'; }
  void operator()(const std::string& key, const std::string& v) const { out << key << ',' << v << '\n'; }
};

inline const char* param_key(int p) { return parameter_names[static_cast<std::size_t>(p)]; }

inline Ordering parse_order(const std::string& s) {
  if (s == "increasing") return Ordering::increasing;
  if (s == "decreasing") return Ordering::decreasing;
  throw domain_error("order must be 'increasing' or 'decreasing'");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Weibull inference under joint progressive type-II censoring", "jpcw"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "random seed (default from JPCW_SEED, else 1)")->envname("JPCW_SEED");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a JPC sample");
  std::size_t sim_m = 20, sim_n = 22;
  std::string sim_R = "7,0*18,15", sim_out;
  double sim_alpha = 1.0, sim_l1 = 0.5, sim_l2 = 1.0;
  sim->add_option("--m", sim_m, "group-1 size");
  sim->add_option("--n", sim_n, "group-2 size");
  sim->add_option("--R", sim_R, "withdrawals, e.g. 7,0*18,15");
  sim->add_option("--alpha", sim_alpha);
  sim->add_option("--lambda1", sim_l1);
  sim->add_option("--lambda2", sim_l2);
  sim->add_option("-o,--output", sim_out, "output file (default stdout)");

  // shared options for sample-file commands
  std::string file;
  double shift = 0.0, level = 0.9;
  bool ordered = false;
  std::string order = "increasing";
  auto sample_opts = [&](CLI::App* c) {
    c->add_option("file", file, "JPC sample file")->required();
    c->add_option("--shift", shift, "subtract from every failure time");
    c->add_option("--level", level, "interval level");
    c->add_flag("--ordered", ordered, "impose an order restriction on the rates");
    c->add_option("--order", order, "increasing (lambda1 <= lambda2) or decreasing")
        ->check(CLI::IsMember({"increasing", "decreasing"}));
  };

  auto* fit = app.add_subcommand("fit", "maximum likelihood fit");
  sample_opts(fit);

  auto* boot = app.add_subcommand("bootstrap", "parametric bootstrap intervals");
  sample_opts(boot);
  std::size_t B = 500;
  boot->add_option("--B", B, "bootstrap resamples");

  auto* bayes = app.add_subcommand("bayes", "importance-sampling Bayes estimates and HPD intervals");
  sample_opts(bayes);
  PriorSpec prior = PriorSpec::non_informative(0.0);
  std::size_t n_draws = 10000;
  bayes->add_option("--a0", prior.bg.a0);
  bayes->add_option("--b0", prior.bg.b0);
  bayes->add_option("--a1", prior.bg.a1);
  bayes->add_option("--a2", prior.bg.a2);
  bayes->add_option("--a", prior.shape.a, "shape prior GA(a, b)");
  bayes->add_option("--b", prior.shape.b);
  bayes->add_option("--n-draws", n_draws);

  auto* analyze = app.add_subcommand("analyze", "complete-data analysis of two samples");
  std::string file1, file2;
  double a_shift = 0.0;
  std::size_t a_draws = 10000, a_rep = 10000;
  analyze->add_option("file1", file1)->required();
  analyze->add_option("file2", file2)->required();
  analyze->add_option("--shift", a_shift, "location offset subtracted from both samples");
  analyze->add_option("--n-draws", a_draws, "posterior draws");
  analyze->add_option("--n-rep", a_rep, "predictive replicates");

  auto* study = app.add_subcommand("study", "Monte Carlo study from a JSON config");
  std::string config_file, csv_out;
  bool intervals = false;
  std::optional<std::size_t> threads;
  study->add_option("config", config_file)->required();
  study->add_flag("--intervals", intervals, "also compute interval lengths and coverage");
  study->add_option("-o,--output", csv_out, "CSV file (default stdout)");
  study->add_option("--threads", threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : failure;
  }

  const Row row{out};
  try {
    if (*sim) {
      const CensoringScheme scheme{sim_m, sim_n, parse_counts(sim_R)};
      RngStream rng(seed);
      const JpcSample s = simulate_jpc(scheme, {sim_alpha, sim_l1, sim_l2}, rng);
      if (sim_out.empty())
        out << serialize_jpc(s);
      else
        write_jpc_file(sim_out, s);
      return ok;
    }

    if (*analyze) {
      const CompleteSample d1 = parse_complete_file(file1, a_shift), d2 = parse_complete_file(file2, a_shift);
      const RngStream root(seed);
      const CompleteSample* sets[2] = {&d1, &d2};
      out << "quantity,value\n";
      for (int i = 0; i < 2; ++i) {
        const std::string p = "set" + std::to_string(i + 1) + "_";
        const CompleteSample& d = *sets[i];
        const WeibullParams w = fit_weibull_complete(d);
        const double D = ks_distance(d, w.alpha, w.lambda);
        row(p + "mle_alpha", w.alpha);
        row(p + "mle_lambda", w.lambda);
        row(p + "ks", D);
        row(p + "ks_p", ks_pvalue_asymptotic(D, d.size()));
        RngStream prng = root.derive(10 + i);
        const WeightedPosterior post = draw_posterior_complete(d, PriorSpec::non_informative(0.0), a_draws, prng);
        row(p + "be_alpha", bayes_estimate(post, param_alpha));
        row(p + "be_lambda", bayes_estimate(post, param_lambda1));
        const PredictiveCheck pc = posterior_predictive_pvalue(
            d, post,
            [n = d.size()](const JointParams& th, RngStream& s) {
              std::vector<double> x(n);
              for (auto& v : x) v = sample_weibull(th.alpha, th.lambda1, s);
              return CompleteSample(std::move(x));
            },
            [](const CompleteSample& x, const JointParams& th) { return ks_distance(x, th.alpha, th.lambda1); },
            a_rep, root.derive(20 + i));
        row(p + "expected_ks", pc.expected_discrepancy);
        row(p + "pb", pc.p_value);
      }
      const CommonShapeFit c = fit_common_shape(d1, d2);
      const LikelihoodRatio lr = lr_test_common_shape(d1, d2);
      row("common_mle_alpha", c.alpha);
      row("common_mle_lambda1", c.lambda1);
      row("common_mle_lambda2", c.lambda2);
      row("lr_statistic", lr.statistic);
      row("lr_p", lr.p_value);
      row("common_set1_ks_p", ks_pvalue_asymptotic(ks_distance(d1, c.alpha, c.lambda1), d1.size()));
      row("common_set2_ks_p", ks_pvalue_asymptotic(ks_distance(d2, c.alpha, c.lambda2), d2.size()));

      const JpcSample pooled = pooled_complete_sample(d1, d2);
      RngStream prng = root.derive(30);
      const WeightedPosterior post = draw_posterior(pooled, PriorSpec::non_informative(0.0), a_draws, prng);
      row("common_be_alpha", bayes_estimate(post, param_alpha));
      row("common_be_lambda1", bayes_estimate(post, param_lambda1));
      row("common_be_lambda2", bayes_estimate(post, param_lambda2));
      for (int i = 0; i < 2; ++i) {
        const bool first = i == 0;
        const PredictiveCheck pc = posterior_predictive_pvalue(
            *sets[i], post,
            [n = sets[i]->size(), first](const JointParams& th, RngStream& s) {
              std::vector<double> x(n);
              for (auto& v : x) v = sample_weibull(th.alpha, first ? th.lambda1 : th.lambda2, s);
              return CompleteSample(std::move(x));
            },
            [first](const CompleteSample& x, const JointParams& th) {
              return ks_distance(x, th.alpha, first ? th.lambda1 : th.lambda2);
            },
            a_rep, root.derive(40 + i));
        const std::string p = "common_set" + std::to_string(i + 1) + "_";
        row(p + "expected_ks", pc.expected_discrepancy);
        row(p + "pb", pc.p_value);
      }
      return ok;
    }

    if (*study) {
      StudyConfig config = parse_study_config_file(config_file);
      if (threads) config.threads = *threads;
      const McReport report = intervals ? run_interval_study(config) : run_point_study(config);
      if (report.skipped) err << "skipped " << report.skipped << " of " << report.replications << " replications\n";
      if (csv_out.empty()) {
        write_csv(out, report);
      } else {
        std::ofstream f(csv_out, std::ios::binary);
        if (!f) throw parse_error(0, "cannot write '" + csv_out + "'");
        write_csv(f, report);
      }
      return ok;
    }

    // Remaining commands read a JPC sample.
    if (!(level > 0.0 && level < 1.0)) throw domain_error("--level must lie in (0, 1)");
    JpcSample sample = parse_jpc_file(file);
    if (shift != 0.0) sample = sample.shifted(shift);
    const Ordering ord = parse_order(order);

    if (*fit) {
      const MleFit f = ordered ? fit_mle_ordered(sample, ord) : fit_mle(sample);
      out << "quantity,value\n";
      const double est[3] = {f.params.alpha, f.params.lambda1, f.params.lambda2};
      for (int p = 0; p < 3; ++p) row(param_key(p), est[p]);
      row("loglik", f.loglik);
      row("iterations", static_cast<double>(f.iterations));
      row("converged", f.converged ? 1.0 : 0.0);
      if (ordered) row("boundary", f.boundary ? 1.0 : 0.0);
      if (!f.boundary) {
        try {
          const auto ci = asymptotic_ci(sample, f, level);
          for (int p = 0; p < 3; ++p) {
            row(std::string(param_key(p)) + "_lower", ci[p].lower);
            row(std::string(param_key(p)) + "_upper", ci[p].upper);
          }
        } catch (const singular_information_error& e) {
          err << "no asymptotic interval: " << e.what() << '\n';
        }
      }
      return ok;
    }

    if (*boot) {
      const BootstrapResult b = bootstrap_ci(sample, level, B, ordered, RngStream(seed), ord);
      out << "quantity,value\n";
      const double est[3] = {b.fit.params.alpha, b.fit.params.lambda1, b.fit.params.lambda2};
      for (int p = 0; p < 3; ++p) {
        row(param_key(p), est[p]);
        row(std::string(param_key(p)) + "_lower", b.intervals[p].lower);
        row(std::string(param_key(p)) + "_upper", b.intervals[p].upper);
      }
      row("used", static_cast<double>(b.used));
      row("skipped", static_cast<double>(b.skipped));
      return ok;
    }

    if (*bayes) {
      prior.ordered = ordered;
      prior.order = ord;
      RngStream rng(seed);
      const WeightedPosterior post = draw_posterior(sample, prior, n_draws, rng);
      for (const auto& w : post.warnings) err << "warning: " << w << '\n';
      out << "quantity,value\n";
      const ParamFunction h[3] = {param_alpha, param_lambda1, param_lambda2};
      for (int p = 0; p < 3; ++p) {
        const IntervalEstimate iv = hpd_interval(post, h[p], level);
        row(param_key(p), bayes_estimate(post, h[p]));
        row(std::string(param_key(p)) + "_lower", iv.lower);
        row(std::string(param_key(p)) + "_upper", iv.upper);
      }
      row("ess", post.effective_sample_size);
      return ok;
    }
  } catch (const no_mle_error& e) {
    err << "error: " << e.what() << '\n';
    return no_mle;
  } catch (const improper_posterior_error& e) {
    err << "error: " << e.what() << '\n';
    return improper_posterior;
  } catch (const parse_error& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const validation_error& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}

}  // namespace jpcw::cli
