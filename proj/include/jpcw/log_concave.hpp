#pragma once

// Exact sampling from unnormalized log-concave densities on (support_lo, inf)
// by adaptive rejection with a piecewise-exponential tangent envelope.
//
// Targets may declare breakpoints: points where the log-density is continuous
// but only concave on each side (e.g. a minimum of two smooth terms inside a
// negative logarithm). The envelope is built separately on every concave
// piece, so it remains a true upper bound across such kinks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "jpcw/errors.hpp"
#include "jpcw/rng.hpp"

namespace jpcw {

struct LogConcaveTarget {
  std::function<double(double)> log_density;
  std::function<double(double)> log_density_derivative;
  // Interior points where concavity may break (sorted or not; duplicates allowed).
  std::vector<double> breakpoints{};
};

class AdaptiveRejectionSampler {
 public:
  static constexpr std::size_t max_tangents = 64;
  static constexpr double probe_lo = 1e-8;
  static constexpr double probe_hi = 1e8;

  AdaptiveRejectionSampler(LogConcaveTarget target, double support_lo = 0.0)
      : target_(std::move(target)), support_lo_(support_lo) {
    if (!target_.log_density || !target_.log_density_derivative)
      throw domain_error("log-concave target needs both log density and derivative");
    if (!(support_lo_ >= 0.0) || !std::isfinite(support_lo_))
      throw domain_error("support_lo must be a finite non-negative number");
    initialise();
  }

  double draw(RngStream& rng) {
    for (;;) {
      ++proposals_;
      const double u = uniform01(rng);
      const std::size_t seg = pick_segment(u);
      const Segment& s = segments_[seg];
      const double x = sample_in_segment(s, uniform01(rng));
      const Tangent& tg = pieces_[s.piece].tangents[s.tangent];
      const double env = tg.h + tg.d * (x - tg.x);
      const double hx = target_.log_density(x);
      if (hx > env + 1e-9 * (1.0 + std::fabs(env))) ++envelope_violations_;
      if (std::log(uniform01(rng)) <= hx - env) {
        ++accepted_;
        return x;
      }
      if (total_tangents() < max_tangents && std::isfinite(hx)) add_tangent(s.piece, x);
    }
  }

  std::vector<double> draw_n(std::size_t n, RngStream& rng) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
    return out;
  }

  double acceptance_rate() const noexcept {
    return proposals_ == 0 ? 1.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
  }
  std::size_t proposals() const noexcept { return proposals_; }
  std::size_t envelope_violations() const noexcept { return envelope_violations_; }
  std::size_t total_tangents() const noexcept {
    std::size_t n = 0;
    for (const auto& p : pieces_) n += p.tangents.size();
    return n;
  }
  // Mode of the unbounded piece found during initialisation.
  double mode() const noexcept { return mode_; }

 private:
  struct Tangent {
    double x, h, d;
  };
  struct Piece {
    double lo, hi;  // hi may be +inf
    std::vector<Tangent> tangents;
  };
  struct Segment {
    std::size_t piece, tangent;
    double zl, zr;
    double log_mass;
  };

  double eval_derivative(double x) const { return target_.log_density_derivative(x); }

  bool make_tangent(double x, Tangent& out) const {
    const double h = target_.log_density(x);
    const double d = eval_derivative(x);
    if (!std::isfinite(h) || !std::isfinite(d)) return false;
    out = {x, h, d};
    return true;
  }

  // Bisection for the zero of a decreasing derivative on [a, b] with d(a) > 0 > d(b).
  double bisect_mode(double a, double b) const {
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, b); ++it) {
      const double mid = 0.5 * (a + b);
      if (eval_derivative(mid) > 0.0)
        a = mid;
      else
        b = mid;
    }
    return 0.5 * (a + b);
  }

  void initialise() {
    std::vector<double> cuts;
    for (double b : target_.breakpoints)
      if (b > support_lo_ && std::isfinite(b)) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double lo = support_lo_;
    for (double c : cuts) {
      pieces_.push_back(init_finite_piece(lo, c));
      lo = c;
    }
    pieces_.push_back(init_tail_piece(lo));
    rebuild();
  }

  Piece init_finite_piece(double lo, double hi) const {
    Piece p{lo, hi, {}};
    const double w = hi - lo;
    double m;
    const double a = lo + 1e-6 * w;
    const double b = hi - 1e-6 * w;
    if (eval_derivative(a) <= 0.0)
      m = a;
    else if (eval_derivative(b) >= 0.0)
      m = b;
    else
      m = bisect_mode(a, b);
    for (double x : {m * 0.5, m, m * 1.5}) {
      x = std::clamp(x, lo + 0.05 * w, hi - 0.05 * w);
      Tangent t;
      if (make_tangent(x, t)) insert_sorted(p, t);
    }
    if (p.tangents.empty()) throw non_integrable_target_error("no finite tangent on a bounded piece");
    return p;
  }

  Piece init_tail_piece(double lo) {
    Piece p{lo, std::numeric_limits<double>::infinity(), {}};
    const double start = std::max(lo, probe_lo) + (lo > 0.0 ? 1e-8 * lo : 0.0);
    double m;
    if (eval_derivative(start) <= 0.0) {
      // Density decreasing from the left edge: mode at the boundary.
      m = start;
      const double scale = std::max(1.0, lo);
      for (double x : {lo + 0.5 * scale, lo + scale, lo + 2.0 * scale}) {
        Tangent t;
        if (make_tangent(x, t)) insert_sorted(p, t);
      }
    } else {
      double hi = std::max(2.0 * start, std::max(1.0, 2.0 * lo));
      while (eval_derivative(hi) > 0.0) {
        if (hi > probe_hi)
          throw non_integrable_target_error("log-density still increasing at the upper probe");
        hi *= 2.0;
      }
      double a = hi * 0.5 > start ? hi * 0.5 : start;
      if (eval_derivative(a) <= 0.0) a = start;
      m = bisect_mode(a, hi);
      for (double x : {m * 0.5, m, m * 1.5}) {
        if (x <= lo) x = 0.5 * (lo + m);
        Tangent t;
        if (make_tangent(x, t)) insert_sorted(p, t);
      }
    }
    mode_ = m;
    // The right-most tangent must fall for the tail to be integrable.
    double x = p.tangents.empty() ? std::max(2.0 * start, 1.0) : p.tangents.back().x;
    while (p.tangents.empty() || !(p.tangents.back().d < 0.0)) {
      x *= 2.0;
      if (x > probe_hi) throw non_integrable_target_error("no decreasing tangent found for the right tail");
      Tangent t;
      if (make_tangent(x, t)) insert_sorted(p, t);
    }
    return p;
  }

  static void insert_sorted(Piece& p, const Tangent& t) {
    auto it = std::lower_bound(p.tangents.begin(), p.tangents.end(), t.x,
                               [](const Tangent& a, double x) { return a.x < x; });
    if (it != p.tangents.end() && it->x == t.x) return;
    p.tangents.insert(it, t);
  }

  void add_tangent(std::size_t piece, double x) {
    Tangent t;
    if (!make_tangent(x, t)) return;
    insert_sorted(pieces_[piece], t);
    rebuild();
  }

  static double log_segment_mass(const Tangent& t, double zl, double zr) {
    const double ul = t.h + t.d * (zl - t.x);
    const double w = zr - zl;
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    if (std::isinf(zr)) {
      // Only reached with d < 0.
      return ul - std::log(-t.d);
    }
    const double ur = t.h + t.d * (zr - t.x);
    if (std::fabs(t.d) * w < 1e-10) return ul + std::log(w);
    if (t.d > 0.0) return ur + std::log(-std::expm1(ul - ur)) - std::log(t.d);
    return ul + std::log(-std::expm1(ur - ul)) - std::log(-t.d);
  }

  void rebuild() {
    segments_.clear();
    for (std::size_t pi = 0; pi < pieces_.size(); ++pi) {
      const auto& tg = pieces_[pi].tangents;
      double zl = pieces_[pi].lo;
      for (std::size_t i = 0; i < tg.size(); ++i) {
        double zr = pieces_[pi].hi;
        if (i + 1 < tg.size()) {
          const Tangent& a = tg[i];
          const Tangent& b = tg[i + 1];
          const double dd = a.d - b.d;
          if (std::fabs(dd) <= 1e-12 * (std::fabs(a.d) + std::fabs(b.d) + 1.0))
            zr = 0.5 * (a.x + b.x);
          else
            zr = (b.h - a.h - b.x * b.d + a.x * a.d) / dd;
          zr = std::clamp(zr, a.x, b.x);
        }
        segments_.push_back({pi, i, zl, zr, log_segment_mass(tg[i], zl, zr)});
        zl = zr;
      }
    }
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& s : segments_) top = std::max(top, s.log_mass);
    cumulative_.assign(segments_.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      acc += std::exp(segments_[i].log_mass - top);
      cumulative_[i] = acc;
    }
    if (!(acc > 0.0) || !std::isfinite(acc)) throw non_integrable_target_error("envelope has no finite mass");
  }

  std::size_t pick_segment(double u) const {
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

  double sample_in_segment(const Segment& s, double v) const {
    const Tangent& t = pieces_[s.piece].tangents[s.tangent];
    const double w = s.zr - s.zl;
    if (!std::isinf(w) && std::fabs(t.d) * w < 1e-10) return s.zl + v * w;
    if (t.d > 0.0) {
      const double x = s.zr + std::log(v + (1.0 - v) * std::exp(-t.d * w)) / t.d;
      return std::clamp(x, s.zl, s.zr);
    }
    const double frac = std::isinf(w) ? 1.0 : -std::expm1(t.d * w);
    const double x = s.zl + std::log1p(-v * frac) / t.d;
    return std::isinf(w) ? x : std::clamp(x, s.zl, s.zr);
  }

  LogConcaveTarget target_;
  double support_lo_;
  std::vector<Piece> pieces_;
  std::vector<Segment> segments_;
  std::vector<double> cumulative_;
  double mode_ = 0.0;
  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
  std::size_t envelope_violations_ = 0;
};

/// Single exact draw from the normalized target on (support_lo, inf).
inline double sample_log_concave(const LogConcaveTarget& target, double support_lo, RngStream& rng) {
  AdaptiveRejectionSampler sampler(target, support_lo);
  return sampler.draw(rng);
}

}  // namespace jpcw
