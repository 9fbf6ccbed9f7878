#pragma once

// Gauss-Legendre rules plus an adaptive log-domain integrator.
//
// The mixture capital processes are integrals of exp(phi(u)) where phi is
// smooth and concave but can span thousands of e-folds across the interval
// (phi ~ h*log1p(u*g) + t*log1p(-u*g) with h+t up to 1e6). A fixed rule
// cannot resolve that, so panels are bisected until the local exponent range
// is modest and two refinement levels agree; panel sums are combined in log
// space.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "gtp/numeric.hpp"

namespace gtp {

struct GaussLegendreRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;

  // Newton iteration on the Legendre recurrence; nodes good to ~1e-15.
  static GaussLegendreRule compute(int n) {
    if (n < 1) throw std::invalid_argument("GaussLegendreRule: n >= 1");
    GaussLegendreRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) < 1e-15) break;
      }
      r.x[i] = -z;
      r.x[n - 1 - i] = z;
      r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      r.w[n - 1 - i] = r.w[i];
    }
    return r;
  }

  static const GaussLegendreRule& get(int n) {
    static std::mutex mu;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
    return it->second;
  }
};

// Nodes/weights mapped to [a, b].
inline void gl_nodes(int n, double a, double b, std::vector<double>& x,
                     std::vector<double>& w) {
  const auto& r = GaussLegendreRule::get(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = mid + half * r.x[i];
    w[i] = half * r.w[i];
  }
}

template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
  const auto& r = GaussLegendreRule::get(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (size_t i = 0; i < r.x.size(); ++i)
    acc += r.w[i] * f(mid + half * r.x[i]);
  return acc * half;
}

namespace detail {

// log of the GL quadrature sum of exp(logf) over one panel.
template <class LogF>
double panel_log_gl(LogF& logf, double a, double b, int n) {
  const auto& r = GaussLegendreRule::get(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double m = kNegInf;
  thread_local std::vector<double> vals;
  vals.resize(r.x.size());
  for (size_t i = 0; i < r.x.size(); ++i) {
    vals[i] = logf(mid + half * r.x[i]);
    m = std::max(m, vals[i]);
  }
  if (!std::isfinite(m)) return kNegInf;
  double acc = 0.0;
  for (size_t i = 0; i < vals.size(); ++i)
    acc += r.w[i] * std::exp(vals[i] - m);
  return m + std::log(half * acc);
}

template <class LogF>
void adaptive_log_rec(LogF& logf, double a, double b, int n, double tol,
                      int depth, int max_depth, std::vector<double>& parts) {
  const double mid = 0.5 * (a + b);
  const double la = logf(a), lm = logf(mid), lb = logf(b);
  const double span = std::max({la, lm, lb}) - std::min({la, lm, lb});
  const double whole = panel_log_gl(logf, a, b, n);
  if (depth >= max_depth)
    throw std::runtime_error("adaptive log quadrature did not converge");
  // Force refinement while the exponent range across the panel is large;
  // a single rule is meaningless on such panels.
  if (std::isfinite(span) && span > 25.0) {
    adaptive_log_rec(logf, a, mid, n, tol, depth + 1, max_depth, parts);
    adaptive_log_rec(logf, mid, b, n, tol, depth + 1, max_depth, parts);
    return;
  }
  const double left = panel_log_gl(logf, a, mid, n);
  const double right = panel_log_gl(logf, mid, b, n);
  const double split = log_add(left, right);
  if (whole == kNegInf && split == kNegInf) {
    parts.push_back(kNegInf);
    return;
  }
  if (std::abs(whole - split) <= tol) {
    parts.push_back(split);
    return;
  }
  adaptive_log_rec(logf, a, mid, n, tol, depth + 1, max_depth, parts);
  adaptive_log_rec(logf, mid, b, n, tol, depth + 1, max_depth, parts);
}

}  // namespace detail

// Returns log of integral_a^b exp(logf(u)) du. `tol` is an absolute
// tolerance on the log of the result (i.e. a relative tolerance on the
// integral itself).
template <class LogF>
double log_integrate_adaptive(LogF&& logf, double a, double b, int nodes = 32,
                              double tol = 1e-11, int max_depth = 48) {
  if (!(b > a)) return kNegInf;
  std::vector<double> parts;
  detail::adaptive_log_rec(logf, a, b, std::max(nodes, 8), tol, 0, max_depth,
                           parts);
  double acc = kNegInf;
  // Sum small-to-large for stability.
  std::sort(parts.begin(), parts.end());
  for (double p : parts) acc = log_add(acc, p);
  return acc;
}

}  // namespace gtp
