#pragma once

// Mixture capital processes and the bounds they obey.
//
//   mix_n(g)      = integral_{2/e}^{1} prod_i (1 + u g x_i) du
//   bss_n(g)      = 2 mix_n(g) - cp_n(g e)        (buy two, sell one)
//   bssd_n(g, k)  = (1/ln k) integral_0^{ln k} bss_n(g e^{-w}) dw
//
// Every process depends on the path only through (n, S_n), because each
// factor product collapses to (1+c)^h (1-c)^t with h/t head/tail counts.
// Evaluators below exploit that and work in log space; the Strategy
// implementations instead keep per-node products incrementally so a game
// round costs one multiply-accumulate pass over the node table.
//
// Bound reports carry both sides in log space: the inequalities reach
// e^{several thousand} on wide sweeps, far outside double range. slack =
// log_rhs - log_lhs and the -1e-10 tolerance absorbs quadrature error only;
// the inequalities themselves are strict.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtp/constprop.hpp"
#include "gtp/game.hpp"
#include "gtp/numeric.hpp"
#include "gtp/quadrature.hpp"

namespace gtp {

inline const double kTwoOverE = 2.0 / M_E;
// Initial capital shared by the mixture processes: integral_{2/e}^1 du.
inline const double kMixtureAlpha = 1.0 - 2.0 / M_E;
inline const double kSqrt2Pi = std::sqrt(2.0 * M_PI);

inline constexpr double kBoundSlackTol = 1e-10;

struct QuadratureConfig {
  enum class Mode { quadrature, exact_polynomial };
  int nodes = 128;  // Gauss-Legendre nodes per dimension
  Mode mode = Mode::quadrature;
  int exact_limit = 64;  // exact mode only below this round count

  QuadratureConfig() = default;
  QuadratureConfig(int n, Mode m) : nodes(n), mode(m) { validate(); }
  void validate() const {
    if (nodes < 16) throw std::invalid_argument("QuadratureConfig: nodes >= 16");
  }

  // GTP_QUAD_NODES overrides the node count.
  static QuadratureConfig from_env() {
    QuadratureConfig cfg;
    if (const char* env = std::getenv("GTP_QUAD_NODES")) {
      cfg.nodes = std::atoi(env);
      cfg.validate();
    }
    return cfg;
  }
};

// C1 from the buy/sell lemma, frozen at a given delta; valid once
// gamma^3 (1+e^3) n <= delta.
struct C1Constant {
  double delta;
  double value;
  explicit C1Constant(double d) : delta(d) {
    const double e3 = std::exp(3.0);
    const double a = d * (1.0 + e3) + std::log(2.0);
    value = 2.0 * std::exp(d) *
            std::exp((2.0 * M_E - 1.0) * a / ((M_E - 1.0) * (M_E - 1.0)));
  }
};

inline double log_c1_fixed(double delta) {
  const double e3 = std::exp(3.0);
  const double a = delta * (1.0 + e3) + std::log(2.0);
  return std::log(2.0) + delta +
         (2.0 * M_E - 1.0) * a / ((M_E - 1.0) * (M_E - 1.0));
}

inline double log_c1_running(double gamma, double n) {
  const double e3 = std::exp(3.0);
  const double g3n = gamma * gamma * gamma * n;
  const double a = g3n * (1.0 + e3) + std::log(2.0);
  return std::log(2.0) + g3n +
         (2.0 * M_E - 1.0) * a / ((M_E - 1.0) * (M_E - 1.0));
}

// Dispatch used by lemma2/bssd right-hand sides.
inline double log_c1(double gamma, double n, double delta) {
  const double e3 = std::exp(3.0);
  return gamma * gamma * gamma * (1.0 + e3) * n <= delta
             ? log_c1_fixed(delta)
             : log_c1_running(gamma, n);
}

struct BoundReport {
  std::string which;    // lemma1 | lemma2 | bssd | validity-chain
  std::string case_id;  // which case of the bound fired
  double gamma = 0.0;
  double delta = kDefaultDelta;
  long long n = 0;
  long long S = 0;
  int k = 0;  // bssd mixture depth, when applicable
  // The inequality under test is lhs <= rhs, both reported as logs.
  double log_lhs = kNegInf;
  double log_rhs = kNegInf;
  double slack = 0.0;  // log_rhs - log_lhs
  bool pass = false;
  bool warn = false;     // precondition warning; excluded from pass/fail
  bool skipped = false;  // precondition unmet; not evaluated
  std::string note;

  void finish() {
    slack = log_rhs == kPosInf ? kPosInf : log_rhs - log_lhs;
    pass = skipped || !(slack < -kBoundSlackTol);
  }
  double lhs_linear() const { return std::exp(log_lhs); }
  double rhs_linear() const { return std::exp(log_rhs); }

  nlohmann::json to_json() const {
    return {{"which", which},   {"case", case_id},
            {"gamma", gamma},   {"delta", delta},
            {"n", n},           {"S", S},
            {"k", k},           {"log_lhs", log_lhs},
            {"log_rhs", log_rhs}, {"slack", slack},
            {"pass", pass},     {"warn", warn},
            {"skipped", skipped}, {"note", note}};
  }
};

// ---------------------------------------------------------------------------
// Evaluators from (n, S)

namespace detail {

// log integral_{2/e}^1 exp(h log1p(g u) + t log1p(-g u)) du, adaptive.
inline double log_mix_integral(double gamma, double h, double t) {
  if (gamma == 0.0) return std::log(kMixtureAlpha);
  auto logf = [&](double u) {
    return h * std::log1p(gamma * u) + t * std::log1p(-gamma * u);
  };
  return log_integrate_adaptive(logf, kTwoOverE, 1.0, 32, 1e-12);
}

// Exact polynomial route: expand (1+gu)^h (1-gu)^t and integrate termwise.
inline double mix_exact_polynomial(double gamma, long long h, long long t) {
  const long long n = h + t;
  std::vector<long double> a(static_cast<size_t>(h) + 1);
  std::vector<long double> b(static_cast<size_t>(t) + 1);
  a[0] = 1.0L;
  for (long long m = 1; m <= h; ++m)
    a[m] = a[m - 1] * static_cast<long double>(h - m + 1) / m * gamma;
  b[0] = 1.0L;
  for (long long m = 1; m <= t; ++m)
    b[m] = b[m - 1] * static_cast<long double>(t - m + 1) / m * (-gamma);
  std::vector<long double> c(static_cast<size_t>(n) + 1, 0.0L);
  for (long long i = 0; i <= h; ++i)
    for (long long j = 0; j <= t; ++j) c[i + j] += a[i] * b[j];
  // integral of u^m on [2/e, 1] = (1 - (2/e)^{m+1}) / (m+1)
  long double acc = 0.0L;
  long double pow_lo = kTwoOverE;  // (2/e)^{m+1}
  for (long long m = 0; m <= n; ++m) {
    pow_lo *= (m == 0) ? 1.0L : kTwoOverE;
    acc += c[m] * (1.0L - pow_lo) / (m + 1);
  }
  return static_cast<double>(acc);
}

}  // namespace detail

inline double log_uniform_mixture_ht(double gamma, long long n, long long S,
                                     const QuadratureConfig& cfg = {}) {
  check_sum_parity(n, S);
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("mixture gamma must be in [0,1)");
  const double h = 0.5 * static_cast<double>(n + S);
  const double t = 0.5 * static_cast<double>(n - S);
  if (cfg.mode == QuadratureConfig::Mode::exact_polynomial) {
    if (n > cfg.exact_limit)
      throw std::invalid_argument("exact polynomial mode limited to n <= 64");
    return std::log(detail::mix_exact_polynomial(
        gamma, static_cast<long long>(h), static_cast<long long>(t)));
  }
  return detail::log_mix_integral(gamma, h, t);
}

inline double uniform_mixture_capital_ht(double gamma, long long n, long long S,
                                         const QuadratureConfig& cfg = {}) {
  return std::exp(log_uniform_mixture_ht(gamma, n, S, cfg));
}

inline double uniform_mixture_capital(const BettingProportion& bp,
                                      const Path& path,
                                      const QuadratureConfig& cfg = {}) {
  return uniform_mixture_capital_ht(bp.gamma,
                                    static_cast<long long>(path.rounds()),
                                    path.sum(), cfg);
}

// T = 2 mix - cp(gamma e); sign-aware log representation.
struct SignedLog {
  double log_abs = kNegInf;
  int sign = 0;  // -1, 0, +1
  double value() const {
    return sign == 0 ? 0.0 : sign * std::exp(log_abs);
  }
};

inline SignedLog buy_sell_log_ht(double gamma, long long n, long long S,
                                 const QuadratureConfig& cfg = {}) {
  if (!(gamma * M_E < 1.0))
    throw std::invalid_argument("buy/sell requires gamma * e < 1");
  const double a = std::log(2.0) + log_uniform_mixture_ht(gamma, n, S, cfg);
  const double b = std::log(kMixtureAlpha) +
                   closed_form_log_capital_ratio(gamma * M_E, n, S);
  if (a > b) return {log_sub(a, b), +1};
  if (a < b) return {log_sub(b, a), -1};
  return {kNegInf, 0};
}

inline double buy_sell_capital_ht(double gamma, long long n, long long S,
                                  const QuadratureConfig& cfg = {}) {
  return buy_sell_log_ht(gamma, n, S, cfg).value();
}

inline double buy_sell_capital(const BettingProportion& bp, const Path& path,
                               const QuadratureConfig& cfg = {}) {
  return buy_sell_capital_ht(bp.gamma, static_cast<long long>(path.rounds()),
                             path.sum(), cfg);
}

// bssd via its two positive legs, each integrated over w in log space.
inline SignedLog bssd_log_ht(double gamma, int k, long long n, long long S,
                             const QuadratureConfig& cfg = {}) {
  if (k < 2) throw std::invalid_argument("bssd requires k >= 2");
  if (!(gamma * M_E < 1.0))
    throw std::invalid_argument("bssd requires gamma * e < 1");
  check_sum_parity(n, S);
  const double lnk = std::log(static_cast<double>(k));
  const double h = 0.5 * static_cast<double>(n + S);
  const double t = 0.5 * static_cast<double>(n - S);
  auto log_mix_w = [&](double w) {
    return log_uniform_mixture_ht(gamma * std::exp(-w), n, S, cfg);
  };
  auto log_cp_w = [&](double w) {
    const double g = gamma * std::exp(1.0 - w);
    return std::log(kMixtureAlpha) + h * std::log1p(g) + t * std::log1p(-g);
  };
  const double li_mix = log_integrate_adaptive(log_mix_w, 0.0, lnk, 24, 1e-10);
  const double li_cp = log_integrate_adaptive(log_cp_w, 0.0, lnk, 24, 1e-11);
  const double a = std::log(2.0) + li_mix;
  if (a > li_cp) return {log_sub(a, li_cp) - std::log(lnk), +1};
  if (a < li_cp) return {log_sub(li_cp, a) - std::log(lnk), -1};
  return {kNegInf, 0};
}

inline double bssd_capital_ht(double gamma, int k, long long n, long long S,
                              const QuadratureConfig& cfg = {}) {
  return bssd_log_ht(gamma, k, n, S, cfg).value();
}

inline double bssd_capital(const BettingProportion& bp, int k, const Path& path,
                           const QuadratureConfig& cfg = {}) {
  return bssd_capital_ht(bp.gamma, k, static_cast<long long>(path.rounds()),
                         path.sum(), cfg);
}

// ---------------------------------------------------------------------------
// Bounds

// Four-case upper bound on the uniform mixture. Ties go to the lower case
// (the small-positive case keeps its closed upper end at 2 g n / e).
inline BoundReport lemma1_bound(double gamma, long long n, long long S,
                                double delta = kDefaultDelta,
                                const QuadratureConfig& cfg = {}) {
  if (!(gamma > 0.0)) throw std::invalid_argument("lemma1_bound: gamma > 0");
  check_sum_parity(n, S);
  BoundReport r;
  r.which = "lemma1";
  r.gamma = gamma;
  r.delta = delta;
  r.n = n;
  r.S = S;
  const double nd = static_cast<double>(n);
  const double Sd = static_cast<double>(S);
  const double g3n = gamma * gamma * gamma * nd;
  const double log_gauss = std::log(kSqrt2Pi / (gamma * std::sqrt(nd)));
  if (g3n > delta) {
    r.warn = true;
    r.note = "gamma^3 n exceeds delta";
  }
  if (S <= 0) {
    r.case_id = "l1-negative";
    r.log_rhs = std::min(0.0, g3n + log_gauss);
  } else if (Sd <= 2.0 * gamma * nd / M_E) {
    r.case_id = "l1-small-positive";
    r.log_rhs = g3n + 2.0 * gamma * (Sd / M_E - gamma * nd / (M_E * M_E));
  } else if (Sd < gamma * nd) {
    r.case_id = "l1-mid";
    r.log_rhs =
        g3n + std::min(Sd * Sd / (2.0 * nd) + log_gauss, gamma * Sd / 2.0);
  } else {
    r.case_id = "l1-large";
    r.log_rhs = g3n + std::min(Sd * Sd / (2.0 * nd) + log_gauss,
                               gamma * Sd - gamma * gamma * nd / 2.0);
  }
  r.log_lhs = log_uniform_mixture_ht(gamma, n, S, cfg);
  r.finish();
  return r;
}

// Four-case upper bound on T = 2 mix - cp(gamma e).
inline BoundReport lemma2_bound(double gamma, long long n, long long S,
                                double delta = kDefaultDelta,
                                const QuadratureConfig& cfg = {}) {
  if (!(gamma > 0.0 && gamma * M_E < 1.0))
    throw std::invalid_argument("lemma2_bound: need 0 < gamma < 1/e");
  check_sum_parity(n, S);
  BoundReport r;
  r.which = "lemma2";
  r.gamma = gamma;
  r.delta = delta;
  r.n = n;
  r.S = S;
  const double nd = static_cast<double>(n);
  const double Sd = static_cast<double>(S);
  const double g3n = gamma * gamma * gamma * nd;
  const double log_gauss = std::log(kSqrt2Pi / (gamma * std::sqrt(nd)));
  if (S <= 0) {
    r.case_id = "l2-negative";
    r.log_rhs = std::log(2.0) + std::min(0.0, g3n + log_gauss);
  } else if (Sd <= gamma * nd / M_E) {
    r.case_id = "l2-small-positive";
    r.log_rhs = log_c1(gamma, nd, delta);
  } else if (Sd < M_E * gamma * nd) {
    r.case_id = "l2-mid";
    r.log_rhs = std::log(2.0) + g3n +
                std::min(Sd * Sd / (2.0 * nd) + log_gauss, gamma * Sd);
  } else {
    r.case_id = "l2-large";
    r.log_rhs = log_c1(gamma, nd, delta);
  }
  const SignedLog t = buy_sell_log_ht(gamma, n, S, cfg);
  r.log_lhs = t.sign > 0 ? t.log_abs : kNegInf;
  r.finish();
  return r;
}

namespace detail {

// max over g' in [gamma/k, gamma] of
//   ln 2 + g'^3 n + min(S^2/2n + ln(sqrt(2pi)/(g' sqrt(n))), g' S).
// Scanned on a log grid plus endpoints, the interior stationary point of the
// Gaussian branch and the branch crossing; the max of each branch is convex
// in ln g', so these candidates pin it to evaluation accuracy.
inline double bssd_pos_max_term(double gamma, int k, double nd, double Sd) {
  const double glo = gamma / static_cast<double>(k);
  auto val = [&](double g) {
    const double log_gauss = std::log(kSqrt2Pi / (g * std::sqrt(nd)));
    return std::log(2.0) + g * g * g * nd +
           std::min(Sd * Sd / (2.0 * nd) + log_gauss, g * Sd);
  };
  std::vector<double> cand;
  const int grid = 64;
  const double llo = std::log(glo), lhi = std::log(gamma);
  for (int i = 0; i <= grid; ++i)
    cand.push_back(std::exp(llo + (lhi - llo) * i / grid));
  // stationary point of g^3 n - ln g: 3 g^3 n = 1
  const double gstat = std::cbrt(1.0 / (3.0 * nd));
  if (gstat > glo && gstat < gamma) cand.push_back(gstat);
  // branch crossing: S^2/2n + ln(sqrt(2pi)/(g sqrt(n))) = g S
  auto cross = [&](double g) {
    return Sd * Sd / (2.0 * nd) + std::log(kSqrt2Pi / (g * std::sqrt(nd))) -
           g * Sd;
  };
  double lo = glo, hi = gamma;
  if (cross(lo) * cross(hi) < 0.0) {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cross(lo) * cross(mid) <= 0.0 ? hi : lo) = mid;
    }
    cand.push_back(0.5 * (lo + hi));
  }
  double best = kNegInf;
  for (double g : cand) best = std::max(best, val(g));
  return best;
}

}  // namespace detail

// Upper bound on bssd. Negative branch for S <= 0, else C1 plus the
// (2 / ln k)-weighted worst middle-case term over g' in [gamma/k, gamma].
inline BoundReport bssd_bound(double gamma, int k, long long n, long long S,
                              double delta = kDefaultDelta,
                              const QuadratureConfig& cfg = {}) {
  if (k < 2) throw std::invalid_argument("bssd_bound: k >= 2");
  if (!(gamma > 0.0 && gamma * M_E < 1.0))
    throw std::invalid_argument("bssd_bound: need 0 < gamma < 1/e");
  check_sum_parity(n, S);
  BoundReport r;
  r.which = "bssd";
  r.gamma = gamma;
  r.delta = delta;
  r.n = n;
  r.S = S;
  r.k = k;
  const double nd = static_cast<double>(n);
  const double Sd = static_cast<double>(S);
  const double lnk = std::log(static_cast<double>(k));
  if (S <= 0) {
    r.case_id = "bssd-negative";
    const double g3n = gamma * gamma * gamma * nd;
    r.log_rhs =
        std::log(2.0) +
        std::min(0.0, g3n + lnk +
                          std::log(kSqrt2Pi / (gamma * std::sqrt(nd))));
  } else {
    r.case_id = "bssd-positive";
    const double max_term = detail::bssd_pos_max_term(gamma, k, nd, Sd);
    r.log_rhs = log_add(log_c1(gamma, nd, delta),
                        std::log(2.0 / lnk) + max_term);
  }
  const SignedLog v = bssd_log_ht(gamma, k, n, S, cfg);
  r.log_lhs = v.sign > 0 ? v.log_abs : kNegInf;
  r.finish();
  return r;
}

// ---------------------------------------------------------------------------
// Strategies (fixed-node rules; exact finite mixtures of constant-proportion
// strategies, hence exact martingales whatever the node count)

class UniformMixtureStrategy final : public Strategy {
 public:
  UniformMixtureStrategy(BettingProportion bp, QuadratureConfig cfg = {})
      : bp_(bp), cfg_(cfg) {
    cfg_.validate();
    gl_nodes(cfg_.nodes, kTwoOverE, 1.0, u_, w_);
    wu_.resize(u_.size());
    for (size_t j = 0; j < u_.size(); ++j) wu_[j] = w_[j] * u_[j];
    reset();
  }

  void reset() override {
    prod_.assign(u_.size(), 1.0);
    consumed_ = 0;
    scale_ln_ = 0.0;
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    if (bp_.gamma == 0.0) return 0.0;
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < prod_.size(); ++j) {
      den += w_[j] * prod_[j];
      num += wu_[j] * prod_[j];
    }
    return bp_.gamma * num / den;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<UniformMixtureStrategy>(bp_, cfg_);
  }

  // Node-rule capital (absolute; starts at 1 - 2/e). For verification.
  double capital(const Path& history) {
    catch_up(history);
    double den = 0.0;
    for (size_t j = 0; j < prod_.size(); ++j) den += w_[j] * prod_[j];
    return den * std::exp(scale_ln_);
  }

 private:
  void catch_up(const Path& h) {
    for (; consumed_ < h.rounds(); ++consumed_) {
      const double gx = bp_.gamma * h.outcome(consumed_);
      double mx = 0.0;
      for (size_t j = 0; j < prod_.size(); ++j) {
        double np = prod_[j] * (1.0 + gx * u_[j]);
        np = std::abs(np) < 1e-280 ? 0.0 : np;  // keep out of the subnormals
        prod_[j] = np;
        mx = std::max(mx, std::abs(np));
      }
      if (mx > 1e150 || (mx > 0.0 && mx < 1e-150)) {
        const double s = mx > 1.0 ? 0x1p-512 : 0x1p512;
        for (auto& p : prod_) p *= s;
        scale_ln_ += mx > 1.0 ? 512 * M_LN2 : -512 * M_LN2;
      }
    }
  }

  BettingProportion bp_;
  QuadratureConfig cfg_;
  std::vector<double> u_, w_, wu_;
  std::vector<double> prod_;
  double scale_ln_ = 0.0;
  size_t consumed_ = 0;
};

inline std::unique_ptr<Strategy> uniform_mixture_strategy(
    BettingProportion bp, QuadratureConfig cfg = {}) {
  return std::make_unique<UniformMixtureStrategy>(bp, cfg);
}

// T = 2 mix - cp(gamma e) as a playable process. The sold leg makes this a
// signed process; standalone play is for small-horizon verification, the
// real consumer is the cycle strategy which holds it with a tiny negative
// coefficient.
class BuySellStrategy final : public Strategy {
 public:
  BuySellStrategy(BettingProportion bp, QuadratureConfig cfg = {})
      : bp_(bp), cfg_(cfg) {
    if (!(bp_.gamma * M_E < 1.0))
      throw std::invalid_argument("buy/sell requires gamma * e < 1");
    gl_nodes(cfg_.nodes, kTwoOverE, 1.0, u_, w_);
    reset();
  }

  void reset() override {
    prod_.assign(u_.size(), 1.0);
    cp_log_ = std::log(kMixtureAlpha);
    consumed_ = 0;
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < prod_.size(); ++j) {
      den += w_[j] * prod_[j];
      num += w_[j] * u_[j] * prod_[j];
    }
    const double cp = std::exp(cp_log_);
    const double value = 2.0 * den - cp;
    const double bet = 2.0 * bp_.gamma * num - bp_.gamma * M_E * cp;
    if (value == 0.0) return 0.0;
    return bet / value;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<BuySellStrategy>(bp_, cfg_);
  }

  double capital(const Path& history) {
    catch_up(history);
    double den = 0.0;
    for (size_t j = 0; j < prod_.size(); ++j) den += w_[j] * prod_[j];
    return 2.0 * den - std::exp(cp_log_);
  }

 private:
  void catch_up(const Path& h) {
    for (; consumed_ < h.rounds(); ++consumed_) {
      const double gx = bp_.gamma * h.outcome(consumed_);
      for (size_t j = 0; j < prod_.size(); ++j) prod_[j] *= 1.0 + gx * u_[j];
      cp_log_ += std::log1p(bp_.gamma * M_E * h.outcome(consumed_));
    }
  }

  BettingProportion bp_;
  QuadratureConfig cfg_;
  std::vector<double> u_, w_;
  std::vector<double> prod_;
  double cp_log_ = 0.0;
  size_t consumed_ = 0;
};

// bssd as a playable process: a 2-D node table over (w, u) for the bought
// mixture legs plus one sold constant-proportion leg per w node. Node
// products are kept linear with a shared power-of-two rescale; the round
// update is a single fused pass over the table, after which value and bet
// are cached. Bet fractions are computed in the shared scale frame and are
// always finite. Requires gamma * e < 1 so every factor stays positive.
class BssdStrategy final : public Strategy {
 public:
  BssdStrategy(BettingProportion bp, int k, QuadratureConfig cfg = {})
      : bp_(bp), k_(k), cfg_(cfg) {
    if (k_ < 2) throw std::invalid_argument("bssd requires k >= 2");
    if (!(bp_.gamma * M_E < 1.0))
      throw std::invalid_argument("bssd requires gamma * e < 1");
    const double lnk = std::log(static_cast<double>(k_));
    gl_nodes(cfg_.nodes, 0.0, lnk, wq_x_, wq_w_);
    gl_nodes(cfg_.nodes, kTwoOverE, 1.0, u_, uw_);
    const size_t nw = wq_x_.size(), nu = u_.size();
    g_.resize(nw * nu);
    ge_.resize(nw);
    for (size_t l = 0; l < nw; ++l) {
      const double gw = bp_.gamma * std::exp(-wq_x_[l]);
      ge_[l] = gw * M_E;
      for (size_t j = 0; j < nu; ++j) g_[l * nu + j] = gw * u_[j];
    }
    inv_lnk_ = 1.0 / lnk;
    reset();
  }

  void reset() override {
    prod_.assign(g_.size(), 1.0);
    cp_.assign(ge_.size(), kMixtureAlpha);
    scale_p_ = scale_q_ = 0.0;
    consumed_ = 0;
    refresh_cache();
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    return cached_frac_;
  }

  // Node-rule (value, bet), absolute scale; value starts at 1 - 2/e. These
  // may overflow to inf in regimes far outside the process's use (the cycle
  // strategy only consumes them while the value stays of order alpha).
  std::pair<double, double> value_and_bet(const Path& history) {
    catch_up(history);
    return {cached_value_, cached_bet_};
  }

  double capital(const Path& history) {
    catch_up(history);
    return cached_value_;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<BssdStrategy>(bp_, k_, cfg_);
  }

 private:
  void finish_round(double v_mix, double b_mix, double v_cp, double b_cp) {
    const double m = std::max(scale_p_, scale_q_);
    const double ep = std::exp(scale_p_ - m), eq = std::exp(scale_q_ - m);
    const double value_m = inv_lnk_ * (2.0 * v_mix * ep - v_cp * eq);
    const double bet_m = inv_lnk_ * (2.0 * b_mix * ep - b_cp * eq);
    cached_frac_ = value_m != 0.0 && std::isfinite(bet_m / value_m)
                       ? bet_m / value_m
                       : 0.0;
    const double em = std::exp(m);
    cached_value_ = value_m * em;
    cached_bet_ = bet_m * em;
    // Keep the positive leg aggregates centered; individual nodes may flush
    // to zero harmlessly, but the aggregates must not leave double range.
    if (v_mix > 1e130 || (v_mix > 0.0 && v_mix < 1e-130))
      shift(prod_, v_mix > 1.0, scale_p_);
    if (v_cp > 1e130 || (v_cp > 0.0 && v_cp < 1e-130))
      shift(cp_, v_cp > 1.0, scale_q_);
  }

  static void shift(std::vector<double>& v, bool down, double& ln_s) {
    const double f = down ? 0x1p-512 : 0x1p512;
    for (auto& p : v) p *= f;
    ln_s += down ? 512 * M_LN2 : -512 * M_LN2;
  }

  void refresh_cache() {
    const size_t nw = wq_x_.size(), nu = u_.size();
    double v_mix = 0.0, b_mix = 0.0, v_cp = 0.0, b_cp = 0.0;
    for (size_t l = 0; l < nw; ++l) {
      double den = 0.0, num = 0.0;
      const double* p = &prod_[l * nu];
      const double* g = &g_[l * nu];
      for (size_t j = 0; j < nu; ++j) {
        den += uw_[j] * p[j];
        num += uw_[j] * g[j] * p[j];
      }
      v_mix += wq_w_[l] * den;
      b_mix += wq_w_[l] * num;
      v_cp += wq_w_[l] * cp_[l];
      b_cp += wq_w_[l] * ge_[l] * cp_[l];
    }
    finish_round(v_mix, b_mix, v_cp, b_cp);
  }

  void catch_up(const Path& h) {
    const size_t nw = wq_x_.size(), nu = u_.size();
    for (; consumed_ < h.rounds(); ++consumed_) {
      const double x = h.outcome(consumed_);
      double v_mix = 0.0, b_mix = 0.0, v_cp = 0.0, b_cp = 0.0;
      for (size_t l = 0; l < nw; ++l) {
        double den = 0.0, num = 0.0;
        double* p = &prod_[l * nu];
        const double* g = &g_[l * nu];
        for (size_t j = 0; j < nu; ++j) {
          double np = p[j] * (1.0 + g[j] * x);
          // Flush dying nodes to zero before they reach the subnormal band;
          // their relative contribution is below 1e-150 of any aggregate the
          // rescaler allows, and subnormal arithmetic is pathologically slow.
          np = std::abs(np) < 1e-280 ? 0.0 : np;
          p[j] = np;
          den += uw_[j] * np;
          num += uw_[j] * g[j] * np;
        }
        v_mix += wq_w_[l] * den;
        b_mix += wq_w_[l] * num;
        double q = cp_[l] * (1.0 + ge_[l] * x);
        q = std::abs(q) < 1e-280 ? 0.0 : q;
        cp_[l] = q;
        v_cp += wq_w_[l] * q;
        b_cp += wq_w_[l] * ge_[l] * q;
      }
      finish_round(v_mix, b_mix, v_cp, b_cp);
    }
  }

  BettingProportion bp_;
  int k_;
  QuadratureConfig cfg_;
  std::vector<double> wq_x_, wq_w_;  // w nodes/weights on [0, ln k]
  std::vector<double> u_, uw_;       // u nodes/weights on [2/e, 1]
  std::vector<double> g_;            // per (w,u) node proportion
  std::vector<double> ge_;           // per w node sold-leg proportion
  std::vector<double> prod_;
  std::vector<double> cp_;
  double scale_p_ = 0.0, scale_q_ = 0.0;
  double inv_lnk_ = 1.0;
  double cached_value_ = 0.0, cached_bet_ = 0.0, cached_frac_ = 0.0;
  size_t consumed_ = 0;
};

}  // namespace gtp
