#pragma once

// Countable mixture of constant-proportion strategies with amplified
// weights: p_k ~ a_k (psi_k / k) e^{-psi_k^2 / 2}, gamma_k = psi_k / sqrt(k).
// The amplifiers a_k are built by chopping the weight series into blocks of
// mass <= 2^{-j} and multiplying block j by j, which keeps Z = sum a_k t_k
// finite while a_k grows without bound.
//
// The mixture is truncated at K_max; the residual weight mass is held as
// cash, which keeps the truncation a legal strategy and only weakens the
// forcing. Components whose gamma_k exceeds the standing delta are carried
// at constant capital and never bet.

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "gtp/constprop.hpp"
#include "gtp/game.hpp"
#include "gtp/mixtures.hpp"
#include "gtp/numeric.hpp"
#include "gtp/psi.hpp"

namespace gtp {

struct AmplifierSequence {
  std::vector<double> a;  // one amplifier per input term, non-decreasing
  double z_partial = 0.0;  // sum a_i * t_i over supplied terms
  double tail_bound = 0.0;  // remaining block budget: (J+2) * 2^{-J}
  double Z() const { return z_partial + tail_bound; }
};

// Blocks are maximal prefixes with block sum <= 2^{-j}; a block always takes
// at least one term so a single oversized term cannot stall the scan (that
// situation arises for truncated divergent series, where the construction
// is only used as a finite surrogate).
inline AmplifierSequence build_amplifiers(std::span<const double> terms,
                                          size_t k_max = SIZE_MAX) {
  AmplifierSequence out;
  const size_t limit = std::min(terms.size(), k_max);
  out.a.reserve(limit);
  size_t i = 0;
  long long block = 1;
  double budget = 0.5;
  KahanSum z;
  while (i < limit) {
    double block_sum = 0.0;
    bool took = false;
    while (i < limit && (!took || block_sum + terms[i] <= budget)) {
      if (!(terms[i] > 0.0))
        throw std::invalid_argument("build_amplifiers: terms must be positive");
      block_sum += terms[i];
      out.a.push_back(static_cast<double>(block));
      z.add(static_cast<double>(block) * terms[i]);
      ++i;
      took = true;
    }
    ++block;
    budget *= 0.5;
  }
  out.z_partial = z.value();
  // sum_{j > J} j 2^{-j} = (J + 2) 2^{-J}
  const double J = static_cast<double>(block - 1);
  out.tail_bound = (J + 2.0) * std::exp2(-J);
  return out;
}

// Normalized, truncated weight table for the validity mixture.
struct MixtureWeights {
  int k_lo = 16;   // psi domain minimum; weights below it are zero
  int k_max = 0;
  double delta = kDefaultDelta;
  std::vector<double> gamma;  // gamma_k = psi_k / sqrt(k), k in [k_lo, k_max]
  std::vector<double> p;      // p_k = a_k t_k / Z
  std::vector<double> a;
  double Z = 0.0;       // includes the block-budget tail, so sum p < 1
  double cash = 0.0;    // 1 - sum p, held unbet

  size_t size() const { return p.size(); }
  bool bets(size_t i) const { return gamma[i] <= delta; }

  static MixtureWeights build(const PsiSpec& spec, int k_max,
                              double delta = kDefaultDelta) {
    MixtureWeights w;
    w.k_lo = static_cast<int>(std::ceil(spec.domain_min()));
    w.k_max = k_max;
    w.delta = delta;
    if (k_max < w.k_lo)
      throw std::invalid_argument("MixtureWeights: K_max below domain min");
    const size_t m = static_cast<size_t>(k_max - w.k_lo + 1);
    std::vector<double> terms(m);
    w.gamma.resize(m);
    for (size_t i = 0; i < m; ++i) {
      const double k = static_cast<double>(w.k_lo + static_cast<int>(i));
      const double psi = spec.eval(k);
      terms[i] = psi / k * std::exp(-0.5 * psi * psi);
      w.gamma[i] = psi / std::sqrt(k);
    }
    AmplifierSequence amp = build_amplifiers(terms);
    w.a = amp.a;
    w.Z = amp.Z();
    if (!(w.Z > 0.0))
      throw std::invalid_argument("MixtureWeights: degenerate weights");
    w.p.resize(m);
    KahanSum mass;
    for (size_t i = 0; i < m; ++i) {
      w.p[i] = w.a[i] * terms[i] / w.Z;
      mass.add(w.p[i]);
    }
    // sum p = z_partial / Z <= 1 exactly; rounding can leave a few ulps of
    // overshoot once the block-budget tail underflows, so the cash balance
    // is clamped rather than allowed to go negative.
    w.cash = std::max(0.0, 1.0 - mass.value());
    return w;
  }

  void to_csv(std::ostream& os) const {
    os << "k,gamma_k,p_k\n";
    for (size_t i = 0; i < p.size(); ++i) {
      char buf[80];
      snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n",
               k_lo + static_cast<int>(i), gamma[i], p[i]);
      os << buf;
    }
  }
};

// Mixture capital from (n, S) alone; each component is a closed-form
// constant-proportion capital. Returned as a log. Initial capital is 1.
inline double validity_log_capital_ht(const MixtureWeights& w, long long n,
                                      long long S) {
  check_sum_parity(n, S);
  double m = 0.0;  // cash and dropped components sit at log-ratio 0
  std::vector<double> lr(w.size(), 0.0);
  for (size_t i = 0; i < w.size(); ++i) {
    if (w.bets(i)) {
      lr[i] = closed_form_log_capital_ratio(w.gamma[i], n, S);
      m = std::max(m, lr[i]);
    }
  }
  double acc = w.cash * std::exp(-m);
  for (size_t i = 0; i < w.size(); ++i)
    acc += w.p[i] * std::exp(lr[i] - m);
  return m + std::log(acc);
}

// The playable mixture. Component capitals are tracked as log ratios; the
// bet fraction is assembled in a max-shifted frame so all-heads runs of any
// length stay finite.
class ValidityStrategy final : public Strategy {
 public:
  explicit ValidityStrategy(MixtureWeights w) : w_(std::move(w)) {
    l1p_.resize(w_.size());
    l1m_.resize(w_.size());
    for (size_t i = 0; i < w_.size(); ++i) {
      l1p_[i] = std::log1p(w_.gamma[i]);
      l1m_[i] = std::log1p(-w_.gamma[i]);
    }
    reset();
  }

  ValidityStrategy(const PsiSpec& spec, int k_max,
                   double delta = kDefaultDelta)
      : ValidityStrategy(MixtureWeights::build(spec, k_max, delta)) {}

  void reset() override {
    lr_.assign(w_.size(), 0.0);
    consumed_ = 0;
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    double m = 0.0;
    for (size_t i = 0; i < w_.size(); ++i)
      if (w_.bets(i)) m = std::max(m, lr_[i]);
    double num = 0.0;
    double den = w_.cash * std::exp(-m);
    for (size_t i = 0; i < w_.size(); ++i) {
      const double e = w_.p[i] * std::exp(lr_[i] - m);
      den += e;
      if (w_.bets(i)) num += w_.gamma[i] * e;
    }
    return num / den;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<ValidityStrategy>(w_);
  }

  // log of the mixture capital (initial capital 1).
  double log_capital(const Path& history) {
    catch_up(history);
    double m = 0.0;
    for (size_t i = 0; i < w_.size(); ++i) m = std::max(m, lr_[i]);
    double acc = w_.cash * std::exp(-m);
    for (size_t i = 0; i < w_.size(); ++i)
      acc += w_.p[i] * std::exp(lr_[i] - m);
    return m + std::log(acc);
  }

  const MixtureWeights& weights() const { return w_; }

 private:
  void catch_up(const Path& h) {
    for (; consumed_ < h.rounds(); ++consumed_) {
      const bool heads = h.outcome(consumed_) > 0;
      for (size_t i = 0; i < w_.size(); ++i)
        if (w_.bets(i)) lr_[i] += heads ? l1p_[i] : l1m_[i];
    }
  }

  MixtureWeights w_;
  std::vector<double> l1p_, l1m_, lr_;
  size_t consumed_ = 0;
};

inline std::unique_ptr<Strategy> validity_strategy(const PsiSpec& spec,
                                                   int k_max,
                                                   double delta = kDefaultDelta) {
  return std::make_unique<ValidityStrategy>(spec, k_max, delta);
}

// Numeric check of the forcing chain's final display at one (n, S):
//   Z * K_n >= a_{floor(n - n/psi_n)} (1/2 - psi_n/(2n)) e^{-1/2 - delta -
//   gamma_n^3 n}.
// Reported with the library convention lhs <= rhs, i.e. lhs is the display
// bound and rhs is Z * K_n. Preconditions (S_n >= sqrt(n) psi(n), the
// psi_n/(psi_n - 1) <= 1 + delta/2 side condition, and the k-range being
// inside the truncation with betting components) yield a skip report when
// unmet, not a failure.
inline BoundReport forcing_chain_check(const PsiSpec& spec, long long n,
                                       long long S, double delta,
                                       const MixtureWeights& w) {
  BoundReport r;
  r.which = "validity-chain";
  r.case_id = "chain-lower-bound";
  r.delta = delta;
  r.n = n;
  r.S = S;
  const double nd = static_cast<double>(n);
  const double psi_n = spec.eval(nd);
  const double gamma_n = psi_n / std::sqrt(nd);
  r.gamma = gamma_n;
  if (!(static_cast<double>(S) >= std::sqrt(nd) * psi_n)) {
    r.skipped = true;
    r.note = "S_n below sqrt(n) psi(n)";
    r.finish();
    return r;
  }
  if (!(psi_n / (psi_n - 1.0) <= 1.0 + delta / 2.0)) {
    r.skipped = true;
    r.note = "psi_n/(psi_n-1) exceeds 1 + delta/2";
    r.finish();
    return r;
  }
  const long long k_from =
      static_cast<long long>(std::floor(nd - nd / psi_n));
  if (k_from < w.k_lo || n > w.k_max) {
    r.skipped = true;
    r.note = "k range outside truncation";
    r.finish();
    return r;
  }
  for (long long k = k_from; k <= n; ++k) {
    if (!w.bets(static_cast<size_t>(k - w.k_lo))) {
      r.skipped = true;
      r.note = "non-betting component in k range";
      r.finish();
      return r;
    }
  }
  const double a_k = w.a[static_cast<size_t>(k_from - w.k_lo)];
  r.log_lhs = std::log(a_k) + std::log(0.5 - psi_n / (2.0 * nd)) +
              (-0.5 - delta - gamma_n * gamma_n * gamma_n * nd);
  r.log_rhs = std::log(w.Z) + validity_log_capital_ht(w, n, S);
  r.note = "display lower bound vs Z * mixture capital";
  r.finish();
  return r;
}

}  // namespace gtp
