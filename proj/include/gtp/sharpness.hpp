#pragma once

// Time-scale machinery for the sharpness side.
//
// Cycles live on n_k = e^{c k ln k} (c = 5 in the source construction;
// configurable because desk runs cannot reach k = 4 at c = 5, where
// n_4 = 4^20). The per-cycle betting proportion is
//     gamma_k = psi(n_{k+1}) k^2 / sqrt(n_{k+1}),
// kept in log space throughout since n_k overflows quickly.
//
// One cycle plays the process
//     dynp_n = alpha + coef_k (alpha - bssd_{n - n_k}),
//     coef_k = (ln k) psi_{k+1} e^{-psi_{k+1}^2/2} / D,
// i.e. it shorts the bssd mixture with a tiny coefficient. The loop strategy
// runs cycles back to back while the partial sums stay inside
// [-sqrt(n) U(n), sqrt(n) psi(n)], and otherwise waits for the next cycle
// boundary with the sums back in range.
//
// Scaled-c caveat: at c near 1 the raw gamma_k exceeds 1/e for small k (at
// c = 1, k <= 4 it even exceeds sqrt(2)/e, where the sold constant-proportion
// leg's factors satisfy |1 - gamma e| > 1 and its magnitude explodes on any
// near-balanced path). Strategy construction therefore caps the played
// proportion at DynpConfig::gamma_cap; the schedule itself always reports the
// raw log-space gamma_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gtp/constprop.hpp"
#include "gtp/game.hpp"
#include "gtp/mixtures.hpp"
#include "gtp/numeric.hpp"
#include "gtp/psi.hpp"
#include "gtp/validity.hpp"

namespace gtp {

struct CycleEntry {
  int k = 0;
  double ln_nk = 0.0;    // c k ln k, exact in floating point
  double ln_nk1 = 0.0;   // ln n_{k+1}
  std::optional<unsigned long long> nk_int;  // exact k^{ck} when representable
  double ln_psi_k1 = 0.0;  // ln psi(n_{k+1})
  double ln_gamma = 0.0;   // ln gamma_k
  long long nk_run = 0;    // integer boundary used by runners

  double gamma() const { return std::exp(ln_gamma); }
};

class CycleSchedule {
 public:
  CycleSchedule(double exponent_c, PsiSpec spec)
      : c_(exponent_c), spec_(std::move(spec)) {
    if (!(c_ > 0.0))
      throw std::invalid_argument("CycleSchedule: exponent must be positive");
  }

  double exponent_c() const { return c_; }
  const PsiSpec& spec() const { return spec_; }

  static double ln_n(double c, int k) {
    return k <= 1 ? 0.0 : c * static_cast<double>(k) * std::log(k);
  }

  const CycleEntry& entry(int k) const {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    CycleEntry e;
    e.k = k;
    e.ln_nk = ln_n(c_, k);
    e.ln_nk1 = ln_n(c_, k + 1);
    e.nk_int = exact_nk(k);
    e.ln_psi_k1 = std::log(psi_from_ln_clamped(e.ln_nk1));
    e.ln_gamma = e.ln_psi_k1 + 2.0 * std::log(static_cast<double>(k)) -
                 0.5 * e.ln_nk1;
    if (e.nk_int)
      e.nk_run = static_cast<long long>(*e.nk_int);
    else if (e.ln_nk < 42.0)
      e.nk_run = std::llround(std::exp(e.ln_nk));
    else
      e.nk_run = std::numeric_limits<long long>::max();
    return cache_.emplace(k, e).first->second;
  }

  std::vector<CycleEntry> entries(int k_min, int k_max) const {
    if (k_min < 1 || k_max < k_min)
      throw std::invalid_argument("CycleSchedule: bad k range");
    std::vector<CycleEntry> out;
    out.reserve(static_cast<size_t>(k_max - k_min + 1));
    for (int k = k_min; k <= k_max; ++k) out.push_back(entry(k));
    return out;
  }

  double psi_from_ln_clamped(double ln_nv) const {
    return ln_nv >= std::log(spec_.is_family() ? 16.0 : spec_.domain_min())
               ? spec_.eval_from_ln(ln_nv)
               : spec_.eval_at_domain_min();
  }

 private:
  // n_k = k^{ck} is an exact integer only when ck is integral and the power
  // fits; the spec gate ln n_k <= 40 keeps it inside unsigned 64-bit range.
  std::optional<unsigned long long> exact_nk(int k) const {
    if (k == 1) return 1ULL;
    if (ln_n(c_, k) > 40.0) return std::nullopt;
    const double ck = c_ * static_cast<double>(k);
    const double ck_round = std::round(ck);
    if (std::abs(ck - ck_round) > 1e-9) return std::nullopt;
    unsigned long long v = 1;
    for (long long i = 0; i < static_cast<long long>(ck_round); ++i) {
      const unsigned __int128 next =
          static_cast<unsigned __int128>(v) * static_cast<unsigned>(k);
      if (next > std::numeric_limits<unsigned long long>::max())
        return std::nullopt;
      v = static_cast<unsigned long long>(next);
    }
    return v;
  }

  double c_;
  PsiSpec spec_;
  mutable std::map<int, CycleEntry> cache_;
};

inline CycleSchedule schedule(double exponent_c, PsiSpec spec) {
  return CycleSchedule(exponent_c, std::move(spec));
}

// The four growth quantities behind the cycle construction, all evaluated in
// log space. Their limits (k -> inf, psi = the upper envelope):
//   gamma_k^3 n_{k+1} -> 0,   U(n_k)/psi_{k+1} -> 1,
//   k^c n_k / n_{k+1} -> e^{-c},   gamma_k sqrt(n_k) psi_{k+1} -> 0.
struct Lemma3Limits {
  double gamma3_n;     // gamma_k^3 n_{k+1}
  double env_ratio;    // U(n_k) / psi_{k+1}
  double kc_nk_ratio;  // k^c n_k / n_{k+1}
  double gamma_sqrtnk_psi;
};

inline Lemma3Limits lemma3_limits(const CycleSchedule& sched, int k) {
  if (k < 3) throw std::invalid_argument("lemma3_limits: k >= 3");
  const CycleEntry& e = sched.entry(k);
  Lemma3Limits q;
  q.gamma3_n = std::exp(3.0 * e.ln_gamma + e.ln_nk1);
  q.env_ratio =
      envelope_U().eval_from_ln(e.ln_nk) / std::exp(e.ln_psi_k1);
  q.kc_nk_ratio = std::exp(sched.exponent_c() * std::log(static_cast<double>(k)) +
                           e.ln_nk - e.ln_nk1);
  q.gamma_sqrtnk_psi = std::exp(e.ln_gamma + 0.5 * e.ln_nk + e.ln_psi_k1);
  return q;
}

struct DynpConfig {
  double alpha = kMixtureAlpha;
  double D = 32.0 * kSqrt2Pi / kMixtureAlpha;
  int k0 = 3;
  double delta = kDefaultDelta;
  // Cap on the played gamma_k at scaled exponents (see header comment).
  double gamma_cap = 0.25;
  long long max_cycle_rounds = 5'000'000;
  QuadratureConfig quad{};

  void validate() const {
    if (!(D > 0.0) || k0 < 2)
      throw std::invalid_argument("DynpConfig: need D > 0 and k0 >= 2");
  }
};

// Per-cycle parameters derived from the schedule.
struct CycleParams {
  int k;
  double gamma_eff;  // min(gamma_k, cap)
  double coef;       // (ln k) psi_{k+1} e^{-psi_{k+1}^2/2} / D
  long long start;   // n_k boundary
  long long end;     // n_{k+1} boundary
};

inline CycleParams cycle_params(const CycleSchedule& sched,
                                const DynpConfig& cfg, int k) {
  const CycleEntry& e = sched.entry(k);
  CycleParams p;
  p.k = k;
  p.gamma_eff = std::min(std::exp(e.ln_gamma), cfg.gamma_cap);
  const double psi = std::exp(e.ln_psi_k1);
  p.coef = std::log(static_cast<double>(k)) * psi *
           std::exp(-0.5 * psi * psi) / cfg.D;
  p.start = e.nk_run;
  p.end = sched.entry(k + 1).nk_run;
  return p;
}

// One cycle of the dynamic process, playable from the cycle start (the game's
// round 1 corresponds to n_k + 1). Bets are the bssd bets scaled by -coef.
class DynpSingleCycleStrategy final : public Strategy {
 public:
  DynpSingleCycleStrategy(const CycleSchedule& sched, const DynpConfig& cfg,
                          int k)
      : cfg_(cfg), params_(cycle_params(sched, cfg, k)) {
    cfg_.validate();
    if (params_.end == std::numeric_limits<long long>::max() ||
        params_.end - params_.start > cfg_.max_cycle_rounds)
      throw std::invalid_argument("dynp cycle infeasible at this exponent");
    bssd_ = std::make_unique<BssdStrategy>(
        BettingProportion(params_.gamma_eff,
                          std::max(cfg_.delta, params_.gamma_eff)),
        k, cfg_.quad);
  }

  DynpSingleCycleStrategy(const DynpConfig& cfg, CycleParams params)
      : cfg_(cfg), params_(params) {
    bssd_ = std::make_unique<BssdStrategy>(
        BettingProportion(params_.gamma_eff,
                          std::max(cfg_.delta, params_.gamma_eff)),
        params_.k, cfg_.quad);
  }

  void reset() override { bssd_->reset(); }

  double bet_fraction(const Path& history) override {
    const auto [value, bet] = bssd_->value_and_bet(history);
    const double dynp = cfg_.alpha + params_.coef * (cfg_.alpha - value);
    if (!(dynp > 0.0)) return 0.0;
    const double f = -params_.coef * bet / dynp;
    return std::isfinite(f) ? f : 0.0;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<DynpSingleCycleStrategy>(cfg_, params_);
  }

  // Node-rule value of dynp given the cycle-local history; the runner's
  // additive capital must match this at every round.
  double predicted_capital(const Path& history) {
    return cfg_.alpha +
           params_.coef * (cfg_.alpha - bssd_->value_and_bet(history).first);
  }

  double coef() const { return params_.coef; }
  double gamma_eff() const { return params_.gamma_eff; }
  double alpha() const { return cfg_.alpha; }

 private:
  DynpConfig cfg_;
  CycleParams params_;
  std::unique_ptr<BssdStrategy> bssd_;
};

inline std::unique_ptr<Strategy> dynp_strategy(const CycleSchedule& sched,
                                               const DynpConfig& cfg, int k) {
  return std::make_unique<DynpSingleCycleStrategy>(sched, cfg, k);
}

struct CycleReport {
  int k;
  double ln_nk;
  double gamma_eff;
  double coef;
  double growth_factor;  // dynp value at cycle end (or abort) / alpha
  bool waited;           // cycle aborted by a range breach

  static void csv_header(std::ostream& os) {
    os << "k,ln_nk,gamma_k,coef,growth_factor,waited\n";
  }
  void to_csv(std::ostream& os) const {
    char buf[160];
    snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d\n", k, ln_nk,
             gamma_eff, coef, growth_factor, waited ? 1 : 0);
    os << buf;
  }
};

struct LoopStatus {
  int current_k = 0;
  std::string phase = "idle";  // idle | in_cycle | infeasible
  long long wait_rounds = 0;   // rounds spent not betting after the start
  bool incomplete_wait = false;  // still waiting when the run ended
  std::vector<CycleReport> cycles;

  void to_csv(std::ostream& os) const {
    CycleReport::csv_header(os);
    for (const auto& c : cycles) c.to_csv(os);
  }
};

// The repeat-wait-resume loop. Runs dynp on cycle k; a range breach stops
// betting immediately and the loop resumes at the first later cycle boundary
// whose partial sum is back in range. Waiting is always legal (zero bets).
class SharpnessLoopStrategy final : public Strategy {
 public:
  SharpnessLoopStrategy(CycleSchedule sched, DynpConfig cfg)
      : sched_(std::move(sched)), cfg_(cfg) {
    cfg_.validate();
    reset();
  }

  void reset() override {
    consumed_ = 0;
    status_ = LoopStatus{};
    status_.current_k = cfg_.k0;
    k_next_ = cfg_.k0;
    in_cycle_ = false;
    cycle_.reset();
    local_.clear();
    started_ = false;
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    maybe_start_cycle(history);
    if (!in_cycle_) return 0.0;
    const auto [value, bet] = cycle_->value_and_bet(local_);
    const double dynp = cfg_.alpha + coef_ * (cfg_.alpha - value);
    if (!(dynp > 0.0)) return 0.0;
    const double f = -coef_ * bet / dynp;
    return std::isfinite(f) ? f : 0.0;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<SharpnessLoopStrategy>(sched_, cfg_);
  }

  const LoopStatus& status() const { return status_; }

  // Marks the loop as finished for reporting purposes.
  void finalize(const Path& history) {
    catch_up(history);
    status_.incomplete_wait = !in_cycle_ && started_;
  }

  bool in_range(long long n, long long S) const {
    if (n == 0) return true;
    const double nd = static_cast<double>(n);
    const double up = std::sqrt(nd) * sched_.psi_from_ln_clamped(std::log(nd));
    const double lo =
        -std::sqrt(nd) * u_env_.eval_clamped(nd);
    const double sd = static_cast<double>(S);
    return sd >= lo && sd <= up;
  }

 private:
  void maybe_start_cycle(const Path& history) {
    if (in_cycle_ || status_.phase == "infeasible") return;
    const long long n = static_cast<long long>(history.rounds());
    // Skip boundaries that are already behind us.
    while (sched_.entry(k_next_).nk_run < n) ++k_next_;
    if (sched_.entry(k_next_).nk_run != n) return;
    if (!in_range(n, history.sum())) {
      ++k_next_;
      return;
    }
    CycleParams p = cycle_params(sched_, cfg_, k_next_);
    if (p.end == std::numeric_limits<long long>::max() ||
        p.end - p.start > cfg_.max_cycle_rounds) {
      status_.phase = "infeasible";
      return;
    }
    in_cycle_ = true;
    started_ = true;
    params_ = p;
    coef_ = p.coef;
    cycle_ = std::make_unique<BssdStrategy>(
        BettingProportion(p.gamma_eff, std::max(cfg_.delta, p.gamma_eff)),
        p.k, cfg_.quad);
    local_.clear();
    status_.current_k = p.k;
    status_.phase = "in_cycle";
  }

  void catch_up(const Path& h) {
    for (; consumed_ < h.rounds(); ++consumed_) {
      const long long n = static_cast<long long>(consumed_) + 1;
      const int x = h.outcome(consumed_);
      if (!in_cycle_) {
        if (started_) ++status_.wait_rounds;
        continue;
      }
      local_.push(x);
      const bool ok = in_range(n, h.partial_sum(static_cast<size_t>(n)));
      if (!ok || n == params_.end) {
        const double value = cycle_->value_and_bet(local_).first;
        const double dynp = cfg_.alpha + coef_ * (cfg_.alpha - value);
        status_.cycles.push_back({params_.k, sched_.entry(params_.k).ln_nk,
                                  params_.gamma_eff, coef_,
                                  dynp / cfg_.alpha, !ok});
        in_cycle_ = false;
        cycle_.reset();
        local_.clear();
        k_next_ = params_.k + 1;
        status_.phase = "idle";
      }
    }
  }

  CycleSchedule sched_;
  DynpConfig cfg_;
  PsiSpec u_env_ = envelope_U();
  size_t consumed_ = 0;
  bool in_cycle_ = false;
  bool started_ = false;
  int k_next_ = 3;
  CycleParams params_{};
  double coef_ = 0.0;
  std::unique_ptr<BssdStrategy> cycle_;
  Path local_;
  LoopStatus status_;
};

inline std::unique_ptr<SharpnessLoopStrategy> sharpness_loop_strategy(
    CycleSchedule sched, DynpConfig cfg) {
  return std::make_unique<SharpnessLoopStrategy>(std::move(sched), cfg);
}

// Plays the wrapped strategy on the sign-flipped path (bets are negated, so
// gains on -x become gains on x).
class MirroredStrategy final : public Strategy {
 public:
  explicit MirroredStrategy(std::unique_ptr<Strategy> inner)
      : inner_(std::move(inner)) {}

  void reset() override {
    inner_->reset();
    mirror_.clear();
    consumed_ = 0;
  }

  double bet_fraction(const Path& history) override {
    for (; consumed_ < history.rounds(); ++consumed_)
      mirror_.push(-history.outcome(consumed_));
    return -inner_->bet_fraction(mirror_);
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<MirroredStrategy>(inner_->clone());
  }

 private:
  std::unique_ptr<Strategy> inner_;
  Path mirror_;
  size_t consumed_ = 0;
};

// Two sub-accounts, never cross-funded: a mirrored validity mixture on the
// upper envelope (forcing S_n >= -sqrt(n) U(n)) and the sharpness loop.
// Total bet is the sum of sub-bets; each sub-account keeps its own capital.
class CombinedSkeptic final : public Strategy {
 public:
  // The mirrored validity side needs delta large enough that components
  // inside its truncation actually bet: gamma_k = psi_k/sqrt(k) <= delta
  // first holds near k = (psi_k/delta)^2, ~620 at delta = 0.1.
  CombinedSkeptic(CycleSchedule sched, DynpConfig cfg, double split,
                  int validity_k_max = 1000, double validity_delta = 0.1)
      : sched_(std::move(sched)),
        cfg_(cfg),
        split_(split),
        validity_k_max_(validity_k_max),
        validity_delta_(validity_delta) {
    if (!(split > 0.0 && split < 1.0))
      throw std::invalid_argument("combined split must be in (0,1)");
    validity_side_ = std::make_unique<MirroredStrategy>(
        validity_strategy(envelope_U(), validity_k_max_, validity_delta_));
    loop_ = std::make_unique<SharpnessLoopStrategy>(sched_, cfg_);
    reset();
  }

  void reset() override {
    validity_side_->reset();
    loop_->reset();
    cap_a_.reset(split_);
    cap_b_.reset(1.0 - split_);
    pending_a_ = pending_b_ = 0.0;
    consumed_ = 0;
  }

  double bet_fraction(const Path& history) override {
    catch_up(history);
    const double fa = validity_side_->bet_fraction(history);
    const double fb = loop_->bet_fraction(history);
    pending_a_ = fa * cap_a_.value();
    pending_b_ = fb * cap_b_.value();
    const double total = cap_a_.value() + cap_b_.value();
    return total > 0.0 ? (pending_a_ + pending_b_) / total : 0.0;
  }

  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<CombinedSkeptic>(sched_, cfg_, split_,
                                             validity_k_max_, validity_delta_);
  }

  // Applies any outcomes not yet consumed (the runner stops after the last
  // outcome without another bet request).
  void sync(const Path& history) { catch_up(history); }

  // Sub-account capitals, normalized to a unit initial total.
  double validity_capital() const { return cap_a_.value(); }
  double loop_capital() const { return cap_b_.value(); }
  const LoopStatus& loop_status() const { return loop_->status(); }

 private:
  void catch_up(const Path& h) {
    for (; consumed_ < h.rounds(); ++consumed_) {
      const int x = h.outcome(consumed_);
      cap_a_.add(pending_a_ * x);
      cap_b_.add(pending_b_ * x);
      pending_a_ = pending_b_ = 0.0;
    }
  }

  CycleSchedule sched_;
  DynpConfig cfg_;
  double split_;
  int validity_k_max_;
  double validity_delta_;
  std::unique_ptr<MirroredStrategy> validity_side_;
  std::unique_ptr<SharpnessLoopStrategy> loop_;
  KahanSum cap_a_, cap_b_;
  double pending_a_ = 0.0, pending_b_ = 0.0;
  size_t consumed_ = 0;
};

inline std::unique_ptr<Strategy> combined_skeptic(CycleSchedule sched,
                                                  DynpConfig cfg,
                                                  double split = 0.5) {
  return std::make_unique<CombinedSkeptic>(std::move(sched), cfg, split);
}

}  // namespace gtp
