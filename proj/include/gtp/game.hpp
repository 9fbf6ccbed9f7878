#pragma once

// Fair-coin game protocol: Skeptic announces a stake, Reality announces
// x_n in {-1,+1}, capital updates K_n = K_{n-1} + M_n x_n. The runner owns
// duty enforcement: Skeptic's capital never goes negative, either by
// rejecting an oversized stake or by clamping it (and logging the clamp).

#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtp/numeric.hpp"

namespace gtp {

// Reality's move. Kept as a plain int constrained to {-1,+1}.
inline int check_outcome(int x) {
  if (x != 1 && x != -1) throw std::invalid_argument("outcome must be +-1");
  return x;
}

// Outcome sequence with running partial sums S_n (S_0 = 0).
class Path {
 public:
  void push(int outcome) {
    check_outcome(outcome);
    x_.push_back(static_cast<int8_t>(outcome));
    s_.push_back(sum() + outcome);
  }
  size_t rounds() const { return x_.size(); }
  int outcome(size_t i) const { return x_.at(i); }  // 0-based
  long long partial_sum(size_t n) const {           // S_n, n in [0, rounds]
    return n == 0 ? 0 : s_.at(n - 1);
  }
  long long sum() const { return s_.empty() ? 0 : s_.back(); }
  void clear() {
    x_.clear();
    s_.clear();
  }

  // "+-+-" style constructor for tests and tools.
  static Path from_signs(const std::string& signs) {
    Path p;
    for (char c : signs) {
      if (c == '+')
        p.push(1);
      else if (c == '-')
        p.push(-1);
      else
        throw std::invalid_argument("Path::from_signs: use only + and -");
    }
    return p;
  }

 private:
  std::vector<int8_t> x_;
  std::vector<long long> s_;
};

// Betting strategy. All strategies in this library bet a fraction of their
// own capital, which is the scale-free quantity; announce() recovers the
// absolute stake for the protocol. bet_fraction must be deterministic given
// internal state and history, and strategies must tolerate being called once
// per round with the history grown by exactly one outcome since the last
// call (they may keep incremental state keyed on history length).
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual void reset() = 0;
  virtual double bet_fraction(const Path& history) = 0;
  virtual std::unique_ptr<Strategy> clone() const = 0;

  double announce(const Path& history, double current_capital) {
    return bet_fraction(history) * current_capital;
  }
};

class ZeroBetStrategy final : public Strategy {
 public:
  void reset() override {}
  double bet_fraction(const Path&) override { return 0.0; }
  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<ZeroBetStrategy>();
  }
};

// Reality player: sees the full history and the stake just announced.
class RealityPlayer {
 public:
  virtual ~RealityPlayer() = default;
  virtual void reset() {}
  virtual int next(const Path& history, double current_bet) = 0;
  virtual std::unique_ptr<RealityPlayer> clone() const = 0;
};

struct DutyPolicy {
  enum class Mode { reject, clamp_and_log };
  Mode mode = Mode::clamp_and_log;
  static DutyPolicy reject() { return {Mode::reject}; }
  static DutyPolicy clamp_and_log() { return {Mode::clamp_and_log}; }
};

class DutyViolation : public std::runtime_error {
 public:
  DutyViolation(long long round, double bet, double capital)
      : std::runtime_error("duty violation at round " + std::to_string(round) +
                           ": |" + std::to_string(bet) + "| > capital " +
                           std::to_string(capital)),
        round_(round) {}
  long long round() const { return round_; }

 private:
  long long round_;
};

// Per-round record of a finished game. Linear capital follows the exact
// additive recursion; log capital is accumulated from log1p(fraction * x)
// with compensation and is the authoritative value once the linear one
// leaves double range (underflow below ~1e-300 or overflow).
struct CapitalTrajectory {
  struct Row {
    long long n;
    int x;
    long long S;
    double bet;
    double capital;
    double log_capital;
    bool clamped;
  };

  double initial_capital = 1.0;
  std::vector<Row> rows;
  long long clamp_count = 0;

  double final_capital() const {
    return rows.empty() ? initial_capital : rows.back().capital;
  }
  double final_log_capital() const {
    return rows.empty() ? std::log(initial_capital)
                        : rows.back().log_capital;
  }

  void to_csv(std::ostream& os) const {
    os << "n,x,S,bet,capital,log_capital,clamped\n";
    for (const auto& r : rows) {
      os << r.n << ',' << r.x << ',' << r.S << ',' << fmt(r.bet) << ','
         << fmt(r.capital) << ',' << fmt(r.log_capital) << ','
         << (r.clamped ? 1 : 0) << '\n';
    }
  }

  void to_jsonl(std::ostream& os) const {
    for (const auto& r : rows) {
      os << "{\"n\":" << r.n << ",\"x\":" << r.x << ",\"S\":" << r.S
         << ",\"bet\":" << fmt(r.bet) << ",\"capital\":" << fmt(r.capital)
         << ",\"log_capital\":" << fmt(r.log_capital)
         << ",\"clamped\":" << (r.clamped ? "true" : "false") << "}\n";
    }
  }

 private:
  static std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (v == kPosInf) return "inf";
    if (v == kNegInf) return "-inf";
    char buf[40];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
};

inline CapitalTrajectory run_game(Strategy& strategy, RealityPlayer& reality,
                                  long long rounds, double initial_capital,
                                  DutyPolicy policy = {}) {
  if (rounds < 0) throw std::invalid_argument("run_game: rounds >= 0");
  if (!(initial_capital > 0.0))
    throw std::invalid_argument("run_game: initial capital must be positive");

  CapitalTrajectory traj;
  traj.initial_capital = initial_capital;
  traj.rows.reserve(static_cast<size_t>(rounds));

  strategy.reset();
  reality.reset();

  Path history;
  KahanSum capital(initial_capital);
  KahanSum log_gain;  // log(K_n / K_0)
  const double log_alpha = std::log(initial_capital);
  bool dead = false;  // capital hit exactly zero

  for (long long n = 1; n <= rounds; ++n) {
    double f = dead ? 0.0 : strategy.bet_fraction(history);
    if (!std::isfinite(f))
      throw std::logic_error("run_game: non-finite bet fraction at round " +
                             std::to_string(n));
    bool clamped = false;
    if (std::abs(f) > 1.0) {
      if (policy.mode == DutyPolicy::Mode::reject)
        throw DutyViolation(n, f * capital.value(), capital.value());
      f = f > 0.0 ? 1.0 : -1.0;
      clamped = true;
      ++traj.clamp_count;
    }
    const double k_before = capital.value();
    const double bet = f * k_before;
    const int x = check_outcome(reality.next(history, bet));
    history.push(x);

    capital.add(bet * x);
    if (!dead) {
      const double step = f * x;
      if (step <= -1.0) {
        dead = true;
        capital.reset(0.0);
      } else {
        log_gain.add(std::log1p(step));
      }
    }
    // Clamped stakes can leave a tiny negative residue from rounding.
    if (capital.value() < 0.0) capital.reset(0.0);

    traj.rows.push_back({n, x, history.sum(), bet, capital.value(),
                         dead ? kNegInf : log_alpha + log_gain.value(),
                         clamped});
  }
  return traj;
}

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact mean of final capital over all 2^rounds outcome sequences. This is
// the martingale oracle: any fraction-betting strategy must average back to
// its initial capital.
inline double enumerate_mean_capital(Strategy& strategy, int rounds,
                                     double initial_capital) {
  if (rounds < 0) throw std::invalid_argument("rounds >= 0");
  if (rounds > 20)
    throw BudgetExceeded("enumerate_mean_capital: rounds > 20");
  const uint64_t total = 1ULL << rounds;
  KahanSum acc;
  Path history;
  for (uint64_t bits = 0; bits < total; ++bits) {
    strategy.reset();
    history.clear();
    KahanSum capital(initial_capital);
    for (int i = 0; i < rounds; ++i) {
      const double f = strategy.bet_fraction(history);
      const int x = (bits >> i) & 1 ? 1 : -1;
      capital.add(f * capital.value() * x);
      history.push(x);
    }
    acc.add(capital.value());
  }
  return acc.value() / static_cast<double>(total);
}

}  // namespace gtp
