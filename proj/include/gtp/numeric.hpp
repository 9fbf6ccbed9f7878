#pragma once

// Small numeric utilities shared across the library: compensated summation,
// weighted log-sum-exp, stable signed log arithmetic and seed derivation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace gtp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Kahan-compensated accumulator. Capital processes add tiny bets to an O(1)
// balance for up to ~10^6 rounds; plain summation drifts past the 1e-12
// tolerances the trajectory invariants demand.
class KahanSum {
 public:
  KahanSum() = default;
  explicit KahanSum(double init) : sum_(init) {}

  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  void reset(double v) {
    sum_ = v;
    carry_ = 0.0;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

// log(sum_i w_i * exp(l_i)) for positive weights; tolerates -inf entries.
inline double log_sum_exp_weighted(std::span<const double> logs,
                                   std::span<const double> weights) {
  double m = kNegInf;
  for (double l : logs) m = std::max(m, l);
  if (!std::isfinite(m)) return kNegInf;
  double acc = 0.0;
  for (size_t i = 0; i < logs.size(); ++i) {
    if (logs[i] == kNegInf) continue;
    acc += weights[i] * std::exp(logs[i] - m);
  }
  return m + std::log(acc);
}

inline double log_add(double la, double lb) {
  if (la == kNegInf) return lb;
  if (lb == kNegInf) return la;
  const double m = std::max(la, lb);
  return m + std::log1p(std::exp(std::min(la, lb) - m));
}

// log(e^la - e^lb) for la > lb; returns -inf when the difference vanishes or
// goes non-positive (caller decides how to interpret a non-positive value).
inline double log_sub(double la, double lb) {
  if (lb == kNegInf) return la;
  if (la <= lb) return kNegInf;
  return la + std::log1p(-std::exp(lb - la));
}

// splitmix64: cheap, well-mixed stream used to derive per-run RNG seeds from
// (seed, run_index) pairs.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t run_index) {
  uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0x9E3779B97F4A7C15ULL * (run_index + 1);
  return splitmix64(s);
}

inline bool nearly_equal_rel(double a, double b, double rel,
                             double floor_scale = 1.0) {
  const double scale =
      std::max(floor_scale, std::max(std::abs(a), std::abs(b)));
  return std::abs(a - b) <= rel * scale;
}

}  // namespace gtp
