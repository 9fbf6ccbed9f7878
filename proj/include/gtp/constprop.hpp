#pragma once

// Constant-proportion betting: M_n = gamma * K_{n-1}, so
//   K_n = alpha * prod(1 + gamma x_i)
//       = alpha * ((1+gamma)/(1-gamma))^{S_n/2} * (1-gamma^2)^{n/2},
// which depends on the path only through (n, S_n) and is increasing in S_n.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "gtp/game.hpp"
#include "gtp/numeric.hpp"

namespace gtp {

inline constexpr double kDefaultDelta = 0.01;

// Betting proportion with its standing cap: 0 <= gamma <= delta_cap < 1.
struct BettingProportion {
  double gamma = 0.0;
  double delta_cap = kDefaultDelta;

  BettingProportion() = default;
  BettingProportion(double g, double cap = kDefaultDelta)
      : gamma(g), delta_cap(cap) {
    if (!(gamma >= 0.0) || !(gamma <= delta_cap) || !(delta_cap < 1.0))
      throw std::invalid_argument(
          "BettingProportion: need 0 <= gamma <= delta_cap < 1");
  }
};

class ConstantProportionStrategy final : public Strategy {
 public:
  explicit ConstantProportionStrategy(BettingProportion bp) : bp_(bp) {}
  void reset() override {}
  double bet_fraction(const Path&) override { return bp_.gamma; }
  std::unique_ptr<Strategy> clone() const override {
    return std::make_unique<ConstantProportionStrategy>(bp_);
  }
  double gamma() const { return bp_.gamma; }

 private:
  BettingProportion bp_;
};

inline std::unique_ptr<Strategy> constprop_strategy(BettingProportion bp) {
  return std::make_unique<ConstantProportionStrategy>(bp);
}

inline void check_sum_parity(long long n, long long S) {
  if (n < 0 || std::llabs(S) > n || ((n ^ S) & 1LL))
    throw std::invalid_argument(
        "partial sum must satisfy |S| <= n and S = n (mod 2)");
}

// log(K_n / alpha) in exact product form: h*log1p(g) + t*log1p(-g) with
// h, t the head/tail counts. Valid for any gamma in (-1, 1); the strategy
// cap applies to play, not to the identity.
inline double closed_form_log_capital_ratio(double gamma, long long n,
                                            long long S) {
  if (!(gamma > -1.0 && gamma < 1.0))
    throw std::invalid_argument("closed form needs gamma in (-1,1)");
  check_sum_parity(n, S);
  const double h = 0.5 * static_cast<double>(n + S);
  const double t = 0.5 * static_cast<double>(n - S);
  return h * std::log1p(gamma) + t * std::log1p(-gamma);
}

inline double closed_form_capital(double gamma, long long n, long long S,
                                  double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return alpha * std::exp(closed_form_log_capital_ratio(gamma, n, S));
}

// Exponential sandwich on K_n/alpha, returned as logs:
//   gamma*S - gamma^2 n/2 -+ gamma^3 n.
// The cubic log1p sandwich behind it holds for |gamma| well beyond the
// standing delta (up to ~2/3), so no extra precondition is enforced here.
struct SandwichLogBounds {
  double lower;
  double upper;
};

inline SandwichLogBounds sandwich_log_bounds(double gamma, long long n,
                                             long long S) {
  check_sum_parity(n, S);
  const double g2n = 0.5 * gamma * gamma * static_cast<double>(n);
  const double g3n = std::abs(gamma * gamma * gamma) * static_cast<double>(n);
  const double core = gamma * static_cast<double>(S) - g2n;
  return {core - g3n, core + g3n};
}

}  // namespace gtp
