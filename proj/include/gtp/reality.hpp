#pragma once

// Reality players. The protocol leaves Reality unconstrained beyond the
// collateral duty, so the harness supplies a menu: constants, alternation,
// seeded fair coin, envelope huggers and a per-round adversary.

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

#include "gtp/game.hpp"
#include "gtp/numeric.hpp"
#include "gtp/psi.hpp"

namespace gtp {

class AllPlusReality final : public RealityPlayer {
 public:
  int next(const Path&, double) override { return 1; }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<AllPlusReality>();
  }
};

class AllMinusReality final : public RealityPlayer {
 public:
  int next(const Path&, double) override { return -1; }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<AllMinusReality>();
  }
};

// +1, -1, +1, ... starting with +1.
class AlternatingReality final : public RealityPlayer {
 public:
  int next(const Path& h, double) override {
    return h.rounds() % 2 == 0 ? 1 : -1;
  }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<AlternatingReality>();
  }
};

// Seeded fair coin; one engine draw per round, reproducible bit for bit.
class IidFairReality final : public RealityPlayer {
 public:
  explicit IidFairReality(uint64_t seed) : seed_(seed), engine_(seed) {}
  void reset() override { engine_.seed(seed_); }
  int next(const Path&, double) override {
    return (engine_() & 1ULL) ? 1 : -1;
  }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<IidFairReality>(seed_);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

// Replays a fixed outcome sequence (ingested bit streams, scripted tests).
// Past the end of the script it keeps playing the last outcome.
class ScriptedReality final : public RealityPlayer {
 public:
  explicit ScriptedReality(Path script) : script_(std::move(script)) {
    if (script_.rounds() == 0)
      throw std::invalid_argument("ScriptedReality: empty script");
  }
  int next(const Path& h, double) override {
    const size_t i = h.rounds();
    return script_.outcome(i < script_.rounds() ? i : script_.rounds() - 1);
  }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<ScriptedReality>(script_);
  }

 private:
  Path script_;
};

enum class HuggerSide { upper, lower };

// Walks toward a target curve and then oscillates around it. The upper
// target is sqrt(n) * psi(n), the lower target is -sqrt(n) * U(n), both with
// the envelope extended as a constant below its domain minimum. `margin` is
// fractional: the player tracks (1 - margin) times the target, so margin 0
// hugs the envelope itself and margin 0.5 hugs half of it, staying safely
// inside the admissible range.
class BoundaryHuggerReality final : public RealityPlayer {
 public:
  BoundaryHuggerReality(PsiSpec spec, HuggerSide side, double margin = 0.0)
      : spec_(std::move(spec)), side_(side), margin_(margin) {
    if (!(margin >= 0.0 && margin < 1.0))
      throw std::invalid_argument("hugger margin must be in [0, 1)");
  }

  double target(double n) const {
    const double base = std::sqrt(n) * spec_.eval_clamped(n);
    return (1.0 - margin_) * (side_ == HuggerSide::upper ? base : -base);
  }

  int next(const Path& h, double) override {
    // Compare against the target at the round being played, so a large
    // envelope means heads from the very first move.
    const double tgt = target(static_cast<double>(h.rounds() + 1));
    const double s = static_cast<double>(h.sum());
    if (side_ == HuggerSide::upper) return s < tgt ? 1 : -1;
    return s > tgt ? -1 : 1;
  }

  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<BoundaryHuggerReality>(spec_, side_, margin_);
  }

 private:
  PsiSpec spec_;
  HuggerSide side_;
  double margin_;
};

// Plays -sign(M_n); ties at M_n = 0 resolve to +1. Skeptic's capital can
// never increase against it.
class BetMinimizerReality final : public RealityPlayer {
 public:
  int next(const Path&, double bet) override { return bet > 0.0 ? -1 : 1; }
  std::unique_ptr<RealityPlayer> clone() const override {
    return std::make_unique<BetMinimizerReality>();
  }
};

// Factory keyed by the CLI spelling of each player.
inline std::unique_ptr<RealityPlayer> make_reality(const std::string& kind,
                                                   uint64_t seed,
                                                   const PsiSpec& spec,
                                                   double margin = 0.0) {
  if (kind == "all_plus") return std::make_unique<AllPlusReality>();
  if (kind == "all_minus") return std::make_unique<AllMinusReality>();
  if (kind == "alternating") return std::make_unique<AlternatingReality>();
  if (kind == "iid_fair") return std::make_unique<IidFairReality>(seed);
  if (kind == "boundary_hugger_upper")
    return std::make_unique<BoundaryHuggerReality>(spec, HuggerSide::upper,
                                                   margin);
  if (kind == "boundary_hugger_lower")
    return std::make_unique<BoundaryHuggerReality>(envelope_U(),
                                                   HuggerSide::lower, margin);
  if (kind == "bet_minimizer") return std::make_unique<BetMinimizerReality>();
  throw std::invalid_argument("unknown reality kind: " + kind);
}

}  // namespace gtp
