#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gtp/game.hpp"
#include "gtp/reality.hpp"
#include "gtp/sharpness.hpp"

using namespace gtp;

namespace {

const QuadratureConfig kFast(32, QuadratureConfig::Mode::quadrature);

DynpConfig fast_cfg() {
  DynpConfig cfg;
  cfg.quad = kFast;
  return cfg;
}

}  // namespace

TEST_CASE("cycle schedule entries") {
  CycleSchedule sched(5.0, envelope_U());
  SECTION("exact integer boundaries at c = 5") {
    CHECK(sched.entry(2).nk_int.value() == 1024ULL);       // 2^10
    CHECK(sched.entry(3).nk_int.value() == 14348907ULL);   // 3^15
    CHECK(sched.entry(1).nk_int.value() == 1ULL);
  }
  SECTION("huge k keeps only the logarithm") {
    const auto& e = sched.entry(1000000);
    CHECK_FALSE(e.nk_int.has_value());
    CHECK(e.ln_nk == Catch::Approx(5e6 * std::log(1e6)).epsilon(1e-15));
  }
  SECTION("ln n_k strictly increasing; integer boundary consistent") {
    double prev = -1.0;
    for (int k = 1; k <= 40; ++k) {
      const auto& e = sched.entry(k);
      CHECK(e.ln_nk > prev);
      prev = e.ln_nk;
      if (e.nk_int && k >= 2) {
        const double ln_int = std::log(static_cast<double>(*e.nk_int));
        CHECK(std::abs(ln_int - e.ln_nk) <= 1e-12 * std::max(1.0, e.ln_nk));
      }
    }
  }
  SECTION("fractional exponents only yield integers when c*k is integral") {
    CycleSchedule frac(1.5, envelope_U());
    CHECK(frac.entry(4).nk_int.value() == 4096ULL);  // 4^6
    CHECK_FALSE(frac.entry(3).nk_int.has_value());   // 3^4.5
  }
  CHECK_THROWS_AS(CycleSchedule(0.0, envelope_U()), std::invalid_argument);
}

TEST_CASE("lemma3 quantities at k = 1000 and monotone trends") {
  CycleSchedule sched(5.0, envelope_U());
  auto q = lemma3_limits(sched, 1000);
  CHECK(q.kc_nk_ratio ==
        Catch::Approx(std::exp(-5.0)).epsilon(0.01));  // within 1%
  CHECK(q.env_ratio > 0.9);
  CHECK(q.env_ratio <= 1.0);

  Lemma3Limits prev = lemma3_limits(sched, 1000);
  for (int k : {10000, 100000, 1000000}) {
    auto cur = lemma3_limits(sched, k);
    CHECK(cur.gamma3_n <= prev.gamma3_n);
    CHECK(cur.gamma_sqrtnk_psi <= prev.gamma_sqrtnk_psi);
    CHECK(cur.env_ratio >= prev.env_ratio);
    CHECK(cur.env_ratio <= 1.0);
    CHECK(std::abs(cur.kc_nk_ratio - std::exp(-5.0)) <=
          std::abs(prev.kc_nk_ratio - std::exp(-5.0)));
    prev = cur;
  }
  CHECK_THROWS_AS(lemma3_limits(sched, 2), std::invalid_argument);
}

TEST_CASE("dynp single cycle") {
  auto L3 = envelope_L();
  CycleSchedule sched(1.0, L3);
  DynpConfig cfg = fast_cfg();

  SECTION("value at the cycle start is alpha") {
    DynpSingleCycleStrategy dynp(sched, cfg, 3);
    Path empty;
    CHECK(dynp.predicted_capital(empty) ==
          Catch::Approx(kMixtureAlpha).epsilon(1e-12));
  }

  SECTION("infeasible cycles are rejected") {
    CycleSchedule big(5.0, envelope_U());
    CHECK_THROWS_AS(DynpSingleCycleStrategy(big, cfg, 4),
                    std::invalid_argument);  // 5^25 - 4^20 rounds
  }

  SECTION("martingale at 8 rounds") {
    DynpSingleCycleStrategy dynp(sched, cfg, 3);
    CHECK(enumerate_mean_capital(dynp, 8, kMixtureAlpha) ==
          Catch::Approx(kMixtureAlpha).epsilon(1e-8));
  }

  SECTION("bet-level identity: runner capital equals the affine node value") {
    DynpSingleCycleStrategy dynp(sched, cfg, 4);
    IidFairReality reality(8675309);
    auto traj = run_game(dynp, reality, 2000, kMixtureAlpha);
    DynpSingleCycleStrategy replay(sched, cfg, 4);
    Path p;
    for (const auto& row : traj.rows) {
      p.push(row.x);
      const double predicted = replay.predicted_capital(p);
      CHECK(std::abs(row.capital - predicted) <=
            1e-12 * std::max({kMixtureAlpha, row.capital, predicted}));
    }
  }

  SECTION("stays above alpha/2 on an in-range hugger through cycle 4") {
    DynpSingleCycleStrategy dynp(sched, cfg, 4);
    BoundaryHuggerReality hugger(L3, HuggerSide::upper, 0.75);
    const long long len = sched.entry(5).nk_run - sched.entry(4).nk_run;
    auto traj = run_game(dynp, hugger, len, kMixtureAlpha);
    for (const auto& row : traj.rows) {
      CHECK(row.capital > kMixtureAlpha / 2.0);
      CHECK_FALSE(row.clamped);
    }
  }
}

TEST_CASE("sharpness loop advances through in-range cycles") {
  auto L3 = envelope_L();
  CycleSchedule sched(1.0, L3);
  SharpnessLoopStrategy loop(sched, fast_cfg());
  BoundaryHuggerReality hugger(L3, HuggerSide::upper, 0.75);
  const long long rounds = sched.entry(6).nk_run;  // through cycle 5
  auto traj = run_game(loop, hugger, rounds, kMixtureAlpha);
  Path p;
  for (const auto& row : traj.rows) p.push(row.x);
  loop.finalize(p);

  const auto& st = loop.status();
  REQUIRE(st.cycles.size() == 3);  // k = 3, 4, 5
  int expect_k = 3;
  for (const auto& c : st.cycles) {
    CHECK(c.k == expect_k++);
    CHECK_FALSE(c.waited);
    CHECK(c.growth_factor > 1.0);  // positive log growth per cycle
    CHECK(c.coef > 0.0);
  }
  CHECK(st.wait_rounds == 0);
  for (const auto& row : traj.rows) CHECK(row.capital > kMixtureAlpha / 2.0);
  CHECK(traj.clamp_count == 0);
}

TEST_CASE("sharpness loop: breach enters the wait state, resumes on a boundary") {
  auto L3 = envelope_L();
  CycleSchedule sched(1.0, L3);
  SharpnessLoopStrategy loop(sched, fast_cfg());

  // Alternate (in range) until the cycle-3 start, then force a breach of the
  // upper envelope, then come back down and alternate; the sums are back in
  // range at the k = 4 boundary (n = 256).
  Path script;
  for (int i = 0; i < 27; ++i) script.push(i % 2 == 0 ? 1 : -1);
  for (int i = 0; i < 16; ++i) script.push(1);  // S climbs to ~15-16: breach
  while (script.sum() > 0) script.push(-1);
  while (script.rounds() < 300)
    script.push(script.rounds() % 2 == 0 ? 1 : -1);
  // Confirm the script breaches inside cycle 3.
  bool breached = false;
  for (size_t n = 28; n <= 256; ++n) {
    const double target = std::sqrt(static_cast<double>(n)) *
                          L3.eval_clamped(static_cast<double>(n));
    if (static_cast<double>(script.partial_sum(n)) > target) breached = true;
  }
  REQUIRE(breached);

  ScriptedReality reality(script);
  auto traj = run_game(loop, reality, 300, kMixtureAlpha);
  Path p;
  for (const auto& row : traj.rows) p.push(row.x);
  loop.finalize(p);

  const auto& st = loop.status();
  REQUIRE(st.cycles.size() >= 1);
  CHECK(st.cycles[0].k == 3);
  CHECK(st.cycles[0].waited);       // aborted by the breach
  CHECK(st.wait_rounds > 0);        // idle rounds between abort and resume
  CHECK(st.current_k == 4);         // resumed at the next boundary
  CHECK(st.phase == "in_cycle");
  // While waiting the loop bets nothing.
  bool saw_flat = false;
  for (const auto& row : traj.rows)
    if (row.n > 40 && row.n < 256 && row.bet == 0.0) saw_flat = true;
  CHECK(saw_flat);
}

TEST_CASE("combined skeptic") {
  auto L3 = envelope_L();
  CycleSchedule sched(1.0, L3);
  DynpConfig cfg = fast_cfg();

  SECTION("split validation") {
    CHECK_THROWS_AS(CombinedSkeptic(sched, cfg, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(CombinedSkeptic(sched, cfg, 1.0), std::invalid_argument);
  }

  SECTION("martingale at 6 rounds") {
    CombinedSkeptic c(sched, cfg, 0.5, 200, 0.3);
    CHECK(enumerate_mean_capital(c, 6, 1.0) ==
          Catch::Approx(1.0).epsilon(1e-8));
  }

  SECTION("sub-accounts add up to the runner capital and never cross-fund") {
    CombinedSkeptic c(sched, cfg, 0.5, 200, 0.3);
    IidFairReality reality(99);
    auto traj = run_game(c, reality, 400, 1.0);
    Path p;
    for (const auto& row : traj.rows) p.push(row.x);
    c.sync(p);
    CHECK(c.validity_capital() + c.loop_capital() ==
          Catch::Approx(traj.final_capital()).epsilon(1e-10));
    CHECK(c.validity_capital() > 0.0);
    CHECK(c.loop_capital() > 0.0);
  }

  SECTION("mirrored validity side grows on an all-tails run") {
    CombinedSkeptic c(sched, cfg, 0.5, 1000, 0.1);
    AllMinusReality reality;
    auto traj = run_game(c, reality, 1500, 1.0);
    Path p;
    for (const auto& row : traj.rows) p.push(row.x);
    c.sync(p);
    // The mirrored account sees all heads and must multiply several-fold.
    CHECK(c.validity_capital() > 2.0 * 0.5);
    // The loop account never breaches its collateral.
    CHECK(c.loop_capital() > 0.0);
  }
}
