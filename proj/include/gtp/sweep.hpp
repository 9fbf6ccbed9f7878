#pragma once

// Grid sweeps over the lemma bounds: every (gamma, n, S) point yields one
// BoundReport. Points whose gamma^3 n exceeds the standing delta are flagged
// precondition-warn and excluded from the pass/fail tally (the bounds are
// still evaluated and reported).

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtp/mixtures.hpp"
#include "gtp/numeric.hpp"

namespace gtp {

enum class BoundKind { lemma1, lemma2, bssd };

inline BoundKind bound_kind_from_string(const std::string& s) {
  if (s == "lemma1") return BoundKind::lemma1;
  if (s == "lemma2") return BoundKind::lemma2;
  if (s == "bssd") return BoundKind::bssd;
  throw std::invalid_argument("unknown bound kind: " + s);
}

struct SweepGrid {
  std::vector<double> gammas;
  std::vector<long long> ns;
  std::vector<double> s_fractions;  // S = round-to-parity(fraction * n)
  double delta = kDefaultDelta;

  static SweepGrid from_json(const nlohmann::json& j) {
    SweepGrid g;
    for (auto& v : j.at("gammas")) g.gammas.push_back(v.get<double>());
    for (auto& v : j.at("ns")) g.ns.push_back(v.get<long long>());
    for (auto& v : j.at("s_fractions")) g.s_fractions.push_back(v.get<double>());
    if (j.contains("delta")) g.delta = j.at("delta").get<double>();
    return g;
  }
};

inline long long round_to_parity(double x, long long n) {
  long long r = std::llround(x);
  if (((r ^ n) & 1LL) != 0) {
    // Nearest neighbor with the right parity; ties resolve upward.
    const double lo = static_cast<double>(r - 1), hi = static_cast<double>(r + 1);
    r = (x - lo < hi - x) ? r - 1 : r + 1;
  }
  // +-n share n's parity, so clamping preserves it.
  if (r > n) r = n;
  if (r < -n) r = -n;
  return r;
}

inline BoundReport evaluate_bound(BoundKind which, double gamma, long long n,
                                  long long S, double delta, int k,
                                  const QuadratureConfig& cfg = {}) {
  BoundReport r;
  switch (which) {
    case BoundKind::lemma1:
      r = lemma1_bound(gamma, n, S, delta, cfg);
      break;
    case BoundKind::lemma2:
      r = lemma2_bound(gamma, n, S, delta, cfg);
      break;
    case BoundKind::bssd:
      r = bssd_bound(gamma, k, n, S, delta, cfg);
      break;
  }
  if (gamma * gamma * gamma * static_cast<double>(n) > delta && !r.warn) {
    r.warn = true;
    r.note = "gamma^3 n exceeds delta";
  }
  return r;
}

struct SweepSummary {
  std::vector<BoundReport> reports;
  int passed = 0;
  int failed = 0;   // non-warn, non-skip failures
  int warned = 0;   // evaluated but excluded from pass/fail
  int skipped = 0;
  bool ok() const { return failed == 0; }

  void tally(const BoundReport& r) {
    reports.push_back(r);
    if (r.skipped)
      ++skipped;
    else if (r.warn)
      ++warned;
    else if (r.pass)
      ++passed;
    else
      ++failed;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    return {{"passed", passed}, {"failed", failed},     {"warned", warned},
            {"skipped", skipped}, {"reports", arr}};
  }
};

inline SweepSummary sweep_bounds(const SweepGrid& grid, BoundKind which,
                                 int k = 3, const QuadratureConfig& cfg = {}) {
  SweepSummary out;
  for (double gamma : grid.gammas)
    for (long long n : grid.ns)
      for (double f : grid.s_fractions) {
        const long long S = round_to_parity(f * static_cast<double>(n), n);
        out.tally(evaluate_bound(which, gamma, n, S, grid.delta, k, cfg));
      }
  return out;
}

// Case-targeted S placement: `per_case` values inside each case region of
// the chosen bound, so a sweep exercises all four cases at every (gamma, n).
inline std::vector<long long> case_s_targets(BoundKind which, double gamma,
                                             long long n, int per_case) {
  const double nd = static_cast<double>(n);
  const double gn = gamma * nd;
  struct Region {
    double lo, hi;  // half-open (lo, hi]; lo = hi means the point itself
  };
  std::vector<Region> regions;
  regions.push_back({-nd, 0.0});  // negative/zero case for every bound
  if (which == BoundKind::lemma1) {
    regions.push_back({0.0, 2.0 * gn / M_E});
    regions.push_back({2.0 * gn / M_E, gn});
    regions.push_back({gn, nd});
  } else {
    regions.push_back({0.0, gn / M_E});
    regions.push_back({gn / M_E, M_E * gn});
    regions.push_back({M_E * gn, nd});
  }
  std::vector<long long> out;
  for (const auto& reg : regions) {
    const double lo = std::max(reg.lo, -nd), hi = std::min(reg.hi, nd);
    if (!(hi > lo)) continue;
    for (int i = 1; i <= per_case; ++i) {
      const double t = lo + (hi - lo) * i / (per_case + 1.0);
      const long long S = round_to_parity(t, n);
      // Membership can be lost to parity rounding near region edges.
      const double sd = static_cast<double>(S);
      if (sd <= lo || sd > hi) continue;
      if (out.empty() || out.back() != S) out.push_back(S);
    }
  }
  // The S = n and S <= 0 anchors are always representable.
  out.push_back(n);
  out.push_back(0LL + ((n & 1LL) ? -1 : 0));
  return out;
}

inline SweepSummary sweep_bounds_cases(const std::vector<double>& gammas,
                                       const std::vector<long long>& ns,
                                       BoundKind which, int per_case,
                                       double delta = kDefaultDelta, int k = 3,
                                       const QuadratureConfig& cfg = {}) {
  SweepSummary out;
  for (double gamma : gammas)
    for (long long n : ns)
      for (long long S : case_s_targets(which, gamma, n, per_case))
        out.tally(evaluate_bound(which, gamma, n, S, delta, k, cfg));
  return out;
}

}  // namespace gtp
