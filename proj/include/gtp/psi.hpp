#pragma once

// The psi family, its integral test and the upper/lower class decision.
//
// psi_c(n) = sqrt(2*ln2(n) + c*ln3(n))   (ln_k = k-fold iterated log)
//
// Class threshold, derived once and pinned analytically: with s = ln(lambda),
//   psi e^{-psi^2/2} dlambda/lambda = psi(s) * e^{-ln s - (c/2) ln ln s} ds
//                                   = psi(s) / (s (ln s)^{c/2}) ds,
// and psi(s) ~ sqrt(2 ln s), so the integrand is ~ sqrt(2) /
// (s (ln s)^{(c-1)/2}). Integrating ds/(s (ln s)^p) converges iff p > 1,
// i.e. iff (c-1)/2 > 1, i.e. c > 3. Hence: c <= 3 lower class, c > 3 upper
// class. Numerics cannot decide convergence; the classifier is analytic.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gtp/numeric.hpp"
#include "gtp/quadrature.hpp"

namespace gtp {

enum class ClassLabel { upper, lower };

inline const char* to_string(ClassLabel c) {
  return c == ClassLabel::upper ? "upper" : "lower";
}

// Positive non-decreasing psi: parametric family or a user table.
// The family's domain starts at n = 16 (> e^e), where all iterated logs are
// positive; eval_clamped extends below as the constant psi(16). The paper
// family only constrains psi for all sufficiently large n, so the extension
// is a harness convenience, not a claim.
class PsiSpec {
 public:
  static PsiSpec family(double c) {
    PsiSpec s;
    s.is_family_ = true;
    s.c_ = c;
    // domain requires 2 ln2 n + c ln3 n > 0 on [16, inf); at n = 16 the
    // ln3 term is ~0.0197, so any c > -103 is safe; reject absurd c.
    if (!(2.0 * std::log(std::log(16.0)) +
              c * std::log(std::log(std::log(16.0))) >
          0.0))
      throw std::invalid_argument("PsiSpec::family: psi(16)^2 <= 0");
    return s;
  }

  static PsiSpec table(std::vector<std::pair<double, double>> pts) {
    if (pts.empty()) throw std::invalid_argument("PsiSpec::table: empty");
    for (size_t i = 0; i < pts.size(); ++i) {
      if (!(pts[i].second > 0.0))
        throw std::invalid_argument("PsiSpec::table: psi must be positive");
      if (i > 0) {
        if (!(pts[i].first > pts[i - 1].first))
          throw std::invalid_argument("PsiSpec::table: n not increasing");
        if (pts[i].second < pts[i - 1].second)
          throw std::invalid_argument("PsiSpec::table: psi decreasing");
      }
    }
    PsiSpec s;
    s.is_family_ = false;
    s.pts_ = std::move(pts);
    return s;
  }

  bool is_family() const { return is_family_; }
  double family_c() const {
    if (!is_family_) throw std::logic_error("PsiSpec: table has no c");
    return c_;
  }

  double domain_min() const { return is_family_ ? 16.0 : pts_.front().first; }

  double eval(double n) const {
    if (!(n >= domain_min()))
      throw std::domain_error("PsiSpec::eval: n below domain minimum");
    return is_family_ ? eval_from_ln(std::log(n)) : eval_table(n);
  }

  // Constant extension below domain_min; used by harness targets at tiny n.
  double eval_clamped(double n) const {
    return n >= domain_min() ? eval(n) : eval_at_domain_min();
  }

  // Family evaluation from ln(n); handles n far beyond double range
  // (schedules reach ln n ~ 7e7). Tables are bounded, so exp is fine there.
  double eval_from_ln(double ln_n) const {
    if (is_family_) {
      if (!(ln_n >= std::log(16.0) * (1.0 - 1e-15)))
        throw std::domain_error("PsiSpec::eval_from_ln: below domain");
      const double l2 = std::log(ln_n);
      const double l3 = std::log(l2);
      return std::sqrt(2.0 * l2 + c_ * l3);
    }
    return eval_table(std::exp(ln_n));
  }

  double eval_at_domain_min() const {
    return is_family_ ? eval_from_ln(std::log(16.0)) : pts_.front().second;
  }

  nlohmann::json to_json() const {
    if (is_family_) return {{"family", {{"c", c_}}}};
    nlohmann::json arr = nlohmann::json::array();
    for (auto& [n, p] : pts_) arr.push_back({n, p});
    return {{"table", arr}};
  }

  static PsiSpec from_json(const nlohmann::json& j) {
    if (j.contains("family")) return family(j.at("family").at("c"));
    if (j.contains("table")) {
      std::vector<std::pair<double, double>> pts;
      for (auto& e : j.at("table")) pts.emplace_back(e.at(0), e.at(1));
      return table(std::move(pts));
    }
    throw std::invalid_argument("PsiSpec::from_json: need family or table");
  }

 private:
  PsiSpec() = default;

  double eval_table(double n) const {
    if (n >= pts_.back().first) return pts_.back().second;
    auto it = std::upper_bound(
        pts_.begin(), pts_.end(), n,
        [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (n - lo.first) / (hi.first - lo.first);
    return lo.second + f * (hi.second - lo.second);
  }

  bool is_family_ = true;
  double c_ = 4.0;
  std::vector<std::pair<double, double>> pts_;
};

// The two envelopes that bracket every psi worth considering.
inline PsiSpec envelope_L() { return PsiSpec::family(3.0); }
inline PsiSpec envelope_U() { return PsiSpec::family(4.0); }

// Analytic class decision (see header comment). Tables are rejected: no
// finite procedure decides convergence from finitely many samples.
inline ClassLabel classify(const PsiSpec& spec) {
  if (!spec.is_family())
    throw std::invalid_argument("classify: only the parametric family");
  return spec.family_c() > 3.0 ? ClassLabel::upper : ClassLabel::lower;
}

// integral of psi(l) e^{-psi(l)^2/2} dl/l from domain_min to upper_limit,
// computed in s = ln(l) with the adaptive log-domain rule.
inline double integral_I(const PsiSpec& spec, double upper_limit,
                         double rel_tol = 1e-8) {
  const double lo = spec.domain_min();
  if (!(upper_limit >= lo))
    throw std::domain_error("integral_I: upper_limit below domain minimum");
  if (upper_limit == lo) return 0.0;
  auto log_integrand = [&](double s) {
    const double psi = spec.eval_from_ln(s);
    return std::log(psi) - 0.5 * psi * psi;
  };
  const double L =
      log_integrate_adaptive(log_integrand, std::log(lo),
                             std::log(upper_limit), 32, rel_tol * 0.5);
  return std::exp(L);
}

// sum_{k=domain_min}^{K} (psi(k)/k) e^{-psi(k)^2/2}
inline double discrete_sum(const PsiSpec& spec, long long K) {
  const long long lo = static_cast<long long>(std::ceil(spec.domain_min()));
  if (K < lo) throw std::domain_error("discrete_sum: K below domain minimum");
  KahanSum acc;
  for (long long k = lo; k <= K; ++k) {
    const double psi = spec.eval(static_cast<double>(k));
    acc.add(psi / static_cast<double>(k) * std::exp(-0.5 * psi * psi));
  }
  return acc.value();
}

}  // namespace gtp
