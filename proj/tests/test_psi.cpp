#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gtp/psi.hpp"

using namespace gtp;

namespace {

// Test-local oracle: composite Simpson on s = ln(lambda), independent of the
// adaptive integrator under test.
double simpson_integral_I(double c, double upper, int panels = 20000) {
  auto f = [&](double s) {
    const double p2 = 2.0 * std::log(s) + c * std::log(std::log(s));
    return std::sqrt(p2) * std::exp(-0.5 * p2);
  };
  const double a = std::log(16.0), b = std::log(upper);
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("family evaluation matches the direct formula") {
  // n = e^{e^e}: ln2 n = e, ln3 n = 1.
  const double n = std::exp(std::exp(M_E));
  CHECK(PsiSpec::family(3.0).eval(n) ==
        Catch::Approx(std::sqrt(2.0 * M_E + 3.0)).epsilon(1e-12));
  CHECK(PsiSpec::family(0.0).eval(n) ==
        Catch::Approx(std::sqrt(2.0 * M_E)).epsilon(1e-12));
  // Domain edge: psi(16) straight from the definition.
  CHECK(PsiSpec::family(4.0).eval(16.0) ==
        Catch::Approx(1.455306222927961).epsilon(1e-12));
}

TEST_CASE("family domain handling") {
  auto spec = PsiSpec::family(3.0);
  CHECK_THROWS_AS(spec.eval(15.0), std::domain_error);
  CHECK(spec.eval_clamped(2.0) == Catch::Approx(spec.eval(16.0)));
  // ln-space evaluation agrees with direct evaluation inside double range.
  CHECK(spec.eval_from_ln(std::log(1e6)) ==
        Catch::Approx(spec.eval(1e6)).epsilon(1e-14));
}

TEST_CASE("table evaluation") {
  auto t = PsiSpec::table({{16.0, 1.0}, {32.0, 2.0}});
  CHECK(t.eval(16.0) == 1.0);
  CHECK(t.eval(32.0) == 2.0);
  CHECK(t.eval(24.0) == Catch::Approx(1.5));
  CHECK(t.eval(100.0) == 2.0);  // constant beyond the last node
  CHECK_THROWS_AS(t.eval(10.0), std::domain_error);
  CHECK_THROWS_AS(PsiSpec::table({{16.0, 2.0}, {32.0, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PsiSpec::table({}), std::invalid_argument);
}

TEST_CASE("psi is monotone non-decreasing on log-spaced samples") {
  for (const PsiSpec& spec :
       {PsiSpec::family(0.0), PsiSpec::family(3.0), PsiSpec::family(4.0),
        PsiSpec::table({{16.0, 1.0}, {100.0, 1.5}, {1e4, 2.0}})}) {
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double ln_n = std::log(16.0) + (std::log(1e12) - std::log(16.0)) *
                                               i / 999.0;
      // exp(log(16)) can land a hair below the domain edge.
      const double v = spec.eval(std::max(spec.domain_min(), std::exp(ln_n)));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("envelopes: L below U, ratio tending to one") {
  auto L = envelope_L(), U = envelope_U();
  for (double ln_n = std::log(16.0); ln_n < 700.0; ln_n *= 1.7) {
    CHECK(L.eval_from_ln(ln_n) <= U.eval_from_ln(ln_n));
  }
  // The ratio reaches 1% once ln2 n ~ 110 (it is still ~4% at ln2 n = 10);
  // evaluated in log space since such n are far beyond double range.
  const double ln_n = std::exp(110.0);
  const double ratio = U.eval_from_ln(ln_n) / L.eval_from_ln(ln_n);
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 1.01);
}

TEST_CASE("classify: analytic threshold at c = 3") {
  CHECK(classify(PsiSpec::family(3.0)) == ClassLabel::lower);
  CHECK(classify(PsiSpec::family(4.0)) == ClassLabel::upper);
  CHECK(classify(PsiSpec::family(3.5)) == ClassLabel::upper);
  CHECK(classify(PsiSpec::family(3.0 + 1e-9)) == ClassLabel::upper);
  CHECK(classify(PsiSpec::family(3.0 - 1e-9)) == ClassLabel::lower);
  CHECK_THROWS_AS(classify(PsiSpec::table({{16.0, 1.0}})),
                  std::invalid_argument);
}

TEST_CASE("integral_I: empty interval and cross-check against Simpson") {
  auto U4 = PsiSpec::family(4.0);
  CHECK(integral_I(U4, 16.0) == 0.0);
  for (double up : {1e3, 1e6}) {
    CHECK(integral_I(U4, up) ==
          Catch::Approx(simpson_integral_I(4.0, up)).epsilon(1e-8));
  }
}

TEST_CASE("integral_I: c = 4 partials increase with slowing increments") {
  auto U4 = PsiSpec::family(4.0);
  const double i3 = integral_I(U4, 1e3);
  const double i6 = integral_I(U4, 1e6);
  const double i9 = integral_I(U4, 1e9);
  CHECK(i3 < i6);
  CHECK(i6 < i9);
  CHECK(i6 - i3 > i9 - i6);  // Cauchy-slowing toward a finite limit
}

TEST_CASE("integral_I: c = 3 dyadic increments stay bounded away from zero") {
  auto L3 = PsiSpec::family(3.0);
  double prev = integral_I(L3, 16.0 * 2.0);
  double min_inc = 1e9;
  for (int j = 2; j <= 31; ++j) {
    const double cur = integral_I(L3, 16.0 * std::exp2(j));
    min_inc = std::min(min_inc, cur - prev);
    prev = cur;
  }
  // Oracle (independent quadrature): the smallest increment up to 2^31 is
  // ~0.01606, far from flattening out.
  CHECK(min_inc > 0.015);
}

TEST_CASE("discrete_sum basics and agreement with the integral") {
  auto U4 = PsiSpec::family(4.0);
  // Single-term sum at K = 16.
  CHECK(discrete_sum(U4, 16) ==
        Catch::Approx(0.03154530594526965).epsilon(1e-12));
  // Monotone in K.
  CHECK(discrete_sum(U4, 101) >= discrete_sum(U4, 100));
  // Sum vs integral with matched lower limits: within 5% at K = 1e6.
  const double s = discrete_sum(U4, 1000000);
  const double i = integral_I(U4, 1e6);
  CHECK(std::abs(s / i - 1.0) < 0.05);
}

TEST_CASE("PsiSpec JSON round trip") {
  auto fam = PsiSpec::family(4.0);
  auto fam2 = PsiSpec::from_json(fam.to_json());
  CHECK(fam2.is_family());
  CHECK(fam2.family_c() == 4.0);

  auto tab = PsiSpec::table({{16.0, 1.0}, {64.0, 2.5}});
  auto tab2 = PsiSpec::from_json(tab.to_json());
  CHECK_FALSE(tab2.is_family());
  CHECK(tab2.eval(40.0) == Catch::Approx(tab.eval(40.0)));

  CHECK(PsiSpec::from_json(nlohmann::json::parse(R"({"family":{"c":3.5}})"))
            .family_c() == 3.5);
}
