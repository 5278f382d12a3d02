#include <cmath>

#include "doctest.h"

#include "brw/analysis.hpp"
#include "brw/error.hpp"
#include "brw/scheme.hpp"
#include "brw/tilt.hpp"

using namespace brw;

namespace {

double closed(double t) { return 3.0 / (std::cosh(t) - 1.0); }

}  // namespace

TEST_CASE("closed candidate passes its certificate") {
  const ClosedFormCertificate& c = closed_form_certificate();
  CHECK(c.passed);
  CHECK(c.max_ode_residual < 1e-10);
  CHECK(c.small_t_limit_gap < 1e-6);
  CHECK(c.decay_constant == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(c.max_inversion_gap < 1e-12);
}

TEST_CASE("psi examples") {
  CHECK_THROWS_AS(psi(0.0), ConfigError);
  CHECK_THROWS_AS(psi(-1.0), ConfigError);
  const double s = psi_value(0.5, PsiMethod::series);
  CHECK(s == doctest::Approx(24 - 0.5 + 0.00625 - 0.000062).epsilon(1e-6));
  CHECK(std::fabs(psi_value(0.5, PsiMethod::inversion) - s) <= 1e-8);
  CHECK(psi_value(2.0, PsiMethod::closed_candidate) == doctest::Approx(1.0861).epsilon(1e-4));
  CHECK(std::fabs(psi_value(2.0, PsiMethod::inversion) - closed(2.0)) <= 1e-8);
  CHECK(psi_value(std::sqrt(12.0)) == doctest::Approx(0.2001398).epsilon(1e-6));
  // psi(t) e^t tends to a constant, pinned at 6 by the closed form.
  CHECK(psi_value(30.0) * std::exp(30.0) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("property: the three psi routes agree") {
  for (double t = 0.02; t <= 0.3 + 1e-12; t += 0.01) {
    const double a = psi_value(t), b = psi_value(t, PsiMethod::series), c = psi_value(t, PsiMethod::closed_candidate);
    CHECK(std::fabs(a - b) <= 1e-8);
    CHECK(std::fabs(a - c) <= 1e-8);
  }
  for (double t = 0.3; t <= 40; t *= 1.17) CHECK(std::fabs(psi_value(t) - closed(t)) <= 1e-8 * std::max(1.0, closed(t)));
}

TEST_CASE("property: F(psi(t)) = t and psi is decreasing") {
  double prev = INFINITY;
  for (double t = 0.05; t <= 10.0; t *= 1.09) {
    const double p = psi_value(t);
    CHECK(p > 0);
    CHECK(p < prev);
    prev = p;
    CHECK(std::fabs(F_primitive(p) - t) <= 1e-9);
  }
}

TEST_CASE("property: finite-difference ODE residual") {
  const double h = 1e-4;
  for (double t = 0.2; t <= 5.0 + 1e-12; t += 0.1) {
    const double pm = psi_value(t - h), p = psi_value(t), pp = psi_value(t + h);
    const double second = (pp - 2 * p + pm) / (h * h);
    CHECK(std::fabs(second - p * p - p) <= 1e-4 * (1 + p * p));
  }
}

TEST_CASE("series coefficients recovered from the inversion route") {
  const auto ref = psi_series_coefficients();
  const auto got = recover_series_coefficients(static_cast<int>(ref.size()));
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(got[i] / ref[i] - 1) < 1e-4);
  CHECK_THROWS_AS(recover_series_coefficients(0), ConfigError);
}

TEST_CASE("big_R examples") {
  CHECK(big_R(0.0, 1.0, 1.0) == 0.0);
  CHECK(big_R(1.0, 1.0, 1.0) == doctest::Approx(2.402).epsilon(1e-3));
  CHECK(big_R(1.0, 1.0, 1.0) == doctest::Approx(6 * laplace_limit_gt(1.0, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(big_R(-1.0, 1.0, 1.0), ConfigError);
  for (auto [a, tol] : {std::pair{1e-2, 1e-2}, std::pair{1e-3, 1e-3}}) {
    const double ratio = big_R(a, 1.0, 1.0) / 6.0 / (0.6 * a * a);
    CHECK(std::fabs(ratio - 1) < tol);
  }
  // Scaling with sigma2 and eta2.
  CHECK(big_R(2.0, 2.0, 3.0) == doctest::Approx(6 * 3.0 / 2.0 * laplace_limit_gt(1.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("property: big_R is increasing and its series matches near zero") {
  double prev = -1;
  for (double a = 0; a <= 20; a += 0.25) {
    const double v = big_R(a, 1.0, 1.0);
    CHECK(v > prev);
    prev = v;
  }
  for (double a : {2e-3, 5e-3, 1e-2}) {
    const double rel = std::fabs(big_R(a, 1.0, 1.0) / big_R_series(a, 1.0, 1.0) - 1);
    CHECK(rel < 1e-10);
  }
}

TEST_CASE("laplace limits") {
  CHECK(laplace_limit_gt(0.0, 1.0) == 1.0);
  CHECK(laplace_limit_gt(1.0, 1.0) == doctest::Approx(0.4003).epsilon(1e-4));
  CHECK(laplace_limit_map_volume(2.0, 2.0) == doctest::Approx(0.4003).epsilon(1e-4));
  CHECK_THROWS_AS(laplace_limit_gt(-0.1, 1.0), ConfigError);
  double prev = 2;
  for (double a = 0; a <= 50; a += 0.5) {
    const double v = laplace_limit_gt(a, 1.0);
    CHECK(v < prev);
    CHECK(v > 0);
    prev = v;
  }
  // The eq limit implied by differentiating the gt limit in alpha.
  const double a = 1.0, d = 1e-5;
  const double deriv = (laplace_limit_gt(a + d, 1.0) - laplace_limit_gt(a - d, 1.0)) / (2 * d);
  CHECK(laplace_limit_eq_implied(a, 1.0) == doctest::Approx(laplace_limit_gt(a, 1.0) - a * deriv).epsilon(1e-8));
}

TEST_CASE("t_of examples") {
  CHECK(t_of(10, 0.0, 1, 1) == 0.0);
  CHECK(t_of(10, 1.0, 1, 1) == doctest::Approx(1.8e-3).epsilon(1e-12));
  CHECK(t_of(20, 1.3, 2, 0.7) == doctest::Approx(t_of(10, 1.3, 2, 0.7) / 16).epsilon(1e-12));
  CHECK_THROWS_AS(t_of(0, 1, 1, 1), ConfigError);
}

TEST_CASE("phi_t and h_t(inf) for the binary scheme") {
  const SchemeSpec s = presets::binary_pm1_tabulated();
  for (double t : {1e-6, 1e-3, 0.1, 1.0}) {
    for (double x : {0.0, 0.3, 1.0}) CHECK(phi_t(s, t, x) == doctest::Approx(std::exp(-t) * (1 + x * x) / 2).epsilon(1e-14));
    const TiltFixedPoint fp = h_t_infinity(s, t);
    const double exact = (1 - std::sqrt(1 - std::exp(-2 * t))) * std::exp(t);
    CHECK(std::fabs(fp.h_inf - exact) < 1e-12);
    CHECK(std::fabs(phi_t(s, t, fp.h_inf) - fp.h_inf) <= 1e-12);
  }
  CHECK(h_t_infinity(s, 0.0).h_inf == 1.0);
  const TiltFixedPoint small = h_t_infinity(s, 1e-8);
  const double ratio = small.one_minus_h / std::sqrt(2e-8);
  CHECK(ratio >= 0.99);
  CHECK(ratio <= 1.01);
  const double exact_gap = 1 - (1 - std::sqrt(-std::expm1(-2e-8))) * std::exp(1e-8);
  CHECK(std::fabs(small.one_minus_h - exact_gap) < 1e-12);
}

TEST_CASE("property: h_t(inf) decreases in t") {
  for (const SchemeSpec& s : {presets::binary_iid_pm1(), presets::geometric_uniform(1), presets::poisson_rademacher()}) {
    double prev = 1.0 + 1e-16;
    for (double t = 1e-8; t < 10; t *= 3) {
      const TiltFixedPoint fp = h_t_infinity(s, t);
      CHECK(fp.h_inf < prev);
      CHECK(std::fabs(phi_t(s, t, fp.h_inf) - fp.h_inf) <= 1e-12);
      prev = fp.h_inf;
    }
  }
}

TEST_CASE("tilted_scheme") {
  const SchemeSpec s = presets::binary_pm1_tabulated();
  const SchemeSpec id = tilted_scheme(s, 0.0);
  const auto& a = std::get<Tabulated>(s.law).outcomes;
  const auto& b = std::get<Tabulated>(id.law).outcomes;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::fabs(a[i].prob - b[i].prob) < 1e-15);
    CHECK(a[i].atoms == b[i].atoms);
  }
  for (double t : {1e-8, 1e-4, 0.1, 2.0}) {
    const SchemeSpec ts = tilted_scheme(s, t);
    double total = 0;
    for (const auto& o : std::get<Tabulated>(ts.law).outcomes) total += o.prob;
    CHECK(std::fabs(total - 1) < 1e-12);
    const double h = h_t_infinity(s, t).h_inf;
    CHECK(std::fabs(scheme_moments(ts).m - phi_t_prime(s, t, h)) < 1e-12);
  }
  const double m = scheme_moments(tilted_scheme(s, 1e-4)).m;
  CHECK(std::fabs((1 - m) / std::sqrt(2e-4) - 1) < 0.03);
  CHECK_THROWS_AS(tilted_scheme(presets::binary_iid_pm1(), 0.1), ConfigError);
}
