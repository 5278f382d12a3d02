#include "brw/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "brw/error.hpp"

namespace brw {

namespace {

constexpr double kTailStart = 1e4;

// Large-x expansion of F: sqrt(6) sum_j c_j x^{-1/2 - j}.
double F_tail_series(double x) {
  static constexpr double c[] = {1.0, -0.25, 27.0 / 160, -135.0 / 896, 315.0 / 2048, -15309.0 / 90112};
  double acc = 0, pw = 1.0 / std::sqrt(x);
  for (double cj : c) {
    acc += cj * pw;
    pw /= x;
  }
  return std::sqrt(6.0) * acc;
}

double closed_form(double t) {
  const double s = std::sinh(0.5 * t);
  return 3.0 / (2.0 * s * s);
}

long double closed_form_ld(long double t) {
  const long double s = std::sinh(0.5L * t);
  return 3.0L / (2.0L * s * s);
}

double series_form(double t) {
  const double t2 = t * t;
  return 6.0 / t2 - 0.5 + t2 / 40.0 - t2 * t2 / 1008.0 + t2 * t2 * t2 / 28800.0;
}

ClosedFormCertificate certify() {
  ClosedFormCertificate c;
  // ODE with analytic derivatives on a log-spaced grid.
  for (double t = 0.05; t <= 30.0; t *= 1.05) {
    const double ch = std::cosh(t), sh = std::sinh(t);
    const double cm1 = 2 * std::sinh(0.5 * t) * std::sinh(0.5 * t);
    const double p = 3.0 / cm1;
    const double p2 = -3.0 * ch / (cm1 * cm1) + 6.0 * sh * sh / (cm1 * cm1 * cm1);
    const double rhs = p * p + p;
    c.max_ode_residual = std::max(c.max_ode_residual, std::abs(p2 - rhs) / rhs);
  }
  // Fourth-order central differences in long double, step proportional to t.
  for (long double t = 0.1L; t <= 20.0L; t *= 1.1L) {
    const long double h = 1e-3L * std::min(t, 1.0L);
    const long double f0 = closed_form_ld(t);
    const long double d2 = (-closed_form_ld(t + 2 * h) + 16 * closed_form_ld(t + h) - 30 * f0 +
                            16 * closed_form_ld(t - h) - closed_form_ld(t - 2 * h)) /
                           (12 * h * h);
    const long double rhs = f0 * f0 + f0;
    c.max_fd_residual = std::max(c.max_fd_residual, static_cast<double>(std::abs(d2 - rhs) / rhs));
  }
  c.small_t_limit_gap = std::abs(1e-6 * closed_form(1e-3) - 6.0);
  c.decay_constant = std::exp(40.0) * closed_form(40.0);
  for (long double t : {0.1L, 0.15L, 0.2L, 0.25L, 0.3L}) {
    const long double t2 = t * t;
    const long double ser = 6.0L / t2 - 0.5L + t2 / 40.0L - t2 * t2 / 1008.0L + t2 * t2 * t2 / 28800.0L;
    const long double gap = std::abs(closed_form_ld(t) - ser) / (t2 * t2 * t2 * t2);
    c.max_series_gap = std::max(c.max_series_gap, static_cast<double>(gap));
  }
  for (double t : {0.05, 0.3, 1.0, 3.4641016151377544, 8.0, 25.0}) {
    c.max_inversion_gap = std::max(c.max_inversion_gap, std::abs(F_primitive(closed_form(t)) - t));
  }
  // The next series term is t^8 / 887040; allow a margin for it.
  c.passed = c.max_ode_residual < 1e-10 && c.max_fd_residual < 1e-8 && c.small_t_limit_gap < 1e-6 &&
             std::abs(c.decay_constant - 6.0) < 1e-12 && c.max_series_gap < 2.0 / 887040.0 &&
             c.max_inversion_gap < 1e-12;
  return c;
}

}  // namespace

double F_primitive(double x, double* error_estimate) {
  if (!(x > 0)) throw ConfigError("F_primitive: x must be positive");
  if (x >= kTailStart) {
    if (error_estimate) *error_estimate = std::sqrt(6.0) * 0.2 * std::pow(x, -6.5);
    return F_tail_series(x);
  }
  // s = e^u turns the 1/s singularity at 0 into a bounded, smooth integrand.
  auto f = [](double u) { return 1.0 / std::sqrt(1.0 + (2.0 / 3.0) * std::exp(u)); };
  double err = 0;
  const double lo = std::log(x), hi = std::log(kTailStart);
  double body = 0;
  // Split at u = 0 where the integrand bends.
  if (lo < 0) {
    double e1 = 0, e2 = 0;
    body = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, 0.0, 15, 1e-14, &e1) +
           boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, hi, 15, 1e-14, &e2);
    err = e1 + e2;
  } else {
    body = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-14, &err);
  }
  if (error_estimate) *error_estimate = err * std::max(1.0, body);
  return body + F_tail_series(kTailStart);
}

OdeEval psi(double t, PsiMethod method) {
  if (!(t > 0) || !std::isfinite(t)) throw ConfigError("psi: t must be positive and finite");
  OdeEval out;
  out.t = t;
  out.method = method;
  switch (method) {
    case PsiMethod::series: {
      out.psi = series_form(t);
      out.error_estimate = std::pow(t, 8) / 887040.0;
      return out;
    }
    case PsiMethod::closed_candidate: {
      if (!closed_form_certificate().passed)
        throw PreconditionError("psi: closed-form candidate failed certification");
      out.psi = closed_form(t);
      out.error_estimate = 4e-16 * out.psi;
      return out;
    }
    case PsiMethod::inversion: break;
  }
  if (t > 700) throw ConfigError("psi: t too large, psi underflows");
  // F is decreasing; bisect on log y.
  double lo = std::log(1e-305), hi = std::log(1e300);
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (F_primitive(std::exp(mid)) > t) lo = mid; else hi = mid;
  }
  const double y = std::exp(0.5 * (lo + hi));
  double ferr = 0;
  F_primitive(y, &ferr);
  out.psi = y;
  out.error_estimate = std::max(ferr * std::sqrt((2.0 / 3.0) * y * y * y + y * y), 2e-16 * y);
  return out;
}

const ClosedFormCertificate& closed_form_certificate() {
  static const ClosedFormCertificate cert = certify();
  return cert;
}

std::vector<double> psi_series_coefficients() {
  return {-0.5, 1.0 / 40, -1.0 / 1008, 1.0 / 28800};
}

std::vector<double> recover_series_coefficients(int count) {
  if (count < 1 || count > 5) throw ConfigError("recover_series_coefficients: count must be in 1..5");
  // Least-squares polynomial in x = t^2 on Chebyshev nodes of [0, xmax]; the
  // remainder psi - 6/t^2 is analytic for |x| < 4 pi^2.
  const int npts = 24;
  const int degree = 13;
  const double xmax = 9.0;
  Eigen::MatrixXd V(npts, degree + 1);
  Eigen::VectorXd rhs(npts);
  for (int j = 0; j < npts; ++j) {
    const double u = 0.5 * (1.0 - std::cos(M_PI * (j + 0.5) / npts));
    const double x = xmax * u;
    const double t = std::sqrt(x);
    rhs(j) = psi_value(t, PsiMethod::inversion) - 6.0 / x;
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k) {
      V(j, k) = pw;
      pw *= u;
    }
  }
  const Eigen::VectorXd b = V.colPivHouseholderQr().solve(rhs);
  std::vector<double> coeffs;
  double scale = 1.0;
  for (int k = 0; k < count; ++k) {
    coeffs.push_back(b(k) / scale);
    scale *= xmax;
  }
  return coeffs;
}

double t_of(double r, double alpha, double sigma2, double eta2) {
  if (!(r > 0) || !(sigma2 > 0) || !(eta2 > 0)) throw ConfigError("t_of: r, sigma2 and eta2 must be positive");
  const double q = 6.0 * eta2 / (sigma2 * r * r);
  return alpha * alpha / (2.0 * sigma2) * q * q;
}

double big_R_series(double alpha, double sigma2, double eta2) {
  const double a = alpha / sigma2;
  const double br = a * a * (3.0 / 5 + a * (-2.0 / 7 + a * (3.0 / 25 + a * (-18.0 / 385 + a * 1382.0 / 79625))));
  return 6.0 * eta2 / sigma2 * br;
}

double big_R(double alpha, double sigma2, double eta2) {
  if (!(alpha >= 0) || !(sigma2 > 0) || !(eta2 > 0)) throw ConfigError("big_R: bad arguments");
  const double a = alpha / sigma2;
  if (a < 1e-3) return big_R_series(alpha, sigma2, eta2);
  // 2 a psi(sqrt(12 a)) = 3a / sinh^2(sqrt(3a)) with the certified closed form.
  const double s = std::sqrt(12.0 * a);
  const double bracket = 2.0 * a * psi_value(s, PsiMethod::closed_candidate) - 1.0 + a;
  return 6.0 * eta2 / sigma2 * bracket;
}

double laplace_limit_gt(double alpha, double sigma2) {
  if (!(alpha >= 0) || !(sigma2 > 0)) throw ConfigError("laplace_limit_gt: bad arguments");
  if (alpha == 0) return 1.0;
  const double a = alpha / sigma2;
  return 2.0 * a * psi_value(std::sqrt(12.0 * a), PsiMethod::closed_candidate);
}

double laplace_limit_map_volume(double alpha, double sigma2) { return laplace_limit_gt(alpha, sigma2); }

double laplace_limit_eq_implied(double alpha, double sigma2) {
  // l(a) = 6a / (cosh sqrt(12a) - 1) in a = alpha / sigma2; l - a l'.
  if (alpha == 0) return 1.0;
  const double a = alpha / sigma2;
  const double s = std::sqrt(12.0 * a);
  const double cm1 = 2 * std::sinh(0.5 * s) * std::sinh(0.5 * s);
  const double l = 6.0 * a / cm1;
  const double dl = 6.0 / cm1 - 6.0 * a * std::sinh(s) * (6.0 / s) / (cm1 * cm1);
  return l - a * dl;
}

}  // namespace brw
