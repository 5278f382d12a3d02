#pragma once

#include <vector>

namespace brw {

// Solutions of psi'' = psi^2 + psi on (0, inf) with psi ~ 6/t^2 at 0 and psi -> 0 at infinity.
enum class PsiMethod { inversion, series, closed_candidate };

struct OdeEval {
  double t = 0;
  double psi = 0;
  PsiMethod method = PsiMethod::inversion;
  double error_estimate = 0;
};

// F(x) = int_x^inf (2 s^3 / 3 + s^2)^(-1/2) ds, so that psi = F^{-1}.
double F_primitive(double x, double* error_estimate = nullptr);

OdeEval psi(double t, PsiMethod method = PsiMethod::inversion);
inline double psi_value(double t, PsiMethod method = PsiMethod::inversion) { return psi(t, method).psi; }

// Checks run on the candidate 3 / (cosh t - 1) before it may be used.
struct ClosedFormCertificate {
  bool passed = false;
  double max_ode_residual = 0;      // analytic derivatives, relative to psi^2 + psi
  double max_fd_residual = 0;       // long-double finite differences, relative
  double small_t_limit_gap = 0;     // |t^2 psi(t) - 6| at t = 1e-3
  double decay_constant = 0;        // e^t psi(t) at t = 40
  double max_series_gap = 0;        // max |psi - series| / t^8 over small t
  double max_inversion_gap = 0;     // max |F(psi(t)) - t|
};

const ClosedFormCertificate& closed_form_certificate();

// Coefficients of psi(t) - 6/t^2 in powers t^0, t^2, t^4, ... recovered from the
// inversion route by a least-squares polynomial fit in t^2.
std::vector<double> recover_series_coefficients(int count);

// Reference small-t coefficients, for comparison.
std::vector<double> psi_series_coefficients();

double big_R(double alpha, double sigma2, double eta2);
double big_R_series(double alpha, double sigma2, double eta2);  // truncated at a^6
double laplace_limit_gt(double alpha, double sigma2);
double laplace_limit_map_volume(double alpha, double sigma2);
// Limit of the Laplace functional conditioned on {sup = r}, implied by the gt
// limit through l_eq = l_gt - alpha * d l_gt / d alpha.
double laplace_limit_eq_implied(double alpha, double sigma2);
double t_of(double r, double alpha, double sigma2, double eta2);

}  // namespace brw
