#pragma once

#include "brw/scheme.hpp"

namespace brw {

// Phi_t(x) = E[exp(-t D) x^chi(R)].
double phi_t(const SchemeSpec& spec, double t, double x);
double phi_t_prime(const SchemeSpec& spec, double t, double x);

struct TiltFixedPoint {
  double t = 0;
  double h_inf = 1;        // root of Phi_t(x) = x in [0, 1]
  double one_minus_h = 0;  // computed without cancellation
  int iterations = 0;
};

TiltFixedPoint h_t_infinity(const SchemeSpec& spec, double t);

// Outcome law reweighted by exp(-t w) h^(k-1), h = h_t(inf). Tabulated schemes only.
SchemeSpec tilted_scheme(const SchemeSpec& spec, double t);

}  // namespace brw
