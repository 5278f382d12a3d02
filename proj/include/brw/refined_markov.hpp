#pragma once

#include <span>
#include <vector>

namespace brw {

/// Increasing step function psi >= 1 with E[X^p psi(X)] <= 2 E[X^p] for the
/// empirical law it was built from. Level 1 + 2^(k-1) on (t_k, t_{k+1}].
struct TailWeightFunction {
  double p = 1;
  std::vector<double> breakpoints;  // t_1 <= t_2 <= ... ; t_0 = 0 implicit

  double level(int k) const;
  double operator()(double x) const;
};

TailWeightFunction tail_weight_function(std::span<const double> sample, double p);

}  // namespace brw
