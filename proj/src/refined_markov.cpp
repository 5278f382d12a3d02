#include "brw/refined_markov.hpp"

#include <algorithm>
#include <cmath>

#include "brw/error.hpp"

namespace brw {

double TailWeightFunction::level(int k) const {
  return 1.0 + std::ldexp(1.0, std::min(k, 1000) - 1);
}

double TailWeightFunction::operator()(double x) const {
  // Count breakpoints strictly below x; past the last one the levels keep
  // doubling on unit intervals so psi is unbounded.
  const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
  int k = static_cast<int>(it - breakpoints.begin());
  if (it == breakpoints.end() && !breakpoints.empty() && x > breakpoints.back())
    k += static_cast<int>(std::min(1000.0, std::ceil(x - breakpoints.back()) - 1));
  return level(k);
}

TailWeightFunction tail_weight_function(std::span<const double> sample, double p) {
  if (!(p >= 1)) throw ConfigError("tail_weight_function: p must be >= 1");
  if (sample.empty()) throw ConfigError("tail_weight_function: empty sample");
  std::vector<double> xs(sample.begin(), sample.end());
  for (double x : xs)
    if (!(x >= 0) || !std::isfinite(x)) throw ConfigError("tail_weight_function: sample must be finite and >= 0");
  std::sort(xs.begin(), xs.end());

  // Candidates for t: 0 and the distinct sample values. above[i] = E[X^p 1{X > cand[i]}].
  std::vector<double> cand{0.0};
  for (double x : xs)
    if (x > cand.back()) cand.push_back(x);
  std::vector<double> above(cand.size(), 0.0);
  const double n = static_cast<double>(xs.size());
  {
    double acc = 0;
    std::size_t j = xs.size();
    for (std::size_t i = cand.size(); i-- > 0;) {
      while (j > 0 && xs[j - 1] > cand[i]) acc += std::pow(xs[--j], p) / n;
      above[i] = acc;
    }
  }
  double total = 0;
  for (double x : xs) total += std::pow(x, p) / n;

  TailWeightFunction f;
  f.p = p;
  std::size_t i = 0;
  for (int k = 1; k < 1000; ++k) {
    const double bound = std::ldexp(total, -2 * k);
    while (above[i] > bound) ++i;
    f.breakpoints.push_back(cand[i]);
    if (i + 1 == cand.size()) break;
  }
  return f;
}

}  // namespace brw
