#include "brw/tilt.hpp"

#include <cmath>

#include "brw/error.hpp"

namespace brw {

double phi_t(const SchemeSpec& spec, double t, double x) {
  double acc = 0;
  for (const auto& term : count_weight_law(spec))
    acc += term.prob * std::exp(-t * term.weight) * std::pow(x, term.count);
  return acc;
}

double phi_t_prime(const SchemeSpec& spec, double t, double x) {
  double acc = 0;
  for (const auto& term : count_weight_law(spec))
    if (term.count > 0) acc += term.prob * term.count * std::exp(-t * term.weight) * std::pow(x, term.count - 1);
  return acc;
}

TiltFixedPoint h_t_infinity(const SchemeSpec& spec, double t) {
  if (!(t >= 0)) throw ConfigError("h_t_infinity: t must be nonnegative");
  const auto terms = count_weight_law(spec);
  TiltFixedPoint fp;
  fp.t = t;
  // g(u) = Phi_t(1-u) - (1-u), each term as an expm1 so that small u keeps full precision.
  auto g = [&](double u) {
    double acc = u;
    const double lu = std::log1p(-u);
    for (const auto& term : terms) {
      const double ex = -t * term.weight + (term.count ? term.count * lu : 0.0);
      acc += term.prob * std::expm1(ex);
    }
    return acc;
  };
  if (g(0.0) >= 0) return fp;  // no killing: h = 1
  double lo = 0, hi = 1;
  for (int i = 0; i < 400 && hi - lo > 0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (g(mid) < 0 ? lo : hi) = mid;
    fp.iterations = i + 1;
  }
  fp.one_minus_h = 0.5 * (lo + hi);
  fp.h_inf = 1 - fp.one_minus_h;
  return fp;
}

SchemeSpec tilted_scheme(const SchemeSpec& spec, double t) {
  const auto* tab = std::get_if<Tabulated>(&spec.law);
  if (!tab) throw ConfigError("tilted_scheme needs a tabulated scheme");
  const double h = h_t_infinity(spec, t).h_inf;
  Tabulated out = *tab;
  double total = 0;
  for (auto& o : out.outcomes) {
    o.prob *= std::exp(-t * o.weight) * std::pow(h, static_cast<double>(o.atoms.size()) - 1.0);
    total += o.prob;
  }
  // At the fixed point the total is 1 up to rounding.
  for (auto& o : out.outcomes) o.prob /= total;
  return SchemeSpec{out};
}

}  // namespace brw
