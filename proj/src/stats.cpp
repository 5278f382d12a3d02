#include "brw/stats.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "brw/error.hpp"

namespace brw {

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval wilson_ci(std::uint64_t hits, std::uint64_t n, double level) {
  if (n == 0) throw ConfigError("wilson_ci: no trials");
  if (hits > n) throw ConfigError("wilson_ci: hits exceed trials");
  const double z = normal_quantile(0.5 + level / 2);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  // Exact endpoints at the boundary counts; rounding must not exclude p.
  const double low = hits == 0 ? 0.0 : std::min(p, center - half);
  const double high = hits == n ? 1.0 : std::max(p, center + half);
  return {std::max(0.0, low), std::min(1.0, high)};
}

SlopeFit loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw ConfigError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<std::pair<double, double>> lp;
  for (const auto& [x, y] : points) {
    if (!(x > 0 && y > 0)) throw ConfigError("loglog_slope: coordinates must be positive");
    lp.emplace_back(std::log(x), std::log(y));
  }
  const double n = static_cast<double>(lp.size());
  for (const auto& [x, y] : lp) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double sxx_c = sxx - sx * sx / n;
  SlopeFit f;
  f.slope = (sxy - sx * sy / n) / sxx_c;
  f.intercept = (sy - f.slope * sx) / n;
  if (lp.size() > 2) {
    double rss = 0;
    for (const auto& [x, y] : lp) {
      const double e = y - f.intercept - f.slope * x;
      rss += e * e;
    }
    f.std_error = std::sqrt(rss / (n - 2) / sxx_c);
  }
  return f;
}

double MeanAccumulator::variance() const {
  if (n < 2) return 0;
  const double nn = static_cast<double>(n);
  const double m = sum / nn;
  return std::max(0.0, (sumsq - nn * m * m) / (nn - 1));
}

double MeanAccumulator::std_error() const {
  return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

}  // namespace brw
