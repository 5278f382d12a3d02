#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace brw {

struct Interval {
  double low = 0;
  double high = 0;
  bool contains(double x) const { return low <= x && x <= high; }
};

double normal_quantile(double p);

// Wilson score interval for a binomial proportion.
Interval wilson_ci(std::uint64_t hits, std::uint64_t n, double level = 0.95);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double std_error = 0;
};

// Least-squares slope of log y against log x.
SlopeFit loglog_slope(const std::vector<std::pair<double, double>>& points);

struct MeanAccumulator {
  std::uint64_t n = 0;
  double sum = 0;
  double sumsq = 0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MeanAccumulator& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const;  // unbiased
  double std_error() const;
};

}  // namespace brw
