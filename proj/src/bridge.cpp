#include "brw/bridge.hpp"

#include <algorithm>
#include <cmath>

#include "brw/error.hpp"

namespace brw {

namespace {

void labels_from_steps(const std::vector<signed char>& steps, std::vector<int>& labels) {
  labels.clear();
  int b = -1;  // b_1
  for (signed char s : steps) {
    if (s < 0) labels.push_back(b);
    b += s;
  }
}

void shuffle_steps(int n, RandomStream& rng, std::vector<signed char>& steps) {
  steps.assign(static_cast<std::size_t>(2 * n + 1), -1);
  std::fill(steps.begin(), steps.begin() + n + 1, static_cast<signed char>(1));
  for (std::size_t i = steps.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(steps[i - 1], steps[j]);
  }
}

}  // namespace

void sample_bridge_labels(int n, RandomStream& rng, std::vector<int>& labels, std::vector<signed char>& steps) {
  if (n < 0) throw ConfigError("bridge: n must be >= 0");
  shuffle_steps(n, rng, steps);
  labels_from_steps(steps, labels);
}

Bridge sample_bridge(int n, RandomStream& rng) {
  Bridge br;
  br.n = n;
  std::vector<signed char> steps;
  sample_bridge_labels(n, rng, br.labels, steps);
  br.path = {0, -1};
  for (signed char s : steps) br.path.push_back(br.path.back() + s);
  return br;
}

std::vector<std::vector<int>> enumerate_bridge_labels(int n) {
  if (n < 0 || n > 12) throw ConfigError("enumerate_bridge_labels: n must be in 0..12");
  std::vector<std::vector<int>> out;
  std::vector<signed char> steps(static_cast<std::size_t>(2 * n + 1), 1);
  std::fill(steps.begin(), steps.begin() + n, static_cast<signed char>(-1));
  std::vector<int> labels;
  do {
    labels_from_steps(steps, labels);
    out.push_back(labels);
  } while (std::next_permutation(steps.begin(), steps.end()));
  return out;
}

BridgeLabelMoments bridge_label_moments(int n) {
  if (n < 0 || n > 500) throw ConfigError("bridge_label_moments: n must be in 0..500");
  const int L = 2 * n + 2;
  // Pascal triangle in long double.
  std::vector<std::vector<long double>> C(static_cast<std::size_t>(L + 1));
  for (int i = 0; i <= L; ++i) {
    C[i].assign(static_cast<std::size_t>(i + 1), 1.0L);
    for (int j = 1; j < i; ++j) C[i][j] = C[i - 1][j - 1] + C[i - 1][j];
  }
  auto paths = [&](int steps, int from, int to) -> long double {
    const int d = to - from;
    if (steps < 0 || std::abs(d) > steps || (steps + d) % 2) return 0.0L;
    return C[steps][(steps + d) / 2];
  };
  const long double total = paths(2 * n + 1, -1, 0);
  BridgeLabelMoments m;
  long double s1 = 0, s2 = 0;
  for (int k = 1; k <= 2 * n + 1; ++k) {
    for (int b = -(k); b <= k; ++b) {
      const long double cnt = paths(k - 1, -1, b) * paths(2 * n + 1 - k, b - 1, 0);
      if (cnt == 0) continue;
      s1 += cnt * b;
      s2 += cnt * static_cast<long double>(b) * b;
    }
  }
  m.sum = static_cast<double>(s1 / total);
  m.sum_sq = static_cast<double>(s2 / total);
  // E[max(0, max label)] by a DP over (position, running max label).
  if (n <= 60) {
    const int off = n + 2;
    const int W = 2 * off + 1;
    std::vector<long double> dp(static_cast<std::size_t>(W * W), 0.0L), nd(dp.size());
    auto at = [&](std::vector<long double>& v, int b, int mx) -> long double& {
      return v[static_cast<std::size_t>((b + off) * W + mx)];
    };
    at(dp, -1, 0) = 1.0L;
    for (int k = 1; k <= 2 * n + 1; ++k) {
      std::fill(nd.begin(), nd.end(), 0.0L);
      for (int b = -off; b <= off; ++b)
        for (int mx = 0; mx < W; ++mx) {
          const long double v = at(dp, b, mx);
          if (v == 0) continue;
          if (b + 1 <= off) at(nd, b + 1, mx) += v;
          if (b - 1 >= -off) at(nd, b - 1, std::max(mx, std::max(0, b))) += v;
        }
      std::swap(dp, nd);
    }
    long double acc = 0;
    for (int mx = 0; mx < W; ++mx) acc += mx * at(dp, 0, mx);
    m.max_label = static_cast<double>(acc / total);
  } else {
    m.max_label = std::nan("");
  }
  return m;
}

}  // namespace brw
