#pragma once

#include <vector>

#include "brw/random.hpp"

namespace brw {

// Walk b_0 = 0, b_1 = -1, ..., b_{2n+2} = 0 with +-1 steps, uniform among such walks.
struct Bridge {
  int n = 0;
  std::vector<int> path;    // b_0 .. b_{2n+2}
  std::vector<int> labels;  // b_k for the n indices k >= 1 with b_{k+1} = b_k - 1
};

Bridge sample_bridge(int n, RandomStream& rng);

// Labels only; reuses `steps` as scratch.
void sample_bridge_labels(int n, RandomStream& rng, std::vector<int>& labels, std::vector<signed char>& steps);

// Label lists of all C(2n+1, n) bridges, in lexicographic order of the step sequence.
std::vector<std::vector<int>> enumerate_bridge_labels(int n);

struct BridgeLabelMoments {
  double sum = 0;         // E[sum of labels]
  double sum_sq = 0;      // E[sum of squared labels]
  double max_label = 0;   // E[max(0, max label)]
};

// Exact expectations by counting lattice paths.
BridgeLabelMoments bridge_label_moments(int n);

}  // namespace brw
