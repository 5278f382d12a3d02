#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "brw/bridge.hpp"
#include "brw/engine.hpp"
#include "brw/multitype.hpp"

namespace brw {

// Boltzmann face weights q_k for faces of degree 2k.
using BoltzmannWeights = std::map<int, double>;

enum class Regime { subcritical, critical, not_admissible };
const char* to_string(Regime r);

// f_q(x) = 1 + sum_k q_k C(2k-1, k) x^k, or its derivative of the given order.
double boltzmann_f(const BoltzmannWeights& q, double x, int derivative = 0);

struct PartitionData {
  Regime regime = Regime::not_admissible;
  double Z = 0;       // smallest positive root of f_q(x) = x
  double f_prime = 0;
  double f_second = 0;
  double sigma2_map = 0;  // Z^2 f''(Z)
};

PartitionData solve_partition(const BoltzmannWeights& q);

// Law of the number of V-children of an F vertex.
std::vector<PmfEntry> mu_F_pmf(const BoltzmannWeights& q, double Z);
// P(N_V = k) for the number of F-children of a V vertex.
double mu_V(double Z, int k);

enum class CountSelector { vertices, faces, edges };
CountSelector selector_from_string(const std::string& s);

// Type 0 = V (vertices of the mobile), type 1 = F (faces).
MultitypeSpec mobile_spec(const BoltzmannWeights& q, CountSelector selector);
// Normalising constants c_V = 1, c_F = Z - 1, c_E = Z.
double count_constant(const PartitionData& pd, CountSelector selector);

struct MapDistanceRow {
  int r = 0;
  std::uint64_t hits_gt = 0, ambiguous = 0;
  double p_gt = 0, ci_gt_low = 0, ci_gt_high = 0;
  double p_gt_nondegenerate = 0;  // same, among maps other than the single vertex
  std::uint64_t hits_eq = 0;
  double p_eq = 0, ci_eq_low = 0, ci_eq_high = 0;
};

struct MapLaplaceValue {
  double t = 0;
  double estimate = 0;
  double ci_low = 0, ci_high = 0;
};

struct MapLaplacePoint {
  double alpha = 0;
  int r = 0;
  std::uint64_t n_conditioned = 0;
  std::uint64_t ambiguous = 0;
  std::uint64_t capped = 0;  // conditioned maps cut at the node cap
  double capped_term = 0;    // largest exp(-t_E N_E) among them
  MapLaplaceValue vertices, faces, edges;
  double predicted = 0;
};

struct MapQuery {
  std::vector<int> r_list;
  std::optional<int> laplace_r;  // condition on d > laplace_r
  double alpha = 2.0;
  double weight_cutoff = 50;
};

struct MapObservables {
  PartitionData partition;
  std::uint64_t n = 0;
  std::uint64_t n_degenerate = 0;  // single-vertex maps, distance 0
  std::uint64_t truncated = 0;
  std::vector<MapDistanceRow> rows;
  std::optional<MapLaplacePoint> laplace;
};

MapObservables estimate_map_observables(const BoltzmannWeights& q, const MapQuery& query, std::uint64_t n,
                                        std::uint64_t seed, const SimCaps& caps, int workers = 1);

}  // namespace brw
