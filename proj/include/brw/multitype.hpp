#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "brw/engine.hpp"
#include "brw/random.hpp"
#include "brw/scheme.hpp"

namespace brw {

inline constexpr int kMaxTypes = 64;

struct TypedAtom {
  int displacement = 0;
  int child_type = 0;
};

struct TypedOutcome {
  double prob = 0;
  std::vector<TypedAtom> atoms;
  int lambda = 0;
  double weight = 1;
};

struct TabulatedTypeLaw {
  std::vector<TypedOutcome> outcomes;
};

// Children all at the parent's position, decoration 0.
struct CompoundTypeLaw {
  OffspringLaw count = OffspringLaw::geometric_mean_one();
  int child_type = 0;
  double weight = 1;
};

// n children displaced by the labels of a uniform bridge of size n; decoration max(0, max label).
struct BridgeTypeLaw {
  DiscretePmf count;
  int child_type = 0;
  double weight = 1;
};

using TypeLaw = std::variant<TabulatedTypeLaw, CompoundTypeLaw, BridgeTypeLaw>;

struct MultitypeSpec {
  std::vector<std::string> names;
  std::vector<TypeLaw> laws;
  int size() const { return static_cast<int>(laws.size()); }
};

void validate(const MultitypeSpec& spec);
int type_index(const MultitypeSpec& spec, const std::string& name);

nlohmann::json to_json(const MultitypeSpec& spec);
MultitypeSpec multitype_from_json(const nlohmann::json& j);

// Row = parent type, column = child type.
struct MeanMatrices {
  int base_type = 0;
  Eigen::MatrixXd M;        // expected counts
  Eigen::MatrixXd M_tilde;  // M with the base-type row zeroed
  Eigen::MatrixXd N;        // expected first moment of displacements
  Eigen::MatrixXd O;        // expected second moment of displacements
};

MeanMatrices mean_matrices(const MultitypeSpec& spec, int base_type = 0);

struct PerronData {
  double rho = 0;
  Eigen::VectorXd left;   // a, a^T M = rho a
  Eigen::VectorXd right;  // b, M b = rho b, normalised with a . b = 1
  int iterations = 0;
};

// Throws ConfigError naming an unreachable pair when M is reducible.
PerronData perron(const Eigen::MatrixXd& M);

struct ReducedParams {
  int base_type = 0;
  double rho = 0;
  Eigen::VectorXd a, b;            // b scaled so b[base] = 1
  Eigen::VectorXd boundary_means;  // expected base-type vertices first reached from each type
  double drift = 0;                // mean one-step displacement of the reduced walk
  double eta2 = 0;                 // second moment of the reduced offspring displacements
  double sigma2 = 0;               // E[k(k-1)] of the reduced offspring count
  // The same quantities by the shorter matrix expression that does not mask
  // the base-type row; they agree with drift and eta2 when the base type's
  // own children carry no displacement.
  double drift_unmasked = 0;
  double eta2_unmasked = 0;
};

// Requires rho = 1 within 1e-9.
ReducedParams reduced_params(const MultitypeSpec& spec, int base_type);

struct TypedNode {
  double pos = 0;
  int type = 0;
};

class MultitypeSampler {
 public:
  using Node = TypedNode;
  explicit MultitypeSampler(MultitypeSpec spec);
  const MultitypeSpec& spec() const noexcept { return spec_; }
  static double position(const TypedNode& v) { return v.pos; }
  Expansion expand(RandomStream& rng, const TypedNode& v, std::vector<TypedNode>& children) const;

 private:
  MultitypeSpec spec_;
  std::vector<DiscretePmf> outcome_index_;
};

struct MultitypeTreeStats {
  TreeStats stats;
  std::vector<std::uint64_t> type_counts;  // expanded vertices per type
};

MultitypeTreeStats simulate_multitype_tree(const MultitypeSampler& sampler, int root_type, const SimCaps& caps,
                                           const StopRule& stop, RandomStream& rng);

struct ReducedTree {
  TreeStats original;
  TreeStats reduced;
  bool weight_conserved = false;
  bool sup_conserved = false;
};

// Simulates from a base-type root and collapses each base-type vertex with its
// non-base descendants up to the next base-type generation.
ReducedTree simulate_reduced(const MultitypeSpec& spec, int base_type, const SimCaps& caps, RandomStream& rng);

struct ReducedOffspring {
  std::vector<double> positions;  // base-type vertices first reached from the root
  bool truncated = false;
};

ReducedOffspring sample_reduced_offspring(const MultitypeSampler& sampler, int base_type, RandomStream& rng,
                                          std::uint64_t max_nodes = 10'000'000);

struct BoundaryMeanCheck {
  int from_type = 0;
  double predicted = 0;
  double mean = 0;
  double std_error = 0;
  std::uint64_t n = 0;
};

BoundaryMeanCheck boundary_mean_check(const MultitypeSpec& spec, int base_type, int from_type,
                                      std::uint64_t n, std::uint64_t seed);

}  // namespace brw
