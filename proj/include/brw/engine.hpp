#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "brw/random.hpp"
#include "brw/scheme.hpp"

namespace brw {

struct SimCaps {
  std::uint64_t max_nodes = 1'000'000;
  std::int64_t max_depth = std::numeric_limits<std::int64_t>::max();
};

/// Early exit once sup Lambda exceeds `level` and the accumulated weight has
/// reached `min_weight`. Inactive by default.
struct StopRule {
  double level = std::numeric_limits<double>::infinity();
  double min_weight = 0;

  static StopRule none() { return {}; }
  static StopRule after_exceeding(double level, double min_weight = 0) { return {level, min_weight}; }
};

struct TreeStats {
  std::uint64_t progeny = 0;  // vertices created
  std::int64_t depth = 0;     // deepest generation created
  double max_displacement = 0;
  double max_decoration = 0;
  double total_weight = 0;    // sum of D over expanded vertices
  bool truncated = false;     // hit a cap
  bool stopped = false;       // left early by a StopRule
  bool decided_exceed = false;

  bool complete() const { return !truncated && !stopped; }
  // True/false when known, empty when the tree was cut before deciding.
  std::optional<bool> exceeds(double r) const {
    if (max_decoration > r) return true;
    if (complete()) return false;
    return std::nullopt;
  }
};

TreeStats simulate_tree(const SchemeSpec& spec, const SimCaps& caps, double query_r, RandomStream& rng);
TreeStats simulate_tree(const SchemeSampler& sampler, const SimCaps& caps, const StopRule& stop,
                        double query_r, RandomStream& rng);

struct TailEstimate {
  double r = 0;
  std::uint64_t n = 0;
  std::uint64_t hits = 0;       // decided sup Lambda > r
  std::uint64_t ambiguous = 0;  // cut before deciding
  double p_hat = 0;
  double ci_low = 0, ci_high = 0;
  double p_low_bound = 0, p_high_bound = 0;
  // sup Lambda == r, for lattice schemes
  std::uint64_t hits_eq = 0;
  std::uint64_t ambiguous_eq = 0;
  double p_eq = 0;
  double ci_eq_low = 0, ci_eq_high = 0;
  std::uint64_t truncated = 0;
};

struct TailOptions {
  bool stop_when_decided = true;  // stop a tree once it exceeds every queried level
};

std::vector<TailEstimate> estimate_tail(const SchemeSpec& spec, const std::vector<double>& r_list,
                                        std::uint64_t n, const SimCaps& caps, std::uint64_t seed,
                                        int workers = 1, const TailOptions& opts = {});

enum class Condition { gt, le, eq };
const char* to_string(Condition c);
Condition condition_from_string(const std::string& s);

struct LaplaceEstimate {
  Condition condition = Condition::gt;
  double r = 0;
  double alpha = 0;
  double t = 0;
  std::uint64_t n = 0;
  std::uint64_t n_conditioned = 0;
  std::uint64_t ambiguous = 0;
  // Conditioned trees cut at the node cap; each enters with exp(-t W) of its
  // partial weight, at most capped_term.
  std::uint64_t capped = 0;
  double capped_term = 0;
  double estimate = 0;
  double std_error = 0;
  double ci_low = 0, ci_high = 0;
  bool insufficient = false;  // fewer than two conditioned trees
};

struct LaplaceOptions {
  // A tree already past r stops once t * weight exceeds this; its term is below exp(-cutoff).
  double weight_cutoff = 50;
};

// t from the scheme moments and (r, alpha).
LaplaceEstimate estimate_conditional_laplace(const SchemeSpec& spec, double r, double alpha,
                                             Condition condition, std::uint64_t n, const SimCaps& caps,
                                             std::uint64_t seed, int workers = 1,
                                             const LaplaceOptions& opts = {});
// Same with an explicit tilt t.
LaplaceEstimate estimate_conditional_laplace_t(const SchemeSpec& spec, double r, double t,
                                               Condition condition, std::uint64_t n, const SimCaps& caps,
                                               std::uint64_t seed, int workers = 1,
                                               const LaplaceOptions& opts = {});

// Sorted positions of generation n_gen.
std::vector<double> generation_snapshot(const SchemeSpec& spec, int n_gen, RandomStream& rng,
                                        std::uint64_t max_nodes = 50'000'000);

}  // namespace brw
