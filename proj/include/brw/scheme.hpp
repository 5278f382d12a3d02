#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "brw/random.hpp"

namespace brw {

struct PmfEntry {
  double value = 0;
  double prob = 0;
};

/// Finite discrete law with inverse-CDF sampling. Entries are kept in value order.
class DiscretePmf {
 public:
  DiscretePmf() = default;
  explicit DiscretePmf(std::vector<PmfEntry> entries, const std::string& what = "pmf");

  const std::vector<PmfEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  double moment(int j) const;
  double mean() const { return moment(1); }
  double expect_exp(double s) const;  // E[exp(-s V)]
  double min_value() const;
  double max_value() const;
  bool integer_valued() const;

  std::size_t sample_index(RandomStream& rng) const {
    const double u = rng.uniform() * total_;
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cdf_[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  }
  double sample(RandomStream& rng) const { return entries_[sample_index(rng)].value; }

 private:
  std::vector<PmfEntry> entries_;
  std::vector<double> cdf_;
  double total_ = 1;
};

class OffspringLaw {
 public:
  enum class Kind { binary_critical, geometric, poisson, pmf };

  static OffspringLaw binary_critical();
  static OffspringLaw geometric_mean_one() { return geometric(0.5); }
  static OffspringLaw geometric(double p);  // P(k) = p (1-p)^k
  static OffspringLaw poisson_mean_one() { return poisson(1.0); }
  static OffspringLaw poisson(double mean);
  static OffspringLaw from_pmf(std::vector<PmfEntry> pmf, std::optional<double> declared_mean = {});

  Kind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }
  const DiscretePmf& pmf() const noexcept { return pmf_; }
  std::optional<double> declared_mean() const noexcept { return declared_mean_; }

  double mean() const;
  double factorial_moment2() const;  // E[k(k-1)]
  int max_count() const;             // -1 when unbounded
  // P(k) for k = 0..K, truncated once the remaining mass is below 1e-300.
  std::vector<double> table() const;
  double pgf(double s) const;

  int sample(RandomStream& rng) const {
    switch (kind_) {
      case Kind::binary_critical: return rng.bit() ? 2 : 0;
      case Kind::geometric:
        if (param_ == 0.5) return rng.geometric_half();
        return sample_geometric(rng);
      default: return static_cast<int>(pmf_.sample(rng));
    }
  }

 private:
  int sample_geometric(RandomStream& rng) const;

  Kind kind_ = Kind::binary_critical;
  double param_ = 0;
  DiscretePmf pmf_;  // explicit pmf, or the truncated Poisson table
  std::optional<double> declared_mean_;
};

class StepLaw {
 public:
  enum class Kind { rademacher, uniform_pm, pmf, gaussian };

  static StepLaw rademacher();
  static StepLaw uniform_pm(int a);  // uniform on {-a, ..., a}
  static StepLaw from_pmf(std::vector<PmfEntry> pmf);
  static StepLaw gaussian(double variance);

  Kind kind() const noexcept { return kind_; }
  int half_width() const noexcept { return a_; }
  double variance_param() const noexcept { return var_; }
  const DiscretePmf& pmf() const noexcept { return pmf_; }

  double mean() const;
  double second_moment() const;
  bool is_lattice() const;
  double max_value() const;  // +inf for gaussian
  // Integer support with probabilities; only for lattice laws.
  std::vector<std::pair<int, double>> lattice_table() const;

  double sample(RandomStream& rng) const;

 private:
  Kind kind_ = Kind::rademacher;
  int a_ = 1;
  double var_ = 1;
  DiscretePmf pmf_;
};

struct LambdaMode {
  enum class Kind { sup_chi_pos, sup_plus_noise };
  Kind kind = Kind::sup_chi_pos;
  DiscretePmf noise;  // nonnegative, used with sup_plus_noise
};

struct WeightMode {
  enum class Kind { constant, per_child, custom };
  Kind kind = Kind::constant;
  double c = 1.0;
  DiscretePmf custom;  // drawn independently of the rest of the event
};

// Children displaced independently.
struct IidChildren {
  OffspringLaw offspring = OffspringLaw::binary_critical();
  StepLaw step = StepLaw::rademacher();
  LambdaMode lambda{};
  WeightMode weight{};
};

// All children share one displacement.
struct SharedStep {
  OffspringLaw offspring = OffspringLaw::binary_critical();
  StepLaw step = StepLaw::rademacher();
  LambdaMode lambda{};
  WeightMode weight{};
};

struct TabulatedOutcome {
  double prob = 0;
  std::vector<int> atoms;
  int lambda = 0;  // relative to the parent, >= max(0, max atom)
  double weight = 1;
};

struct Tabulated {
  std::vector<TabulatedOutcome> outcomes;
};

struct SchemeSpec {
  std::variant<IidChildren, SharedStep, Tabulated> law;
};

struct SchemeMoments {
  double m = 0;        // E[chi(R)]
  double sigma2 = 0;   // E[chi(R)(chi(R)-1)]
  double drift = 0;    // E[int t dchi]
  double eta2 = 0;     // E[int t^2 dchi]
  double mean_weight = 0;
};

// One term of the joint law of (offspring count, weight).
struct CountWeightTerm {
  double prob;
  int count;
  double weight;
};

void validate(const SchemeSpec& spec);
bool is_lattice(const SchemeSpec& spec);
bool is_tabulated(const SchemeSpec& spec);
SchemeMoments scheme_moments(const SchemeSpec& spec);
std::vector<CountWeightTerm> count_weight_law(const SchemeSpec& spec);
// Upper end of the offspring count support, -1 when unbounded.
int max_offspring(const SchemeSpec& spec);

struct ReproductionSample {
  std::vector<double> atoms;  // displacements relative to the parent
  double lambda = 0;          // relative decoration
  double weight = 0;
  int count() const { return static_cast<int>(atoms.size()); }
};

struct Expansion {
  double lambda;  // relative decoration
  double weight;
  int count;
};

/// Precomputed sampler for one scheme. Immutable after construction, so one
/// instance can be shared by all workers.
class SchemeSampler {
 public:
  explicit SchemeSampler(SchemeSpec spec);

  const SchemeSpec& spec() const noexcept { return spec_; }

  void draw(RandomStream& rng, ReproductionSample& out) const;

  // Appends the absolute child positions to `children`.
  Expansion expand(RandomStream& rng, double parent, std::vector<double>& children) const;

 private:
  enum class Shape { iid, shared, tabulated };
  double sample_weight(RandomStream& rng, int k) const;
  double sample_lambda(double sup_atoms, RandomStream& rng) const;

  SchemeSpec spec_;
  Shape shape_;
  OffspringLaw offspring_;
  StepLaw step_;
  LambdaMode lambda_;
  WeightMode weight_;
  std::vector<TabulatedOutcome> outcomes_;
  DiscretePmf outcome_index_;
};

ReproductionSample sample_scheme(const SchemeSpec& spec, RandomStream& rng);

namespace presets {
// No children or two children at -1 and +1, each with probability 1/2.
SchemeSpec binary_pm1();
SchemeSpec binary_pm1_tabulated();
// Critical binary offspring with independent +-1 steps, and its four-outcome table.
SchemeSpec binary_iid_pm1();
SchemeSpec binary_iid_pm1_tabulated();
SchemeSpec geometric_uniform(int a);
SchemeSpec poisson_rademacher();
}  // namespace presets

}  // namespace brw
