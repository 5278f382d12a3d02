#include "brw/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "brw/error.hpp"

namespace brw {

namespace {

constexpr double kProbTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

// ---------------------------------------------------------------- DiscretePmf

DiscretePmf::DiscretePmf(std::vector<PmfEntry> entries, const std::string& what) {
  if (entries.empty()) throw ConfigError(what + ": empty pmf");
  double total = 0;
  for (const auto& e : entries) {
    if (!(e.prob >= 0) || !std::isfinite(e.value))
      throw ConfigError(what + ": negative probability or non-finite value");
    total += e.prob;
  }
  if (std::abs(total - 1.0) > kProbTol) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": probabilities sum to " << total << ", not 1";
    throw ConfigError(os.str());
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const PmfEntry& a, const PmfEntry& b) { return a.value < b.value; });
  entries_ = std::move(entries);
  cdf_.reserve(entries_.size());
  double acc = 0;
  for (const auto& e : entries_) cdf_.push_back(acc += e.prob);
  total_ = acc;
}

double DiscretePmf::moment(int j) const {
  double s = 0;
  for (const auto& e : entries_) s += e.prob * std::pow(e.value, j);
  return s;
}

double DiscretePmf::expect_exp(double s) const {
  double acc = 0;
  for (const auto& e : entries_) acc += e.prob * std::exp(-s * e.value);
  return acc;
}

double DiscretePmf::min_value() const {
  for (const auto& e : entries_)
    if (e.prob > 0) return e.value;
  return 0;
}

double DiscretePmf::max_value() const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->prob > 0) return it->value;
  return 0;
}

bool DiscretePmf::integer_valued() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const PmfEntry& e) { return e.value == std::floor(e.value); });
}

// --------------------------------------------------------------- OffspringLaw

OffspringLaw OffspringLaw::binary_critical() {
  OffspringLaw law;
  law.kind_ = Kind::binary_critical;
  return law;
}

OffspringLaw OffspringLaw::geometric(double p) {
  if (!(p > 0 && p <= 1)) throw ConfigError("geometric offspring: p must lie in (0, 1]");
  OffspringLaw law;
  law.kind_ = Kind::geometric;
  law.param_ = p;
  return law;
}

OffspringLaw OffspringLaw::poisson(double mean) {
  if (!(mean > 0 && mean < 50)) throw ConfigError("poisson offspring: mean must lie in (0, 50)");
  OffspringLaw law;
  law.kind_ = Kind::poisson;
  law.param_ = mean;
  std::vector<PmfEntry> tab;
  double p = std::exp(-mean), acc = 0;
  for (int k = 0; acc < 1.0 - 1e-17 || p > 1e-300; ++k) {
    tab.push_back({static_cast<double>(k), p});
    acc += p;
    p *= mean / (k + 1);
    if (p < 1e-300 && k > mean) break;
  }
  // The truncated tail is below double resolution; renormalise the table.
  for (auto& e : tab) e.prob /= acc;
  law.pmf_ = DiscretePmf(std::move(tab), "poisson table");
  return law;
}

OffspringLaw OffspringLaw::from_pmf(std::vector<PmfEntry> pmf, std::optional<double> declared_mean) {
  for (const auto& e : pmf)
    if (e.value < 0 || e.value != std::floor(e.value))
      throw ConfigError("offspring pmf: counts must be nonnegative integers");
  OffspringLaw law;
  law.kind_ = Kind::pmf;
  law.pmf_ = DiscretePmf(std::move(pmf), "offspring pmf");
  law.declared_mean_ = declared_mean;
  if (declared_mean && std::abs(law.pmf_.mean() - *declared_mean) > 1e-12)
    throw ConfigError("offspring pmf: mean does not match the declared mean");
  return law;
}

double OffspringLaw::mean() const {
  switch (kind_) {
    case Kind::binary_critical: return 1.0;
    case Kind::geometric: return (1 - param_) / param_;
    case Kind::poisson: return param_;
    case Kind::pmf: return pmf_.mean();
  }
  return 0;
}

double OffspringLaw::factorial_moment2() const {
  switch (kind_) {
    case Kind::binary_critical: return 1.0;
    case Kind::geometric: {
      const double q = 1 - param_;
      return 2 * q * q / (param_ * param_);
    }
    case Kind::poisson: return param_ * param_;
    case Kind::pmf: return pmf_.moment(2) - pmf_.mean();
  }
  return 0;
}

int OffspringLaw::max_count() const {
  switch (kind_) {
    case Kind::binary_critical: return 2;
    case Kind::pmf: return static_cast<int>(pmf_.max_value());
    default: return -1;
  }
}

std::vector<double> OffspringLaw::table() const {
  std::vector<double> t;
  switch (kind_) {
    case Kind::binary_critical: return {0.5, 0.0, 0.5};
    case Kind::geometric: {
      const double q = 1 - param_;
      double p = param_;
      while (p > 1e-300 || t.empty()) {
        t.push_back(p);
        if (q == 0) break;
        p *= q;
      }
      return t;
    }
    case Kind::poisson:
    case Kind::pmf: {
      t.assign(static_cast<std::size_t>(pmf_.max_value()) + 1, 0.0);
      for (const auto& e : pmf_.entries()) t[static_cast<std::size_t>(e.value)] += e.prob;
      return t;
    }
  }
  return t;
}

double OffspringLaw::pgf(double s) const {
  switch (kind_) {
    case Kind::binary_critical: return 0.5 * (1 + s * s);
    case Kind::geometric: return param_ / (1 - (1 - param_) * s);
    case Kind::poisson: return std::exp(param_ * (s - 1));
    case Kind::pmf: {
      double acc = 0;
      for (const auto& e : pmf_.entries()) acc += e.prob * std::pow(s, e.value);
      return acc;
    }
  }
  return 0;
}

int OffspringLaw::sample_geometric(RandomStream& rng) const {
  std::geometric_distribution<int> g(param_);
  return g(rng);
}

// -------------------------------------------------------------------- StepLaw

StepLaw StepLaw::rademacher() { return StepLaw{}; }

StepLaw StepLaw::uniform_pm(int a) {
  if (a < 1) throw ConfigError("uniform_pm step: a must be >= 1");
  StepLaw s;
  s.kind_ = Kind::uniform_pm;
  s.a_ = a;
  return s;
}

StepLaw StepLaw::from_pmf(std::vector<PmfEntry> pmf) {
  StepLaw s;
  s.kind_ = Kind::pmf;
  s.pmf_ = DiscretePmf(std::move(pmf), "step pmf");
  return s;
}

StepLaw StepLaw::gaussian(double variance) {
  if (!(variance > 0)) throw ConfigError("gaussian step: variance must be positive");
  StepLaw s;
  s.kind_ = Kind::gaussian;
  s.var_ = variance;
  return s;
}

double StepLaw::mean() const {
  return kind_ == Kind::pmf ? pmf_.mean() : 0.0;
}

double StepLaw::second_moment() const {
  switch (kind_) {
    case Kind::rademacher: return 1.0;
    case Kind::uniform_pm: return a_ * (a_ + 1) / 3.0;
    case Kind::pmf: return pmf_.moment(2);
    case Kind::gaussian: return var_;
  }
  return 0;
}

bool StepLaw::is_lattice() const {
  if (kind_ == Kind::gaussian) return false;
  if (kind_ == Kind::pmf) return pmf_.integer_valued();
  return true;
}

double StepLaw::max_value() const {
  switch (kind_) {
    case Kind::rademacher: return 1;
    case Kind::uniform_pm: return a_;
    case Kind::pmf: return pmf_.max_value();
    case Kind::gaussian: return std::numeric_limits<double>::infinity();
  }
  return 0;
}

std::vector<std::pair<int, double>> StepLaw::lattice_table() const {
  switch (kind_) {
    case Kind::rademacher: return {{-1, 0.5}, {1, 0.5}};
    case Kind::uniform_pm: {
      std::vector<std::pair<int, double>> t;
      for (int x = -a_; x <= a_; ++x) t.emplace_back(x, 1.0 / (2 * a_ + 1));
      return t;
    }
    case Kind::pmf: {
      if (!pmf_.integer_valued()) break;
      std::vector<std::pair<int, double>> t;
      for (const auto& e : pmf_.entries())
        if (e.prob > 0) t.emplace_back(static_cast<int>(e.value), e.prob);
      return t;
    }
    case Kind::gaussian: break;
  }
  throw ConfigError("step law is not supported on the integer lattice");
}

double StepLaw::sample(RandomStream& rng) const {
  switch (kind_) {
    case Kind::rademacher: return rng.bit() ? 1.0 : -1.0;
    case Kind::uniform_pm:
      return static_cast<double>(static_cast<int>(rng.below(2 * a_ + 1)) - a_);
    case Kind::pmf: return pmf_.sample(rng);
    case Kind::gaussian: {
      std::normal_distribution<double> nd(0.0, std::sqrt(var_));
      return nd(rng);
    }
  }
  return 0;
}

// ------------------------------------------------------------- spec utilities

namespace {

void validate_modes(const LambdaMode& lm, const WeightMode& wm) {
  if (lm.kind == LambdaMode::Kind::sup_plus_noise) {
    if (lm.noise.empty()) throw ConfigError("sup_plus_noise: noise pmf missing");
    if (lm.noise.min_value() < 0) throw ConfigError("sup_plus_noise: noise must be nonnegative");
  }
  if (wm.kind == WeightMode::Kind::constant && !(wm.c >= 0))
    throw ConfigError("weight: constant must be nonnegative");
  if (wm.kind == WeightMode::Kind::custom) {
    if (wm.custom.empty()) throw ConfigError("weight: custom pmf missing");
    if (wm.custom.min_value() < 0) throw ConfigError("weight: custom pmf must be nonnegative");
  }
}

// Joint (count, weight) terms for the non-tabulated shapes.
std::vector<CountWeightTerm> product_terms(const OffspringLaw& off, const WeightMode& wm) {
  const auto tab = off.table();
  std::vector<CountWeightTerm> out;
  for (std::size_t k = 0; k < tab.size(); ++k) {
    if (tab[k] == 0) continue;
    const int kk = static_cast<int>(k);
    switch (wm.kind) {
      case WeightMode::Kind::constant: out.push_back({tab[k], kk, wm.c}); break;
      case WeightMode::Kind::per_child: out.push_back({tab[k], kk, static_cast<double>(kk)}); break;
      case WeightMode::Kind::custom:
        for (const auto& e : wm.custom.entries()) out.push_back({tab[k] * e.prob, kk, e.value});
        break;
    }
  }
  return out;
}

double mean_weight_of(const OffspringLaw& off, const WeightMode& wm) {
  switch (wm.kind) {
    case WeightMode::Kind::constant: return wm.c;
    case WeightMode::Kind::per_child: return off.mean();
    case WeightMode::Kind::custom: return wm.custom.mean();
  }
  return 0;
}

}  // namespace

void validate(const SchemeSpec& spec) {
  std::visit(overloaded{
                 [](const IidChildren& s) { validate_modes(s.lambda, s.weight); },
                 [](const SharedStep& s) { validate_modes(s.lambda, s.weight); },
                 [](const Tabulated& s) {
                   if (s.outcomes.empty()) throw ConfigError("tabulated scheme: no outcomes");
                   double total = 0;
                   for (const auto& o : s.outcomes) {
                     if (!(o.prob >= 0)) throw ConfigError("tabulated scheme: negative probability");
                     if (!(o.weight >= 0)) throw ConfigError("tabulated scheme: negative weight");
                     int sup = 0;
                     for (int x : o.atoms) sup = std::max(sup, x);
                     if (o.lambda < sup)
                       throw ConfigError("tabulated scheme: lambda below max(0, max atom)");
                     total += o.prob;
                   }
                   if (std::abs(total - 1.0) > kProbTol)
                     throw ConfigError("tabulated scheme: probabilities do not sum to 1");
                 },
             },
             spec.law);
}

bool is_tabulated(const SchemeSpec& spec) { return std::holds_alternative<Tabulated>(spec.law); }

bool is_lattice(const SchemeSpec& spec) {
  auto modes_lattice = [](const LambdaMode& lm) {
    return lm.kind == LambdaMode::Kind::sup_chi_pos || lm.noise.integer_valued();
  };
  return std::visit(overloaded{
                        [&](const IidChildren& s) { return s.step.is_lattice() && modes_lattice(s.lambda); },
                        [&](const SharedStep& s) { return s.step.is_lattice() && modes_lattice(s.lambda); },
                        [](const Tabulated&) { return true; },
                    },
                    spec.law);
}

SchemeMoments scheme_moments(const SchemeSpec& spec) {
  validate(spec);
  SchemeMoments mo;
  auto from_parts = [&](const OffspringLaw& off, const StepLaw& st, const WeightMode& wm) {
    mo.m = off.mean();
    mo.sigma2 = off.factorial_moment2();
    mo.drift = mo.m * st.mean();
    mo.eta2 = mo.m * st.second_moment();
    mo.mean_weight = mean_weight_of(off, wm);
  };
  std::visit(overloaded{
                 [&](const IidChildren& s) { from_parts(s.offspring, s.step, s.weight); },
                 [&](const SharedStep& s) { from_parts(s.offspring, s.step, s.weight); },
                 [&](const Tabulated& s) {
                   for (const auto& o : s.outcomes) {
                     const double k = static_cast<double>(o.atoms.size());
                     mo.m += o.prob * k;
                     mo.sigma2 += o.prob * k * (k - 1);
                     for (int x : o.atoms) {
                       mo.drift += o.prob * x;
                       mo.eta2 += o.prob * double(x) * x;
                     }
                     mo.mean_weight += o.prob * o.weight;
                   }
                 },
             },
             spec.law);
  return mo;
}

std::vector<CountWeightTerm> count_weight_law(const SchemeSpec& spec) {
  return std::visit(overloaded{
                        [](const IidChildren& s) { return product_terms(s.offspring, s.weight); },
                        [](const SharedStep& s) { return product_terms(s.offspring, s.weight); },
                        [](const Tabulated& s) {
                          std::vector<CountWeightTerm> out;
                          for (const auto& o : s.outcomes)
                            out.push_back({o.prob, static_cast<int>(o.atoms.size()), o.weight});
                          return out;
                        },
                    },
                    spec.law);
}

int max_offspring(const SchemeSpec& spec) {
  return std::visit(overloaded{
                        [](const IidChildren& s) { return s.offspring.max_count(); },
                        [](const SharedStep& s) { return s.offspring.max_count(); },
                        [](const Tabulated& s) {
                          int k = 0;
                          for (const auto& o : s.outcomes)
                            if (o.prob > 0) k = std::max(k, static_cast<int>(o.atoms.size()));
                          return k;
                        },
                    },
                    spec.law);
}

// -------------------------------------------------------------- SchemeSampler

SchemeSampler::SchemeSampler(SchemeSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  if (auto* s = std::get_if<IidChildren>(&spec_.law)) {
    shape_ = Shape::iid;
    offspring_ = s->offspring;
    step_ = s->step;
    lambda_ = s->lambda;
    weight_ = s->weight;
  } else if (auto* s2 = std::get_if<SharedStep>(&spec_.law)) {
    shape_ = Shape::shared;
    offspring_ = s2->offspring;
    step_ = s2->step;
    lambda_ = s2->lambda;
    weight_ = s2->weight;
  } else {
    shape_ = Shape::tabulated;
    outcomes_ = std::get<Tabulated>(spec_.law).outcomes;
    std::vector<PmfEntry> idx;
    for (std::size_t i = 0; i < outcomes_.size(); ++i)
      idx.push_back({static_cast<double>(i), outcomes_[i].prob});
    outcome_index_ = DiscretePmf(std::move(idx), "tabulated scheme");
  }
}

double SchemeSampler::sample_weight(RandomStream& rng, int k) const {
  switch (weight_.kind) {
    case WeightMode::Kind::constant: return weight_.c;
    case WeightMode::Kind::per_child: return k;
    case WeightMode::Kind::custom: return weight_.custom.sample(rng);
  }
  return 0;
}

double SchemeSampler::sample_lambda(double sup_atoms, RandomStream& rng) const {
  const double base = std::max(0.0, sup_atoms);
  if (lambda_.kind == LambdaMode::Kind::sup_chi_pos) return base;
  return base + lambda_.noise.sample(rng);
}

Expansion SchemeSampler::expand(RandomStream& rng, double parent, std::vector<double>& children) const {
  switch (shape_) {
    case Shape::iid: {
      const int k = offspring_.sample(rng);
      double sup = 0;
      for (int i = 0; i < k; ++i) {
        const double x = step_.sample(rng);
        sup = std::max(sup, x);
        children.push_back(parent + x);
      }
      const double lam = sample_lambda(sup, rng);
      return {lam, sample_weight(rng, k), k};
    }
    case Shape::shared: {
      const int k = offspring_.sample(rng);
      double sup = 0;
      if (k > 0) {
        const double x = step_.sample(rng);
        sup = std::max(0.0, x);
        children.insert(children.end(), static_cast<std::size_t>(k), parent + x);
      }
      const double lam = sample_lambda(sup, rng);
      return {lam, sample_weight(rng, k), k};
    }
    case Shape::tabulated: {
      const auto& o = outcomes_[outcome_index_.sample_index(rng)];
      for (int x : o.atoms) children.push_back(parent + x);
      return {static_cast<double>(o.lambda), o.weight, static_cast<int>(o.atoms.size())};
    }
  }
  return {0, 0, 0};
}

void SchemeSampler::draw(RandomStream& rng, ReproductionSample& out) const {
  out.atoms.clear();
  const Expansion e = expand(rng, 0.0, out.atoms);
  out.lambda = e.lambda;
  out.weight = e.weight;
}

ReproductionSample sample_scheme(const SchemeSpec& spec, RandomStream& rng) {
  SchemeSampler s(spec);
  ReproductionSample out;
  s.draw(rng, out);
  return out;
}

// -------------------------------------------------------------------- presets

namespace presets {

SchemeSpec binary_pm1() { return binary_pm1_tabulated(); }

SchemeSpec binary_pm1_tabulated() {
  Tabulated t;
  t.outcomes = {{0.5, {}, 0, 1.0}, {0.5, {-1, 1}, 1, 1.0}};
  return SchemeSpec{t};
}

SchemeSpec binary_iid_pm1() {
  return SchemeSpec{IidChildren{OffspringLaw::binary_critical(), StepLaw::rademacher(), {}, {}}};
}

SchemeSpec binary_iid_pm1_tabulated() {
  Tabulated t;
  t.outcomes = {
      {0.5, {}, 0, 1.0},
      {0.125, {-1, -1}, 0, 1.0},
      {0.25, {-1, 1}, 1, 1.0},
      {0.125, {1, 1}, 1, 1.0},
  };
  return SchemeSpec{t};
}

SchemeSpec geometric_uniform(int a) {
  return SchemeSpec{IidChildren{OffspringLaw::geometric_mean_one(), StepLaw::uniform_pm(a), {}, {}}};
}

SchemeSpec poisson_rademacher() {
  return SchemeSpec{IidChildren{OffspringLaw::poisson_mean_one(), StepLaw::rademacher(), {}, {}}};
}

}  // namespace presets

}  // namespace brw
