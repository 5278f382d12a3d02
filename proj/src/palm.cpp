#include "brw/palm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "brw/error.hpp"

namespace brw {

namespace {

void require_critical(const SchemeSpec& spec) {
  const double m = scheme_moments(spec).m;
  if (std::abs(m - 1.0) > 1e-12)
    throw PreconditionError("size-biased atom needs mean offspring 1");
}

const OffspringLaw* offspring_of(const SchemeSpec& spec) {
  if (auto* s = std::get_if<IidChildren>(&spec.law)) return &s->offspring;
  if (auto* s = std::get_if<SharedStep>(&spec.law)) return &s->offspring;
  return nullptr;
}

// Size-biased count k p_k / m for the unbounded laws.
int size_biased_count(const OffspringLaw& law, RandomStream& rng) {
  if (law.kind() == OffspringLaw::Kind::geometric) {
    std::geometric_distribution<int> g(law.param());
    return 1 + g(rng) + g(rng);
  }
  std::poisson_distribution<int> p(law.param());
  return 1 + p(rng);
}

}  // namespace

PalmSampler::PalmSampler(const SchemeSpec& spec, double max_decoration, double count_threshold)
    : sampler_(spec), max_decoration_(max_decoration), count_threshold_(count_threshold) {
  require_critical(spec);
  kmax_ = max_offspring(spec);
}

PalmDraw PalmSampler::draw(RandomStream& rng) {
  const SchemeSpec& spec = sampler_.spec();
  if (kmax_ >= 0) {
    for (;;) {
      sampler_.draw(rng, buf_);
      const int k = buf_.count();
      if (k == 0 || rng.uniform() * kmax_ >= k) continue;
      const double z = buf_.atoms[rng.below(static_cast<std::uint64_t>(k))];
      return {z, k <= count_threshold_ && buf_.lambda <= max_decoration_};
    }
  }
  // Unbounded count: draw the size-biased count directly, then the rest of the event given it.
  const OffspringLaw& law = *offspring_of(spec);
  const int k = size_biased_count(law, rng);
  const StepLaw& step = std::holds_alternative<IidChildren>(spec.law)
                            ? std::get<IidChildren>(spec.law).step
                            : std::get<SharedStep>(spec.law).step;
  const LambdaMode& lm = std::holds_alternative<IidChildren>(spec.law)
                             ? std::get<IidChildren>(spec.law).lambda
                             : std::get<SharedStep>(spec.law).lambda;
  buf_.atoms.clear();
  double sup = 0;
  if (std::holds_alternative<IidChildren>(spec.law)) {
    for (int i = 0; i < k; ++i) {
      buf_.atoms.push_back(step.sample(rng));
      sup = std::max(sup, buf_.atoms.back());
    }
  } else {
    const double x = step.sample(rng);
    buf_.atoms.assign(static_cast<std::size_t>(k), x);
    sup = std::max(0.0, x);
  }
  double lambda = sup;
  if (lm.kind == LambdaMode::Kind::sup_plus_noise) lambda += lm.noise.sample(rng);
  const double z = buf_.atoms[rng.below(static_cast<std::uint64_t>(k))];
  return {z, k <= count_threshold_ && lambda <= max_decoration_};
}

PalmDraw size_biased_atom(const SchemeSpec& spec, double max_decoration, double count_threshold,
                          RandomStream& rng) {
  PalmSampler s(spec, max_decoration, count_threshold);
  return s.draw(rng);
}

std::vector<PalmAtom> size_biased_law(const SchemeSpec& spec, double max_decoration,
                                      double count_threshold) {
  const auto* tab = std::get_if<Tabulated>(&spec.law);
  if (!tab) throw ConfigError("size_biased_law needs a tabulated scheme");
  require_critical(spec);
  std::map<std::pair<double, bool>, double> acc;
  for (const auto& o : tab->outcomes) {
    const bool good = static_cast<double>(o.atoms.size()) <= count_threshold && o.lambda <= max_decoration;
    for (int x : o.atoms) acc[{static_cast<double>(x), good}] += o.prob;
  }
  std::vector<PalmAtom> out;
  for (const auto& [key, p] : acc) out.push_back({key.first, key.second, p});
  return out;
}

}  // namespace brw
