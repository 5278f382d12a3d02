#include "brw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brw/analysis.hpp"
#include "brw/detail/tree_walk.hpp"
#include "brw/error.hpp"
#include "brw/stats.hpp"

namespace brw {

namespace {

struct MonoRep {
  using Node = double;
  const SchemeSampler& sampler;
  static double position(double x) { return x; }
  Expansion expand(RandomStream& rng, double x, std::vector<double>& out) const {
    return sampler.expand(rng, x, out);
  }
};

struct TailAcc {
  std::vector<std::uint64_t> hits, amb, hits_eq, amb_eq;
  std::uint64_t truncated = 0;
};

struct LaplaceAcc {
  MeanAccumulator m;
  std::uint64_t ambiguous = 0;
  std::uint64_t capped = 0;
  double capped_term = 0;
};

}  // namespace

TreeStats simulate_tree(const SchemeSampler& sampler, const SimCaps& caps, const StopRule& stop,
                        double query_r, RandomStream& rng) {
  detail::TreeWorkspace<double> ws;
  TreeStats st = detail::walk_tree(MonoRep{sampler}, 0.0, caps, stop, rng, ws);
  st.decided_exceed = st.max_decoration > query_r;
  return st;
}

TreeStats simulate_tree(const SchemeSpec& spec, const SimCaps& caps, double query_r, RandomStream& rng) {
  SchemeSampler sampler(spec);
  return simulate_tree(sampler, caps, StopRule::none(), query_r, rng);
}

std::vector<TailEstimate> estimate_tail(const SchemeSpec& spec, const std::vector<double>& r_list,
                                        std::uint64_t n, const SimCaps& caps, std::uint64_t seed,
                                        int workers, const TailOptions& opts) {
  if (r_list.empty()) throw ConfigError("estimate_tail: empty r list");
  if (n == 0) throw ConfigError("estimate_tail: n must be positive");
  const SchemeSampler sampler(spec);
  const std::size_t nr = r_list.size();
  const double top = *std::max_element(r_list.begin(), r_list.end());
  const StopRule stop = opts.stop_when_decided ? StopRule::after_exceeding(top) : StopRule::none();

  auto blocks = detail::map_blocks<TailAcc>(n, workers, [&](std::uint64_t b, std::uint64_t e) {
    TailAcc acc;
    acc.hits.assign(nr, 0);
    acc.amb.assign(nr, 0);
    acc.hits_eq.assign(nr, 0);
    acc.amb_eq.assign(nr, 0);
    detail::TreeWorkspace<double> ws;
    const MonoRep rep{sampler};
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng = RandomStream::for_stream(seed, i);
      const TreeStats st = detail::walk_tree(rep, 0.0, caps, stop, rng, ws);
      if (st.truncated) ++acc.truncated;
      for (std::size_t j = 0; j < nr; ++j) {
        const double r = r_list[j];
        if (st.max_decoration > r) {
          ++acc.hits[j];
        } else if (!st.complete()) {
          ++acc.amb[j];
          ++acc.amb_eq[j];
        } else if (st.max_decoration == r) {
          ++acc.hits_eq[j];
        }
      }
    }
    return acc;
  });

  std::vector<TailEstimate> out(nr);
  std::uint64_t truncated = 0;
  for (const auto& a : blocks) truncated += a.truncated;
  for (std::size_t j = 0; j < nr; ++j) {
    TailEstimate& t = out[j];
    t.r = r_list[j];
    t.n = n;
    for (const auto& a : blocks) {
      t.hits += a.hits[j];
      t.ambiguous += a.amb[j];
      t.hits_eq += a.hits_eq[j];
      t.ambiguous_eq += a.amb_eq[j];
    }
    const double nn = static_cast<double>(n);
    t.p_hat = t.hits / nn;
    t.p_low_bound = t.hits / nn;
    t.p_high_bound = (t.hits + t.ambiguous) / nn;
    const Interval ci = wilson_ci(t.hits, n);
    t.ci_low = ci.low;
    t.ci_high = ci.high;
    t.p_eq = t.hits_eq / nn;
    const Interval ce = wilson_ci(t.hits_eq, n);
    t.ci_eq_low = ce.low;
    t.ci_eq_high = ce.high;
    t.truncated = truncated;
  }
  return out;
}

const char* to_string(Condition c) {
  switch (c) {
    case Condition::gt: return "gt";
    case Condition::le: return "le";
    case Condition::eq: return "eq";
  }
  return "?";
}

Condition condition_from_string(const std::string& s) {
  if (s == "gt") return Condition::gt;
  if (s == "le") return Condition::le;
  if (s == "eq") return Condition::eq;
  throw ConfigError("unknown condition '" + s + "' (expected gt, le or eq)");
}

LaplaceEstimate estimate_conditional_laplace_t(const SchemeSpec& spec, double r, double t,
                                               Condition condition, std::uint64_t n, const SimCaps& caps,
                                               std::uint64_t seed, int workers, const LaplaceOptions& opts) {
  if (!(t >= 0)) throw ConfigError("laplace: t must be nonnegative");
  if (condition == Condition::eq && !is_lattice(spec))
    throw ConfigError("laplace: the eq condition needs a lattice scheme");
  const SchemeSampler sampler(spec);
  const double min_w = (condition == Condition::gt && t > 0) ? opts.weight_cutoff / t : 0.0;
  const StopRule stop = StopRule::after_exceeding(r, min_w);

  auto blocks = detail::map_blocks<LaplaceAcc>(n, workers, [&](std::uint64_t b, std::uint64_t e) {
    LaplaceAcc acc;
    detail::TreeWorkspace<double> ws;
    const MonoRep rep{sampler};
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng = RandomStream::for_stream(seed, i);
      const TreeStats st = detail::walk_tree(rep, 0.0, caps, stop, rng, ws);
      const double sup = st.max_decoration;
      if (st.truncated) {
        // Class unknown when not yet above r.
        if (sup <= r) {
          ++acc.ambiguous;
        } else if (condition == Condition::gt) {
          // Weight only known from below: the term is an upper bound.
          const double term = std::exp(-t * st.total_weight);
          acc.m.add(term);
          ++acc.capped;
          acc.capped_term = std::max(acc.capped_term, term);
        }
        continue;
      }
      bool in = false;
      switch (condition) {
        case Condition::gt: in = sup > r; break;
        case Condition::le: in = !st.stopped && sup <= r; break;
        case Condition::eq: in = !st.stopped && sup == r; break;
      }
      if (in) acc.m.add(std::exp(-t * st.total_weight));
    }
    return acc;
  });

  LaplaceEstimate out;
  out.condition = condition;
  out.r = r;
  out.t = t;
  out.n = n;
  MeanAccumulator all;
  for (const auto& a : blocks) {
    all.merge(a.m);
    out.ambiguous += a.ambiguous;
    out.capped += a.capped;
    out.capped_term = std::max(out.capped_term, a.capped_term);
  }
  out.n_conditioned = all.n;
  if (all.n < 2) {
    out.insufficient = true;
    out.estimate = all.n ? all.mean() : std::nan("");
    out.ci_low = 0;
    out.ci_high = 1;
    return out;
  }
  out.estimate = all.mean();
  out.std_error = all.std_error();
  const double z = normal_quantile(0.975);
  out.ci_low = out.estimate - z * out.std_error;
  out.ci_high = out.estimate + z * out.std_error;
  return out;
}

LaplaceEstimate estimate_conditional_laplace(const SchemeSpec& spec, double r, double alpha,
                                             Condition condition, std::uint64_t n, const SimCaps& caps,
                                             std::uint64_t seed, int workers, const LaplaceOptions& opts) {
  const SchemeMoments mo = scheme_moments(spec);
  const double t = t_of(r, alpha, mo.sigma2, mo.eta2);
  LaplaceEstimate e = estimate_conditional_laplace_t(spec, r, t, condition, n, caps, seed, workers, opts);
  e.alpha = alpha;
  return e;
}

std::vector<double> generation_snapshot(const SchemeSpec& spec, int n_gen, RandomStream& rng,
                                        std::uint64_t max_nodes) {
  if (n_gen < 0) throw ConfigError("generation_snapshot: negative generation");
  const SchemeSampler sampler(spec);
  std::vector<double> cur{0.0}, next;
  for (int g = 0; g < n_gen && !cur.empty(); ++g) {
    next.clear();
    for (double x : cur) {
      sampler.expand(rng, x, next);
      if (next.size() > max_nodes) throw PreconditionError("generation_snapshot: generation too large");
    }
    std::swap(cur, next);
  }
  std::sort(cur.begin(), cur.end());
  return cur;
}

}  // namespace brw
