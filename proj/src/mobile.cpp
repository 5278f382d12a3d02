#include "brw/mobile.hpp"

#include <algorithm>
#include <cmath>

#include "brw/analysis.hpp"
#include "brw/detail/tree_walk.hpp"
#include "brw/error.hpp"
#include "brw/stats.hpp"

namespace brw {

namespace {

// C(2k-1, k) and C(2k+1, k+1) through lgamma; exact enough for the weights used.
double binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (n <= 60) {
    double c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  }
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

void check_weights(const BoltzmannWeights& q) {
  if (q.empty()) throw ConfigError("Boltzmann weights: empty");
  for (const auto& [k, w] : q) {
    if (k < 1) throw ConfigError("Boltzmann weights: face half-degree must be >= 1");
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("Boltzmann weights: weights must be finite and >= 0");
  }
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::not_admissible: return "not_admissible";
  }
  return "?";
}

double boltzmann_f(const BoltzmannWeights& q, double x, int derivative) {
  double acc = derivative == 0 ? 1.0 : 0.0;
  for (const auto& [k, w] : q) {
    if (k < derivative) continue;
    double falling = 1;
    for (int i = 0; i < derivative; ++i) falling *= (k - i);
    acc += w * binom(2 * k - 1, k) * falling * std::pow(x, k - derivative);
  }
  return acc;
}

PartitionData solve_partition(const BoltzmannWeights& q) {
  check_weights(q);
  PartitionData pd;
  auto g = [&](double x) { return boltzmann_f(q, x) - x; };
  auto fp = [&](double x) { return boltzmann_f(q, x, 1); };
  const bool nonlinear = std::any_of(q.begin(), q.end(), [](const auto& kv) { return kv.first >= 2 && kv.second > 0; });

  double xstar = INFINITY;  // where f' = 1
  if (fp(0.0) >= 1.0) return pd;
  if (nonlinear) {
    double hi = 1.0;
    while (fp(hi) < 1.0) hi *= 2;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 0; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (fp(mid) < 1.0 ? lo : hi) = mid;
    }
    xstar = 0.5 * (lo + hi);
    const double gmin = g(xstar);
    const double tol = 1e-12 * std::max(1.0, xstar);
    if (gmin > tol) return pd;
    if (gmin >= -tol) {
      pd.regime = Regime::critical;
      pd.Z = xstar;
    }
  }
  if (pd.regime != Regime::critical) {
    double lo = 0.0, hi = std::isfinite(xstar) ? xstar : 1.0;
    if (!std::isfinite(xstar))
      while (g(hi) > 0) hi *= 2;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (g(mid) > 0 ? lo : hi) = mid;
    }
    pd.Z = 0.5 * (lo + hi);
    pd.regime = Regime::subcritical;
  }
  pd.f_prime = fp(pd.Z);
  pd.f_second = boltzmann_f(q, pd.Z, 2);
  pd.sigma2_map = pd.Z * pd.Z * pd.f_second;
  return pd;
}

std::vector<PmfEntry> mu_F_pmf(const BoltzmannWeights& q, double Z) {
  check_weights(q);
  if (!(Z > 1)) throw ConfigError("mu_F: Z must exceed 1");
  std::vector<PmfEntry> out;
  double total = 0;
  for (const auto& [k1, w] : q) {
    const int k = k1 - 1;
    const double p = binom(2 * k + 1, k + 1) * w * std::pow(Z, k) / (1.0 - 1.0 / Z);
    if (p > 0) out.push_back({static_cast<double>(k), p});
    total += p;
  }
  // Sums to 1 at the root of f(Z) = Z; remove the rounding residue.
  for (auto& e : out) e.prob /= total;
  return out;
}

double mu_V(double Z, int k) {
  if (k < 0) return 0;
  return std::pow(1.0 - 1.0 / Z, k) / Z;
}

CountSelector selector_from_string(const std::string& s) {
  if (s == "vertices") return CountSelector::vertices;
  if (s == "faces") return CountSelector::faces;
  if (s == "edges") return CountSelector::edges;
  throw ConfigError("unknown count selector '" + s + "'");
}

MultitypeSpec mobile_spec(const BoltzmannWeights& q, CountSelector selector) {
  const PartitionData pd = solve_partition(q);
  if (pd.regime == Regime::not_admissible) throw ConfigError("Boltzmann weights are not admissible");
  const double dv = selector == CountSelector::faces ? 0.0 : 1.0;
  const double df = selector == CountSelector::vertices ? 0.0 : 1.0;
  MultitypeSpec spec;
  spec.names = {"V", "F"};
  spec.laws.emplace_back(CompoundTypeLaw{OffspringLaw::geometric(1.0 / pd.Z), 1, dv});
  spec.laws.emplace_back(BridgeTypeLaw{DiscretePmf(mu_F_pmf(q, pd.Z), "mu_F"), 0, df});
  return spec;
}

double count_constant(const PartitionData& pd, CountSelector selector) {
  switch (selector) {
    case CountSelector::vertices: return 1.0;
    case CountSelector::faces: return pd.Z - 1.0;
    case CountSelector::edges: return pd.Z;
  }
  return 1.0;
}

namespace {

struct MapAcc {
  std::vector<std::uint64_t> gt, amb, eq;
  std::uint64_t degenerate = 0, truncated = 0, lap_amb = 0, lap_capped = 0;
  double lap_capped_term = 0;
  MeanAccumulator lv, lf, le;
};

}  // namespace

MapObservables estimate_map_observables(const BoltzmannWeights& q, const MapQuery& query, std::uint64_t n,
                                        std::uint64_t seed, const SimCaps& caps, int workers) {
  if (n == 0) throw ConfigError("mobile: n must be positive");
  if (query.r_list.empty() && !query.laplace_r) throw ConfigError("mobile: nothing to estimate");
  MapObservables out;
  out.partition = solve_partition(q);
  if (out.partition.regime == Regime::not_admissible) throw ConfigError("Boltzmann weights are not admissible");
  const PartitionData& pd = out.partition;
  const MultitypeSampler sampler(mobile_spec(q, CountSelector::edges));

  // d = 1 + sup Lambda, so d > r iff sup Lambda > r - 1.
  int top = 0;
  for (int r : query.r_list) top = std::max(top, r);
  double tv = 0, tf = 0, te = 0;
  double min_weight = 0;
  if (query.laplace_r) {
    const double rl = *query.laplace_r;
    top = std::max(top, *query.laplace_r);
    tv = 2.0 * query.alpha * query.alpha / (pd.sigma2_map * rl * rl * rl * rl);
    tf = tv / count_constant(pd, CountSelector::faces);
    te = tv / count_constant(pd, CountSelector::edges);
    min_weight = query.weight_cutoff / te;
  }
  const StopRule stop = StopRule::after_exceeding(top - 1.0, min_weight);
  const std::size_t nr = query.r_list.size();

  auto blocks = detail::map_blocks<MapAcc>(n, workers, [&](std::uint64_t b, std::uint64_t e) {
    MapAcc acc;
    acc.gt.assign(nr, 0);
    acc.amb.assign(nr, 0);
    acc.eq.assign(nr, 0);
    detail::TreeWorkspace<TypedNode> ws;
    std::uint64_t cnt[2];
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng = RandomStream::for_stream(seed, i);
      cnt[0] = cnt[1] = 0;
      const TreeStats st = detail::walk_tree(sampler, TypedNode{0.0, 0}, caps, stop, rng, ws,
                                             [&](const TypedNode& v) { ++cnt[v.type]; });
      if (st.truncated) ++acc.truncated;
      const bool degenerate = st.complete() && st.progeny == 1;
      if (degenerate) ++acc.degenerate;
      // Distance threshold in terms of sup Lambda; the single-vertex map sits at distance 0.
      for (std::size_t j = 0; j < nr; ++j) {
        const double level = query.r_list[j] - 1.0;
        if (degenerate) {
          if (query.r_list[j] == 0) ++acc.eq[j];
          continue;
        }
        if (st.max_decoration > level) {
          ++acc.gt[j];
        } else if (!st.complete()) {
          ++acc.amb[j];
        } else if (st.max_decoration == level) {
          ++acc.eq[j];
        }
      }
      if (query.laplace_r && !degenerate) {
        const double level = *query.laplace_r - 1.0;
        if (st.truncated && st.max_decoration <= level) {
          ++acc.lap_amb;
        } else if (st.max_decoration > level) {
          // A capped tree enters with its partial counts, an upper bound on its term.
          if (st.truncated) {
            ++acc.lap_capped;
            acc.lap_capped_term = std::max(acc.lap_capped_term, std::exp(-te * double(cnt[0] + cnt[1])));
          }
          const double nv = static_cast<double>(cnt[0]), nf = static_cast<double>(cnt[1]);
          acc.lv.add(std::exp(-tv * nv));
          acc.lf.add(std::exp(-tf * nf));
          acc.le.add(std::exp(-te * (nv + nf)));
        }
      }
    }
    return acc;
  });

  out.n = n;
  MapAcc tot;
  tot.gt.assign(nr, 0);
  tot.amb.assign(nr, 0);
  tot.eq.assign(nr, 0);
  for (const auto& a : blocks) {
    for (std::size_t j = 0; j < nr; ++j) {
      tot.gt[j] += a.gt[j];
      tot.amb[j] += a.amb[j];
      tot.eq[j] += a.eq[j];
    }
    tot.degenerate += a.degenerate;
    tot.truncated += a.truncated;
    tot.lap_amb += a.lap_amb;
    tot.lap_capped += a.lap_capped;
    tot.lap_capped_term = std::max(tot.lap_capped_term, a.lap_capped_term);
    tot.lv.merge(a.lv);
    tot.lf.merge(a.lf);
    tot.le.merge(a.le);
  }
  out.n_degenerate = tot.degenerate;
  out.truncated = tot.truncated;
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < nr; ++j) {
    MapDistanceRow row;
    row.r = query.r_list[j];
    row.hits_gt = tot.gt[j];
    row.ambiguous = tot.amb[j];
    row.p_gt = tot.gt[j] / nn;
    const Interval ci = wilson_ci(tot.gt[j], n);
    row.ci_gt_low = ci.low;
    row.ci_gt_high = ci.high;
    row.p_gt_nondegenerate = n > tot.degenerate ? tot.gt[j] / double(n - tot.degenerate) : 0.0;
    row.hits_eq = tot.eq[j];
    row.p_eq = tot.eq[j] / nn;
    const Interval ce = wilson_ci(tot.eq[j], n);
    row.ci_eq_low = ce.low;
    row.ci_eq_high = ce.high;
    out.rows.push_back(row);
  }
  if (query.laplace_r) {
    MapLaplacePoint lp;
    lp.alpha = query.alpha;
    lp.r = *query.laplace_r;
    lp.n_conditioned = tot.lv.n;
    lp.ambiguous = tot.lap_amb;
    lp.capped = tot.lap_capped;
    lp.capped_term = tot.lap_capped_term;
    const double z = normal_quantile(0.975);
    auto fill = [&](MapLaplaceValue& v, double t, const MeanAccumulator& m) {
      v.t = t;
      v.estimate = m.n ? m.mean() : std::nan("");
      v.ci_low = v.estimate - z * m.std_error();
      v.ci_high = v.estimate + z * m.std_error();
    };
    fill(lp.vertices, tv, tot.lv);
    fill(lp.faces, tf, tot.lf);
    fill(lp.edges, te, tot.le);
    lp.predicted = laplace_limit_map_volume(query.alpha, pd.sigma2_map);
    out.laplace = lp;
  }
  return out;
}

}  // namespace brw
