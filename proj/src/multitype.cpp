#include "brw/multitype.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brw/bridge.hpp"
#include "brw/detail/tree_walk.hpp"
#include "brw/error.hpp"
#include "brw/scheme_json.hpp"
#include "brw/stats.hpp"

namespace brw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_type(const MultitypeSpec& spec, int t, const char* what) {
  if (t < 0 || t >= spec.size()) {
    std::ostringstream os;
    os << what << ": type index " << t << " out of range";
    throw ConfigError(os.str());
  }
}

// Per-law summaries used by the matrix builders.
struct LawSummary {
  std::vector<double> count;   // E[# children of type z]
  std::vector<double> first;   // E[sum of displacements to type z]
  std::vector<double> second;  // E[sum of squared displacements to type z]
};

LawSummary summarise(const MultitypeSpec& spec, const TypeLaw& law) {
  const int k = spec.size();
  LawSummary s{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  std::visit(overloaded{
                 [&](const TabulatedTypeLaw& l) {
                   for (const auto& o : l.outcomes)
                     for (const auto& a : o.atoms) {
                       s.count[a.child_type] += o.prob;
                       s.first[a.child_type] += o.prob * a.displacement;
                       s.second[a.child_type] += o.prob * double(a.displacement) * a.displacement;
                     }
                 },
                 [&](const CompoundTypeLaw& l) { s.count[l.child_type] += l.count.mean(); },
                 [&](const BridgeTypeLaw& l) {
                   for (const auto& e : l.count.entries()) {
                     const int n = static_cast<int>(e.value);
                     const auto bm = bridge_label_moments(n);
                     s.count[l.child_type] += e.prob * n;
                     s.first[l.child_type] += e.prob * bm.sum;
                     s.second[l.child_type] += e.prob * bm.sum_sq;
                   }
                 },
             },
             law);
  return s;
}

// E[(sum_i e_{type_i})^2 - sum_i e_{type_i}^2] for one law.
double pair_moment(const TypeLaw& law, const Eigen::VectorXd& e) {
  return std::visit(overloaded{
                        [&](const TabulatedTypeLaw& l) {
                          double acc = 0;
                          for (const auto& o : l.outcomes) {
                            double s1 = 0, s2 = 0;
                            for (const auto& a : o.atoms) {
                              s1 += e[a.child_type];
                              s2 += e[a.child_type] * e[a.child_type];
                            }
                            acc += o.prob * (s1 * s1 - s2);
                          }
                          return acc;
                        },
                        [&](const CompoundTypeLaw& l) {
                          return l.count.factorial_moment2() * e[l.child_type] * e[l.child_type];
                        },
                        [&](const BridgeTypeLaw& l) {
                          const double f2 = l.count.moment(2) - l.count.mean();
                          return f2 * e[l.child_type] * e[l.child_type];
                        },
                    },
                    law);
}

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::MatrixXd X = lu.solve(B);
  const double scale = std::max(1.0, B.norm());
  if ((A * X - B).norm() > 1e-10 * scale) throw ConfigError("linear solve failed the residual check");
  return X;
}

}  // namespace

void validate(const MultitypeSpec& spec) {
  if (spec.laws.empty()) throw ConfigError("multitype: no types");
  if (spec.size() > kMaxTypes) throw ConfigError("multitype: more than 64 types");
  if (spec.names.size() != spec.laws.size()) throw ConfigError("multitype: names and laws differ in length");
  for (int y = 0; y < spec.size(); ++y) {
    std::visit(overloaded{
                   [&](const TabulatedTypeLaw& l) {
                     double total = 0;
                     for (const auto& o : l.outcomes) {
                       if (!(o.prob >= 0) || !(o.weight >= 0)) throw ConfigError("multitype: negative prob or weight");
                       int sup = 0;
                       for (const auto& a : o.atoms) {
                         check_type(spec, a.child_type, "multitype atom");
                         sup = std::max(sup, a.displacement);
                       }
                       if (o.lambda < sup) throw ConfigError("multitype: lambda below max(0, max atom)");
                       total += o.prob;
                     }
                     if (std::abs(total - 1.0) > 1e-12)
                       throw ConfigError("multitype: probabilities of type '" + spec.names[y] + "' do not sum to 1");
                   },
                   [&](const CompoundTypeLaw& l) {
                     check_type(spec, l.child_type, "compound law");
                     if (!(l.weight >= 0)) throw ConfigError("multitype: negative weight");
                   },
                   [&](const BridgeTypeLaw& l) {
                     check_type(spec, l.child_type, "bridge law");
                     if (l.count.empty()) throw ConfigError("multitype: bridge count pmf missing");
                     if (l.count.min_value() < 0 || !l.count.integer_valued())
                       throw ConfigError("multitype: bridge sizes must be nonnegative integers");
                     if (!(l.weight >= 0)) throw ConfigError("multitype: negative weight");
                   },
               },
               spec.laws[y]);
  }
}

int type_index(const MultitypeSpec& spec, const std::string& name) {
  for (std::size_t i = 0; i < spec.names.size(); ++i)
    if (spec.names[i] == name) return static_cast<int>(i);
  throw ConfigError("unknown type '" + name + "'");
}

nlohmann::json to_json(const MultitypeSpec& spec) {
  json types = json::array();
  for (int y = 0; y < spec.size(); ++y) {
    json t{{"name", spec.names[y]}};
    std::visit(overloaded{
                   [&](const TabulatedTypeLaw& l) {
                     t["law"] = "tabulated";
                     json outs = json::array();
                     for (const auto& o : l.outcomes) {
                       json atoms = json::array();
                       for (const auto& a : o.atoms)
                         atoms.push_back({{"displacement", a.displacement}, {"child_type", spec.names[a.child_type]}});
                       outs.push_back({{"prob", o.prob}, {"atoms", atoms}, {"lambda", o.lambda}, {"weight", o.weight}});
                     }
                     t["outcomes"] = outs;
                   },
                   [&](const CompoundTypeLaw& l) {
                     t["law"] = "compound";
                     t["count"] = to_json(l.count);
                     t["child_type"] = spec.names[l.child_type];
                     t["weight"] = l.weight;
                   },
                   [&](const BridgeTypeLaw& l) {
                     t["law"] = "bridge";
                     t["count"] = pmf_to_json(l.count.entries());
                     t["child_type"] = spec.names[l.child_type];
                     t["weight"] = l.weight;
                   },
               },
               spec.laws[y]);
    types.push_back(t);
  }
  return {{"types", types}};
}

MultitypeSpec multitype_from_json(const nlohmann::json& j) {
  try {
    MultitypeSpec spec;
    const auto& types = j.at("types");
    for (const auto& t : types) spec.names.push_back(t.at("name").get<std::string>());
    for (const auto& t : types) {
      const auto law = t.at("law").get<std::string>();
      if (law == "tabulated") {
        TabulatedTypeLaw l;
        for (const auto& o : t.at("outcomes")) {
          TypedOutcome out{o.at("prob").get<double>(), {}, o.at("lambda").get<int>(), o.value("weight", 1.0)};
          for (const auto& a : o.at("atoms"))
            out.atoms.push_back({a.at("displacement").get<int>(), type_index(spec, a.at("child_type").get<std::string>())});
          l.outcomes.push_back(std::move(out));
        }
        spec.laws.emplace_back(std::move(l));
      } else if (law == "compound") {
        spec.laws.emplace_back(CompoundTypeLaw{offspring_from_json(t.at("count")),
                                               type_index(spec, t.at("child_type").get<std::string>()),
                                               t.value("weight", 1.0)});
      } else if (law == "bridge") {
        spec.laws.emplace_back(BridgeTypeLaw{DiscretePmf(pmf_from_json(t.at("count")), "bridge count"),
                                             type_index(spec, t.at("child_type").get<std::string>()),
                                             t.value("weight", 1.0)});
      } else {
        throw ConfigError("unknown type law '" + law + "'");
      }
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("multitype spec: ") + e.what());
  }
}

MeanMatrices mean_matrices(const MultitypeSpec& spec, int base_type) {
  validate(spec);
  check_type(spec, base_type, "mean_matrices");
  const int k = spec.size();
  MeanMatrices mm;
  mm.base_type = base_type;
  mm.M = Eigen::MatrixXd::Zero(k, k);
  mm.N = Eigen::MatrixXd::Zero(k, k);
  mm.O = Eigen::MatrixXd::Zero(k, k);
  for (int y = 0; y < k; ++y) {
    const LawSummary s = summarise(spec, spec.laws[y]);
    for (int z = 0; z < k; ++z) {
      mm.M(y, z) = s.count[z];
      mm.N(y, z) = s.first[z];
      mm.O(y, z) = s.second[z];
    }
  }
  mm.M_tilde = mm.M;
  mm.M_tilde.row(base_type).setZero();
  return mm;
}

PerronData perron(const Eigen::MatrixXd& M) {
  const int k = static_cast<int>(M.rows());
  if (k == 0 || M.cols() != k) throw ConfigError("perron: matrix must be square and nonempty");
  if ((M.array() < 0).any()) throw ConfigError("perron: negative entry");
  // Reachability closure on the support graph.
  std::vector<std::vector<char>> reach(k, std::vector<char>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) reach[i][j] = M(i, j) > 0;
  for (int m = 0; m < k; ++m)
    for (int i = 0; i < k; ++i)
      if (reach[i][m])
        for (int j = 0; j < k; ++j)
          if (reach[m][j]) reach[i][j] = 1;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (!reach[i][j]) {
        std::ostringstream os;
        os << "mean matrix is reducible: type " << i << " cannot reach type " << j;
        throw ConfigError(os.str());
      }

  // Power iteration on I + M, whose Perron root is strictly dominant.
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k) + M;
  auto power = [&](const Eigen::MatrixXd& B, int& iters) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(k, 1.0 / k);
    double lambda = 0;
    for (iters = 0; iters < 10'000'000; ++iters) {
      Eigen::VectorXd w = B * v;
      const double nrm = w.sum();
      w /= nrm;
      const double change = (w - v).cwiseAbs().maxCoeff();
      v = w;
      lambda = nrm;
      if (change < 1e-15) break;
    }
    return std::make_pair(lambda, v);
  };
  PerronData pd;
  int it_r = 0, it_l = 0;
  auto [lam, b] = power(A, it_r);
  auto [lam_l, a] = power(A.transpose(), it_l);
  (void)lam_l;
  pd.rho = lam - 1.0;
  pd.iterations = std::max(it_r, it_l);
  a /= a.dot(b);
  pd.left = a;
  pd.right = b;
  return pd;
}

ReducedParams reduced_params(const MultitypeSpec& spec, int base_type) {
  const MeanMatrices mm = mean_matrices(spec, base_type);
  const int k = spec.size();
  const int x = base_type;
  const PerronData pd = perron(mm.M);
  if (std::abs(pd.rho - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(12);
    os << "reduced_params: Perron root is " << pd.rho << ", expected 1";
    throw PreconditionError(os.str());
  }
  ReducedParams rp;
  rp.base_type = x;
  rp.rho = pd.rho;
  const double bx = pd.right[x];
  rp.b = pd.right / bx;
  rp.a = pd.left * bx;

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd A = I - mm.M_tilde;
  Eigen::MatrixXd P = I;
  P(x, x) = 0;
  const Eigen::VectorXd unit_x = Eigen::VectorXd::Unit(k, x);
  const Eigen::VectorXd e = solve_checked(A, unit_x);
  rp.boundary_means = e;

  // Walking from a base-type root, children of non-base type contribute through
  // their own first-passage sets; base-type children stop immediately.
  const Eigen::MatrixXd Ainv_P = solve_checked(A, P);
  const Eigen::MatrixXd K = I + mm.M * Ainv_P;
  const Eigen::VectorXd Ne = mm.N * e;
  const Eigen::VectorXd e1 = Ainv_P * Ne;
  rp.drift = (K * Ne)(x);
  rp.eta2 = (K * (mm.O * e + 2.0 * mm.N * e1))(x);

  Eigen::VectorXd q(k);
  for (int y = 0; y < k; ++y) q[y] = pair_moment(spec.laws[y], e);
  rp.sigma2 = (K * q)(x);

  const Eigen::MatrixXd Ainv = solve_checked(A, I);
  const Eigen::MatrixXd K0 = mm.M * Ainv + I;
  rp.drift_unmasked = (K0 * mm.N * rp.b)(x);
  rp.eta2_unmasked = (K0 * (mm.O + mm.N * Ainv * mm.N) * rp.b)(x);
  return rp;
}

MultitypeSampler::MultitypeSampler(MultitypeSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  outcome_index_.resize(spec_.laws.size());
  for (std::size_t y = 0; y < spec_.laws.size(); ++y) {
    if (const auto* l = std::get_if<TabulatedTypeLaw>(&spec_.laws[y])) {
      std::vector<PmfEntry> idx;
      for (std::size_t i = 0; i < l->outcomes.size(); ++i) idx.push_back({double(i), l->outcomes[i].prob});
      outcome_index_[y] = DiscretePmf(std::move(idx), "type outcomes");
    }
  }
}

Expansion MultitypeSampler::expand(RandomStream& rng, const TypedNode& v, std::vector<TypedNode>& children) const {
  const TypeLaw& law = spec_.laws[static_cast<std::size_t>(v.type)];
  switch (law.index()) {
    case 0: {
      const auto& l = std::get<TabulatedTypeLaw>(law);
      const auto& o = l.outcomes[outcome_index_[static_cast<std::size_t>(v.type)].sample_index(rng)];
      for (const auto& a : o.atoms) children.push_back({v.pos + a.displacement, a.child_type});
      return {static_cast<double>(o.lambda), o.weight, static_cast<int>(o.atoms.size())};
    }
    case 1: {
      const auto& l = std::get<CompoundTypeLaw>(law);
      const int k = l.count.sample(rng);
      children.insert(children.end(), static_cast<std::size_t>(k), TypedNode{v.pos, l.child_type});
      return {0.0, l.weight, k};
    }
    default: {
      const auto& l = std::get<BridgeTypeLaw>(law);
      const int n = static_cast<int>(l.count.sample(rng));
      thread_local std::vector<int> labels;
      thread_local std::vector<signed char> steps;
      sample_bridge_labels(n, rng, labels, steps);
      int sup = 0;
      for (int b : labels) {
        sup = std::max(sup, b);
        children.push_back({v.pos + b, l.child_type});
      }
      return {static_cast<double>(sup), l.weight, n};
    }
  }
}

MultitypeTreeStats simulate_multitype_tree(const MultitypeSampler& sampler, int root_type, const SimCaps& caps,
                                           const StopRule& stop, RandomStream& rng) {
  check_type(sampler.spec(), root_type, "simulate_multitype_tree");
  MultitypeTreeStats out;
  out.type_counts.assign(static_cast<std::size_t>(sampler.spec().size()), 0);
  detail::TreeWorkspace<TypedNode> ws;
  out.stats = detail::walk_tree(sampler, TypedNode{0.0, root_type}, caps, stop, rng, ws,
                                [&](const TypedNode& v) { ++out.type_counts[static_cast<std::size_t>(v.type)]; });
  return out;
}

ReducedTree simulate_reduced(const MultitypeSpec& spec, int base_type, const SimCaps& caps, RandomStream& rng) {
  const MultitypeSampler sampler(spec);
  check_type(spec, base_type, "simulate_reduced");
  struct RNode {
    double pos;
    int type;
    std::uint32_t owner;
  };
  std::vector<double> red_pos{0.0}, red_dec{-INFINITY}, red_w{0.0};
  std::vector<std::int64_t> red_depth{0};
  std::vector<RNode> cur{{0.0, base_type, 0}}, next;
  std::vector<TypedNode> kids;
  ReducedTree rt;
  TreeStats& o = rt.original;
  o.progeny = 1;
  o.max_decoration = -INFINITY;
  std::int64_t gen = 0;
  while (!cur.empty() && !o.truncated) {
    if (gen >= caps.max_depth) {
      o.truncated = true;
      break;
    }
    next.clear();
    for (const RNode& v : cur) {
      kids.clear();
      const Expansion e = sampler.expand(rng, TypedNode{v.pos, v.type}, kids);
      o.total_weight += e.weight;
      o.max_decoration = std::max(o.max_decoration, v.pos + e.lambda);
      red_w[v.owner] += e.weight;
      red_dec[v.owner] = std::max(red_dec[v.owner], v.pos + e.lambda);
      if (e.count > 0) {
        o.progeny += static_cast<std::uint64_t>(e.count);
        o.depth = gen + 1;
      }
      for (const TypedNode& c : kids) {
        o.max_displacement = std::max(o.max_displacement, c.pos);
        if (c.type == base_type) {
          const auto id = static_cast<std::uint32_t>(red_pos.size());
          red_pos.push_back(c.pos);
          red_dec.push_back(-INFINITY);
          red_w.push_back(0.0);
          red_depth.push_back(red_depth[v.owner] + 1);
          next.push_back({c.pos, c.type, id});
        } else {
          next.push_back({c.pos, c.type, v.owner});
        }
      }
      if (o.progeny > caps.max_nodes) {
        o.truncated = true;
        break;
      }
    }
    std::swap(cur, next);
    ++gen;
  }
  TreeStats& r = rt.reduced;
  r.truncated = o.truncated;
  r.progeny = red_pos.size();
  r.max_decoration = -INFINITY;
  r.max_displacement = 0;
  for (std::size_t i = 0; i < red_pos.size(); ++i) {
    r.max_displacement = std::max(r.max_displacement, red_pos[i]);
    r.max_decoration = std::max(r.max_decoration, red_dec[i]);
    r.total_weight += red_w[i];
    r.depth = std::max(r.depth, red_depth[i]);
  }
  rt.sup_conserved = r.max_decoration == o.max_decoration;
  rt.weight_conserved = std::abs(r.total_weight - o.total_weight) <= 1e-12 * std::max(1.0, o.total_weight);
  return rt;
}

ReducedOffspring sample_reduced_offspring(const MultitypeSampler& sampler, int base_type, RandomStream& rng,
                                          std::uint64_t max_nodes) {
  ReducedOffspring out;
  std::vector<TypedNode> cur, next;
  sampler.expand(rng, TypedNode{0.0, base_type}, cur);
  std::uint64_t seen = 1 + cur.size();
  while (!cur.empty()) {
    next.clear();
    for (const TypedNode& v : cur) {
      if (v.type == base_type) {
        out.positions.push_back(v.pos);
        continue;
      }
      const std::size_t before = next.size();
      sampler.expand(rng, v, next);
      seen += next.size() - before;
      if (seen > max_nodes) {
        out.truncated = true;
        return out;
      }
    }
    std::swap(cur, next);
  }
  return out;
}

BoundaryMeanCheck boundary_mean_check(const MultitypeSpec& spec, int base_type, int from_type, std::uint64_t n,
                                      std::uint64_t seed) {
  const ReducedParams rp = reduced_params(spec, base_type);
  check_type(spec, from_type, "boundary_mean_check");
  const MultitypeSampler sampler(spec);
  BoundaryMeanCheck out;
  out.from_type = from_type;
  out.predicted = rp.boundary_means[from_type];
  out.n = n;
  MeanAccumulator acc;
  std::vector<TypedNode> cur, next;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (from_type == base_type) {
      acc.add(1.0);
      continue;
    }
    RandomStream rng = RandomStream::for_stream(seed, i);
    std::uint64_t hits = 0, seen = 1;
    cur.assign(1, TypedNode{0.0, from_type});
    while (!cur.empty()) {
      next.clear();
      for (const TypedNode& v : cur) {
        if (v.type == base_type) {
          ++hits;
          continue;
        }
        const std::size_t before = next.size();
        sampler.expand(rng, v, next);
        seen += next.size() - before;
      }
      if (seen > 100'000'000) throw PreconditionError("boundary_mean_check: tree too large");
      std::swap(cur, next);
    }
    acc.add(static_cast<double>(hits));
  }
  out.mean = acc.mean();
  out.std_error = acc.std_error();
  return out;
}

}  // namespace brw
