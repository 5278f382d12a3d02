#include "brw/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "brw/analysis.hpp"
#include "brw/detail/tree_walk.hpp"
#include "brw/error.hpp"
#include "brw/grid.hpp"
#include "brw/scheme_json.hpp"
#include "brw/stats.hpp"

namespace brw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::tail, "tail"},
    {ExperimentKind::pdf, "pdf"},
    {ExperimentKind::laplace_gt, "laplace_gt"},
    {ExperimentKind::laplace_le, "laplace_le"},
    {ExperimentKind::laplace_eq, "laplace_eq"},
    {ExperimentKind::grid, "grid"},
    {ExperimentKind::multitype_reduce, "multitype_reduce"},
    {ExperimentKind::mobile, "mobile"},
    {ExperimentKind::ode_check, "ode_check"},
};

bool needs_scheme(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::tail:
    case ExperimentKind::pdf:
    case ExperimentKind::laplace_gt:
    case ExperimentKind::laplace_le:
    case ExperimentKind::laplace_eq:
    case ExperimentKind::grid: return true;
    default: return false;
  }
}

bool is_laplace(ExperimentKind k) {
  return k == ExperimentKind::laplace_gt || k == ExperimentKind::laplace_le || k == ExperimentKind::laplace_eq;
}

Condition condition_of(ExperimentKind k) {
  if (k == ExperimentKind::laplace_le) return Condition::le;
  if (k == ExperimentKind::laplace_eq) return Condition::eq;
  return Condition::gt;
}

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw ConfigError(field + ": " + msg);
}

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    field_error(key, e.what());
  }
}

SchemeSpec resolve_scheme(const nlohmann::json& j, const std::string& base_dir) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (auto p = scheme_preset(s)) return *p;
    std::filesystem::path path(s);
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    return load_scheme(path.string());
  }
  return scheme_from_json(j);
}

MultitypeSpec resolve_multitype(const nlohmann::json& j, const std::string& base_dir) {
  if (j.is_string()) {
    std::filesystem::path path(j.get<std::string>());
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    return multitype_from_json(read_json_file(path.string()));
  }
  return multitype_from_json(j);
}

BoltzmannWeights boltzmann_from_json(const nlohmann::json& j) {
  BoltzmannWeights q;
  if (!j.is_object()) field_error("boltzmann", "expected an object {half_degree: weight}");
  for (auto it = j.begin(); it != j.end(); ++it) {
    int k = 0;
    try {
      k = std::stoi(it.key());
    } catch (const std::exception&) {
      field_error("boltzmann", "key '" + it.key() + "' is not an integer");
    }
    if (k < 1) field_error("boltzmann", "half-degree keys must be >= 1");
    if (!it.value().is_number()) field_error("boltzmann", "weights must be numbers");
    q[k] = it.value().get<double>();
  }
  return q;
}

nlohmann::json boltzmann_to_json(const BoltzmannWeights& q) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : q) j[std::to_string(k)] = v;
  return j;
}

Tolerance tolerance_from_json(const nlohmann::json& j) {
  Tolerance t;
  if (!j.is_object()) field_error("tolerances", "each entry must be an object");
  if (!j.contains("table") || !j.contains("column")) field_error("tolerances", "entries need table and column");
  t.table = j.at("table").get<std::string>();
  t.column = j.at("column").get<std::string>();
  if (j.contains("low")) t.low = j.at("low").get<double>();
  if (j.contains("high")) t.high = j.at("high").get<double>();
  if (!(t.low <= t.high)) field_error("tolerances", "low must not exceed high for " + t.table + "." + t.column);
  if (j.contains("where")) {
    const auto& w = j.at("where");
    t.where_column = w.at("column").get<std::string>();
    t.where_value = w.at("value").get<double>();
  }
  return t;
}

nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

nlohmann::json tolerance_to_json(const Tolerance& t) {
  nlohmann::json j = {{"table", t.table}, {"column", t.column}, {"low", bound_to_json(t.low)},
                      {"high", bound_to_json(t.high)}};
  if (!t.where_column.empty()) j["where"] = {{"column", t.where_column}, {"value", t.where_value}};
  return j;
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  if (v == std::floor(v) && std::fabs(v) < 9.007199254740992e15)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json cell_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double u64(std::uint64_t x) { return static_cast<double>(x); }

int default_r_max(const std::vector<double>& r_list) {
  double top = 0;
  for (double r : r_list) top = std::max(top, r);
  return std::max(600, static_cast<int>(std::ceil(4 * top)));
}

// ---- kinds ----

void run_tail(const ExperimentConfig& cfg, Report& rep) {
  const SchemeMoments mo = scheme_moments(*cfg.scheme);
  const double c1 = 6 * mo.eta2 / mo.sigma2;
  const auto est = estimate_tail(*cfg.scheme, cfg.r_list, cfg.n, cfg.caps, *cfg.seed, cfg.workers);
  Table t{"tail",
          {"r", "n", "hits", "ambiguous", "p_hat", "ci_low", "ci_high", "p_low_bound", "p_high_bound", "scaled",
           "scaled_ci_low", "scaled_ci_high", "truncated"},
          {}};
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : est) {
    const double s = e.r * e.r / c1;
    t.rows.push_back({e.r, u64(e.n), u64(e.hits), u64(e.ambiguous), e.p_hat, e.ci_low, e.ci_high, e.p_low_bound,
                      e.p_high_bound, s * e.p_hat, s * e.ci_low, s * e.ci_high, u64(e.truncated)});
    if (e.r > 0 && e.p_hat > 0) pts.emplace_back(e.r, e.p_hat);
  }
  rep.tables.push_back(std::move(t));
  rep.summary["limit_constant"] = c1;
  if (pts.size() >= 3) {
    const SlopeFit f = loglog_slope(pts);
    rep.summary["loglog_slope"] = f.slope;
    rep.summary["loglog_slope_se"] = f.std_error;
  }
}

void run_pdf(const ExperimentConfig& cfg, Report& rep) {
  if (!is_lattice(*cfg.scheme)) field_error("scheme", "kind pdf needs a lattice scheme");
  const SchemeMoments mo = scheme_moments(*cfg.scheme);
  const double c3 = 12 * mo.eta2 / mo.sigma2;
  const auto est = estimate_tail(*cfg.scheme, cfg.r_list, cfg.n, cfg.caps, *cfg.seed, cfg.workers);
  Table t{"pdf",
          {"r", "n", "hits", "ambiguous", "p_eq", "ci_low", "ci_high", "scaled", "scaled_ci_low", "scaled_ci_high",
           "truncated"},
          {}};
  for (const auto& e : est) {
    const double s = e.r * e.r * e.r / c3;
    t.rows.push_back({e.r, u64(e.n), u64(e.hits_eq), u64(e.ambiguous_eq), e.p_eq, e.ci_eq_low, e.ci_eq_high,
                      s * e.p_eq, s * e.ci_eq_low, s * e.ci_eq_high, u64(e.truncated)});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["limit_constant"] = c3;
}

void run_laplace(const ExperimentConfig& cfg, Report& rep) {
  const Condition cond = condition_of(cfg.kind);
  const SchemeMoments mo = scheme_moments(*cfg.scheme);
  const double alpha = *cfg.alpha;
  double limit = 1.0;
  double implied = kNaN;
  if (cond != Condition::le) limit = laplace_limit_gt(alpha, mo.sigma2);
  if (cond == Condition::eq) implied = laplace_limit_eq_implied(alpha, mo.sigma2);
  LaplaceOptions opts;
  opts.weight_cutoff = cfg.weight_cutoff;
  Table t{"laplace",
          {"r", "alpha", "t", "n", "n_conditioned", "ambiguous", "capped", "estimate", "std_error", "ci_low",
           "ci_high", "limit", "ratio", "limit_implied"},
          {}};
  for (std::size_t i = 0; i < cfg.r_list.size(); ++i) {
    const double r = cfg.r_list[i];
    const LaplaceEstimate e =
        estimate_conditional_laplace(*cfg.scheme, r, alpha, cond, cfg.n, cfg.caps, *cfg.seed + i, cfg.workers, opts);
    t.rows.push_back({r, alpha, e.t, u64(e.n), u64(e.n_conditioned), u64(e.ambiguous), u64(e.capped), e.estimate,
                      e.std_error, e.ci_low, e.ci_high, limit, e.estimate / limit, implied});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["condition"] = to_string(cond);
}

void run_grid(const ExperimentConfig& cfg, Report& rep) {
  const SchemeSpec& spec = *cfg.scheme;
  const SchemeMoments mo = scheme_moments(spec);
  const double c1 = 6 * mo.eta2 / mo.sigma2;
  const double c3 = 12 * mo.eta2 / mo.sigma2;
  const int r_max = cfg.r_max > 0 ? cfg.r_max : default_r_max(cfg.r_list);
  GridOptions go;
  go.workers = cfg.workers;
  const GridSolution sol = solve_h_grid(spec, r_max, 0.0, go);

  std::vector<std::string> cols = {"r", "h", "tail", "w", "scaled_w", "g", "scaled_g"};
  if (cfg.alpha)
    for (const char* c : {"t", "h_t", "h_t_inf", "cond_gt", "cond_eq", "scaled_gap", "predicted_gt",
                          "predicted_gap", "ratio_gt", "ratio_gap"})
      cols.emplace_back(c);
  Table t{"grid", cols, {}};
  std::vector<std::pair<double, double>> pts;
  for (double rd : cfg.r_list) {
    const int r = static_cast<int>(std::lround(rd));
    if (r < 1 || r > r_max) field_error("r_list", "grid radii must lie in 1..r_max");
    const double h = sol.at(r);
    const double g = h - sol.at(r - 1);
    std::vector<double> row = {rd, h, 1 - h, sol.w(r), rd * rd * sol.w(r) / c1, g, rd * rd * rd * g / c3};
    if (cfg.alpha) {
      const LaplaceFunctionals f = laplace_functionals(spec, r, *cfg.alpha, r_max, go);
      row.insert(row.end(), {f.t, f.h_t_r, f.h_t_inf, f.cond_gt, f.cond_eq, f.scaled_gap, f.predicted_gt,
                             f.predicted_gap, f.cond_gt / f.predicted_gt, f.scaled_gap / f.predicted_gap});
    }
    t.rows.push_back(std::move(row));
    pts.emplace_back(rd, 1 - h);
  }
  rep.tables.push_back(std::move(t));
  rep.summary["r_max"] = r_max;
  rep.summary["iterations"] = sol.iterations;
  rep.summary["residual"] = sol.residual;
  rep.summary["boundary_bias"] = sol.boundary_bias;
  rep.summary["converged"] = sol.converged;
  rep.summary["tail_constant"] = c1;
  rep.summary["pdf_constant"] = c3;
  if (pts.size() >= 3) {
    const SlopeFit f = loglog_slope(pts);
    rep.summary["loglog_slope"] = f.slope;
    rep.summary["loglog_slope_se"] = f.std_error;
  }
}

struct ReduceAcc {
  MeanAccumulator eta2, drift, count;
  std::uint64_t truncated = 0;
};

struct ConserveAcc {
  std::uint64_t weight_ok = 0, sup_ok = 0, truncated = 0;
};

void run_reduce(const ExperimentConfig& cfg, Report& rep) {
  const MultitypeSpec spec =
      cfg.multitype ? *cfg.multitype : mobile_spec(cfg.boltzmann, CountSelector::vertices);
  const int base = cfg.base_type.empty() ? 0 : type_index(spec, cfg.base_type);
  const ReducedParams rp = reduced_params(spec, base);
  const MultitypeSampler sampler(spec);

  auto blocks = detail::map_blocks<ReduceAcc>(cfg.n, cfg.workers, [&](std::uint64_t b, std::uint64_t e) {
    ReduceAcc acc;
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng = RandomStream::for_stream(*cfg.seed, i);
      const ReducedOffspring off = sample_reduced_offspring(sampler, base, rng, cfg.caps.max_nodes);
      if (off.truncated) {
        ++acc.truncated;
        continue;
      }
      double s1 = 0, s2 = 0;
      for (double x : off.positions) {
        s1 += x;
        s2 += x * x;
      }
      acc.eta2.add(s2);
      acc.drift.add(s1);
      acc.count.add(static_cast<double>(off.positions.size()));
    }
    return acc;
  });
  ReduceAcc tot;
  for (const auto& a : blocks) {
    tot.eta2.merge(a.eta2);
    tot.drift.merge(a.drift);
    tot.count.merge(a.count);
    tot.truncated += a.truncated;
  }

  // Conservation runs on a disjoint index range of the same master seed.
  const std::uint64_t offset = cfg.n;
  auto cblocks = detail::map_blocks<ConserveAcc>(cfg.n_trees, cfg.workers, [&](std::uint64_t b, std::uint64_t e) {
    ConserveAcc acc;
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng = RandomStream::for_stream(*cfg.seed, offset + i);
      const ReducedTree rt = simulate_reduced(spec, base, cfg.caps, rng);
      if (rt.original.truncated) {
        ++acc.truncated;
        continue;
      }
      acc.weight_ok += rt.weight_conserved;
      acc.sup_ok += rt.sup_conserved;
    }
    return acc;
  });
  ConserveAcc ctot;
  for (const auto& a : cblocks) {
    ctot.weight_ok += a.weight_ok;
    ctot.sup_ok += a.sup_ok;
    ctot.truncated += a.truncated;
  }
  const double complete = u64(cfg.n_trees - ctot.truncated);

  Table t{"reduced",
          {"base_type", "rho", "drift", "eta2", "sigma2", "drift_unmasked", "eta2_unmasked", "n", "eta2_mc",
           "eta2_mc_se", "eta2_z", "drift_mc", "drift_mc_se", "mean_count_mc", "mean_count_se", "truncated",
           "trees", "weight_conserved_frac", "sup_conserved_frac", "trees_truncated"},
          {}};
  const double z = tot.eta2.std_error() > 0 ? (tot.eta2.mean() - rp.eta2) / tot.eta2.std_error() : kNaN;
  t.rows.push_back({double(base), rp.rho, rp.drift, rp.eta2, rp.sigma2, rp.drift_unmasked, rp.eta2_unmasked,
                    u64(tot.eta2.n), tot.eta2.mean(), tot.eta2.std_error(), z, tot.drift.mean(),
                    tot.drift.std_error(), tot.count.mean(), tot.count.std_error(), u64(tot.truncated),
                    u64(cfg.n_trees), complete > 0 ? ctot.weight_ok / complete : kNaN,
                    complete > 0 ? ctot.sup_ok / complete : kNaN, u64(ctot.truncated)});
  rep.tables.push_back(std::move(t));
  nlohmann::json b = nlohmann::json::array();
  for (int i = 0; i < rp.b.size(); ++i) b.push_back(rp.b(i));
  rep.summary["perron_right"] = b;
  rep.summary["base_type_name"] = spec.names.at(static_cast<std::size_t>(base));
}

void run_mobile(const ExperimentConfig& cfg, Report& rep) {
  MapQuery q;
  for (double r : cfg.r_list) q.r_list.push_back(static_cast<int>(std::lround(r)));
  q.laplace_r = cfg.laplace_r;
  q.alpha = cfg.alpha.value_or(2.0);
  q.weight_cutoff = cfg.weight_cutoff;
  const MapObservables mo = estimate_map_observables(cfg.boltzmann, q, cfg.n, *cfg.seed, cfg.caps, cfg.workers);
  const ReducedParams rp = reduced_params(mobile_spec(cfg.boltzmann, CountSelector::vertices), 0);
  const double c1 = 6 * rp.eta2 / rp.sigma2;
  const double c3 = 12 * rp.eta2 / rp.sigma2;

  Table d{"distance",
          {"r", "n", "hits_gt", "ambiguous", "p_gt", "ci_low", "ci_high", "scaled_gt", "scaled_gt_ci_low",
           "scaled_gt_ci_high", "p_gt_nondegenerate", "hits_eq", "p_eq", "ci_eq_low", "ci_eq_high", "scaled_eq",
           "scaled_eq_ci_low", "scaled_eq_ci_high"},
          {}};
  for (const auto& row : mo.rows) {
    const double r = row.r;
    const double s1 = r * r / c1, s3 = r * r * r / c3;
    d.rows.push_back({r, u64(mo.n), u64(row.hits_gt), u64(row.ambiguous), row.p_gt, row.ci_gt_low, row.ci_gt_high,
                      s1 * row.p_gt, s1 * row.ci_gt_low, s1 * row.ci_gt_high, row.p_gt_nondegenerate,
                      u64(row.hits_eq), row.p_eq, row.ci_eq_low, row.ci_eq_high, s3 * row.p_eq,
                      s3 * row.ci_eq_low, s3 * row.ci_eq_high});
  }
  if (!d.rows.empty()) rep.tables.push_back(std::move(d));

  if (mo.laplace) {
    const MapLaplacePoint& lp = *mo.laplace;
    const double hw_v = 0.5 * (lp.vertices.ci_high - lp.vertices.ci_low);
    const double hw_e = 0.5 * (lp.edges.ci_high - lp.edges.ci_low);
    Table l{"laplace",
            {"r", "alpha", "n_conditioned", "ambiguous", "capped", "capped_term", "t_V", "laplace_V", "ci_V_low",
             "ci_V_high", "t_F", "laplace_F", "ci_F_low", "ci_F_high", "t_E", "laplace_E", "ci_E_low", "ci_E_high",
             "predicted", "ratio_V", "gap_VE", "halfwidth_VE"},
            {}};
    l.rows.push_back({double(lp.r), lp.alpha, u64(lp.n_conditioned), u64(lp.ambiguous), u64(lp.capped),
                      lp.capped_term, lp.vertices.t, lp.vertices.estimate, lp.vertices.ci_low, lp.vertices.ci_high,
                      lp.faces.t, lp.faces.estimate, lp.faces.ci_low, lp.faces.ci_high, lp.edges.t,
                      lp.edges.estimate, lp.edges.ci_low, lp.edges.ci_high, lp.predicted,
                      lp.vertices.estimate / lp.predicted, std::fabs(lp.vertices.estimate - lp.edges.estimate),
                      std::max(hw_v, hw_e)});
    rep.tables.push_back(std::move(l));
  }
  rep.summary["Z"] = mo.partition.Z;
  rep.summary["regime"] = to_string(mo.partition.regime);
  rep.summary["sigma2_map"] = mo.partition.sigma2_map;
  rep.summary["reduced_eta2"] = rp.eta2;
  rep.summary["reduced_sigma2"] = rp.sigma2;
  rep.summary["n_degenerate"] = mo.n_degenerate;
  rep.summary["truncated"] = mo.truncated;
  rep.summary["truncated_fraction"] = u64(mo.truncated) / u64(mo.n);
}

// Second difference of the inversion route against psi^2 + psi, relative to 1 + psi^2.
double fd_residual(double t) {
  const double h = 1e-4;
  const double pm = psi_value(t - h), p0 = psi_value(t), pp = psi_value(t + h);
  const double second = (pp - 2 * p0 + pm) / (h * h);
  return std::fabs(second - p0 * p0 - p0) / (1 + p0 * p0);
}

void run_ode(const ExperimentConfig&, Report& rep) {
  const ClosedFormCertificate& cert = closed_form_certificate();
  Table c{"certificate",
          {"passed", "max_ode_residual", "max_fd_residual", "small_t_limit_gap", "decay_constant", "max_series_gap",
           "max_inversion_gap"},
          {}};
  c.rows.push_back({cert.passed ? 1.0 : 0.0, cert.max_ode_residual, cert.max_fd_residual, cert.small_t_limit_gap,
                    cert.decay_constant, cert.max_series_gap, cert.max_inversion_gap});
  rep.tables.push_back(std::move(c));

  Table p{"psi", {"t", "inversion", "closed", "series", "gap_closed", "gap_series", "fd_residual"}, {}};
  std::vector<double> ts = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  for (double t = 0.4; t <= 5.0 + 1e-12; t += 0.2) ts.push_back(t);
  for (double t : {6.0, 8.0, 10.0, 15.0, 20.0}) ts.push_back(t);
  for (double t : ts) {
    const double inv = psi_value(t, PsiMethod::inversion);
    const double cl = psi_value(t, PsiMethod::closed_candidate);
    const double se = t <= 0.3 + 1e-12 ? psi_value(t, PsiMethod::series) : kNaN;
    const double fd = (t >= 0.2 - 1e-12 && t <= 5.0 + 1e-12) ? fd_residual(t) : kNaN;
    p.rows.push_back({t, inv, cl, se, std::fabs(inv - cl), std::isnan(se) ? kNaN : std::fabs(inv - se), fd});
  }
  rep.tables.push_back(std::move(p));

  const std::vector<double> ref = psi_series_coefficients();
  const std::vector<double> got = recover_series_coefficients(static_cast<int>(ref.size()));
  Table k{"coefficients", {"power", "recovered", "reference", "rel_err"}, {}};
  for (std::size_t i = 0; i < ref.size(); ++i)
    k.rows.push_back({2.0 * static_cast<double>(i), got[i], ref[i], std::fabs(got[i] / ref[i] - 1)});
  rep.tables.push_back(std::move(k));
  rep.summary["psi_sqrt12"] = psi_value(std::sqrt(12.0));
}

}  // namespace

const char* to_string(ExperimentKind k) {
  for (const auto& kn : kKinds)
    if (kn.kind == k) return kn.name;
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (const auto& kn : kKinds)
    if (s == kn.name) return kn.kind;
  std::string all;
  for (const auto& kn : kKinds) all += std::string(all.empty() ? "" : ", ") + kn.name;
  field_error("kind", "unknown kind '" + s + "' (expected one of " + all + ")");
}

std::optional<SchemeSpec> scheme_preset(const std::string& name) {
  if (name == "binary_pm1") return presets::binary_pm1();
  if (name == "binary_pm1_tabulated") return presets::binary_pm1_tabulated();
  if (name == "binary_iid_pm1") return presets::binary_iid_pm1();
  if (name == "binary_iid_pm1_tabulated") return presets::binary_iid_pm1_tabulated();
  if (name == "poisson_rademacher") return presets::poisson_rademacher();
  if (name.rfind("geometric_uniform", 0) == 0) {
    const std::string rest = name.substr(std::string("geometric_uniform").size());
    if (rest.empty()) return presets::geometric_uniform(1);
    if (rest.front() == '_') return presets::geometric_uniform(std::stoi(rest.substr(1)));
  }
  return std::nullopt;
}

void validate(const ExperimentConfig& cfg) {
  const ExperimentKind k = cfg.kind;
  const std::string kn = to_string(k);
  const bool stochastic = k != ExperimentKind::grid && k != ExperimentKind::ode_check;
  if (stochastic && !cfg.seed) field_error("seed", "required for kind " + kn + " (no ambient randomness)");
  if (cfg.workers < 1) field_error("workers", "must be >= 1");
  if (cfg.caps.max_nodes < 1) field_error("caps.max_nodes", "must be >= 1");
  if (needs_scheme(k) && !cfg.scheme) field_error("scheme", "required for kind " + kn);
  if (stochastic && cfg.n == 0) field_error("n", "must be >= 1 for kind " + kn);
  const bool wants_r = k == ExperimentKind::tail || k == ExperimentKind::pdf || is_laplace(k) ||
                       k == ExperimentKind::grid;
  if (wants_r && cfg.r_list.empty()) field_error("r_list", "required for kind " + kn);
  for (double r : cfg.r_list)
    if (!(r >= 0) || !std::isfinite(r)) field_error("r_list", "radii must be finite and nonnegative");
  if (is_laplace(k) && !cfg.alpha) field_error("alpha", "required for kind " + kn);
  if (cfg.alpha && !(*cfg.alpha >= 0)) field_error("alpha", "must be nonnegative");
  if (k == ExperimentKind::mobile) {
    if (cfg.boltzmann.empty()) field_error("boltzmann", "required for kind mobile");
    if (cfg.r_list.empty() && !cfg.laplace_r) field_error("r_list", "mobile needs r_list or laplace_r");
  }
  if (k == ExperimentKind::multitype_reduce) {
    if (!cfg.multitype && cfg.boltzmann.empty())
      field_error("multitype", "kind multitype_reduce needs a multitype spec or boltzmann weights");
    if (cfg.n_trees == 0) field_error("n_trees", "must be >= 1");
  }
  if (cfg.r_max < 0) field_error("r_max", "must be nonnegative");
  if (!(cfg.weight_cutoff > 0)) field_error("weight_cutoff", "must be positive");
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const char* known[] = {"kind",  "name",    "scheme",   "multitype", "base_type",     "boltzmann",
                                "r_list", "alpha",  "n",        "n_trees",   "r_max",         "seed",
                                "workers", "caps",  "laplace_r", "weight_cutoff", "tolerances", "output"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known))
      field_error(it.key(), "unknown field");

  ExperimentConfig c;
  if (!j.contains("kind")) field_error("kind", "required");
  c.kind = experiment_kind_from_string(get_field<std::string>(j, "kind"));
  c.name = j.contains("name") ? get_field<std::string>(j, "name") : std::string(to_string(c.kind));
  if (j.contains("scheme")) {
    try {
      c.scheme = resolve_scheme(j.at("scheme"), base_dir);
    } catch (const ConfigError& e) {
      field_error("scheme", e.what());
    }
  }
  if (j.contains("multitype")) {
    try {
      c.multitype = resolve_multitype(j.at("multitype"), base_dir);
    } catch (const ConfigError& e) {
      field_error("multitype", e.what());
    }
  }
  if (j.contains("base_type")) c.base_type = get_field<std::string>(j, "base_type");
  if (j.contains("boltzmann")) c.boltzmann = boltzmann_from_json(j.at("boltzmann"));
  if (j.contains("r_list")) {
    const auto& r = j.at("r_list");
    c.r_list = r.is_array() ? get_field<std::vector<double>>(j, "r_list") : std::vector<double>{get_field<double>(j, "r_list")};
  }
  if (j.contains("alpha")) c.alpha = get_field<double>(j, "alpha");
  if (j.contains("n")) c.n = get_field<std::uint64_t>(j, "n");
  if (j.contains("n_trees")) c.n_trees = get_field<std::uint64_t>(j, "n_trees");
  if (j.contains("r_max")) c.r_max = get_field<int>(j, "r_max");
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("workers")) c.workers = get_field<int>(j, "workers");
  if (j.contains("caps")) {
    const auto& cj = j.at("caps");
    if (cj.contains("max_nodes")) c.caps.max_nodes = get_field<std::uint64_t>(cj, "max_nodes");
    if (cj.contains("max_depth")) c.caps.max_depth = get_field<std::int64_t>(cj, "max_depth");
  }
  if (j.contains("laplace_r")) c.laplace_r = get_field<int>(j, "laplace_r");
  if (j.contains("weight_cutoff")) c.weight_cutoff = get_field<double>(j, "weight_cutoff");
  if (j.contains("tolerances")) {
    if (!j.at("tolerances").is_array()) field_error("tolerances", "expected an array");
    for (const auto& t : j.at("tolerances")) c.tolerances.push_back(tolerance_from_json(t));
  }
  if (j.contains("output") && j.at("output").contains("dir")) {
    c.out_dir = get_field<std::string>(j.at("output"), "dir");
  } else if (const char* env = std::getenv("BRWLAB_OUT_DIR")) {
    c.out_dir = env;
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return config_from_json(j, dir.empty() ? "." : dir);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["name"] = c.name;
  if (c.scheme) j["scheme"] = to_json(*c.scheme);
  if (c.multitype) j["multitype"] = to_json(*c.multitype);
  if (!c.base_type.empty()) j["base_type"] = c.base_type;
  if (!c.boltzmann.empty()) j["boltzmann"] = boltzmann_to_json(c.boltzmann);
  j["r_list"] = c.r_list;
  if (c.alpha) j["alpha"] = *c.alpha;
  j["n"] = c.n;
  if (c.kind == ExperimentKind::multitype_reduce) j["n_trees"] = c.n_trees;
  if (c.r_max > 0) j["r_max"] = c.r_max;
  if (c.seed) j["seed"] = *c.seed;
  j["caps"] = {{"max_nodes", c.caps.max_nodes}, {"max_depth", c.caps.max_depth}};
  if (c.laplace_r) j["laplace_r"] = *c.laplace_r;
  j["weight_cutoff"] = c.weight_cutoff;
  nlohmann::json tol = nlohmann::json::array();
  for (const auto& t : c.tolerances) tol.push_back(tolerance_to_json(t));
  j["tolerances"] = tol;
  return j;
}

std::size_t Table::column_index(const std::string& c) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == c) return i;
  throw ConfigError("table " + name + " has no column '" + c + "'");
}

bool Table::has_column(const std::string& c) const {
  return std::find(columns.begin(), columns.end(), c) != columns.end();
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Table& Report::table(const std::string& n) const {
  for (const auto& t : tables)
    if (t.name == n) return t;
  throw ConfigError("report " + name + " has no table '" + n + "'");
}

std::vector<Tolerance> default_tolerances(ExperimentKind kind) {
  if (kind != ExperimentKind::ode_check) return {};
  const double inf = std::numeric_limits<double>::infinity();
  return {
      {"certificate", "passed", 1, 1, "", 0},
      {"psi", "gap_closed", 0, 1e-8, "", 0},
      {"psi", "gap_series", 0, 1e-8, "", 0},
      {"psi", "fd_residual", 0, 1e-4, "", 0},
      {"coefficients", "rel_err", 0, 1e-4, "", 0},
      {"certificate", "max_inversion_gap", -inf, 1e-12, "", 0},
  };
}

void apply_tolerances(Report& rep) {
  rep.checks.clear();
  for (auto& table : rep.tables) {
    std::vector<int> verdict(table.rows.size(), -1);
    for (const auto& tol : rep.tolerances) {
      if (tol.table != table.name) continue;
      if (!table.has_column(tol.column)) field_error("tolerances", "table " + tol.table + " has no column " + tol.column);
      const std::size_t ci = table.column_index(tol.column);
      std::size_t wi = 0;
      if (!tol.where_column.empty()) wi = table.column_index(tol.where_column);
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (!tol.where_column.empty() && table.rows[r][wi] != tol.where_value) continue;
        const double v = table.rows[r][ci];
        if (std::isnan(v) && tol.table == "psi") continue;  // cells outside a method's range stay empty
        Check c{table.name, tol.column, r, v, tol.low, tol.high, tol.low <= v && v <= tol.high};
        verdict[r] = (verdict[r] == 0 || !c.passed) ? 0 : 1;
        rep.checks.push_back(c);
      }
    }
    if (std::any_of(verdict.begin(), verdict.end(), [](int v) { return v >= 0; })) {
      if (!table.has_column("pass")) {
        table.columns.emplace_back("pass");
        for (auto& row : table.rows) row.push_back(kNaN);
      }
      const std::size_t pi = table.column_index("pass");
      for (std::size_t r = 0; r < table.rows.size(); ++r) table.rows[r][pi] = verdict[r] < 0 ? kNaN : verdict[r];
    }
  }
}

Report run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  Report rep;
  rep.name = cfg.name;
  rep.kind = cfg.kind;
  rep.config = to_json(cfg);
  rep.summary = nlohmann::json::object();
  rep.workers = cfg.workers;
  if (cfg.scheme) {
    const SchemeMoments mo = scheme_moments(*cfg.scheme);
    rep.summary["moments"] = {{"m", mo.m}, {"sigma2", mo.sigma2}, {"drift", mo.drift}, {"eta2", mo.eta2},
                              {"mean_weight", mo.mean_weight}};
  }
  switch (cfg.kind) {
    case ExperimentKind::tail: run_tail(cfg, rep); break;
    case ExperimentKind::pdf: run_pdf(cfg, rep); break;
    case ExperimentKind::laplace_gt:
    case ExperimentKind::laplace_le:
    case ExperimentKind::laplace_eq: run_laplace(cfg, rep); break;
    case ExperimentKind::grid: run_grid(cfg, rep); break;
    case ExperimentKind::multitype_reduce: run_reduce(cfg, rep); break;
    case ExperimentKind::mobile: run_mobile(cfg, rep); break;
    case ExperimentKind::ode_check: run_ode(cfg, rep); break;
  }
  rep.tolerances = default_tolerances(cfg.kind);
  // Declared tolerances replace defaults on the same table and column.
  for (const auto& t : cfg.tolerances)
    std::erase_if(rep.tolerances, [&](const Tolerance& d) { return d.table == t.table && d.column == t.column; });
  rep.tolerances.insert(rep.tolerances.end(), cfg.tolerances.begin(), cfg.tolerances.end());
  apply_tolerances(rep);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.out_dir.empty()) write_report(rep, cfg.out_dir);
  return rep;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const Report& r, bool include_run) {
  nlohmann::json j;
  j["name"] = r.name;
  j["kind"] = to_string(r.kind);
  j["config"] = r.config;
  j["summary"] = r.summary;
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& t : r.tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0; i < row.size(); ++i) o[t.columns[i]] = cell_to_json(row[i]);
      rows.push_back(o);
    }
    tables[t.name] = {{"columns", t.columns}, {"rows", rows}};
  }
  j["tables"] = tables;
  nlohmann::json tol = nlohmann::json::array();
  for (const auto& t : r.tolerances) tol.push_back(tolerance_to_json(t));
  j["tolerances"] = tol;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"table", c.table}, {"column", c.column}, {"row", c.row}, {"value", cell_to_json(c.value)},
                      {"low", bound_to_json(c.low)}, {"high", bound_to_json(c.high)}, {"passed", c.passed}});
  j["checks"] = checks;
  j["passed"] = r.passed();
  if (include_run) j["run"] = {{"workers", r.workers}, {"wall_seconds", r.wall_seconds}};
  return j;
}

void write_report(const Report& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("output.dir: cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  {
    std::ofstream f(base / (r.name + ".json"));
    if (!f) throw ConfigError("output.dir: cannot write into '" + dir + "'");
    f << to_json(r).dump(2) << '\n';
  }
  for (const auto& t : r.tables) {
    std::ofstream f(base / (r.name + "_" + t.name + ".csv"), std::ios::binary);
    f << to_csv(t);
  }
}

int exit_code(const Report& r) { return r.passed() ? 0 : 2; }

}  // namespace brw
