#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "brw/analysis.hpp"
#include "brw/error.hpp"
#include "brw/experiment.hpp"
#include "brw/scheme_json.hpp"
#include "brw/tilt.hpp"

namespace {

using brw::json;

struct CommonFlags {
  std::string scheme;
  std::vector<double> r;
  std::optional<double> alpha;
  std::uint64_t n = 0;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
  std::string name;
  std::uint64_t max_nodes = 1'000'000;
  std::vector<std::string> tol;
};

void add_common(CLI::App* sub, CommonFlags& f, bool with_scheme) {
  if (with_scheme)
    sub->add_option("--scheme", f.scheme, "Scheme JSON file or preset name")->required();
  sub->add_option("--r", f.r, "Radii (comma-separated or repeated)")->delimiter(',');
  sub->add_option("--alpha", f.alpha, "Laplace parameter");
  sub->add_option("--n", f.n, "Number of samples");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", f.out, "Output directory (default $BRWLAB_OUT_DIR)");
  sub->add_option("--name", f.name, "Report name");
  sub->add_option("--max-nodes", f.max_nodes, "Node cap per tree");
  sub->add_option("--tol", f.tol, "Tolerance table.column=low:high (repeatable)");
}

brw::Tolerance parse_tol(const std::string& s) {
  const auto dot = s.find('.');
  const auto eq = s.find('=');
  const auto colon = s.find(':', eq == std::string::npos ? 0 : eq);
  if (dot == std::string::npos || eq == std::string::npos || colon == std::string::npos || dot > eq)
    throw brw::ConfigError("--tol: expected table.column=low:high, got '" + s + "'");
  brw::Tolerance t;
  t.table = s.substr(0, dot);
  t.column = s.substr(dot + 1, eq - dot - 1);
  const std::string lo = s.substr(eq + 1, colon - eq - 1), hi = s.substr(colon + 1);
  if (!lo.empty()) t.low = std::stod(lo);
  if (!hi.empty()) t.high = std::stod(hi);
  return t;
}

json base_config(const std::string& kind, const CommonFlags& f) {
  json j;
  j["kind"] = kind;
  if (!f.name.empty()) j["name"] = f.name;
  if (!f.scheme.empty()) j["scheme"] = f.scheme;
  if (!f.r.empty()) j["r_list"] = f.r;
  if (f.alpha) j["alpha"] = *f.alpha;
  if (f.n) j["n"] = f.n;
  if (f.seed) j["seed"] = *f.seed;
  j["workers"] = f.workers;
  j["caps"] = {{"max_nodes", f.max_nodes}};
  if (!f.out.empty()) j["output"] = {{"dir", f.out}};
  return j;
}

json boltzmann_arg(const std::string& s) {
  if (s.empty()) return json{{"2", 1.0 / 12}};  // quadrangulations
  if (!s.empty() && s.front() == '{') return json::parse(s);
  return brw::read_json_file(s);
}

int run(const brw::ExperimentConfig& cfg, const CommonFlags& f) {
  brw::ExperimentConfig c = cfg;
  for (const auto& t : f.tol) c.tolerances.push_back(parse_tol(t));
  const brw::Report rep = brw::run_experiment(c);
  if (c.out_dir.empty()) {
    std::cout << brw::to_json(rep).dump(2) << '\n';
  } else {
    std::cerr << rep.name << ": " << (rep.passed() ? "pass" : "FAIL") << " (" << rep.checks.size()
              << " checks), wrote " << c.out_dir << '\n';
  }
  return brw::exit_code(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk experiments"};
  app.require_subcommand(1);

  CommonFlags tail_f, pdf_f, lap_f, grid_f, red_f, mob_f, ode_f;
  std::string condition = "gt";
  int r_max = 0;
  std::string boltzmann, multitype, base_type;
  std::uint64_t n_trees = 10'000;
  std::optional<int> laplace_r;
  std::string config_path, report_out;
  std::optional<int> report_workers;
  double psi_t = 0, tilt_t = 0;
  std::string psi_method = "inversion", tilt_scheme;
  double br_alpha = 1, br_sigma2 = 1, br_eta2 = 1;

  auto* tail = app.add_subcommand("tail", "Estimate P(sup > r) by simulation");
  add_common(tail, tail_f, true);
  auto* pdf = app.add_subcommand("pdf", "Estimate P(sup = r) by simulation");
  add_common(pdf, pdf_f, true);
  auto* lap = app.add_subcommand("laplace", "Conditioned Laplace functional of the total weight");
  add_common(lap, lap_f, true);
  lap->add_option("--condition", condition, "gt, le or eq")->check(CLI::IsMember({"gt", "le", "eq"}));
  auto* grid = app.add_subcommand("grid", "Deterministic fixed-point solver");
  add_common(grid, grid_f, true);
  grid->add_option("--r-max", r_max, "Grid size");
  auto* red = app.add_subcommand("reduce", "Multitype reduction parameters and checks");
  add_common(red, red_f, false);
  red->add_option("--multitype", multitype, "Multitype spec JSON file");
  red->add_option("--boltzmann", boltzmann, "Boltzmann weights (JSON text or file)");
  red->add_option("--base-type", base_type, "Base type name");
  red->add_option("--trees", n_trees, "Trees for the conservation checks");
  auto* mob = app.add_subcommand("mobile", "Random map distances and volumes via mobiles");
  add_common(mob, mob_f, false);
  mob->add_option("--boltzmann", boltzmann, "Boltzmann weights (JSON text or file); default quadrangulations");
  mob->add_option("--laplace-r", laplace_r, "Condition volumes on d > this radius");
  auto* ode = app.add_subcommand("ode", "Invariant suite for psi");
  add_common(ode, ode_f, false);
  auto* report = app.add_subcommand("report", "Run an experiment config file");
  report->add_option("config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output directory override");
  report->add_option("--workers", report_workers, "Worker threads override")->check(CLI::PositiveNumber);
  auto* psi = app.add_subcommand("psi", "Evaluate psi");
  psi->add_option("--t", psi_t, "Argument")->required()->check(CLI::PositiveNumber);
  psi->add_option("--method", psi_method, "inversion, series or closed")
      ->check(CLI::IsMember({"inversion", "series", "closed"}));
  auto* bigr = app.add_subcommand("big-r", "Evaluate R(alpha)");
  bigr->add_option("--alpha", br_alpha)->required();
  bigr->add_option("--sigma2", br_sigma2)->required();
  bigr->add_option("--eta2", br_eta2)->required();
  auto* tilt = app.add_subcommand("tilt", "Fixed point h_t(inf) of the tilted generating function");
  tilt->add_option("--t", tilt_t, "Tilt")->required()->check(CLI::NonNegativeNumber);
  tilt->add_option("--scheme", tilt_scheme, "Scheme JSON file or preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*tail) return run(brw::config_from_json(base_config("tail", tail_f)), tail_f);
    if (*pdf) return run(brw::config_from_json(base_config("pdf", pdf_f)), pdf_f);
    if (*lap) return run(brw::config_from_json(base_config("laplace_" + condition, lap_f)), lap_f);
    if (*grid) {
      json j = base_config("grid", grid_f);
      if (r_max > 0) j["r_max"] = r_max;
      return run(brw::config_from_json(j), grid_f);
    }
    if (*red) {
      json j = base_config("multitype_reduce", red_f);
      if (!multitype.empty()) j["multitype"] = multitype;
      else j["boltzmann"] = boltzmann_arg(boltzmann);
      if (!base_type.empty()) j["base_type"] = base_type;
      j["n_trees"] = n_trees;
      return run(brw::config_from_json(j), red_f);
    }
    if (*mob) {
      json j = base_config("mobile", mob_f);
      j["boltzmann"] = boltzmann_arg(boltzmann);
      if (laplace_r) j["laplace_r"] = *laplace_r;
      return run(brw::config_from_json(j), mob_f);
    }
    if (*ode) return run(brw::config_from_json(base_config("ode_check", ode_f)), ode_f);
    if (*report) {
      brw::ExperimentConfig c = brw::load_config(config_path);
      if (!report_out.empty()) c.out_dir = report_out;
      if (report_workers) c.workers = *report_workers;
      return run(c, CommonFlags{});
    }
    if (*psi) {
      const brw::PsiMethod m = psi_method == "series"   ? brw::PsiMethod::series
                               : psi_method == "closed" ? brw::PsiMethod::closed_candidate
                                                        : brw::PsiMethod::inversion;
      const brw::OdeEval e = brw::psi(psi_t, m);
      std::cout << json{{"t", e.t}, {"psi", e.psi}, {"method", psi_method}, {"error_estimate", e.error_estimate}}.dump()
                << '\n';
      return 0;
    }
    if (*bigr) {
      std::cout << json{{"alpha", br_alpha},
                        {"sigma2", br_sigma2},
                        {"eta2", br_eta2},
                        {"R", brw::big_R(br_alpha, br_sigma2, br_eta2)},
                        {"laplace_limit_gt", brw::laplace_limit_gt(br_alpha, br_sigma2)}}
                       .dump()
                << '\n';
      return 0;
    }
    if (*tilt) {
      const auto spec = brw::scheme_preset(tilt_scheme);
      const brw::SchemeSpec s = spec ? *spec : brw::load_scheme(tilt_scheme);
      const brw::TiltFixedPoint fp = brw::h_t_infinity(s, tilt_t);
      std::cout << json{{"t", fp.t},
                        {"h_inf", fp.h_inf},
                        {"one_minus_h", fp.one_minus_h},
                        {"phi_prime_at_h", brw::phi_t_prime(s, tilt_t, fp.h_inf)},
                        {"iterations", fp.iterations}}
                       .dump()
                << '\n';
      return 0;
    }
  } catch (const brw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
