#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "brw/error.hpp"
#include "brw/experiment.hpp"
#include "brw/grid.hpp"
#include "brw/stats.hpp"

using namespace brw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("brwlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + BRWLAB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_tail(int workers) {
  ExperimentConfig c;
  c.kind = ExperimentKind::tail;
  c.name = "small_tail";
  c.scheme = presets::geometric_uniform(1);
  c.r_list = {2, 4, 8};
  c.n = 6000;
  c.seed = 99;
  c.workers = workers;
  return c;
}

}  // namespace

TEST_CASE("wilson_ci examples") {
  const Interval z = wilson_ci(0, 100);
  CHECK(z.low == 0.0);
  CHECK(z.high > 0.0);
  const Interval f = wilson_ci(100, 100);
  CHECK(f.high == 1.0);
  CHECK(f.low < 1.0);
  const Interval h = wilson_ci(50, 100);
  CHECK(h.low == doctest::Approx(0.404).epsilon(1e-3));
  CHECK(h.high == doctest::Approx(0.596).epsilon(1e-3));
  CHECK_THROWS_AS(wilson_ci(0, 0), ConfigError);
  CHECK_THROWS_AS(wilson_ci(5, 3), ConfigError);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("property: Wilson interval contains the estimate and narrows with n") {
  for (std::uint64_t n : {10u, 100u, 1000u, 10000u}) {
    for (std::uint64_t k = 0; k <= n; k += std::max<std::uint64_t>(1, n / 7)) {
      const Interval ci = wilson_ci(k, n);
      CHECK(ci.low >= 0);
      CHECK(ci.high <= 1);
      CHECK(ci.contains(double(k) / double(n)));
      const Interval wider = wilson_ci(k, n, 0.99);
      CHECK(wider.low <= ci.low);
      CHECK(wider.high >= ci.high);
    }
  }
  CHECK(wilson_ci(500, 1000).high - wilson_ci(500, 1000).low < wilson_ci(50, 100).high - wilson_ci(50, 100).low);
}

TEST_CASE("loglog_slope examples") {
  std::vector<std::pair<double, double>> a, b;
  for (double r : {10.0, 20.0, 40.0, 80.0}) {
    a.emplace_back(r, 3.0 / (r * r));
    b.emplace_back(r, 7.0 / (r * r * r));
  }
  CHECK(loglog_slope(a).slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(loglog_slope(a).intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(loglog_slope(b).slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(loglog_slope(b).std_error < 1e-10);
  CHECK_THROWS_AS(loglog_slope({{1.0, 0.0}, {2.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(loglog_slope({{-1.0, 1.0}, {2.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(loglog_slope({{1.0, 1.0}}), ConfigError);
}

TEST_CASE("grid tail decays with log-log slope near -2") {
  const GridSolution g = solve_h_grid(presets::binary_pm1_tabulated(), 800, 0.0);
  std::vector<std::pair<double, double>> pts;
  for (int r : {25, 50, 100, 200}) pts.emplace_back(r, g.w(r));
  const SlopeFit f = loglog_slope(pts);
  CHECK(f.slope >= -2.15);
  CHECK(f.slope <= -1.85);
}

TEST_CASE("MeanAccumulator") {
  MeanAccumulator a, b, all;
  for (int i = 0; i < 10; ++i) {
    (i % 2 ? a : b).add(i);
    all.add(i);
  }
  a.merge(b);
  CHECK(a.n == 10);
  CHECK(a.mean() == doctest::Approx(4.5));
  CHECK(a.variance() == doctest::Approx(all.variance()));
  CHECK(all.variance() == doctest::Approx(55.0 / 6.0));
  CHECK(all.std_error() == doctest::Approx(std::sqrt(55.0 / 60.0)));
}

TEST_CASE("config parsing errors name the field") {
  auto msg = [](const nlohmann::json& j) {
    try {
      config_from_json(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg({{"scheme", "binary_pm1"}}).find("kind") != std::string::npos);
  CHECK(msg({{"kind", "tail"}, {"scheme", "binary_pm1"}, {"r_list", {5}}, {"n", 0}, {"seed", 1}}).find("n") !=
        std::string::npos);
  CHECK(msg({{"kind", "tail"}, {"scheme", "binary_pm1"}, {"r_list", {5}}, {"n", 10}}).find("seed") !=
        std::string::npos);
  CHECK(msg({{"kind", "tail"}, {"bogus", 1}}).find("bogus") != std::string::npos);
  CHECK(msg({{"kind", "nope"}}).find("kind") != std::string::npos);
  CHECK(msg({{"kind", "tail"}, {"scheme", "no_such_preset"}, {"r_list", {5}}, {"n", 10}, {"seed", 1}}) != "");
  // Deterministic kinds need no seed.
  CHECK(msg({{"kind", "grid"}, {"scheme", "binary_pm1_tabulated"}, {"r_list", {5}}}) == "");
  CHECK(msg({{"kind", "ode_check"}}) == "");
}

TEST_CASE("config round trip") {
  const ExperimentConfig c = small_tail(1);
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("ode_check experiment passes its default tolerances") {
  ExperimentConfig c;
  c.kind = ExperimentKind::ode_check;
  c.name = "ode";
  const Report r = run_experiment(c);
  CHECK(r.passed());
  CHECK(exit_code(r) == 0);
  CHECK_FALSE(r.checks.empty());
  const Table& cert = r.table("certificate");
  CHECK(cert.at(0, "passed") == 1.0);
  CHECK(r.table("psi").has_column("pass"));
}

TEST_CASE("tolerance failures set the exit code and the pass column") {
  ExperimentConfig c = small_tail(1);
  c.tolerances.push_back(Tolerance{"tail", "p_hat", 0.0, 0.01, "r", 2.0});
  const Report r = run_experiment(c);
  CHECK_FALSE(r.passed());
  CHECK(exit_code(r) == 2);
  const Table& t = r.table("tail");
  CHECK(t.at(0, "pass") == 0.0);
  CHECK(std::isnan(t.at(1, "pass")));
  // The pass column can be recomputed from the row values.
  for (const Check& ch : r.checks) CHECK(ch.passed == (ch.value >= ch.low && ch.value <= ch.high));
  CHECK_THROWS_AS(r.table("nope"), ConfigError);
}

TEST_CASE("mobile experiment emits distance and laplace tables") {
  ExperimentConfig c;
  c.kind = ExperimentKind::mobile;
  c.name = "maps";
  c.boltzmann = {{2, 1.0 / 12}};
  c.r_list = {0, 3};
  c.laplace_r = 3;
  c.n = 3000;
  c.seed = 4;
  const Report r = run_experiment(c);
  const Table& d = r.table("distance");
  CHECK(d.rows.size() == 2);
  CHECK(r.table("laplace").rows.size() == 1);
  const fs::path dir = scratch("mobile");
  write_report(r, dir.string());
  CHECK(fs::exists(dir / "maps.json"));
  CHECK(fs::exists(dir / "maps_distance.csv"));
  CHECK(fs::exists(dir / "maps_laplace.csv"));
  const std::string csv = slurp(dir / "maps_distance.csv");
  CHECK(csv.rfind("r,n,hits_gt", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  const Report a = run_experiment(small_tail(1));
  const Report b = run_experiment(small_tail(1));
  const Report c = run_experiment(small_tail(4));
  CHECK(to_csv(a.table("tail")) == to_csv(b.table("tail")));
  CHECK(to_csv(a.table("tail")) == to_csv(c.table("tail")));
  CHECK(to_json(a, false).dump() == to_json(c, false).dump());
  CHECK(to_json(a, true).contains("run"));
  CHECK_FALSE(to_json(a, false).contains("run"));
}

TEST_CASE("CSV formatting") {
  Table t{"x", {"a", "b", "c"}, {{1.0, 0.5, std::nan("")}, {-3.0, 1e-20, 2.0}}};
  CHECK(to_csv(t) == "a,b,c\n1,0.5,\n-3,9.9999999999999995e-21,2\n");
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("ode --out \"" + dir.string() + "\"") == 0);
  CHECK(fs::exists(dir / "ode_check.json"));
  CHECK(run_cli("tail --scheme binary_pm1 --r 2 --n 2000 --seed 3 --out \"" + dir.string() +
                "\" --tol tail.p_hat=0:0.001") == 2);
  CHECK(run_cli("tail --scheme binary_pm1 --r 2 --n 0 --seed 3") == 1);
  CHECK(run_cli("tail --scheme no_such_scheme --r 2 --n 10 --seed 3") == 1);
  CHECK(run_cli("psi --t 2") == 0);
  CHECK(run_cli("no-such-command") != 0);

  const fs::path cfg = dir / "grid.json";
  std::ofstream(cfg) << R"({"kind": "grid", "name": "g", "scheme": "binary_pm1_tabulated", "r_list": [10, 20],
    "tolerances": [{"table": "grid", "column": "scaled_w", "low": 0, "high": 10}]})";
  CHECK(run_cli("report \"" + cfg.string() + "\" --out \"" + dir.string() + "\"") == 0);
  CHECK(fs::exists(dir / "g_grid.csv"));
  std::ofstream(cfg) << R"({"kind": "grid", "r_list": [10]})";
  CHECK(run_cli("report \"" + cfg.string() + "\"") == 1);
  fs::remove_all(dir);
}
