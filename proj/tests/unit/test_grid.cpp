#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"

#include "brw/error.hpp"
#include "brw/grid.hpp"
#include "brw/stats.hpp"
#include "brw/tilt.hpp"

using namespace brw;

namespace {

SchemeSpec tab(std::vector<TabulatedOutcome> outcomes) { return SchemeSpec{Tabulated{std::move(outcomes)}}; }

// P(every vertex in generations 0..n-1 has x_v + lambda_v <= r), by listing
// every tree truncated at depth n: each vertex of a generation picks an outcome.
double enumerate_event(const std::vector<TabulatedOutcome>& outs, int n, int r) {
  std::function<double(const std::vector<int>&, int)> gen = [&](const std::vector<int>& level, int depth) -> double {
    if (depth == n || level.empty()) return 1.0;
    double total = 0;
    std::vector<std::size_t> pick(level.size(), 0);
    for (;;) {
      double p = 1;
      bool ok = true;
      std::vector<int> next;
      for (std::size_t i = 0; i < level.size(); ++i) {
        const auto& o = outs[pick[i]];
        p *= o.prob;
        if (level[i] + o.lambda > r) ok = false;
        for (int a : o.atoms) next.push_back(level[i] + a);
      }
      if (ok && p > 0) total += p * gen(next, depth + 1);
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == outs.size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
    return total;
  };
  return gen({0}, 0);
}

}  // namespace

TEST_CASE("solve_h_grid examples") {
  const GridSolution g = solve_h_grid(presets::binary_pm1_tabulated(), 300, 0.0);
  CHECK(g.converged);
  CHECK(std::fabs(g.at(0) - 0.5) < 1e-12);
  CHECK(g.at(-1) == 0.0);
  CHECK(g.at(-7) == 0.0);
  CHECK(g.at(301) == 1.0);
}

TEST_CASE("grid: binary tail and pdf constants at r = 100") {
  const GridSolution g = solve_h_grid(presets::binary_pm1_tabulated(), 600, 0.0);
  const double s = 100.0 * 100.0 * g.w(100);
  CHECK(s >= 5.4);
  CHECK(s <= 6.6);
  const auto pdf = pdf_from_grid(g);
  const double p = 1e6 * pdf[100];
  CHECK(p >= 10.2);
  CHECK(p <= 13.8);
  CHECK(std::fabs(pdf[0] - 0.5) < 1e-12);
}

TEST_CASE("pdf_from_grid examples") {
  const GridSolution ext = solve_h_grid(tab({{1.0, {}, 0, 1.0}}), 20, 0.0);
  const auto g = pdf_from_grid(ext);
  CHECK(g[0] == 1.0);
  for (int r = 1; r <= 20; ++r) CHECK(g[static_cast<std::size_t>(r)] == 0.0);
  const GridSolution tilted = solve_h_grid(presets::binary_pm1_tabulated(), 50, 1e-3);
  CHECK_THROWS_AS(pdf_from_grid(tilted), PreconditionError);
}

TEST_CASE("grid rejects non-lattice schemes and flags non-convergence") {
  IidChildren c;
  c.step = StepLaw::gaussian(1.0);
  CHECK_THROWS_AS(solve_h_grid(SchemeSpec{c}, 50, 0.0), ConfigError);
  GridOptions o;
  o.max_iters = 10;
  const GridSolution g = solve_h_grid(presets::binary_pm1_tabulated(), 50, 0.0, o);
  CHECK_FALSE(g.converged);
  CHECK(g.iterations == 10);
  CHECK(g.residual > 0);
}

TEST_CASE("grid: closed-form offspring path agrees with the tabulated path") {
  const GridSolution a = solve_h_grid(presets::binary_iid_pm1(), 200, 0.0);
  const GridSolution b = solve_h_grid(presets::binary_iid_pm1_tabulated(), 200, 0.0);
  for (int r = 0; r <= 200; r += 7) CHECK(std::fabs(a.at(r) - b.at(r)) < 1e-12);
  const GridSolution at = solve_h_grid(presets::binary_iid_pm1(), 200, 1e-4);
  const GridSolution bt = solve_h_grid(presets::binary_iid_pm1_tabulated(), 200, 1e-4);
  for (int r = 0; r <= 200; r += 7) CHECK(std::fabs(at.at(r) - bt.at(r)) < 1e-12);
}

TEST_CASE("property: sweeps decrease monotonically and stay above the fixed point") {
  for (const SchemeSpec& s : {presets::binary_pm1_tabulated(), presets::geometric_uniform(2)}) {
    const GridSolution fin = solve_h_grid(s, 60, 0.0);
    GridSolver solver(s, 60, 0.0);
    std::vector<double> prev = solver.values();
    for (int it = 0; it < 400; ++it) {
      solver.sweep();
      const auto& cur = solver.values();
      for (std::size_t r = 0; r < cur.size(); ++r) {
        REQUIRE(cur[r] <= prev[r] + 1e-15);
        REQUIRE(cur[r] >= fin.h[r] - 1e-12);
      }
      prev = cur;
    }
  }
}

TEST_CASE("property: sweep n is the probability that generations below n stay under r") {
  const std::vector<std::vector<TabulatedOutcome>> schemes = {
      std::get<Tabulated>(presets::binary_pm1_tabulated().law).outcomes,
      {{0.25, {}, 0, 1.0}, {0.5, {-1}, 0, 1.0}, {0.25, {2, -1}, 3, 1.0}},
      {{0.3, {}, 1, 1.0}, {0.4, {1}, 1, 1.0}, {0.2, {0, 0, -2}, 0, 1.0}, {0.1, {}, 0, 1.0}},
  };
  for (const auto& outs : schemes) {
    GridSolver solver(tab(outs), 30, 0.0);
    for (int n = 1; n <= 3; ++n) {
      solver.sweep();
      for (int r = 0; r <= 6; ++r)
        CHECK(std::fabs(solver.values()[static_cast<std::size_t>(r)] - enumerate_event(outs, n, r)) < 1e-12);
    }
  }
}

TEST_CASE("serial and parallel sweeps are bitwise identical") {
  for (double t : {0.0, 1e-3}) {
    GridSolver a(presets::binary_pm1_tabulated(), 500, t, 1);
    GridSolver b(presets::binary_pm1_tabulated(), 500, t, 4);
    for (int it = 0; it < 200; ++it) {
      const double ra = a.sweep_serial();
      const double rb = b.sweep_parallel();
      REQUIRE(ra == rb);
    }
    CHECK(a.values() == b.values());
  }
  GridOptions o1, o4;
  o4.workers = 4;
  const GridSolution s1 = solve_h_grid(presets::geometric_uniform(1), 150, 0.0, o1);
  const GridSolution s4 = solve_h_grid(presets::geometric_uniform(1), 150, 0.0, o4);
  CHECK(s1.h == s4.h);
  CHECK(s1.iterations == s4.iterations);
}

TEST_CASE("tail error of the sweeps decays like 1/n") {
  const SchemeSpec s = presets::binary_pm1_tabulated();
  const int r_max = 2000;
  const GridSolution fin = solve_h_grid(s, r_max, 0.0);
  GridSolver solver(s, r_max, 0.0);
  std::vector<std::pair<double, double>> pts;
  int done = 0;
  for (int n : {25, 50, 100, 200, 400}) {
    while (done < n) {
      solver.sweep();
      ++done;
    }
    double err = 0;
    for (int r = 0; r <= r_max; ++r) err = std::max(err, solver.values()[r] - fin.h[r]);
    pts.emplace_back(n, err);
  }
  const SlopeFit f = loglog_slope(pts);
  CHECK(f.slope >= -1.15);
  CHECK(f.slope <= -0.85);
}

TEST_CASE("tilted grid approaches h_t(inf) with the w_t bound") {
  const SchemeSpec s = presets::binary_pm1_tabulated();
  const double t = 1e-4;
  const GridSolution h = solve_h_grid(s, 300, 0.0);
  const GridSolution ht = solve_h_grid(s, 300, t);
  const double hinf = h_t_infinity(s, t).h_inf;
  CHECK(ht.start == doctest::Approx(hinf).epsilon(1e-15));
  CHECK(std::fabs(ht.at(300) - hinf) < 1e-3);
  for (int r : {5, 20, 50, 100, 150}) {
    const double wt = hinf / ht.at(r) - 1;
    CHECK(wt >= 0);
    CHECK(wt <= h.w(r) / (h.at(r) - (1 - hinf)));
    CHECK(ht.at(r) <= h.at(r));
  }
}

TEST_CASE("laplace_functionals at alpha = 0") {
  const LaplaceFunctionals f = laplace_functionals(presets::binary_pm1_tabulated(), 20, 0.0, 200);
  CHECK(f.t == 0.0);
  CHECK(std::fabs(f.scaled_gap) < 1e-12);
  CHECK(std::fabs(f.cond_gt - 1) < 1e-12);
}

TEST_CASE("laplace_functionals at r = 100 approach the limits") {
  const LaplaceFunctionals f = laplace_functionals(presets::binary_pm1_tabulated(), 100, 1.0, 600);
  CHECK(std::fabs(f.cond_gt / 0.4003 - 1) <= 0.10);
  CHECK(std::fabs(f.scaled_gap / 2.402 - 1) <= 0.15);
  CHECK(f.predicted_gt == doctest::Approx(0.40028).epsilon(1e-4));
  CHECK(f.predicted_gap == doctest::Approx(2.4017).epsilon(1e-4));
}
