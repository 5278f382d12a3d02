#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "brw/engine.hpp"
#include "brw/error.hpp"
#include "brw/grid.hpp"
#include "brw/scheme.hpp"

using namespace brw;

namespace {

SchemeSpec tab(std::vector<TabulatedOutcome> outcomes) { return SchemeSpec{Tabulated{std::move(outcomes)}}; }

double halfwidth(const TailEstimate& e) { return 0.5 * (e.ci_high - e.ci_low); }

}  // namespace

TEST_CASE("simulate_tree: immediate extinction") {
  RandomStream rng(1);
  const TreeStats st = simulate_tree(tab({{1.0, {}, 0, 1.0}}), SimCaps{}, 0.0, rng);
  CHECK(st.progeny == 1);
  CHECK(st.max_decoration == 0);
  CHECK(st.total_weight == 1);
  CHECK_FALSE(st.truncated);
  CHECK(st.complete());
}

TEST_CASE("simulate_tree: binary +-1 root events") {
  const SchemeSpec s = presets::binary_pm1();
  const int n = 100000;
  int single = 0, reach = 0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng = RandomStream::for_stream(5, static_cast<std::uint64_t>(i));
    const TreeStats st = simulate_tree(s, SimCaps{}, 0.0, rng);
    single += st.progeny == 1;
    reach += st.max_displacement >= 1;
  }
  const double se = std::sqrt(0.25 / n);
  CHECK(std::fabs(single / double(n) - 0.5) <= 4 * se);
  CHECK(std::fabs(reach / double(n) - 0.5) <= 4 * se);
}

TEST_CASE("property: per-tree invariants") {
  const std::vector<SchemeSpec> specs = {presets::binary_pm1(), presets::binary_pm1_tabulated(),
                                         presets::geometric_uniform(2), presets::poisson_rademacher()};
  std::uint64_t idx = 0;
  for (const auto& s : specs) {
    const bool unit_weight = scheme_moments(s).mean_weight == 1.0;
    for (int i = 0; i < 3000; ++i) {
      RandomStream rng = RandomStream::for_stream(77, idx++);
      const TreeStats st = simulate_tree(s, SimCaps{100000}, 0.0, rng);
      CHECK(st.max_decoration >= std::max(0.0, st.max_displacement));
      if (unit_weight && st.complete()) CHECK(st.total_weight == static_cast<double>(st.progeny));
    }
  }
}

TEST_CASE("simulate_tree respects caps") {
  const SchemeSpec s = tab({{1.0, {0, 1}, 1, 1.0}});  // supercritical: always grows
  RandomStream rng(3);
  const TreeStats st = simulate_tree(s, SimCaps{1000}, 0.0, rng);
  CHECK(st.truncated);
  CHECK(st.progeny <= 1000 + 2);
  RandomStream rng2(3);
  const TreeStats sd = simulate_tree(s, SimCaps{1'000'000, 5}, 0.0, rng2);
  CHECK(sd.truncated);
  CHECK(sd.depth <= 5);
}

TEST_CASE("estimate_tail examples") {
  const SchemeSpec s = presets::binary_pm1();
  const auto e = estimate_tail(s, {-1.0, 0.0}, 100000, SimCaps{}, 9);
  CHECK(e[0].p_hat == 1.0);
  CHECK(std::fabs(e[1].p_hat - 0.5) <= 4 * std::sqrt(0.25 / 100000));
  CHECK(e[1].ci_low <= e[1].p_hat);
  CHECK(e[1].p_hat <= e[1].ci_high);
}

TEST_CASE("estimate_tail monotone in r on a shared sample") {
  const std::vector<double> rs = {0, 1, 2, 3, 5, 8, 13};
  const auto e = estimate_tail(presets::geometric_uniform(1), rs, 20000, SimCaps{}, 4);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i - 1].hits >= e[i].hits);
}

TEST_CASE("estimate_tail: equality counts on a lattice scheme") {
  const auto e = estimate_tail(presets::binary_pm1_tabulated(), {0.0, 1.0, 2.0}, 50000, SimCaps{}, 8);
  // sup = 0 exactly when the root is childless.
  CHECK(std::fabs(e[0].p_eq - 0.5) <= 4 * std::sqrt(0.25 / 50000));
  // P(sup = 1) = P(sup > 0) - P(sup > 1).
  CHECK(e[1].hits_eq == e[0].hits - e[1].hits);
}

TEST_CASE("estimate_tail is bitwise reproducible across worker counts") {
  const SchemeSpec s = presets::geometric_uniform(2);
  const auto a = estimate_tail(s, {2, 5, 9}, 9000, SimCaps{}, 1234, 1);
  const auto b = estimate_tail(s, {2, 5, 9}, 9000, SimCaps{}, 1234, 3);
  const auto c = estimate_tail(s, {2, 5, 9}, 9000, SimCaps{}, 1234, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].hits == b[i].hits);
    CHECK(a[i].hits == c[i].hits);
    CHECK(a[i].hits_eq == c[i].hits_eq);
    CHECK(a[i].ambiguous == c[i].ambiguous);
    CHECK(a[i].p_hat == c[i].p_hat);
  }
  const LaplaceEstimate l1 = estimate_conditional_laplace(s, 5, 1.0, Condition::gt, 5000, SimCaps{}, 3, 1);
  const LaplaceEstimate l4 = estimate_conditional_laplace(s, 5, 1.0, Condition::gt, 5000, SimCaps{}, 3, 4);
  CHECK(l1.estimate == l4.estimate);
  CHECK(l1.std_error == l4.std_error);
}

TEST_CASE("truncation bracketing") {
  // A tiny cap forces ambiguity; the bracket must contain the decided estimate.
  const auto e = estimate_tail(presets::binary_pm1(), {10.0}, 5000, SimCaps{50}, 2);
  CHECK(e[0].ambiguous > 0);
  CHECK(e[0].p_low_bound <= e[0].p_hat);
  CHECK(e[0].p_high_bound >= e[0].p_hat);
  CHECK(e[0].p_high_bound - e[0].p_low_bound == doctest::Approx(e[0].ambiguous / 5000.0));
}

TEST_CASE("MC tail agrees with the grid at small r") {
  const SchemeSpec s = presets::binary_pm1_tabulated();
  const GridSolution g = solve_h_grid(s, 200, 0.0);
  const auto e = estimate_tail(s, {5, 10, 20}, 200000, SimCaps{}, 2024);
  for (const auto& x : e) {
    const double exact = 1 - g.at(static_cast<int>(x.r));
    CHECK(std::fabs(x.p_hat - exact) <= 3 * halfwidth(x));
    CHECK(x.truncated < 200);
  }
}

TEST_CASE("estimate_tail: scaled tail at r = 20 on 1e6 trees") {
  const auto e = estimate_tail(presets::binary_pm1(), {20.0}, 1'000'000, SimCaps{}, 606);
  const double s = e[0].p_hat * 400 / 6;
  CHECK(s >= 0.7);
  CHECK(s <= 1.3);
}

TEST_CASE("conditional Laplace examples") {
  const SchemeSpec s = presets::binary_pm1();
  for (Condition c : {Condition::gt, Condition::le}) {
    const LaplaceEstimate e = estimate_conditional_laplace(s, 3, 0.0, c, 2000, SimCaps{}, 5);
    CHECK(e.estimate == 1.0);
  }
  const LaplaceEstimate eq = estimate_conditional_laplace(presets::binary_pm1_tabulated(), 2, 0.0, Condition::eq,
                                                          2000, SimCaps{}, 5);
  CHECK(eq.estimate == 1.0);
  // No tree exceeds a huge level: insufficient, never a division by zero.
  const LaplaceEstimate none = estimate_conditional_laplace(s, 1e9, 1.0, Condition::gt, 100, SimCaps{}, 5);
  CHECK(none.insufficient);
  CHECK(none.n_conditioned == 0);
  CHECK(std::isnan(none.estimate));
  StepLaw g = StepLaw::gaussian(1.0);
  IidChildren cont;
  cont.step = g;
  CHECK_THROWS_AS(estimate_conditional_laplace(SchemeSpec{cont}, 2, 1.0, Condition::eq, 10, SimCaps{}, 1),
                  ConfigError);
}

TEST_CASE("conditional Laplace gt agrees with the grid functional") {
  // geometric(1/2) with steps in {-1,0,1}; small r keeps the run short.
  const SchemeSpec s = presets::geometric_uniform(1);
  const int r = 8;
  const double alpha = 2.0;
  const LaplaceFunctionals f = laplace_functionals(s, r, alpha, 300);
  const LaplaceEstimate e = estimate_conditional_laplace(s, r, alpha, Condition::gt, 200000, SimCaps{}, 42);
  CHECK(e.t == doctest::Approx(f.t).epsilon(1e-12));
  CHECK(std::fabs(e.estimate - f.cond_gt) <= 4 * e.std_error);
  const LaplaceEstimate q = estimate_conditional_laplace(s, r, alpha, Condition::eq, 200000, SimCaps{}, 43);
  CHECK(std::fabs(q.estimate - f.cond_eq) <= 4 * q.std_error + 0.5 * q.ambiguous / double(q.n_conditioned));
}

TEST_CASE("generation_snapshot examples") {
  RandomStream rng(8);
  const auto g0 = generation_snapshot(presets::binary_pm1(), 0, rng);
  REQUIRE(g0.size() == 1);
  CHECK(g0[0] == 0);
  int empty = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto g1 = generation_snapshot(presets::binary_pm1(), 1, rng);
    if (g1.empty()) {
      ++empty;
    } else {
      REQUIRE(g1.size() == 2);
      CHECK(g1[0] == -1);
      CHECK(g1[1] == 1);
    }
  }
  CHECK(std::fabs(empty / double(n) - 0.5) <= 4 * std::sqrt(0.25 / n));
  const SchemeSpec line = tab({{1.0, {0}, 0, 1.0}});
  for (int k : {1, 5, 50}) {
    const auto gk = generation_snapshot(line, k, rng);
    REQUIRE(gk.size() == 1);
    CHECK(gk[0] == 0);
  }
}

TEST_CASE("condition parsing") {
  CHECK(condition_from_string("gt") == Condition::gt);
  CHECK(condition_from_string("eq") == Condition::eq);
  CHECK(std::string(to_string(Condition::le)) == "le");
  CHECK_THROWS_AS(condition_from_string("ge"), ConfigError);
}
