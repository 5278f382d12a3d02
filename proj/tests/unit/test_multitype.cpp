#include <cmath>
#include <string>

#include "doctest.h"

#include "brw/error.hpp"
#include "brw/mobile.hpp"
#include "brw/multitype.hpp"
#include "brw/stats.hpp"

using namespace brw;

namespace {

const BoltzmannWeights kQuad{{2, 1.0 / 12}};

MultitypeSpec single_binary() {
  TabulatedTypeLaw law;
  law.outcomes = {{0.5, {}, 0, 1.0}, {0.5, {{1, 0}, {-1, 0}}, 1, 1.0}};
  return MultitypeSpec{{"X"}, {law}};
}

// Three types with M = [[0, 1/2, 1/2], [1, 0, 0], [1, 0, 0]], so b = (1, 1, 1).
MultitypeSpec three_type() {
  TabulatedTypeLaw a;
  a.outcomes = {{0.5, {{1, 1}}, 1, 1.0}, {0.5, {{-1, 2}}, 0, 2.0}};
  CompoundTypeLaw b;
  b.count = OffspringLaw::geometric_mean_one();
  b.child_type = 0;
  b.weight = 0.5;
  TabulatedTypeLaw c;
  c.outcomes = {{0.5, {}, 0, 1.0}, {0.5, {{1, 0}, {0, 0}}, 2, 1.0}};
  return MultitypeSpec{{"A", "B", "C"}, {a, b, c}};
}

}  // namespace

TEST_CASE("mean_matrices examples") {
  const MeanMatrices s = mean_matrices(single_binary());
  CHECK(s.M(0, 0) == doctest::Approx(1.0));
  CHECK(s.N(0, 0) == doctest::Approx(0.0));
  CHECK(s.O(0, 0) == doctest::Approx(1.0));

  const MeanMatrices q = mean_matrices(mobile_spec(kQuad, CountSelector::vertices));
  CHECK(std::fabs(q.M(0, 0)) < 1e-12);
  CHECK(std::fabs(q.M(0, 1) - 1) < 1e-12);
  CHECK(std::fabs(q.M(1, 0) - 1) < 1e-12);
  CHECK(std::fabs(q.M(1, 1)) < 1e-12);
  CHECK(q.M_tilde.row(0).isZero());

  TabulatedTypeLaw leaf;
  leaf.outcomes = {{1.0, {}, 0, 1.0}};
  TabulatedTypeLaw root;
  root.outcomes = {{1.0, {{0, 1}}, 0, 1.0}};
  const MeanMatrices z = mean_matrices(MultitypeSpec{{"R", "L"}, {root, leaf}});
  CHECK(z.M.row(1).isZero());
}

TEST_CASE("perron examples") {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  const PerronData p = perron(m);
  CHECK(p.rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.right(0) == doctest::Approx(p.right(1)).epsilon(1e-12));
  CHECK(p.left(0) == doctest::Approx(p.left(1)).epsilon(1e-12));
  CHECK(p.left.dot(p.right) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd one(1, 1);
  one << 1;
  CHECK(perron(one).rho == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd h(2, 2);
  h << 0, 0.5, 1, 0;
  CHECK(perron(h).rho == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

  Eigen::MatrixXd red(2, 2);
  red << 1, 1, 0, 1;
  try {
    perron(red);
    FAIL("reducible matrix accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("type 1 cannot reach type 0") != std::string::npos);
  }
}

TEST_CASE("property: Perron vectors solve the eigen equations") {
  RandomStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = rng.uniform() + 0.01;
    const PerronData p = perron(m);
    const double bn = p.right.cwiseAbs().maxCoeff(), an = p.left.cwiseAbs().maxCoeff();
    CHECK((m * p.right - p.rho * p.right).cwiseAbs().maxCoeff() <= 1e-10 * bn);
    CHECK((m.transpose() * p.left - p.rho * p.left).cwiseAbs().maxCoeff() <= 1e-10 * an);
  }
}

TEST_CASE("reduced_params examples") {
  const ReducedParams s = reduced_params(single_binary(), 0);
  CHECK(std::fabs(s.drift) < 1e-12);
  CHECK(std::fabs(s.eta2 - 1) < 1e-12);
  CHECK(std::fabs(s.sigma2 - 1) < 1e-12);

  const ReducedParams q = reduced_params(mobile_spec(kQuad, CountSelector::vertices), 0);
  CHECK(std::fabs(q.rho - 1) < 1e-9);
  CHECK(std::fabs(q.drift) < 1e-10);
  CHECK(std::fabs(q.eta2 - 2.0 / 3) < 1e-10);
  CHECK(std::fabs(q.sigma2 - 2) < 1e-10);
  CHECK(std::fabs(q.sigma2 - 3 * q.eta2) < 1e-10);
  // Base-type children carry no displacement here, so the short formula agrees.
  CHECK(std::fabs(q.eta2_unmasked - q.eta2) < 1e-10);

  CompoundTypeLaw stay;
  stay.count = OffspringLaw::geometric_mean_one();
  stay.child_type = 1;
  CompoundTypeLaw back = stay;
  back.child_type = 0;
  const ReducedParams z = reduced_params(MultitypeSpec{{"P", "Q"}, {stay, back}}, 0);
  CHECK(z.drift == 0.0);
  CHECK(z.eta2 == 0.0);

  CompoundTypeLaw sub;
  sub.count = OffspringLaw::geometric(0.6);
  sub.child_type = 0;
  CHECK_THROWS_AS(reduced_params(MultitypeSpec{{"S"}, {sub}}, 0), PreconditionError);
}

TEST_CASE("property: reduced one-step law matches the formulas") {
  const std::vector<std::pair<MultitypeSpec, int>> cases = {
      {single_binary(), 0},
      {mobile_spec(kQuad, CountSelector::vertices), 0},
      {mobile_spec(BoltzmannWeights{{2, 5.0 / 81}, {3, 5.0 / 1458}}, CountSelector::vertices), 0},
      {three_type(), 0},
      {three_type(), 2},
  };
  std::uint64_t seed = 100;
  for (const auto& [spec, base] : cases) {
    const ReducedParams rp = reduced_params(spec, base);
    CHECK(rp.eta2 > 0);
    const MultitypeSampler sampler(spec);
    MeanAccumulator d, e2, cnt;
    for (std::uint64_t i = 0; i < 40000; ++i) {
      RandomStream rng = RandomStream::for_stream(seed, i);
      const ReducedOffspring off = sample_reduced_offspring(sampler, base, rng);
      REQUIRE_FALSE(off.truncated);
      double s1 = 0, s2 = 0;
      for (double x : off.positions) {
        s1 += x;
        s2 += x * x;
      }
      d.add(s1);
      e2.add(s2);
      cnt.add(static_cast<double>(off.positions.size()));
    }
    ++seed;
    CHECK(std::fabs(d.mean() - rp.drift) <= 4 * d.std_error());
    CHECK(std::fabs(e2.mean() - rp.eta2) <= 4 * e2.std_error());
    CHECK(std::fabs(cnt.mean() - 1) <= 4 * cnt.std_error());
  }
}

TEST_CASE("three-type spec: criticality and drift by formula") {
  const MultitypeSpec s = three_type();
  const PerronData p = perron(mean_matrices(s).M);
  CHECK(std::fabs(p.rho - 1) < 1e-12);
  const ReducedParams a = reduced_params(s, 0);
  CHECK(a.b.isApprox(Eigen::VectorXd::Ones(3), 1e-12));
  // From A: child B at +1 with mean one A-grandchild at +1, or child C at -1
  // whose children sit at 0 and -1 half the time.
  CHECK(a.drift == doctest::Approx(0.5 * 1.0 + 0.5 * 0.5 * (0.0 - 1.0)).epsilon(1e-12));
}

TEST_CASE("property: reduction conserves weight and sup exactly") {
  for (const auto& [spec, base] : std::vector<std::pair<MultitypeSpec, int>>{
           {mobile_spec(kQuad, CountSelector::vertices), 0},
           {mobile_spec(kQuad, CountSelector::edges), 0},
           {three_type(), 0},
           {single_binary(), 0}}) {
    int checked = 0;
    for (std::uint64_t i = 0; i < 3000; ++i) {
      RandomStream rng = RandomStream::for_stream(55, i);
      const ReducedTree rt = simulate_reduced(spec, base, SimCaps{200000}, rng);
      if (rt.original.truncated) continue;
      ++checked;
      REQUIRE(rt.weight_conserved);
      REQUIRE(rt.sup_conserved);
      CHECK(rt.reduced.total_weight == rt.original.total_weight);
      CHECK(rt.reduced.max_decoration == rt.original.max_decoration);
    }
    CHECK(checked > 2900);
  }
}

TEST_CASE("simulate_reduced examples") {
  // Single type: the reduction is the identity.
  for (std::uint64_t i = 0; i < 500; ++i) {
    RandomStream rng = RandomStream::for_stream(9, i);
    const ReducedTree rt = simulate_reduced(single_binary(), 0, SimCaps{100000}, rng);
    if (rt.original.truncated) continue;
    CHECK(rt.reduced.progeny == rt.original.progeny);
    CHECK(rt.reduced.max_displacement == rt.original.max_displacement);
  }
  // Mobile with vertex weights: total weight counts the V vertices, which are
  // the vertices of the reduced tree.
  const MultitypeSpec m = mobile_spec(kQuad, CountSelector::vertices);
  bool saw_single = false;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    RandomStream rng = RandomStream::for_stream(10, i);
    const ReducedTree rt = simulate_reduced(m, 0, SimCaps{100000}, rng);
    if (rt.original.truncated) continue;
    CHECK(static_cast<double>(rt.reduced.progeny) == rt.original.total_weight);
    if (rt.original.progeny == 1) {
      saw_single = true;
      CHECK(rt.reduced.progeny == 1);
    }
  }
  CHECK(saw_single);
}

TEST_CASE("boundary_mean_check") {
  const MultitypeSpec q = mobile_spec(kQuad, CountSelector::vertices);
  const BoundaryMeanCheck same = boundary_mean_check(q, 0, 0, 100, 1);
  CHECK(same.predicted == doctest::Approx(1.0));
  CHECK(same.mean == doctest::Approx(1.0));
  const BoundaryMeanCheck f = boundary_mean_check(q, 0, 1, 20000, 2);
  CHECK(f.predicted == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::fabs(f.mean - f.predicted) <= 4 * f.std_error);
  const MultitypeSpec t = three_type();
  for (int y = 0; y < 3; ++y) {
    const BoundaryMeanCheck c = boundary_mean_check(t, 2, y, 20000, 3 + y);
    CHECK(std::fabs(c.mean - c.predicted) <= 4 * c.std_error + 1e-12);
  }
  CompoundTypeLaw sub;
  sub.count = OffspringLaw::geometric(0.6);
  CHECK_THROWS_AS(boundary_mean_check(MultitypeSpec{{"S"}, {sub}}, 0, 0, 10, 1), PreconditionError);
}

TEST_CASE("multitype spec JSON and validation") {
  const MultitypeSpec t = three_type();
  const auto j = to_json(t);
  const MultitypeSpec back = multitype_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(type_index(back, "C") == 2);
  CHECK_THROWS_AS(type_index(back, "Z"), ConfigError);

  MultitypeSpec big;
  for (int i = 0; i < 65; ++i) {
    big.names.push_back("T" + std::to_string(i));
    CompoundTypeLaw c;
    c.child_type = (i + 1) % 65;
    big.laws.emplace_back(c);
  }
  CHECK_THROWS_AS(validate(big), ConfigError);

  TabulatedTypeLaw bad;
  bad.outcomes = {{0.6, {}, 0, 1.0}};
  CHECK_THROWS_AS(validate(MultitypeSpec{{"B"}, {bad}}), ConfigError);
  TabulatedTypeLaw low;
  low.outcomes = {{1.0, {{2, 0}}, 1, 1.0}};
  CHECK_THROWS_AS(validate(MultitypeSpec{{"L"}, {low}}), ConfigError);
}
