#include "brw/grid.hpp"

#include <algorithm>
#include <cmath>

#include "brw/analysis.hpp"
#include "brw/error.hpp"
#include "brw/tilt.hpp"

namespace brw {

namespace {

struct TabTerm {
  double factor;  // p exp(-t w)
  int lambda;
  std::vector<int> atoms;
};

// Offspring pgf with the weight tilt folded in: factor * G(scale * s).
struct TiltedPgf {
  OffspringLaw law;
  double factor = 1;
  double scale = 1;
  double operator()(double s) const { return factor * law.pgf(scale * s); }
};

}  // namespace

struct GridSolver::Impl {
  enum class Shape { tabulated, iid, shared } shape;
  int r_max = 0;
  int lo_pad = 0;  // cells below 0, held at 0
  int hi_pad = 0;  // cells above r_max, held at the start value
  double start = 1;
  int workers = 1;
  std::int64_t iterations = 0;
  std::vector<double> cur, nxt;  // padded; index r + lo_pad
  mutable std::vector<double> out;
  bool out_valid = false;

  std::vector<TabTerm> tab;
  std::vector<std::pair<int, double>> steps;
  std::vector<std::pair<int, double>> noise{{0, 1.0}};
  TiltedPgf pgf;

  double eval(const double* H, int r) const {
    // H points at cell 0.
    switch (shape) {
      case Shape::tabulated: {
        double acc = 0;
        for (const auto& o : tab) {
          if (o.lambda > r) continue;
          double prod = o.factor;
          for (int x : o.atoms) prod *= H[r - x];
          acc += prod;
        }
        return acc;
      }
      case Shape::iid: {
        double acc = 0;
        for (const auto& [xi, pi] : noise) {
          if (xi > r) continue;
          double m = 0;
          for (const auto& [x, q] : steps)
            if (x <= r - xi) m += q * H[r - x];
          acc += pi * pgf(m);
        }
        return acc;
      }
      case Shape::shared: {
        const double g0 = pgf(0.0);
        double acc = 0;
        for (const auto& [xi, pi] : noise) {
          if (xi > r) continue;
          double inner = g0;
          for (const auto& [x, q] : steps)
            if (std::max(0, x) <= r - xi) inner += q * (pgf(H[r - x]) - g0);
          acc += pi * inner;
        }
        return acc;
      }
    }
    return 0;
  }
};

GridSolver::GridSolver(const SchemeSpec& spec, int r_max, double t, int workers) : impl_(std::make_unique<Impl>()) {
  validate(spec);
  if (r_max < 1) throw ConfigError("grid: r_max must be >= 1");
  if (!(t >= 0)) throw ConfigError("grid: t must be nonnegative");
  if (!is_lattice(spec)) throw ConfigError("grid: scheme must live on the integer lattice");
  Impl& im = *impl_;
  im.r_max = r_max;
  im.workers = std::max(1, workers);
  im.start = t > 0 ? h_t_infinity(spec, t).h_inf : 1.0;

  int xmin = 0, xmax = 0;
  if (const auto* tb = std::get_if<Tabulated>(&spec.law)) {
    im.shape = Impl::Shape::tabulated;
    for (const auto& o : tb->outcomes) {
      if (o.prob == 0) continue;
      im.tab.push_back({o.prob * std::exp(-t * o.weight), o.lambda, o.atoms});
      for (int x : o.atoms) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
      }
    }
  } else {
    const bool iid = std::holds_alternative<IidChildren>(spec.law);
    const auto& off = iid ? std::get<IidChildren>(spec.law).offspring : std::get<SharedStep>(spec.law).offspring;
    const auto& step = iid ? std::get<IidChildren>(spec.law).step : std::get<SharedStep>(spec.law).step;
    const auto& lm = iid ? std::get<IidChildren>(spec.law).lambda : std::get<SharedStep>(spec.law).lambda;
    const auto& wm = iid ? std::get<IidChildren>(spec.law).weight : std::get<SharedStep>(spec.law).weight;
    im.shape = iid ? Impl::Shape::iid : Impl::Shape::shared;
    im.steps = step.lattice_table();
    for (const auto& [x, q] : im.steps) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
    }
    if (lm.kind == LambdaMode::Kind::sup_plus_noise) {
      im.noise.clear();
      for (const auto& e : lm.noise.entries())
        if (e.prob > 0) im.noise.emplace_back(static_cast<int>(e.value), e.prob);
    }
    im.pgf.law = off;
    switch (wm.kind) {
      case WeightMode::Kind::constant: im.pgf.factor = std::exp(-t * wm.c); break;
      case WeightMode::Kind::per_child: im.pgf.scale = std::exp(-t); break;
      case WeightMode::Kind::custom: im.pgf.factor = wm.custom.expect_exp(t); break;
    }
  }
  im.lo_pad = std::max(0, xmax);
  im.hi_pad = std::max(0, -xmin);
  const std::size_t n = static_cast<std::size_t>(im.lo_pad + r_max + 1 + im.hi_pad);
  im.cur.assign(n, 0.0);
  for (std::size_t i = static_cast<std::size_t>(im.lo_pad); i < n; ++i) im.cur[i] = im.start;
  im.nxt = im.cur;
}

GridSolver::~GridSolver() = default;
GridSolver::GridSolver(GridSolver&&) noexcept = default;
GridSolver& GridSolver::operator=(GridSolver&&) noexcept = default;

double GridSolver::sweep_serial() {
  Impl& im = *impl_;
  const double* H = im.cur.data() + im.lo_pad;
  double* N = im.nxt.data() + im.lo_pad;
  double res = 0;
  for (int r = 0; r <= im.r_max; ++r) {
    N[r] = im.eval(H, r);
    res = std::max(res, std::abs(N[r] - H[r]));
  }
  std::swap(im.cur, im.nxt);
  ++im.iterations;
  im.out_valid = false;
  return res;
}

double GridSolver::sweep_parallel() {
  Impl& im = *impl_;
  const double* H = im.cur.data() + im.lo_pad;
  double* N = im.nxt.data() + im.lo_pad;
  double res = 0;
  const int rm = im.r_max;
#pragma omp parallel for schedule(static) reduction(max : res) num_threads(im.workers)
  for (int r = 0; r <= rm; ++r) {
    N[r] = im.eval(H, r);
    res = std::max(res, std::abs(N[r] - H[r]));
  }
  std::swap(im.cur, im.nxt);
  ++im.iterations;
  im.out_valid = false;
  return res;
}

double GridSolver::sweep() { return impl_->workers > 1 ? sweep_parallel() : sweep_serial(); }

const std::vector<double>& GridSolver::values() const {
  Impl& im = *impl_;
  if (!im.out_valid) {
    im.out.assign(im.cur.begin() + im.lo_pad, im.cur.begin() + im.lo_pad + im.r_max + 1);
    im.out_valid = true;
  }
  return im.out;
}

std::int64_t GridSolver::iterations() const { return impl_->iterations; }
double GridSolver::start() const { return impl_->start; }
int GridSolver::r_max() const { return impl_->r_max; }

GridSolution solve_h_grid(const SchemeSpec& spec, int r_max, double t, const GridOptions& opts) {
  GridSolver solver(spec, r_max, t, opts.workers);
  const auto floor = static_cast<std::int64_t>(std::ceil(opts.floor_factor * double(r_max) * double(r_max)));
  double res = 1;
  while (solver.iterations() < opts.max_iters) {
    res = solver.sweep();
    if (res < opts.tol && solver.iterations() >= floor) break;
  }
  GridSolution sol;
  sol.t = t;
  sol.r_max = r_max;
  sol.h = solver.values();
  sol.start = solver.start();
  sol.iterations = solver.iterations();
  sol.residual = res;
  sol.boundary_bias = sol.start - sol.h.back();
  sol.converged = res < opts.tol && sol.iterations >= floor;
  return sol;
}

std::vector<double> pdf_from_grid(const GridSolution& sol) {
  if (sol.t != 0) throw PreconditionError("pdf_from_grid: needs the untilted solution");
  std::vector<double> g(sol.h.size());
  for (std::size_t r = 0; r < g.size(); ++r) g[r] = sol.h[r] - (r ? sol.h[r - 1] : 0.0);
  return g;
}

LaplaceFunctionals laplace_functionals(const SchemeSpec& spec, int r, double alpha, int r_max,
                                       const GridOptions& opts) {
  if (r < 1 || r >= r_max) throw ConfigError("laplace_functionals: need 1 <= r < r_max");
  const SchemeMoments mo = scheme_moments(spec);
  LaplaceFunctionals f;
  f.r = r;
  f.alpha = alpha;
  f.t = t_of(r, alpha, mo.sigma2, mo.eta2);
  const GridSolution plain = solve_h_grid(spec, r_max, 0.0, opts);
  const GridSolution tilted = solve_h_grid(spec, r_max, f.t, opts);
  f.h_r = plain.at(r);
  f.h_t_r = tilted.at(r);
  f.h_t_inf = tilted.start;
  f.scaled_gap = double(r) * r * (1.0 - f.h_t_r / f.h_r);
  f.cond_gt = (f.h_t_inf - f.h_t_r) / (1.0 - f.h_r);
  f.cond_eq = (f.h_t_r - tilted.at(r - 1)) / (f.h_r - plain.at(r - 1));
  f.predicted_gap = big_R(alpha, mo.sigma2, mo.eta2);
  f.predicted_gt = laplace_limit_gt(alpha, mo.sigma2);
  f.iterations_plain = plain.iterations;
  f.iterations_tilted = tilted.iterations;
  return f;
}

}  // namespace brw
