#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "brw/scheme.hpp"

namespace brw {

struct GridOptions {
  double tol = 1e-13;
  std::int64_t max_iters = 50'000'000;
  // Never stop before floor_factor * r_max^2 sweeps; the residual alone
  // undershoots the error while the profile is still creeping outward.
  double floor_factor = 0.5;
  int workers = 1;
};

struct GridSolution {
  double t = 0;
  int r_max = 0;
  std::vector<double> h;  // h[r], r = 0..r_max
  double start = 1;       // value used above r_max (1, or h_t(inf) when t > 0)
  std::int64_t iterations = 0;
  double residual = 0;
  double boundary_bias = 0;  // start - h[r_max]
  bool converged = false;

  double at(int r) const { return r < 0 ? 0.0 : (r > r_max ? start : h[static_cast<std::size_t>(r)]); }
  double w(int r) const { return 1.0 / at(r) - 1.0; }
};

/// Jacobi iteration of the fixed-point map h -> E[exp(-tD) 1{Lambda <= r} prod h(r - X_i)]
/// on {0..r_max}. Exposed for tests that inspect individual sweeps.
class GridSolver {
 public:
  GridSolver(const SchemeSpec& spec, int r_max, double t, int workers = 1);
  ~GridSolver();
  GridSolver(GridSolver&&) noexcept;
  GridSolver& operator=(GridSolver&&) noexcept;

  double sweep();           // dispatches on the worker count; returns the sup-norm change
  double sweep_serial();    // reference kernel
  double sweep_parallel();  // OpenMP kernel
  const std::vector<double>& values() const;
  std::int64_t iterations() const;
  double start() const;
  int r_max() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

GridSolution solve_h_grid(const SchemeSpec& spec, int r_max, double t, const GridOptions& opts = {});

// g(r) = h(r) - h(r - 1); only meaningful for t = 0.
std::vector<double> pdf_from_grid(const GridSolution& sol);

struct LaplaceFunctionals {
  double r = 0, alpha = 0, t = 0;
  double h_r = 0, h_t_r = 0, h_t_inf = 1;
  double scaled_gap = 0;  // r^2 (1 - h_t(r) / h(r))
  double cond_gt = 0;     // E[exp(-t W) | sup > r]
  double cond_eq = 0;     // E[exp(-t W) | sup = r]
  double predicted_gap = 0;
  double predicted_gt = 0;
  std::int64_t iterations_plain = 0, iterations_tilted = 0;
};

LaplaceFunctionals laplace_functionals(const SchemeSpec& spec, int r, double alpha, int r_max,
                                       const GridOptions& opts = {});

}  // namespace brw
