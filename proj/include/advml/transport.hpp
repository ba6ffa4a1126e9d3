#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "advml/tensor.hpp"

namespace advml {

// Dense n x n matrix, row-major.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, double fill = 0.0) : n(size), values(size * size, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Euclidean distance between pixel centres of an h x w grid, indexed
// row-major (pixel (r, c) has index r * w + c).
SquareMatrix pixel_cost_matrix(std::size_t height, std::size_t width);

struct TransportPlan {
  SquareMatrix plan;
  SquareMatrix cost;
  double distance = 0.0;
};

// Largest instance the exact solver accepts.
inline constexpr std::size_t kExactTransportMaxSize = 64;

// Exact optimal transport cost min <T, C> subject to T 1 = x, T^T 1 = y,
// T >= 0. Solved as an uncapacitated min-cost flow by successive shortest
// paths with Dijkstra on reduced costs. Both marginals must be nonnegative
// and sum to 1 within 1e-9.
TransportPlan wasserstein_exact(std::span<const double> x, std::span<const double> y,
                                const SquareMatrix& cost);
TransportPlan wasserstein_exact(const Tensor& x, const Tensor& y, const SquareMatrix& cost);

struct SinkhornOptions {
  double lambda = 300.0;
  // Side of the square neighbourhood a pixel's mass may move within; odd.
  std::size_t region = 5;
  double tolerance = 1e-6;
  int max_iterations = 2000;
  // Optional per-pixel upper bound on the projected image (box constraint).
  std::optional<double> upper_bound;
};

struct SinkhornResult {
  Tensor projection;
  // <T, C> of the returned local plan; upper-bounds the exact distance.
  double transport_cost = 0.0;
  double dual_psi = 0.0;
  int iterations = 0;
  double row_residual = 0.0;
  double column_residual = 0.0;
  double constraint_residual = 0.0;
};

// Approximate projection of `query` onto the Wasserstein ball of radius eps
// around the distribution `x` (an h x w image summing to 1):
//   min ||query - z||^2 / 2 + (1/lambda) sum T log T
//   s.t. T 1 = x, T^T 1 = z, <T, C> <= eps,
// with T supported on region x region pixel neighbourhoods. Solved by block
// coordinate ascent on the dual (closed-form row update, Lambert-W column
// update, safeguarded Newton on the ball multiplier). The returned image is
// the column marginal of the final plan, so it has exactly the mass of x and
// transport_cost certifies its distance. Throws ConvergenceError carrying
// {row, column, constraint} residuals when max_iterations is reached.
SinkhornResult projected_sinkhorn_solve(const Tensor& x, const Tensor& query, double eps,
                                        const SinkhornOptions& options = {});

Tensor projected_sinkhorn(const Tensor& x, const Tensor& query, double eps, double lambda,
                          std::size_t region = 5);

// W(e^L): the principal Lambert-W branch evaluated at exp(L) without forming
// exp(L).
double lambert_w_of_exp(double log_argument);

}  // namespace advml
