#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "advml/error.hpp"
#include "advml/norms.hpp"
#include "advml/rng.hpp"
#include "advml/shadow.hpp"
#include "advml/transport.hpp"

using namespace advml;

namespace {

Tensor random_tensor(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Tensor t({n});
  for (double& v : t) v = uniform(rng, lo, hi);
  return t;
}

Tensor random_distribution(Rng& rng, std::vector<std::size_t> shape, double floor = 0.0) {
  Tensor t(shape);
  double m = 0.0;
  for (double& v : t) {
    v = uniform(rng) + floor;
    m += v;
  }
  for (double& v : t) v /= m;
  return t;
}

// Minimum of <T, C> over vertices of the transport polytope: every basic
// feasible solution has at most 2n - 1 nonzeros, so enumerate supports of that
// size, solve the equality system restricted to them and keep nonnegative
// solutions.
double brute_force_transport(const std::vector<double>& x, const std::vector<double>& y, const SquareMatrix& c) {
  const int n = static_cast<int>(x.size());
  const int vars = n * n, basis = 2 * n - 1;
  // The last column constraint is implied by the others.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(basis, vars);
  Eigen::VectorXd rhs(basis);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, i * n + j) = 1.0;
    rhs(i) = x[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < n - 1; ++j) {
    for (int i = 0; i < n; ++i) a(n + j, i * n + j) = 1.0;
    rhs(n + j) = y[static_cast<std::size_t>(j)];
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(basis));
  for (int k = 0; k < basis; ++k) pick[static_cast<std::size_t>(k)] = k;
  while (true) {
    Eigen::MatrixXd sub(basis, basis);
    for (int k = 0; k < basis; ++k) sub.col(k) = a.col(pick[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.isInvertible()) {
      const Eigen::VectorXd t = lu.solve(rhs);
      if (t.minCoeff() >= -1e-12) {
        double cost = 0.0;
        for (int k = 0; k < basis; ++k) cost += t(k) * c.values[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])];
        best = std::min(best, cost);
      }
    }
    int k = basis - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == vars - basis + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int m = k + 1; m < basis; ++m) pick[static_cast<std::size_t>(m)] = pick[static_cast<std::size_t>(m - 1)] + 1;
  }
  return best;
}

}  // namespace

TEST(LpNorm, Examples) {
  EXPECT_EQ(lp_norm(Tensor::from({1, 0, -2}), NormKind::L0), 2.0);
  EXPECT_EQ(lp_norm(Tensor::from({3, 4}), NormKind::L2), 5.0);
  EXPECT_EQ(lp_norm(Tensor::from({1, -3, 2}), NormKind::Linf), 3.0);
  EXPECT_EQ(lp_norm(Tensor::from({1, -3, 2}), NormKind::L1), 6.0);
}

TEST(LpNorm, EmptyThrows) { EXPECT_THROW(lp_norm(Tensor{}, NormKind::L2), InvalidInput); }

TEST(LpNorm, Axioms) {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor a = random_tensor(rng, 17), b = random_tensor(rng, 17);
    const double s = uniform(rng, -3.0, 3.0);
    for (NormKind p : {NormKind::L1, NormKind::L2, NormKind::Linf}) {
      EXPECT_LE(lp_norm(a + b, p), lp_norm(a, p) + lp_norm(b, p) + 1e-12);
      EXPECT_NEAR(lp_norm(s * a, p), std::fabs(s) * lp_norm(a, p), 1e-12);
      EXPECT_GT(lp_norm(a, p), 0.0);
    }
    EXPECT_LE(lp_norm(a + b, NormKind::L0), lp_norm(a, NormKind::L0) + lp_norm(b, NormKind::L0));
  }
  for (NormKind p : {NormKind::L0, NormKind::L1, NormKind::L2, NormKind::Linf}) {
    EXPECT_EQ(lp_norm(Tensor({5}, 0.0), p), 0.0);
  }
}

TEST(LpNorm, ParseRoundTrip) {
  for (NormKind p : {NormKind::L0, NormKind::L1, NormKind::L2, NormKind::Linf}) {
    EXPECT_EQ(parse_norm(to_string(p)), p);
  }
  EXPECT_FALSE(parse_norm("l7").has_value());
}

TEST(ProjectFeasible, Examples) {
  const Tensor c0 = Tensor::from({0.0});
  EXPECT_EQ(project_feasible(Tensor::from({1.0}), c0, 0.3, NormKind::Linf)[0], 0.3);
  const Tensor r = project_feasible(Tensor::from({3, 4}), Tensor::from({0, 0}), 1.0, NormKind::L2, {-10, 10});
  EXPECT_NEAR(r[0], 0.6, 1e-12);
  EXPECT_NEAR(r[1], 0.8, 1e-12);
  const Tensor feasible = Tensor::from({0.4, 0.6});
  EXPECT_EQ(project_feasible(feasible, Tensor::from({0.5, 0.5}), 0.2, NormKind::Linf), feasible);
  EXPECT_EQ(project_feasible(feasible, Tensor::from({0.5, 0.5}), 0.2, NormKind::L2), feasible);
}

TEST(ProjectFeasible, Errors) {
  EXPECT_THROW(project_feasible(Tensor::from({1, 2}), Tensor::from({1}), 0.1, NormKind::L2), InvalidInput);
  EXPECT_THROW(project_feasible(Tensor::from({1}), Tensor::from({1}), 0.0, NormKind::L2), InvalidInput);
  EXPECT_THROW(project_feasible(Tensor::from({1}), Tensor::from({1}), 0.1, NormKind::L1), InvalidInput);
  EXPECT_THROW(project_feasible(Tensor::from({1}), Tensor::from({1}), 0.1, NormKind::L2, {1, 0}), InvalidInput);
}

TEST(ProjectFeasible, FeasibleAndIdempotent) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const Tensor center = random_tensor(rng, 30, 0.0, 1.0);
    const Tensor x = random_tensor(rng, 30, -1.0, 2.0);
    const double eps = uniform(rng, 0.01, 2.0);
    for (NormKind p : {NormKind::L2, NormKind::Linf}) {
      const Tensor r = project_feasible(x, center, eps, p);
      EXPECT_LE(lp_distance(r, center, p), eps + 1e-9);
      for (double v : r) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_EQ(project_feasible(r, center, eps, p), r);
    }
  }
}

TEST(Wasserstein, Identity) {
  const auto c = pixel_cost_matrix(2, 2);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const auto plan = wasserstein_exact(x, x, c);
  EXPECT_NEAR(plan.distance, 0.0, 1e-15);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(plan.plan(i, j), i == j ? x[i] : 0.0, 1e-15);
  }
}

TEST(Wasserstein, TwoPoint) {
  SquareMatrix c(2, 0.0);
  c(0, 1) = c(1, 0) = 2.0;
  const std::vector<double> x{1, 0}, y{0, 1};
  EXPECT_NEAR(wasserstein_exact(x, y, c).distance, 2.0, 1e-15);
}

TEST(Wasserstein, MatchesVertexEnumeration) {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    SquareMatrix c(4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) c(i, j) = i == j ? 0.0 : uniform(rng, 0.1, 3.0);
    }
    const Tensor x = random_distribution(rng, {4}), y = random_distribution(rng, {4});
    const auto plan = wasserstein_exact(x, y, c);
    EXPECT_NEAR(plan.distance, brute_force_transport(x.vec(), y.vec(), c), 1e-6);
    for (std::size_t i = 0; i < 4; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_GE(plan.plan(i, j), 0.0);
        row += plan.plan(i, j);
        col += plan.plan(j, i);
      }
      EXPECT_NEAR(row, x[i], 1e-6);
      EXPECT_NEAR(col, y[i], 1e-6);
    }
  }
}

TEST(Wasserstein, SymmetricCost) {
  Rng rng = make_rng(3);
  const auto c = pixel_cost_matrix(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_distribution(rng, {9}), y = random_distribution(rng, {9});
    EXPECT_NEAR(wasserstein_exact(x, y, c).distance, wasserstein_exact(y, x, c).distance, 1e-9);
    EXPECT_NEAR(wasserstein_exact(x, x, c).distance, 0.0, 1e-12);
  }
}

TEST(Wasserstein, Errors) {
  const auto c = pixel_cost_matrix(1, 2);
  EXPECT_THROW(wasserstein_exact(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5}, c), InvalidInput);
  EXPECT_THROW(wasserstein_exact(std::vector<double>{1.5, -0.5}, std::vector<double>{0.5, 0.5}, c), InvalidInput);
  const auto big = pixel_cost_matrix(9, 9);
  const std::vector<double> u(81, 1.0 / 81.0);
  EXPECT_THROW(wasserstein_exact(u, u, big), UnsupportedSize);
}

TEST(LambertW, SatisfiesDefinition) {
  for (double l : {-30.0, -2.0, 0.0, 1.0, 5.0, 50.0, 700.0, 5000.0}) {
    const double w = lambert_w_of_exp(l);
    EXPECT_NEAR(std::log(w) + w, l, 1e-12 * std::max(1.0, std::fabs(l)));
  }
}

TEST(Sinkhorn, QueryEqualsXIsIdentity) {
  Rng rng = make_rng(1);
  const Tensor x = random_distribution(rng, {5, 5});
  EXPECT_EQ(projected_sinkhorn(x, x, 0.1, 300.0), x);
}

TEST(Sinkhorn, DefaultRegionIsFive) { EXPECT_EQ(SinkhornOptions{}.region, 5u); }

TEST(Sinkhorn, CertifiedByExactSolver) {
  const auto c = pixel_cost_matrix(5, 5);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng = make_rng(seed, 77);
    const Tensor x = random_distribution(rng, {5, 5}, 0.05);
    Tensor q = x;
    for (double& v : q) v += 0.05 * standard_normal(rng);
    const double eps = uniform(rng, 0.02, 0.4);
    const auto res = projected_sinkhorn_solve(x, q, eps);
    double mass = 0.0;
    for (double v : res.projection) {
      EXPECT_GE(v, 0.0);
      mass += v;
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_LE(wasserstein_exact(x, res.projection, c).distance, 1.05 * eps);
    EXPECT_LE(res.row_residual, 1e-6);
  }
}

TEST(Sinkhorn, UpperBoundRespected) {
  Rng rng = make_rng(8);
  const Tensor x = random_distribution(rng, {4, 4}, 0.2);
  Tensor q = x;
  q[5] += 0.5;
  SinkhornOptions opt;
  opt.upper_bound = 0.12;
  const auto res = projected_sinkhorn_solve(x, q, 0.5, opt);
  for (double v : res.projection) EXPECT_LE(v, 0.12 + 1e-6);
}

TEST(Sinkhorn, NonConvergenceCarriesResiduals) {
  Rng rng = make_rng(4);
  const Tensor x = random_distribution(rng, {5, 5}, 0.05);
  Tensor q = x;
  for (double& v : q) v += 0.05 * standard_normal(rng);
  SinkhornOptions opt;
  opt.max_iterations = 2;
  try {
    projected_sinkhorn_solve(x, q, 0.1, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.residuals().size(), 3u);
    EXPECT_EQ(e.iterations(), 2);
  }
}

TEST(Sinkhorn, RejectsBadInput) {
  const Tensor x({3, 3}, 1.0 / 9.0);
  EXPECT_THROW(projected_sinkhorn(x, x, 0.1, 300.0, 4), InvalidInput);
  EXPECT_THROW(projected_sinkhorn(Tensor({3, 3}, 0.5), x, 0.1, 300.0), InvalidInput);
  EXPECT_THROW(projected_sinkhorn(x, x, 0.1, 0.0), InvalidInput);
}

TEST(Shadow, ZeroPerturbation) {
  const auto p = shadow_penalties(Tensor({4, 4, 3}, 0.0));
  EXPECT_EQ(p.tv, 0.0);
  EXPECT_EQ(p.color_mean, 0.0);
  EXPECT_EQ(p.channel_diff, 0.0);
}

TEST(Shadow, EqualChannels) {
  Rng rng = make_rng(2);
  Tensor d({3, 5, 3});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = uniform(rng, -1, 1);
      for (std::size_t ch = 0; ch < 3; ++ch) d.at(r, c, ch) = v;
    }
  }
  EXPECT_EQ(shadow_penalties(d).channel_diff, 0.0);
}

TEST(Shadow, SinglePixelByHand) {
  // One pixel of value v at (1, 1) in channel 0 of a 3 x 3 image.
  // (0,1): down diff v -> v^2; (1,0): right diff v -> v^2;
  // (1,1): down -v, right -v -> (2v)^2. TV = 6 v^2.
  const double v = 0.7;
  Tensor d({3, 3, 3}, 0.0);
  d.at(1, 1, 0) = v;
  const auto p = shadow_penalties(d);
  EXPECT_NEAR(p.tv, 6.0 * v * v, 1e-9);
  EXPECT_NEAR(p.color_mean, v / 9.0, 1e-12);
  EXPECT_NEAR(p.channel_diff, 2.0 * v, 1e-12);
}

TEST(Shadow, RejectsWrongChannels) {
  EXPECT_THROW(shadow_penalties(Tensor({3, 3, 1}, 0.0)), InvalidInput);
  EXPECT_THROW(shadow_penalties(Tensor({3, 3}, 0.0)), InvalidInput);
}

TEST(Shadow, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(9);
  Tensor d({3, 4, 3});
  for (double& v : d) v = uniform(rng, -0.5, 0.5);
  const ShadowWeights w;
  const Tensor g = shadow_penalty_gradient(d, w);
  const double h = 1e-6;
  for (std::size_t i = 0; i < d.size(); ++i) {
    Tensor a = d, b = d;
    a[i] += h;
    b[i] -= h;
    const double fd = (shadow_penalty_total(shadow_penalties(a), w) - shadow_penalty_total(shadow_penalties(b), w)) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-5);
  }
}
