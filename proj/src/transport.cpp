#include "advml/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "advml/error.hpp"

namespace advml {

SquareMatrix pixel_cost_matrix(std::size_t height, std::size_t width) {
  const std::size_t n = height * width;
  SquareMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = static_cast<double>(i / width), ci = static_cast<double>(i % width);
    for (std::size_t j = 0; j < n; ++j) {
      const double rj = static_cast<double>(j / width), cj = static_cast<double>(j % width);
      c(i, j) = std::hypot(ri - rj, ci - cj);
    }
  }
  return c;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFlowEps = 1e-18;

void check_marginal(std::span<const double> m, const char* which) {
  double total = 0.0;
  for (double v : m) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidInput(std::string("wasserstein_exact: ") + which + " marginal has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw InvalidInput(std::string("wasserstein_exact: ") + which + " marginal is not normalized (sum " +
                       std::to_string(total) + ")");
  }
}

}  // namespace

TransportPlan wasserstein_exact(std::span<const double> x, std::span<const double> y,
                                const SquareMatrix& cost) {
  const std::size_t n = x.size();
  if (y.size() != n || cost.n != n) throw InvalidInput("wasserstein_exact: size mismatch");
  if (n == 0) throw InvalidInput("wasserstein_exact: empty marginals");
  if (n > kExactTransportMaxSize) {
    throw UnsupportedSize("wasserstein_exact supports at most " + std::to_string(kExactTransportMaxSize) +
                          " bins, got " + std::to_string(n));
  }
  check_marginal(x, "source");
  check_marginal(y, "target");
  for (double c : cost.values) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidInput("wasserstein_exact: cost must be finite and nonnegative");
  }

  // Nodes: 0 = super source, 1..n = supplies, n+1..2n = demands, 2n+1 = sink.
  const std::size_t nodes = 2 * n + 2;
  const std::size_t src = 0, sink = 2 * n + 1;
  auto supply_node = [](std::size_t i) { return 1 + i; };
  auto demand_node = [n](std::size_t j) { return 1 + n + j; };

  std::vector<double> supply(x.begin(), x.end());
  std::vector<double> demand(y.begin(), y.end());
  SquareMatrix flow(n);
  std::vector<double> potential(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);

  for (;;) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[src] = 0.0;
    for (;;) {
      std::size_t u = nodes;
      double best = kInf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      }
      if (u == nodes || u == sink) break;
      done[u] = 1;
      auto relax = [&](std::size_t v, double c) {
        const double reduced = std::max(0.0, c + potential[u] - potential[v]);
        if (dist[u] + reduced < dist[v]) {
          dist[v] = dist[u] + reduced;
          parent[v] = u;
        }
      };
      if (u == src) {
        for (std::size_t i = 0; i < n; ++i) {
          if (supply[i] > kFlowEps) relax(supply_node(i), 0.0);
        }
      } else if (u <= n) {
        const std::size_t i = u - 1;
        for (std::size_t j = 0; j < n; ++j) relax(demand_node(j), cost(i, j));
      } else {
        const std::size_t j = u - 1 - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow(i, j) > kFlowEps) relax(supply_node(i), -cost(i, j));
        }
        if (demand[j] > kFlowEps) relax(sink, 0.0);
      }
    }
    if (!std::isfinite(dist[sink])) break;
    for (std::size_t v = 0; v < nodes; ++v) potential[v] += std::min(dist[v], dist[sink]);

    // Bottleneck along the path sink <- ... <- source.
    double amount = kInf;
    for (std::size_t v = sink; v != src;) {
      const std::size_t u = parent[v];
      if (u == src) {
        amount = std::min(amount, supply[v - 1]);
      } else if (v == sink) {
        amount = std::min(amount, demand[u - 1 - n]);
      } else if (u > n) {
        amount = std::min(amount, flow(v - 1, u - 1 - n));
      }
      v = u;
    }
    for (std::size_t v = sink; v != src;) {
      const std::size_t u = parent[v];
      if (u == src) {
        supply[v - 1] -= amount;
        if (supply[v - 1] < kFlowEps) supply[v - 1] = 0.0;
      } else if (v == sink) {
        demand[u - 1 - n] -= amount;
        if (demand[u - 1 - n] < kFlowEps) demand[u - 1 - n] = 0.0;
      } else if (u <= n) {
        flow(u - 1, v - 1 - n) += amount;
      } else {
        double& f = flow(v - 1, u - 1 - n);
        f -= amount;
        if (f < kFlowEps) f = 0.0;
      }
      v = u;
    }
  }

  TransportPlan out;
  out.plan = std::move(flow);
  out.cost = cost;
  double d = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) d += out.plan.values[k] * cost.values[k];
  out.distance = d;
  return out;
}

TransportPlan wasserstein_exact(const Tensor& x, const Tensor& y, const SquareMatrix& cost) {
  return wasserstein_exact(x.values(), y.values(), cost);
}

double lambert_w_of_exp(double log_argument) {
  // Solve e^t + t = L for t = log W; the left side is increasing and convex,
  // so Newton from a point right of the root decreases monotonically onto it.
  const double big_l = log_argument;
  double t = big_l < 2.0 ? big_l : std::log(big_l);
  for (int it = 0; it < 100; ++it) {
    const double et = std::exp(t);
    const double g = et + t - big_l;
    const double step = g / (et + 1.0);
    t -= step;
    if (std::fabs(step) <= 1e-15 * std::max(1.0, std::fabs(t))) break;
  }
  return std::exp(t);
}

namespace {

struct Neighbour {
  std::size_t index;
  double cost;
};

double log_sum_exp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

class LocalSinkhorn {
 public:
  LocalSinkhorn(const Tensor& x, const Tensor& query, double eps, const SinkhornOptions& opt)
      : shape_(x.shape()), x_(x.vec()), w_(query.vec()), eps_(eps), opt_(opt), n_(x.size()) {
    const std::size_t h = x.height(), wd = x.width();
    const long half = static_cast<long>(opt.region / 2);
    nbr_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const long r = static_cast<long>(i / wd), c = static_cast<long>(i % wd);
      for (long dr = -half; dr <= half; ++dr) {
        for (long dc = -half; dc <= half; ++dc) {
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(wd)) continue;
          nbr_[i].push_back({static_cast<std::size_t>(rr) * wd + static_cast<std::size_t>(cc),
                             std::hypot(static_cast<double>(dr), static_cast<double>(dc))});
        }
      }
    }
    la_.assign(n_, 0.0);
    lb_.assign(n_, 0.0);
    z_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] <= 0.0) la_[i] = -kInf;
    }
  }

  SinkhornResult run() {
    const double lam = opt_.lambda;
    SinkhornResult res;
    for (int it = 1; it <= opt_.max_iterations; ++it) {
      update_rows();
      update_columns();
      update_psi();
      res.iterations = it;
      residuals(res);
      if (res.row_residual <= opt_.tolerance && res.column_residual <= opt_.tolerance &&
          res.constraint_residual <= opt_.tolerance) {
        finish(res);
        return res;
      }
    }
    throw ConvergenceError("projected Sinkhorn did not converge in " + std::to_string(opt_.max_iterations) +
                               " iterations (lambda " + std::to_string(lam) + ")",
                           {res.row_residual, res.column_residual, res.constraint_residual},
                           res.iterations);
  }

 private:
  double log_kernel(std::size_t i, const Neighbour& nb) const {
    return la_[i] + lb_[nb.index] - opt_.lambda * psi_ * nb.cost - 1.0;
  }

  void update_rows() {
    std::vector<double> terms;
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] <= 0.0) continue;
      terms.clear();
      for (const auto& nb : nbr_[i]) terms.push_back(lb_[nb.index] - opt_.lambda * psi_ * nb.cost - 1.0);
      la_[i] = std::log(x_[i]) - log_sum_exp(terms);
    }
  }

  // log s_j = log sum_i exp(la_i - lambda psi C_ij - 1); the window is symmetric
  // so row neighbourhoods double as column neighbourhoods.
  std::vector<double> column_log_mass() const {
    std::vector<double> out(n_);
    std::vector<double> terms;
    for (std::size_t j = 0; j < n_; ++j) {
      terms.clear();
      for (const auto& nb : nbr_[j]) {
        if (x_[nb.index] <= 0.0) continue;
        terms.push_back(la_[nb.index] - opt_.lambda * psi_ * nb.cost - 1.0);
      }
      out[j] = terms.empty() ? -kInf : log_sum_exp(terms);
    }
    return out;
  }

  void update_columns() {
    const double lam = opt_.lambda;
    const auto log_s = column_log_mass();
    for (std::size_t j = 0; j < n_; ++j) {
      if (!std::isfinite(log_s[j])) {
        z_[j] = 0.0;
        lb_[j] = lam * w_[j];
        continue;
      }
      double z = lambert_w_of_exp(std::log(lam) + log_s[j] + lam * w_[j]) / lam;
      double lb = lam * (w_[j] - z);
      if (opt_.upper_bound && z > *opt_.upper_bound) {
        z = *opt_.upper_bound;
        lb = std::log(z) - log_s[j];
      }
      z_[j] = z;
      lb_[j] = lb;
    }
  }

  // log sum C T and log sum C^2 T at multiplier psi.
  std::pair<double, double> cost_moments(double psi) const {
    std::vector<double> t1, t2;
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] <= 0.0) continue;
      for (const auto& nb : nbr_[i]) {
        if (nb.cost <= 0.0) continue;
        const double lt = la_[i] + lb_[nb.index] - opt_.lambda * psi * nb.cost - 1.0;
        t1.push_back(lt + std::log(nb.cost));
        t2.push_back(lt + 2.0 * std::log(nb.cost));
      }
    }
    return {log_sum_exp(t1), log_sum_exp(t2)};
  }

  void update_psi() {
    const double log_eps = std::log(eps_);
    auto f = [&](double psi) { return cost_moments(psi).first - log_eps; };
    if (f(0.0) <= 0.0) {
      psi_ = 0.0;
      return;
    }
    // f is decreasing in psi; bracket the root then safeguarded Newton.
    double lo = 0.0, hi = std::max(psi_, 1e-3);
    while (f(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) break;
    }
    double psi = std::clamp(psi_, lo, hi);
    for (int k = 0; k < 60; ++k) {
      const auto [l1, l2] = cost_moments(psi);
      const double fv = l1 - log_eps;
      if (std::fabs(fv) < 1e-12) break;
      if (fv > 0.0) lo = psi; else hi = psi;
      const double deriv = -opt_.lambda * std::exp(l2 - l1);
      double next = psi - fv / deriv;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - psi) <= 1e-15 * std::max(1.0, psi)) {
        psi = next;
        break;
      }
      psi = next;
    }
    psi_ = psi;
  }

  void residuals(SinkhornResult& res) const {
    std::vector<double> col(n_, 0.0);
    double row_res = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] <= 0.0) continue;
      double row = 0.0;
      for (const auto& nb : nbr_[i]) {
        const double t = std::exp(log_kernel(i, nb));
        row += t;
        col[nb.index] += t;
        cost += t * nb.cost;
      }
      row_res = std::max(row_res, std::fabs(row - x_[i]));
    }
    double col_res = 0.0;
    for (std::size_t j = 0; j < n_; ++j) col_res = std::max(col_res, std::fabs(col[j] - z_[j]));
    res.row_residual = row_res;
    res.column_residual = col_res;
    res.constraint_residual = psi_ > 0.0 ? std::fabs(cost - eps_) : std::max(0.0, cost - eps_);
  }

  void finish(SinkhornResult& res) {
    // Re-balance rows so the plan's row marginal is x, then read the
    // projected image off its columns.
    update_rows();
    std::vector<double> col(n_, 0.0);
    double cost = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (x_[i] <= 0.0) continue;
      for (const auto& nb : nbr_[i]) {
        const double t = std::exp(log_kernel(i, nb));
        col[nb.index] += t;
        cost += t * nb.cost;
      }
    }
    res.projection = Tensor(std::move(col), shape_);
    res.transport_cost = cost;
    res.dual_psi = psi_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> x_, w_;
  double eps_;
  SinkhornOptions opt_;
  std::size_t n_;
  std::vector<std::vector<Neighbour>> nbr_;
  std::vector<double> la_, lb_, z_;
  double psi_ = 0.0;
};

}  // namespace

SinkhornResult projected_sinkhorn_solve(const Tensor& x, const Tensor& query, double eps,
                                        const SinkhornOptions& options) {
  if (!x.is_image() || x.channels() != 1) throw InvalidInput("projected_sinkhorn: x must be a single-channel image");
  if (x.size() != query.size()) throw InvalidInput("projected_sinkhorn: shape mismatch");
  if (!(options.lambda > 0.0)) throw InvalidInput("projected_sinkhorn: lambda must be positive");
  if (options.region % 2 == 0) throw InvalidInput("projected_sinkhorn: region size must be odd");
  if (eps < 0.0) throw InvalidInput("projected_sinkhorn: eps must be nonnegative");
  double mass = 0.0;
  for (double v : x) {
    if (v < 0.0) throw InvalidInput("projected_sinkhorn: x must be nonnegative");
    mass += v;
  }
  if (std::fabs(mass - 1.0) > 1e-9) throw InvalidInput("projected_sinkhorn: x must sum to 1");
  if (!query.all_finite()) throw InvalidInput("projected_sinkhorn: query is not finite");

  SinkhornResult res;
  if (eps == 0.0 || query == x || query.vec() == x.vec()) {
    res.projection = x;
    return res;
  }
  LocalSinkhorn solver(x, query, eps, options);
  return solver.run();
}

Tensor projected_sinkhorn(const Tensor& x, const Tensor& query, double eps, double lambda,
                          std::size_t region) {
  SinkhornOptions opt;
  opt.lambda = lambda;
  opt.region = region;
  return projected_sinkhorn_solve(x, query, eps, opt).projection;
}

}  // namespace advml
