#include "advml/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advml/dataset.hpp"
#include "advml/error.hpp"
#include "advml/kernels.hpp"

namespace advml {
namespace {

std::vector<double> signed_labels(const Dataset& data) {
  if (data.class_count() != 2) throw InvalidInput("SVM needs a two-class dataset");
  std::vector<double> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data.class_index(i) == 1 ? 1.0 : -1.0;
  return y;
}

}  // namespace

SvmModel::SvmModel(std::vector<double> w, double b, std::vector<double> alphas,
                   std::vector<std::size_t> support)
    : w_(std::move(w)), b_(b), alphas_(std::move(alphas)), support_(std::move(support)) {}

SvmDecision SvmModel::decide(std::span<const double> x) const {
  if (x.size() != w_.size()) throw InvalidInput("SVM input has the wrong width");
  SvmDecision d;
  d.value = kernels::dot(w_, x) + b_;
  d.label = d.value >= 0.0 ? 1 : -1;
  return d;
}

std::vector<double> SvmModel::probabilities(std::span<const double> x) const {
  const double v = decide(x).value;
  const double p = 1.0 / (1.0 + std::exp(-v));
  return {1.0 - p, p};
}

int SvmModel::classify(std::span<const double> x) const { return decide(x).label > 0 ? 1 : 0; }

SvmDecision svm_decision(const SvmModel& model, std::span<const double> x) { return model.decide(x); }

SvmModel svm_train(const Dataset& data, const SvmOptions& options) {
  const std::size_t n = data.size();
  if (n < 2) throw InvalidInput("SVM needs at least two examples");
  const auto y = signed_labels(data);
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
    throw InvalidInput("SVM needs examples of both classes");
  }
  const std::size_t d = data.feature_count();

  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = kernels::dot(data.input(i).values(), data.input(j).values());
      q[i * n + j] = q[j * n + i] = y[i] * y[j] * k;
    }
  }

  // Minimisation form f = 1/2 a'Qa - e'a with gradient G = Qa - e.
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  const int max_iter = options.max_iterations > 0 ? options.max_iterations
                                                  : static_cast<int>(1000 * n + 100000);
  constexpr double kTau = 1e-12;
  int iter = 0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool up = y[t] > 0 || alpha[t] > 0.0;
      const bool low = y[t] < 0 || alpha[t] > 0.0;
      if (up && v > gmax) { gmax = v; i = t; }
      if (low && v < gmin) { gmin = v; j = t; }
    }
    // Stop on both the pair gap and its alpha-weighted size, which bounds the
    // complementarity residual alpha_i (y_i f(x_i) - 1).
    const double amax = std::max(1.0, *std::max_element(alpha.begin(), alpha.end()));
    if (gmax - gmin < options.tolerance / amax) break;
    if (iter >= max_iter) {
      throw SolverError("SVM solver hit the iteration limit with KKT violation " +
                        std::to_string(gmax - gmin) + "; data may not be linearly separable");
    }
    const double ai = alpha[i], aj = alpha[j];
    const double qii = q[i * n + i], qjj = q[j * n + j], qij = q[i * n + j];
    if (y[i] != y[j]) {
      const double quad = std::max(qii + qjj + 2.0 * qij, kTau);
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0 && alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = diff;
      } else if (diff <= 0.0 && alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
    } else {
      const double quad = std::max(qii + qjj - 2.0 * qij, kTau);
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      alpha[i] -= delta;
      alpha[j] += delta;
      if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
    if (alpha[i] > options.alpha_limit || alpha[j] > options.alpha_limit) {
      throw SolverError("SVM dual multipliers diverged (alpha > " + std::to_string(options.alpha_limit) +
                        "); data are not linearly separable");
    }
  }

  std::vector<double> w(d, 0.0);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > options.support_threshold) {
      support.push_back(i);
      kernels::axpy(alpha[i] * y[i], data.input(i).values(), w);
    }
  }
  double b = 0.0;
  for (std::size_t s : support) b += y[s] - kernels::dot(w, data.input(s).values());
  b /= static_cast<double>(support.size());

  SvmModel model(std::move(w), b, std::move(alpha), std::move(support));
  model.set_iterations(iter);
  const auto kkt = svm_kkt_residual(model, data);
  if (kkt.min_margin < 1.0 - 1e-3) {
    throw SolverError("SVM solution violates the hard margin (min y f(x) = " +
                      std::to_string(kkt.min_margin) + "); data may not be linearly separable");
  }
  return model;
}

KktResidual svm_kkt_residual(const SvmModel& model, const Dataset& data) {
  const auto y = signed_labels(data);
  KktResidual r;
  r.min_margin = std::numeric_limits<double>::infinity();
  double eq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double m = y[i] * model.decide(data.input(i).values()).value;
    r.min_margin = std::min(r.min_margin, m);
    r.complementarity = std::max(r.complementarity, std::fabs(model.alphas()[i] * (m - 1.0)));
    eq += model.alphas()[i] * y[i];
  }
  r.equality = std::fabs(eq);
  return r;
}

double svm_primal_objective(const SvmModel& model) { return 0.5 * kernels::sum_squares(model.w()); }

double svm_dual_objective(const SvmModel& model, const Dataset& data) {
  const auto y = signed_labels(data);
  std::vector<double> w(data.feature_count(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += model.alphas()[i];
    kernels::axpy(model.alphas()[i] * y[i], data.input(i).values(), w);
  }
  return total - 0.5 * kernels::sum_squares(w);
}

}  // namespace advml
