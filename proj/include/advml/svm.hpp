#pragma once

#include <span>
#include <vector>

#include "advml/classifier.hpp"

namespace advml {

class Dataset;

struct SvmDecision {
  double value = 0.0;
  int label = 1;  // sign(value), with 0 mapped to +1
};

// Hard-margin linear SVM, w = sum_i alpha_i y_i x_i.
// As a Classifier, class 1 means +1 and class 0 means -1.
class SvmModel final : public Classifier {
 public:
  SvmModel() = default;
  SvmModel(std::vector<double> w, double b, std::vector<double> alphas, std::vector<std::size_t> support);

  const std::vector<double>& w() const noexcept { return w_; }
  double b() const noexcept { return b_; }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  const std::vector<std::size_t>& support_indices() const noexcept { return support_; }
  int iterations() const noexcept { return iterations_; }
  void set_iterations(int it) noexcept { iterations_ = it; }

  SvmDecision decide(std::span<const double> x) const;

  std::size_t input_size() const override { return w_.size(); }
  std::size_t class_count() const override { return 2; }
  // Logistic squashing of the decision value; only the ordering is meaningful.
  std::vector<double> probabilities(std::span<const double> x) const override;
  int classify(std::span<const double> x) const override;

 private:
  std::vector<double> w_;
  double b_ = 0.0;
  std::vector<double> alphas_;
  std::vector<std::size_t> support_;
  int iterations_ = 0;
};

struct SvmOptions {
  // Tolerance on the dual KKT conditions: the maximal violating pair gap,
  // scaled by max(1, max alpha), must fall below it.
  double tolerance = 1e-5;
  // alpha_i above this counts as a support vector.
  double support_threshold = 1e-8;
  // Zero means 1000 * n + 100000.
  int max_iterations = 0;
  // The dual is unbounded on non-separable data; a multiplier crossing this
  // value is reported as a solver failure.
  double alpha_limit = 1e8;
};

// Pairwise coordinate ascent (SMO, maximal violating pair) on
//   max sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j x_i.x_j,
//   alpha >= 0, sum alpha_i y_i = 0.
// Labels come from the dataset's signed domain, or classes {0, 1} read as
// {-1, +1}. Throws SolverError when the data are not linearly separable.
SvmModel svm_train(const Dataset& data, const SvmOptions& options = {});

SvmDecision svm_decision(const SvmModel& model, std::span<const double> x);

// Largest |alpha_i (y_i (w.x_i + b) - 1)| and |sum alpha_i y_i| on the
// training data.
struct KktResidual {
  double complementarity = 0.0;
  double equality = 0.0;
  double min_margin = 0.0;  // min_i y_i (w.x_i + b)
};
KktResidual svm_kkt_residual(const SvmModel& model, const Dataset& data);

double svm_primal_objective(const SvmModel& model);
double svm_dual_objective(const SvmModel& model, const Dataset& data);

}  // namespace advml
