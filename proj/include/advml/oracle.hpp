#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <vector>

#include "advml/classifier.hpp"
#include "advml/tensor.hpp"

namespace advml {

// Query-counted facade over a classifier. Black-box attacks receive only an
// oracle, so they have no path to weights or gradients. The counter is
// atomic; everything else is immutable after construction.
class Oracle {
 public:
  Oracle(const Classifier& model, std::optional<std::size_t> budget = std::nullopt);
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  std::size_t input_size() const { return model_.input_size(); }
  std::size_t class_count() const { return model_.class_count(); }

  std::size_t query_count() const noexcept { return count_.load(); }
  std::optional<std::size_t> budget() const noexcept { return budget_; }
  // Queries left before the budget; nullopt when unlimited.
  std::optional<std::size_t> remaining() const noexcept;
  bool exhausted() const noexcept;

  // Predicted label; costs one query.
  virtual int label(const Tensor& x) = 0;

 protected:
  // Reserves one query or throws BudgetExhausted without touching the model.
  void charge();
  const Classifier& model() const noexcept { return model_; }

 private:
  const Classifier& model_;
  std::optional<std::size_t> budget_;
  std::atomic<std::size_t> count_{0};
};

// Returns the class probability vector.
class ScoreOracle final : public Oracle {
 public:
  using Oracle::Oracle;
  std::vector<double> scores(const Tensor& x);
  int label(const Tensor& x) override;
};

// Returns the predicted label only.
class DecisionOracle final : public Oracle {
 public:
  using Oracle::Oracle;
  int label(const Tensor& x) override;
};

}  // namespace advml
