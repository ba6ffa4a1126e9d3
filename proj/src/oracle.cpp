#include "advml/oracle.hpp"

#include <algorithm>

#include "advml/error.hpp"

namespace advml {

Oracle::Oracle(const Classifier& model, std::optional<std::size_t> budget) : model_(model), budget_(budget) {}

std::optional<std::size_t> Oracle::remaining() const noexcept {
  if (!budget_) return std::nullopt;
  const std::size_t used = count_.load();
  return used >= *budget_ ? 0 : *budget_ - used;
}

bool Oracle::exhausted() const noexcept { return budget_ && count_.load() >= *budget_; }

void Oracle::charge() {
  if (!budget_) {
    count_.fetch_add(1);
    return;
  }
  std::size_t used = count_.load();
  do {
    if (used >= *budget_) throw BudgetExhausted("oracle query budget exhausted", used);
  } while (!count_.compare_exchange_weak(used, used + 1));
}

std::vector<double> ScoreOracle::scores(const Tensor& x) {
  if (x.size() != input_size()) throw InvalidInput("oracle input has the wrong width");
  charge();
  return model().probabilities(x.values());
}

int ScoreOracle::label(const Tensor& x) {
  const auto p = scores(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

int DecisionOracle::label(const Tensor& x) {
  if (x.size() != input_size()) throw InvalidInput("oracle input has the wrong width");
  charge();
  return model().classify(x.values());
}

}  // namespace advml
