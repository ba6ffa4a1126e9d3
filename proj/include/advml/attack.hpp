#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advml/classifier.hpp"
#include "advml/norms.hpp"
#include "advml/tensor.hpp"

namespace advml {

struct AttackBudget {
  double eps = 0.1;
  NormKind norm = NormKind::Linf;
  int max_iter = 10;
  double step = 0.01;
  std::optional<int> target;
  std::uint64_t seed = 0;
};

struct TraceRecord {
  int iteration = 0;
  double loss = 0.0;
  double distance = 0.0;
};

struct AttackResult {
  Tensor x_adv;
  bool success = false;
  int orig_label = 0;
  int adv_label = 0;
  std::optional<int> target;
  NormSet norms;
  int iterations = 0;
  // Oracle queries for black-box attacks, gradient evaluations for white-box.
  std::size_t queries = 0;
  // Black-box attacks that ran out of queries.
  bool budget_exhausted = false;
  std::vector<TraceRecord> trace;
  // Attack-specific diagnostics (penalty values, residuals, ...).
  std::map<std::string, double> extras;
};

// Goal predicate: targeted success means label == t, untargeted label != y.
inline bool attack_goal(int adv_label, int orig_label, const std::optional<int>& target) {
  return target ? adv_label == *target : adv_label != orig_label;
}

// Fills adv_label, success and norms from x_adv, so the reported values are
// always recomputed rather than carried over from the attack loop.
void finalize_result(AttackResult& r, const Classifier& model, const Tensor& x);

// Same, when only an already-known label is available (black-box attacks
// must not spend an uncounted query).
void finalize_result(AttackResult& r, int adv_label, const Tensor& x);

void check_budget(const AttackBudget& b, std::size_t classes, int label);

}  // namespace advml
