#include "advml/attack.hpp"

#include "advml/error.hpp"

namespace advml {

void finalize_result(AttackResult& r, int adv_label, const Tensor& x) {
  if (!r.x_adv.same_shape(x)) throw InvalidInput("adversarial example shape differs from input");
  r.adv_label = adv_label;
  r.success = attack_goal(adv_label, r.orig_label, r.target);
  r.norms = perturbation_norms(r.x_adv, x);
}

void finalize_result(AttackResult& r, const Classifier& model, const Tensor& x) {
  finalize_result(r, model.classify(r.x_adv.values()), x);
}

void check_budget(const AttackBudget& b, std::size_t classes, int label) {
  if (!(b.eps > 0.0)) throw InvalidInput("eps must be positive");
  if (b.max_iter < 0) throw InvalidInput("max_iter must be nonnegative");
  if (label < 0 || static_cast<std::size_t>(label) >= classes) throw InvalidInput("label out of range");
  if (b.target) {
    if (*b.target < 0 || static_cast<std::size_t>(*b.target) >= classes) throw InvalidInput("target out of range");
    if (*b.target == label) throw InvalidInput("target equals the true label");
  }
}

}  // namespace advml
