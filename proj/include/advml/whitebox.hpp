#pragma once

#include <cstddef>
#include <optional>

#include "advml/attack.hpp"
#include "advml/mlp.hpp"
#include "advml/shadow.hpp"

namespace advml {

// Every white-box attack takes the victim, a clean input x and its true label
// y, and returns best-so-far on failure. Minimal-norm attacks (L-BFGS,
// DeepFool, FAB, C&W) accept an optional norm cap; when set, the returned
// point is projected onto the cap ball before success is evaluated.
struct NormCap {
  double eps = 0.0;
  NormKind norm = NormKind::L2;
};

// min_x' c ||x' - x||_2 + CE(x', t) over the unit box, for a sequence of c:
// doubled after a success, bisected after a failure. Each inner problem is
// solved by projected gradient descent.
struct LbfgsOptions {
  double c_init = 1.0;
  int c_steps = 8;
  int inner_iters = 100;
  double lr = 0.05;
  std::optional<NormCap> cap;
};
AttackResult lbfgs_attack(const MlpModel& model, const Tensor& x, int label, int target,
                          const LbfgsOptions& options = {});

// Unclipped perturbation: eps sign(grad) (Linf) or eps grad / ||grad||_2 (L2),
// ascending CE(x, y) untargeted or descending CE(x, t) targeted. Throws
// DegenerateGradient when the gradient vanishes.
Tensor fgsm_perturbation(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget);
AttackResult fgsm(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget);

// x^(k+1) = Proj(x^(k) + step sign(grad)) for budget.max_iter steps (L2 uses
// the normalised gradient). PGD starts from x + U(-eps, eps). Returns the
// best iterate: successful ones first, then by loss.
AttackResult bim_pgd(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget,
                     bool random_init);

struct DeepFoolStep {
  Tensor x_next;     // x_i + r_i, unclipped and without overshoot
  Tensor r;          // minimal step onto the linearised nearest boundary
  int boundary = 0;  // class whose boundary was chosen
};
// One linearised projection from x_i toward the nearest boundary of class y.
DeepFoolStep deepfool_step(const MlpModel& model, const Tensor& xi, int label);

struct DeepFoolOptions {
  int max_iter = 50;
  double overshoot = 0.02;
  std::optional<NormCap> cap;
};
AttackResult deepfool(const MlpModel& model, const Tensor& x, int label, const DeepFoolOptions& options = {});

struct FabOptions {
  int max_iter = 50;
  double alpha_max = 0.1;
  double beta = 0.9;
  double eta = 1.05;
  int restarts = 1;
  int final_search_iters = 3;
  // Radius cap for random restarts, eps' = min(||best - x||, restart_eps).
  double restart_eps = 1.0;
  std::uint64_t seed = 0;
  std::optional<NormCap> cap;
};
// Projection of p onto {z : w.z + c = 0} intersected with the box: project,
// clamp, then one re-projection using only the coordinates left free.
Tensor project_hyperplane_box(const Tensor& p, const std::vector<double>& w, double c, Box box = {});
AttackResult fab_attack(const MlpModel& model, const Tensor& x, int label, const FabOptions& options = {});

struct CwOptions {
  double kappa = 0.0;
  int c_steps = 6;
  int inner_iters = 200;
  double c_init = 0.1;
  double lr = 0.05;
  std::optional<int> target;
  std::optional<NormCap> cap;
};
// x' = (tanh(w) + 1) / 2 and its inverse (inputs clamped into the open box).
Tensor to_tanh_space(const Tensor& x);
Tensor from_tanh_space(const Tensor& w);
// g(x') of the C&W objective on the logits.
double cw_objective_g(const MlpModel& model, const Tensor& x, int label, const std::optional<int>& target,
                      double kappa);
AttackResult cw_l2(const MlpModel& model, const Tensor& x, int label, const CwOptions& options = {});

// Untargeted ascent on CE(x + d, y) - lambda_tv TV(d) - lambda_c C(d) -
// lambda_s D(d) with a backtracking step size, on h x w x 3 inputs.
struct ShadowOptions {
  ShadowWeights weights;
  int steps = 100;
  double lr = 0.05;
  // Optional Linf bound on d.
  std::optional<double> linf_cap;
};
AttackResult shadow_attack(const MlpModel& model, const Tensor& x, int label, const ShadowOptions& options = {});

// PGD on a single-channel image where every step is followed by a projected
// Sinkhorn projection onto the Wasserstein ball of radius eps_w around x.
// The image is normalised by its mass m for the transport problem (and the
// projection capped at 1/m so the result stays in the box); the model sees
// m times the projected distribution.
struct WassersteinOptions {
  double eps_w = 0.1;
  double lambda = 300.0;
  std::size_t region = 5;
  int steps = 20;
  double lr = 0.05;
};
AttackResult wasserstein_attack(const MlpModel& model, const Tensor& x, int label,
                                const WassersteinOptions& options = {});

}  // namespace advml
