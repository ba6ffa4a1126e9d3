#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "advml/attack.hpp"
#include "advml/mlp.hpp"
#include "advml/oracle.hpp"
#include "advml/rng.hpp"

namespace advml {

// Black-box attacks see the victim only through an oracle. Each returns the
// best point found so far when the oracle budget runs out, with
// budget_exhausted set; `queries` is the oracle counter delta.

// Symmetric difference quotient (f(x + h e_i) - f(x - h e_i)) / 2h.
double symmetric_difference(const std::function<double(const Tensor&)>& f, const Tensor& x, std::size_t i,
                            double h);
// All coordinates; 2n evaluations.
Tensor symmetric_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

// Bilinear resize of an h x w (x c) image to out_h x out_w, aligning the
// corner pixel centres.
Tensor bilinear_resize(const Tensor& img, std::size_t out_h, std::size_t out_w);

struct ZooOptions {
  double c = 10.0;
  double kappa = 0.0;
  double h = 1e-4;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_iter = 1000;
  // Coordinates estimated per iteration (batched evaluation).
  std::size_t batch = 16;
  // Attack-space sides m1 < m2 < ...; empty means the full input space.
  std::vector<std::size_t> hierarchy;
  bool importance_sampling = false;
  // Importance sampling divides the image into a region x region grid.
  std::size_t region = 8;
  std::optional<int> target;
  std::uint64_t seed = 0;
};
// Techniques 3-5 stay off unless requested, and the defaults suit inputs with
// n <= 1024. Minimises ||x' - x||_2^2 + c g(x') with g the hinge on log
// probabilities; each coordinate estimate costs 2 queries and every iteration
// spends one more query on the current point.
AttackResult zoo_attack(ScoreOracle& oracle, const Tensor& x, int label, const ZooOptions& options = {});

// Side length of the Square attack window: the closest positive integer to
// sqrt(p w^2), capped at w.
std::size_t square_side(double p, std::size_t width);
// p at iteration i: p_init halved at each fixed milestone passed.
double square_schedule(double p_init, int iteration);

struct SquareOptions {
  double eps = 0.05;
  double p_init = 0.1;
  int max_iter = 1000;
  std::optional<int> target;
  std::uint64_t seed = 0;
};
// Linf random search over square windows. The first query evaluates the
// vertical stripe initialisation; every later iteration costs one query.
// The trace records the loss of each accepted iterate.
AttackResult square_attack(ScoreOracle& oracle, const Tensor& x, int label, const SquareOptions& options = {});

struct BoundaryOptions {
  int max_steps = 1000;
  // Uniform-noise draws tried when no start point is given.
  int init_samples = 100;
  double spherical_step = 0.05;
  double source_step = 0.05;
  // Each step queries the orthogonal (spherical) proposal, then, if it is
  // still adversarial, the proposal moved toward x. Over every window the
  // spherical step adapts to the first acceptance rate and the source step to
  // the second: x0.9 below 0.2, x1.1 above 0.5.
  int adapt_window = 10;
  std::optional<int> target;
  std::optional<Tensor> init;
  std::uint64_t seed = 0;
};
// extras["initial_distance"] is the distance of the start point before the
// initial binary search toward x.
AttackResult boundary_attack(DecisionOracle& oracle, const Tensor& x, int label, const BoundaryOptions& options = {});

struct HsjOptions {
  int max_rounds = 20;
  std::size_t batch0 = 100;
  std::size_t max_batch = 1000;
  double search_tolerance = 1e-3;
  int max_step_halvings = 30;
  int init_samples = 100;
  std::optional<int> target;
  std::optional<Tensor> init;
  std::uint64_t seed = 0;
  // Called with every binary-search output.
  std::function<void(const Tensor&)> on_boundary_point;
};
// phi(x') = 1 iff the oracle label satisfies the attack goal.
bool hsj_phi(DecisionOracle& oracle, const Tensor& xp, int label, const std::optional<int>& target);
// Bisection on alpha in x_t = alpha x + (1 - alpha) adv until the window is
// below tolerance; the returned point has phi = 1.
Tensor hsj_binary_search(DecisionOracle& oracle, const Tensor& x, const Tensor& adv, int label,
                         const std::optional<int>& target, double tolerance);
// Baseline-subtracted Monte-Carlo estimate of the boundary normal at x_t,
// normalised to unit L2 norm.
Tensor hsj_gradient_direction(DecisionOracle& oracle, const Tensor& xt, double delta, std::size_t batch, int label,
                              const std::optional<int>& target, Rng& rng);
// L2 only. extras["initial_distance"] is ||x~_0 - x||_2.
AttackResult hopskipjump(DecisionOracle& oracle, const Tensor& x, int label, const HsjOptions& options = {});

struct SpatialParams {
  double da = 0.0;     // pixels to the right
  double db = 0.0;     // pixels up
  double gamma = 0.0;  // degrees counterclockwise
};
// Coordinates (a, b) are taken relative to the image centre with a to the
// right and b up. Each output pixel is sampled bilinearly at the preimage of
// its centre; outside the frame counts as 0.
Tensor spatial_transform(const Tensor& x, const SpatialParams& params);
// Forward map of a centred coordinate: (a cos g - b sin g + da, a sin g + b cos g + db).
std::pair<double, double> spatial_map(double a, double b, const SpatialParams& params);

struct SpatialRanges {
  double da_max = 2.0;
  double db_max = 2.0;
  double gamma_max = 30.0;
  int da_steps = 5;
  int db_steps = 5;
  int gamma_steps = 7;
};
enum class SpatialMode { Grid, WorstOfK };
struct SpatialOptions {
  SpatialMode mode = SpatialMode::WorstOfK;
  int k = 10;
  SpatialRanges ranges;
  std::uint64_t seed = 0;
};
// With a score oracle the candidate maximising CE(., y) wins; with a decision
// oracle the first misclassified candidate does. Grid mode queries the whole
// lattice, worst-of-k exactly k points. extras holds the chosen parameters.
AttackResult spatial_attack(Oracle& oracle, const Tensor& x, int label, const SpatialOptions& options = {});
std::vector<SpatialParams> spatial_grid(const SpatialRanges& ranges);

using WhiteboxAttack = std::function<AttackResult(const MlpModel&, const Tensor&, int)>;

struct TransferReport {
  MlpModel substitute;
  std::vector<AttackResult> results;  // evaluated against the target oracle
  std::size_t labeling_queries = 0;
  double success_rate = 0.0;
  double whitebox_success_rate = 0.0;
};
// Labels the substitute inputs through the oracle (1 query each), trains the
// substitute, attacks it and evaluates each x_adv once against the target.
// Running out of budget while labelling throws BudgetExhausted.
TransferReport transfer_attack(Oracle& target, const std::vector<Tensor>& substitute_inputs, const MlpLayout& layout,
                               const TrainConfig& train, const WhiteboxAttack& attack,
                               const std::vector<Tensor>& inputs, const std::vector<int>& labels);

}  // namespace advml
