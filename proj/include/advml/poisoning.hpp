#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "advml/classifier.hpp"
#include "advml/dataset.hpp"
#include "advml/mlp.hpp"
#include "advml/svm.hpp"
#include "advml/tensor.hpp"

namespace advml {

struct Provenance {
  std::optional<int> original_label;
  std::optional<double> perturbation_norm;  // Linf distance to the source input
  std::optional<bool> trigger_applied;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// A training set after poisoning. Indices below the source size that are not
// in modified_indices hold the source examples unchanged; appended poisons
// get indices past the end and count as modified.
struct PoisonedDataset {
  Dataset examples;
  std::vector<std::size_t> modified_indices;  // ascending
  std::map<std::size_t, Provenance> provenance;
  std::size_t budget = 0;
  // Greedy flipping only: models trained and objective after each round.
  std::size_t retrainings = 0;
  std::vector<double> round_objective;

  friend bool operator==(const PoisonedDataset&, const PoisonedDataset&) = default;
};

// True iff every unmodified example matches the source bit for bit.
bool unmodified_identical(const Dataset& source, const PoisonedDataset& poisoned);

// The dataset file goes to `path` and the provenance record to
// path + ".provenance.json".
void save_poisoned(const PoisonedDataset& data, const std::string& path);
PoisonedDataset load_poisoned(const std::string& path);
std::string provenance_json(const PoisonedDataset& data);

// Untargeted flips need a binary dataset and map each label to the other
// class. Targeted flips change labels of class src to dst.
struct FlipMode {
  std::optional<std::pair<int, int>> targeted;

  static FlipMode untargeted() { return {}; }
  static FlipMode targeted_flip(int src, int dst) { return {std::make_pair(src, dst)}; }
};

// Number of flips for a fraction p of n examples: floor(n p), with a relative
// slack of 1e-12 so that e.g. 0.3 * 10 counts as 3.
std::size_t poison_count(std::size_t n, double p);

// The other label of a binary dataset.
int flipped_label(const Dataset& data, int label);

PoisonedDataset flip_random(const Dataset& data, double p, const FlipMode& mode, std::uint64_t seed);

// Flips the l correctly classified points with the largest |w.x + b|, the
// farthest first; equal distances go to the lower index.
PoisonedDataset flip_farfirst(const Dataset& data, const SvmModel& svm, std::size_t l);

using Trainer = std::function<std::shared_ptr<const Classifier>(const Dataset&)>;
// Attacker's gain: larger means the defender does worse.
using FlipObjective = std::function<double(const Classifier&, const Dataset& test)>;

// Fraction of misclassified test examples.
double test_error(const Classifier& model, const Dataset& test);

// Trains a softmax MLP with a fixed config, so every call on the same data
// gives the same model.
Trainer mlp_trainer(const MlpLayout& layout, const TrainConfig& config);
Trainer svm_trainer(const SvmOptions& options = {});

struct GreedyOptions {
  // Candidate evaluations per round run on this many threads (0: hardware).
  unsigned threads = 1;
};

// l rounds; each tries every label not yet flipped, retrains and keeps the
// flip with the largest objective (ties: lowest index). Retrains
// l n - l (l - 1) / 2 times.
PoisonedDataset flip_greedy(const Dataset& train, const Dataset& test, std::size_t l, const Trainer& trainer,
                            const FlipObjective& objective = test_error, const GreedyOptions& options = {});

struct FlipSearchResult {
  std::vector<std::size_t> indices;
  double objective = 0.0;
  std::size_t retrainings = 0;
};
// Enumerates every l-subset; ties go to the lexicographically smallest.
FlipSearchResult exhaustive_flip_search(const Dataset& train, const Dataset& test, std::size_t l,
                                        const Trainer& trainer, const FlipObjective& objective = test_error);

// ||f(x) - f(x_t)||^2 and its input gradient, f = extractor.features.
double feature_distance(const MlpModel& extractor, const Tensor& x, const std::vector<double>& target_features,
                        Tensor* grad = nullptr);

struct FeatureCollisionOptions {
  double beta = 0.25;
  int max_iter = 200;
  double step = 0.5;
  // Blend (1 - o) x_p + o x_t applied to the returned poison; 0.3 is the
  // usual setting.
  std::optional<double> watermark_opacity;
};

struct FeatureCollisionTrace {
  double feature_term = 0.0;  // ||f(x) - f(x_t)||^2
  double input_term = 0.0;    // beta ||x - x_b||^2
};

struct FeatureCollisionResult {
  Tensor poison;
  FeatureCollisionTrace final_terms;  // after the watermark, if any
  std::vector<FeatureCollisionTrace> trace;  // trace[0] is the start x_b
  int iterations = 0;
};

// Forward-backward splitting from x_b: a gradient step on the feature term,
// then the closed-form prox of beta ||x - x_b||^2, (x^ + lambda beta x_b) /
// (1 + lambda beta), and a clamp to [0, 1]. A step that raises the objective
// is halved until it does not; the iterates are therefore non-increasing.
// Throws ConvergenceError on a non-finite objective.
FeatureCollisionResult feature_collision(const MlpModel& extractor, const Tensor& x_t, const Tensor& x_b,
                                         const FeatureCollisionOptions& options = {});

enum class PolytopeMode { Convex, BullseyeSingle, BullseyeMulti };

struct PolytopeOptions {
  PolytopeMode mode = PolytopeMode::BullseyeSingle;
  double eps = 0.1;
  int max_iter = 200;
  double step = 0.5;
  double coefficient_step = 0.5;  // convex mode
};

struct PolytopeTrace {
  double objective = 0.0;
  double residual = 0.0;
  double max_linf = 0.0;  // max_j ||x_p^j - x_b^j||_inf
};

struct PolytopeResult {
  std::vector<Tensor> poisons;
  // coefficients[i][j] is c_j for extractor i.
  std::vector<std::vector<double>> coefficients;
  // Mean over extractors of ||phi_i - sum_j c_j f_i(x_p^j)|| / ||phi_i||.
  double residual = 0.0;
  double objective = 0.0;
  std::vector<PolytopeTrace> trace;  // trace[0] is the start
  int iterations = 0;
};

// Minimises 1/2 sum_i ||phi_i - sum_j c_ij f_i(x_p^j)||^2 / ||phi_i||^2 over
// poisons within eps (Linf) of their bases and [0, 1]. phi_i is f_i of the
// single target, or in multi-target mode the mean of f_i over all targets.
// Bullseye modes fix c = 1/k; convex mode alternates a simplex-projected step
// on c with the poison step. Steps are halved until the objective does not
// increase.
PolytopeResult polytope_attack(const std::vector<MlpModel>& extractors, const std::vector<Tensor>& targets,
                               const std::vector<Tensor>& bases, const PolytopeOptions& options = {});

double polytope_objective(const std::vector<MlpModel>& extractors, const std::vector<Tensor>& targets,
                          const std::vector<Tensor>& poisons, const std::vector<std::vector<double>>& c,
                          PolytopeMode mode);

// Euclidean projection onto {c : c >= 0, sum c = 1}.
std::vector<double> project_simplex(std::vector<double> v);

// Appends clean-label poisons with the given label. Provenance holds the
// Linf distance of each poison to its base.
PoisonedDataset append_poisons(const Dataset& data, const std::vector<Tensor>& poisons,
                               const std::vector<Tensor>& bases, int label);

struct Trigger {
  Tensor patch;  // ph x pw, or ph x pw x c
  std::size_t row = 0;
  std::size_t col = 0;
  int target_label = 0;
};

// Solid square patch of the given value in the bottom-right corner.
Trigger corner_trigger(const std::vector<std::size_t>& image_dims, std::size_t side, int target_label,
                       double value = 1.0);

// Throws InvalidTrigger if the patch does not fit or its channels differ.
Tensor apply_trigger(const Tensor& x, const Trigger& trigger);
void check_trigger(const Trigger& trigger, const Dataset& data);

// floor(rate n) examples chosen by seeded shuffle get the patch and the
// target label.
PoisonedDataset backdoor_poison(const Dataset& data, const Trigger& trigger, double rate, std::uint64_t seed);

struct BackdoorMetrics {
  double clean_accuracy = 0.0;
  double attack_success_rate = 0.0;
  std::size_t triggered = 0;
};
// Success rate over test examples whose label is not the target, patched.
// Throws InvalidInput when no such example exists.
BackdoorMetrics backdoor_eval(const Classifier& model, const Dataset& clean_test, const Trigger& trigger);

}  // namespace advml
