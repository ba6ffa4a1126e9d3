#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advml/classifier.hpp"
#include "advml/tensor.hpp"

namespace advml {

class Dataset;

enum class ActivationKind { Identity, ReLU, LeakyReLU, ELU, GELU };

struct Activation {
  ActivationKind kind = ActivationKind::ReLU;
  // Negative-side slope for LeakyReLU (must lie in (0, 1)), scale for ELU.
  double alpha = 0.01;

  static Activation identity() { return {ActivationKind::Identity, 0.0}; }
  static Activation relu() { return {ActivationKind::ReLU, 0.0}; }
  static Activation leaky_relu(double a = 0.01) { return {ActivationKind::LeakyReLU, a}; }
  static Activation elu(double a = 1.0) { return {ActivationKind::ELU, a}; }
  static Activation gelu() { return {ActivationKind::GELU, 0.0}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

double activate(const Activation& act, double x);
// At x = 0 ReLU takes subgradient 0 and LeakyReLU takes alpha.
double activate_derivative(const Activation& act, double x);

std::string to_string(const Activation& act);
std::optional<Activation> parse_activation(const std::string& name);

// Numerically stable softmax (max subtracted before exponentiation).
std::vector<double> softmax(std::span<const double> z);

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probs;
  int label = 0;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs
  Activation activation;
};

// Layer sizes from input to logits, with one hidden activation shared by all
// hidden layers. The logit layer is always linear.
struct MlpLayout {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden;
  std::size_t classes = 2;
  Activation activation = Activation::relu();
};

struct TrainMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch = 0;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

enum class LossKind {
  CrossEntropy,
  // Z_label - max_{j != label} Z_j on the logits.
  Margin,
};

struct LossGradient {
  double loss = 0.0;
  Tensor grad;
};

// Per-layer activations kept by a forward pass for back-propagation.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // pre-activation of each layer
  std::vector<std::vector<double>> post;  // post[0] is the input, post[i+1] the output of layer i
};

// Feed-forward network f = f_L o ... o f_1 with f_i(v) = act_i(W_i v + b_i).
// Immutable once built; all queries are const and thread-safe.
class MlpModel final : public Classifier {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers, TrainMetadata meta = {});

  // Weights drawn uniformly in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel initialize(const MlpLayout& layout, std::uint64_t seed);

  std::size_t input_size() const override { return layers_.front().inputs; }
  std::size_t class_count() const override { return layers_.back().outputs; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const TrainMetadata& metadata() const noexcept { return meta_; }
  void set_metadata(const TrainMetadata& meta) { meta_ = meta; }

  std::vector<double> logits(std::span<const double> x) const;
  std::vector<double> probabilities(std::span<const double> x) const override;
  int classify(std::span<const double> x) const override;
  Prediction predict(const Tensor& x) const;

  // Output of the penultimate layer (the model minus its logit layer).
  std::vector<double> features(std::span<const double> x) const;
  std::size_t feature_size() const;

  ForwardTrace forward_trace(std::span<const double> x) const;

  // Gradient with respect to the input of sum_k upstream[k] * out_k, where
  // out is the output of layer `layer` (post-activation). layer defaults to
  // the logit layer.
  std::vector<double> input_vjp(const ForwardTrace& trace, std::span<const double> upstream,
                                std::optional<std::size_t> layer = std::nullopt) const;

  // Loss value and its gradient with respect to the input.
  LossGradient loss_and_input_gradient(const Tensor& x, int label, LossKind loss) const;

  // Gradient of Z_a - Z_b with respect to the input, plus the value.
  std::pair<double, std::vector<double>> logit_difference_gradient(std::span<const double> x, int a,
                                                                   int b) const;

  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

  friend bool operator==(const MlpModel& a, const MlpModel& b);

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  TrainMetadata meta_;
};

double cross_entropy(std::span<const double> logits, int label);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  // Leading layers kept fixed (used for last-layer fine-tuning).
  std::size_t frozen_layers = 0;
};

// Minibatch SGD on mean cross-entropy. Deterministic given config.seed; the
// same seed always yields bitwise-identical weights. Throws TrainingError if
// the loss becomes non-finite.
MlpModel train_mlp(const Dataset& data, const MlpLayout& layout, const TrainConfig& config);

// Continues training from `start`.
MlpModel train_mlp(const Dataset& data, const MlpModel& start, const TrainConfig& config);

double accuracy(const Classifier& model, const Dataset& data);

}  // namespace advml
