#pragma once

#include <vector>

#include "advml/dataset.hpp"
#include "advml/mlp.hpp"
#include "advml/rng.hpp"

namespace advml::testing {

// Single identity layer: logits = W x + b.
inline MlpModel linear_model(std::vector<double> w, std::vector<double> b, std::size_t inputs) {
  DenseLayer l;
  l.inputs = inputs;
  l.outputs = b.size();
  l.weights = std::move(w);
  l.bias = std::move(b);
  l.activation = Activation::identity();
  return MlpModel({l});
}

inline MlpModel random_linear(Rng& rng, std::size_t inputs, std::size_t classes) {
  std::vector<double> w(inputs * classes), b(classes);
  for (double& v : w) v = uniform(rng, -1.0, 1.0);
  for (double& v : b) v = uniform(rng, -0.2, 0.2);
  return linear_model(std::move(w), std::move(b), inputs);
}

inline Tensor random_input(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  Tensor x({n});
  for (double& v : x) v = uniform(rng, lo, hi);
  return x;
}

inline MlpModel digit_model(const Dataset& train, std::size_t hidden = 32, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.1;
  cfg.seed = seed;
  return train_mlp(train, MlpLayout{0, {hidden}, train.class_count(), Activation::relu()}, cfg);
}

inline MlpModel blob_model(const Dataset& train, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.2;
  cfg.seed = seed;
  return train_mlp(train, MlpLayout{0, {16, 16}, train.class_count(), Activation::relu()}, cfg);
}

}  // namespace advml::testing
