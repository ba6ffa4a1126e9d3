#include "advml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advml/dataset.hpp"
#include "advml/error.hpp"
#include "advml/kernels.hpp"
#include "advml/rng.hpp"

namespace advml {
namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

void check_width(std::span<const double> x, std::size_t expected) {
  if (x.size() != expected) {
    throw InvalidInput("input has " + std::to_string(x.size()) + " values, model expects " +
                       std::to_string(expected));
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_label(int label, std::size_t k) {
  if (label < 0 || static_cast<std::size_t>(label) >= k) {
    throw InvalidInput("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
  }
}

}  // namespace

double activate(const Activation& act, double x) {
  switch (act.kind) {
    case ActivationKind::Identity: return x;
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::LeakyReLU: return x > 0.0 ? x : act.alpha * x;
    case ActivationKind::ELU: return x > 0.0 ? x : act.alpha * std::expm1(x);
    case ActivationKind::GELU: return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
  return x;
}

double activate_derivative(const Activation& act, double x) {
  switch (act.kind) {
    case ActivationKind::Identity: return 1.0;
    case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU: return x > 0.0 ? 1.0 : act.alpha;
    case ActivationKind::ELU: return x > 0.0 ? 1.0 : act.alpha * std::exp(x);
    case ActivationKind::GELU: {
      const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    }
  }
  return 1.0;
}

std::string to_string(const Activation& act) {
  switch (act.kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::ELU: return "elu";
    case ActivationKind::GELU: return "gelu";
  }
  return "unknown";
}

std::optional<Activation> parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity();
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu();
  if (name == "elu") return Activation::elu();
  if (name == "gelu") return Activation::gelu();
  return std::nullopt;
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) return {};
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double cross_entropy(std::span<const double> logits, int label) {
  check_label(label, logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - m);
  return m + std::log(total) - logits[static_cast<std::size_t>(label)];
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, TrainMetadata meta)
    : layers_(std::move(layers)), meta_(meta) {
  validate();
}

void MlpModel::validate() const {
  if (layers_.empty()) throw InvalidInput("model needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.inputs == 0 || l.outputs == 0) throw InvalidInput("layer with zero width");
    if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
      throw InvalidInput("layer " + std::to_string(i) + " parameter sizes do not match its shape");
    }
    if (i > 0 && layers_[i - 1].outputs != l.inputs) {
      throw InvalidInput("layer " + std::to_string(i) + " does not chain with its predecessor");
    }
    if (l.activation.kind == ActivationKind::LeakyReLU &&
        !(l.activation.alpha > 0.0 && l.activation.alpha < 1.0)) {
      throw InvalidInput("LeakyReLU slope must lie in (0, 1)");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
        !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
      throw InvalidInput("non-finite model parameter");
    }
  }
  if (layers_.back().activation.kind != ActivationKind::Identity) {
    throw InvalidInput("the logit layer must be linear");
  }
  if (layers_.back().outputs < 2) throw InvalidInput("model needs at least two classes");
}

MlpModel MlpModel::initialize(const MlpLayout& layout, std::uint64_t seed) {
  if (layout.inputs == 0 || layout.classes < 2) throw InvalidInput("bad layout");
  std::vector<std::size_t> widths{layout.inputs};
  widths.insert(widths.end(), layout.hidden.begin(), layout.hidden.end());
  widths.push_back(layout.classes);
  Rng rng = make_rng(seed, 0x1417);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l;
    l.inputs = widths[i];
    l.outputs = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    l.weights.resize(l.inputs * l.outputs);
    for (double& w : l.weights) w = uniform(rng, -limit, limit);
    l.bias.assign(l.outputs, 0.0);
    l.activation = i + 2 == widths.size() ? Activation::identity() : layout.activation;
    layers.push_back(std::move(l));
  }
  TrainMetadata meta;
  meta.seed = seed;
  return MlpModel(std::move(layers), meta);
}

ForwardTrace MlpModel::forward_trace(std::span<const double> x) const {
  check_width(x, input_size());
  const auto& k = kernels::active();
  ForwardTrace t;
  t.pre.reserve(layers_.size());
  t.post.reserve(layers_.size() + 1);
  t.post.emplace_back(x.begin(), x.end());
  for (const DenseLayer& l : layers_) {
    std::vector<double> z(l.outputs);
    k.gemv(l.weights.data(), t.post.back().data(), l.bias.data(), z.data(), l.outputs, l.inputs);
    std::vector<double> a(l.outputs);
    for (std::size_t j = 0; j < l.outputs; ++j) a[j] = activate(l.activation, z[j]);
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(a));
  }
  return t;
}

std::vector<double> MlpModel::logits(std::span<const double> x) const {
  check_width(x, input_size());
  const auto& k = kernels::active();
  std::vector<double> cur(x.begin(), x.end()), next;
  for (const DenseLayer& l : layers_) {
    next.assign(l.outputs, 0.0);
    k.gemv(l.weights.data(), cur.data(), l.bias.data(), next.data(), l.outputs, l.inputs);
    for (double& v : next) v = activate(l.activation, v);
    cur.swap(next);
  }
  return cur;
}

std::vector<double> MlpModel::probabilities(std::span<const double> x) const { return softmax(logits(x)); }

int MlpModel::classify(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<int>(argmax(z));
}

Prediction MlpModel::predict(const Tensor& x) const {
  Prediction p;
  p.logits = logits(x.values());
  p.probs = softmax(p.logits);
  p.label = static_cast<int>(argmax(p.probs));
  return p;
}

std::size_t MlpModel::feature_size() const {
  return layers_.size() == 1 ? layers_.front().inputs : layers_[layers_.size() - 2].outputs;
}

std::vector<double> MlpModel::features(std::span<const double> x) const {
  auto t = forward_trace(x);
  return t.post[layers_.size() - 1];
}

std::vector<double> MlpModel::input_vjp(const ForwardTrace& trace, std::span<const double> upstream,
                                        std::optional<std::size_t> layer) const {
  const std::size_t top = layer.value_or(layers_.size() - 1);
  if (top >= layers_.size()) throw InvalidInput("layer index out of range");
  if (upstream.size() != layers_[top].outputs) throw InvalidInput("upstream gradient has wrong width");
  const auto& k = kernels::active();
  std::vector<double> g(upstream.begin(), upstream.end());
  for (std::size_t i = top + 1; i-- > 0;) {
    const DenseLayer& l = layers_[i];
    for (std::size_t j = 0; j < l.outputs; ++j) g[j] *= activate_derivative(l.activation, trace.pre[i][j]);
    std::vector<double> prev(l.inputs, 0.0);
    k.gemv_t_accumulate(l.weights.data(), g.data(), prev.data(), l.outputs, l.inputs);
    g.swap(prev);
  }
  return g;
}

LossGradient MlpModel::loss_and_input_gradient(const Tensor& x, int label, LossKind loss) const {
  check_label(label, class_count());
  const auto trace = forward_trace(x.values());
  const auto& z = trace.post.back();
  const auto y = static_cast<std::size_t>(label);
  std::vector<double> up(z.size(), 0.0);
  LossGradient out;
  if (loss == LossKind::CrossEntropy) {
    out.loss = cross_entropy(z, label);
    up = softmax(z);
    up[y] -= 1.0;
  } else {
    std::size_t best = y == 0 ? 1 : 0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != y && z[j] > z[best]) best = j;
    }
    out.loss = z[y] - z[best];
    up[y] = 1.0;
    up[best] = -1.0;
  }
  out.grad = Tensor(input_vjp(trace, up), x.shape());
  return out;
}

std::pair<double, std::vector<double>> MlpModel::logit_difference_gradient(std::span<const double> x,
                                                                           int a, int b) const {
  check_label(a, class_count());
  check_label(b, class_count());
  const auto trace = forward_trace(x);
  std::vector<double> up(class_count(), 0.0);
  up[static_cast<std::size_t>(a)] += 1.0;
  up[static_cast<std::size_t>(b)] -= 1.0;
  const auto& z = trace.post.back();
  return {z[static_cast<std::size_t>(a)] - z[static_cast<std::size_t>(b)], input_vjp(trace, up)};
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.inputs != y.inputs || x.outputs != y.outputs || x.weights != y.weights || x.bias != y.bias ||
        !(x.activation == y.activation)) {
      return false;
    }
  }
  return true;
}

namespace {

struct LayerGrad {
  std::vector<double> w;
  std::vector<double> b;
};

}  // namespace

MlpModel train_mlp(const Dataset& data, const MlpModel& start, const TrainConfig& config) {
  if (data.empty()) throw InvalidInput("training set is empty");
  if (data.feature_count() != start.input_size()) throw InvalidInput("dataset width does not match model");
  if (data.class_count() > start.class_count()) throw InvalidInput("dataset has more classes than the model");
  if (config.batch == 0 || !(config.learning_rate > 0.0) || config.epochs < 0) {
    throw InvalidInput("bad training hyperparameters");
  }
  MlpModel model = start;
  auto& layers = model.mutable_layers();
  const std::size_t depth = layers.size();
  if (config.frozen_layers >= depth) throw InvalidInput("cannot freeze every layer");
  const auto& k = kernels::active();

  std::vector<LayerGrad> grads(depth);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(config.seed, 0x7261);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double epoch_loss = 0.0;
    for (std::size_t start_i = 0; start_i < order.size(); start_i += config.batch) {
      const std::size_t stop = std::min(order.size(), start_i + config.batch);
      const double scale = 1.0 / static_cast<double>(stop - start_i);
      for (std::size_t li = config.frozen_layers; li < depth; ++li) {
        grads[li].w.assign(layers[li].weights.size(), 0.0);
        grads[li].b.assign(layers[li].outputs, 0.0);
      }
      for (std::size_t s = start_i; s < stop; ++s) {
        const std::size_t idx = order[s];
        const auto trace = model.forward_trace(data.input(idx).values());
        const int y = static_cast<int>(data.class_index(idx));
        epoch_loss += cross_entropy(trace.post.back(), y);
        std::vector<double> delta = softmax(trace.post.back());
        delta[static_cast<std::size_t>(y)] -= 1.0;
        for (double& d : delta) d *= scale;
        for (std::size_t li = depth; li-- > config.frozen_layers;) {
          const DenseLayer& l = layers[li];
          for (std::size_t j = 0; j < l.outputs; ++j) delta[j] *= activate_derivative(l.activation, trace.pre[li][j]);
          const auto& in = trace.post[li];
          for (std::size_t j = 0; j < l.outputs; ++j) {
            if (delta[j] == 0.0) continue;
            k.axpy(delta[j], in.data(), grads[li].w.data() + j * l.inputs, l.inputs);
            grads[li].b[j] += delta[j];
          }
          if (li == config.frozen_layers) break;
          std::vector<double> prev(l.inputs, 0.0);
          k.gemv_t_accumulate(l.weights.data(), delta.data(), prev.data(), l.outputs, l.inputs);
          delta.swap(prev);
        }
      }
      for (std::size_t li = config.frozen_layers; li < depth; ++li) {
        k.axpy(-config.learning_rate, grads[li].w.data(), layers[li].weights.data(), grads[li].w.size());
        k.axpy(-config.learning_rate, grads[li].b.data(), layers[li].bias.data(), grads[li].b.size());
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
    }
  }

  TrainMetadata meta = start.metadata();
  meta.seed = config.seed;
  meta.epochs = start.metadata().epochs + config.epochs;
  meta.learning_rate = config.learning_rate;
  meta.batch = config.batch;
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = model.logits(data.input(i).values());
    const int y = static_cast<int>(data.class_index(i));
    total += cross_entropy(z, y);
    if (static_cast<int>(argmax(z)) == y) ++correct;
  }
  if (!std::isfinite(total)) throw TrainingError("training diverged: non-finite final loss");
  meta.final_loss = total / static_cast<double>(data.size());
  meta.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  model.set_metadata(meta);
  return model;
}

MlpModel train_mlp(const Dataset& data, const MlpLayout& layout, const TrainConfig& config) {
  MlpLayout l = layout;
  if (l.inputs == 0) l.inputs = data.feature_count();
  if (l.classes < data.class_count()) l.classes = data.class_count();
  return train_mlp(data, MlpModel::initialize(l, config.seed), config);
}

double accuracy(const Classifier& model, const Dataset& data) {
  if (data.empty()) throw InvalidInput("accuracy of an empty dataset is undefined");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<std::size_t>(model.classify(data.input(i).values())) == data.class_index(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace advml
