#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "advml/dataset.hpp"
#include "advml/error.hpp"
#include "advml/mlp.hpp"
#include "advml/model_io.hpp"
#include "advml/rng.hpp"
#include "advml/svm.hpp"

using namespace advml;

namespace {

MlpModel random_net(std::uint64_t seed, std::size_t in, std::vector<std::size_t> hidden, std::size_t k,
                    Activation act) {
  MlpModel m = MlpModel::initialize({in, std::move(hidden), k, act}, seed);
  Rng rng = make_rng(seed, 99);
  for (auto& l : m.mutable_layers()) {
    for (double& b : l.bias) b = uniform(rng, -0.3, 0.3);
  }
  return m;
}

Tensor random_input(Rng& rng, std::size_t n) {
  Tensor x({n});
  for (double& v : x) v = uniform(rng);
  return x;
}

// Written out element by element, independent of the kernel layer.
std::vector<double> manual_forward(const MlpModel& m, std::vector<double> v) {
  for (const auto& l : m.layers()) {
    std::vector<double> out(l.outputs);
    for (std::size_t r = 0; r < l.outputs; ++r) {
      long double s = l.bias[r];
      for (std::size_t c = 0; c < l.inputs; ++c) s += static_cast<long double>(l.weights[r * l.inputs + c]) * v[c];
      out[r] = activate(l.activation, static_cast<double>(s));
    }
    v = out;
  }
  return v;
}

bool near_kink(const MlpModel& m, const Tensor& x, double h) {
  const auto t = m.forward_trace(x.values());
  for (std::size_t i = 0; i + 1 < m.layer_count(); ++i) {
    double scale = 0.0;
    for (double w : m.layers()[i].weights) scale = std::max(scale, std::fabs(w));
    for (double z : t.pre[i]) {
      if (std::fabs(z) < 100.0 * h * (1.0 + scale)) return true;
    }
  }
  return false;
}

Dataset separable_set(Rng& rng, std::size_t n) {
  Dataset d({2}, 2, LabelDomain::Signed);
  const double angle = uniform(rng, 0.0, 6.283185307179586);
  const double nx = std::cos(angle), ny = std::sin(angle);
  while (d.size() < n) {
    const double a = uniform(rng), b = uniform(rng);
    const double s = nx * (a - 0.5) + ny * (b - 0.5);
    if (std::fabs(s) < 0.05) continue;
    d.add(Tensor::from({a, b}), s > 0 ? 1 : -1);
  }
  bool pos = false, neg = false;
  for (int y : d.labels()) (y > 0 ? pos : neg) = true;
  if (!pos || !neg) return separable_set(rng, n);
  return d;
}

struct DenseSvm {
  Eigen::VectorXd w;
  double b = 0.0;
};

// Enumerates candidate support sets, solves the margin equalities on each and
// keeps feasible dual-nonnegative solutions; the smallest ||w|| is the
// hard-margin optimum.
DenseSvm dense_svm_oracle(const Dataset& d) {
  const int n = static_cast<int>(d.size()), dim = static_cast<int>(d.feature_count());
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = d.input(static_cast<std::size_t>(i))[static_cast<std::size_t>(j)];
    y(i) = d.label(static_cast<std::size_t>(i));
  }
  DenseSvm best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) s.push_back(i);
    }
    const int k = static_cast<int>(s.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) a(r, c) = y(s[r]) * y(s[c]) * x.row(s[r]).dot(x.row(s[c]));
      a(r, k) = y(s[r]);
      rhs(r) = 1.0;
      a(k, r) = y(s[r]);
    }
    const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(rhs);
    if ((a * sol - rhs).norm() > 1e-9) continue;
    if (sol.head(k).minCoeff() < -1e-12) continue;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    for (int r = 0; r < k; ++r) w += sol(r) * y(s[r]) * x.row(s[r]).transpose();
    const double b = sol(k);
    bool feasible = true;
    for (int i = 0; i < n; ++i) feasible = feasible && y(i) * (x.row(i).dot(w) + b) >= 1.0 - 1e-9;
    if (feasible && w.norm() < best_norm) {
      best_norm = w.norm();
      best = {w, b};
    }
  }
  return best;
}

}  // namespace

TEST(Activation, Values) {
  EXPECT_EQ(activate(Activation::gelu(), 0.0), 0.0);
  EXPECT_EQ(activate(Activation::relu(), -2.0), 0.0);
  EXPECT_EQ(activate(Activation::relu(), 2.5), 2.5);
  EXPECT_DOUBLE_EQ(activate(Activation::leaky_relu(0.1), -2.0), -0.2);
  EXPECT_DOUBLE_EQ(activate(Activation::elu(1.0), -1.0), std::exp(-1.0) - 1.0);
  // High-precision evaluation of the tanh form at x = 1.
  const long double c = std::sqrt(2.0L / 3.14159265358979323846264338327950288L);
  const long double g1 = 0.5L * (1.0L + std::tanh(c * (1.0L + 0.044715L)));
  EXPECT_NEAR(activate(Activation::gelu(), 1.0), static_cast<double>(g1), 1e-15);
}

TEST(Activation, DerivativesMatchFiniteDifferences) {
  for (Activation a : {Activation::relu(), Activation::leaky_relu(0.2), Activation::elu(0.7), Activation::gelu()}) {
    for (double x : {-2.3, -0.4, 0.3, 1.7}) {
      const double h = 1e-6;
      const double fd = (activate(a, x + h) - activate(a, x - h)) / (2 * h);
      EXPECT_NEAR(activate_derivative(a, x), fd, 1e-8) << to_string(a) << " at " << x;
    }
  }
  EXPECT_EQ(activate_derivative(Activation::relu(), 0.0), 0.0);
}

TEST(Activation, ParseRoundTrip) {
  for (Activation a : {Activation::identity(), Activation::relu(), Activation::leaky_relu(), Activation::elu(),
                       Activation::gelu()}) {
    EXPECT_EQ(parse_activation(to_string(a))->kind, a.kind);
  }
  EXPECT_FALSE(parse_activation("swish"));
}

TEST(Softmax, Examples) {
  const auto a = softmax(std::vector<double>{0, 0});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  const auto b = softmax(std::vector<double>{4, 4, 4});
  for (double v : b) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  Rng rng = make_rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> z(6);
    for (double& v : z) v = uniform(rng, -1000, 1000);
    auto z2 = z;
    const double shift = uniform(rng, -50, 50);
    for (double& v : z2) v += shift;
    const auto p = softmax(z), q = softmax(z2);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GE(p[i], 0.0);
      EXPECT_NEAR(p[i], q[i], 1e-12);
      s += p[i];
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Predict, IdentityNetwork) {
  DenseLayer l{2, 2, {1, 0, 0, 1}, {0, 0}, Activation::identity()};
  const MlpModel m({l});
  const auto p = m.predict(Tensor::from({1, 0}));
  EXPECT_EQ(p.logits, (std::vector<double>{1, 0}));
  EXPECT_EQ(p.label, 0);
  double s = 0.0;
  for (double v : p.probs) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Predict, MatchesManualForward) {
  Rng rng = make_rng(7);
  for (int t = 0; t < 20; ++t) {
    const MlpModel m = random_net(static_cast<std::uint64_t>(t), 6, {5, 4}, 3, Activation::gelu());
    const Tensor x = random_input(rng, 6);
    const auto z = m.logits(x.values());
    const auto ref = manual_forward(m, x.vec());
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], ref[i], 1e-9);
    const auto p = m.predict(x);
    EXPECT_EQ(p.label, static_cast<int>(std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin()));
  }
}

TEST(Predict, DimensionMismatch) {
  const MlpModel m = random_net(1, 3, {2}, 2, Activation::relu());
  EXPECT_THROW(m.predict(Tensor::from({1, 2})), InvalidInput);
}

TEST(Model, RejectsBadLayers) {
  DenseLayer a{2, 3, std::vector<double>(6, 0.1), std::vector<double>(3, 0.0), Activation::relu()};
  DenseLayer b{2, 2, std::vector<double>(4, 0.1), std::vector<double>(2, 0.0), Activation::identity()};
  EXPECT_THROW(MlpModel({a, b}), InvalidInput);
  EXPECT_THROW(MlpModel({a}), InvalidInput);
  DenseLayer c = a;
  c.activation = Activation::leaky_relu(1.5);
  DenseLayer d{3, 2, std::vector<double>(6, 0.1), std::vector<double>(2, 0.0), Activation::identity()};
  EXPECT_THROW(MlpModel({c, d}), InvalidInput);
  EXPECT_NO_THROW(MlpModel({a, d}));
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng = make_rng(2024);
  const Activation acts[] = {Activation::relu(), Activation::leaky_relu(0.1), Activation::elu(), Activation::gelu()};
  int checked = 0;
  for (std::uint64_t t = 0; checked < 100; ++t) {
    const MlpModel m = random_net(t, 5, {8, 6}, 3, acts[t % 4]);
    const Tensor x = random_input(rng, 5);
    const double h = 1e-4;
    if (near_kink(m, x, h)) continue;
    const int label = static_cast<int>(t % 3);
    for (LossKind kind : {LossKind::CrossEntropy, LossKind::Margin}) {
      const auto lg = m.loss_and_input_gradient(x, label, kind);
      for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const double fd = (m.loss_and_input_gradient(a, label, kind).loss - m.loss_and_input_gradient(b, label, kind).loss) / (2 * h);
        EXPECT_LT(std::fabs(fd - lg.grad[i]) / std::max(1.0, std::fabs(fd)), 1e-4);
      }
    }
    ++checked;
  }
}

TEST(Gradient, DeadReluIsZero) {
  DenseLayer l1{2, 2, {1, 1, 1, 1}, {-10, -10}, Activation::relu()};
  DenseLayer l2{2, 2, {1, -1, -1, 1}, {0, 0}, Activation::identity()};
  const MlpModel m({l1, l2});
  const auto lg = m.loss_and_input_gradient(Tensor::from({0.3, 0.4}), 0, LossKind::CrossEntropy);
  EXPECT_EQ(lg.grad[0], 0.0);
  EXPECT_EQ(lg.grad[1], 0.0);
}

TEST(Gradient, ConfidentPredictionHasSmallLoss) {
  DenseLayer l{1, 2, {50, -50}, {0, 0}, Activation::identity()};
  const MlpModel m({l});
  EXPECT_LT(m.loss_and_input_gradient(Tensor::from({1.0}), 0, LossKind::CrossEntropy).loss, 1e-40);
}

TEST(Gradient, FeatureVjpMatchesFiniteDifferences) {
  const MlpModel m = random_net(5, 4, {6, 3}, 2, Activation::gelu());
  Rng rng = make_rng(1);
  const Tensor x = random_input(rng, 4);
  const std::vector<double> up{0.3, -1.2, 0.7};
  const auto g = m.input_vjp(m.forward_trace(x.values()), up, m.layer_count() - 2);
  for (std::size_t i = 0; i < 4; ++i) {
    Tensor a = x, b = x;
    a[i] += 1e-5;
    b[i] -= 1e-5;
    const auto fa = m.features(a.values()), fb = m.features(b.values());
    double fd = 0.0;
    for (std::size_t k = 0; k < 3; ++k) fd += up[k] * (fa[k] - fb[k]) / 2e-5;
    EXPECT_NEAR(g[i], fd, 1e-7);
  }
}

TEST(Train, SeparableBlobs) {
  const Dataset d = gaussian_blobs({200, 2, 2, 0.6, 0.05}, 1);
  const MlpModel m = train_mlp(d, MlpLayout{2, {8}, 2, Activation::relu()}, {0.5, 60, 16, 3, 0});
  EXPECT_GE(m.metadata().train_accuracy, 0.99);
  EXPECT_DOUBLE_EQ(accuracy(m, d), m.metadata().train_accuracy);
}

TEST(Train, ZeroEpochsIsInitialization) {
  const Dataset d = gaussian_blobs({20, 2, 2, 0.6, 0.05}, 1);
  const MlpLayout layout{2, {4}, 2, Activation::relu()};
  const MlpModel m = train_mlp(d, layout, {0.5, 0, 16, 9, 0});
  EXPECT_TRUE(m == MlpModel::initialize(layout, 9));
}

TEST(Train, Deterministic) {
  const Dataset d = gaussian_blobs({60, 3, 3, 0.6, 0.1}, 4);
  const MlpLayout layout{3, {6}, 3, Activation::gelu()};
  const MlpModel a = train_mlp(d, layout, {0.3, 5, 8, 17, 0});
  const MlpModel b = train_mlp(d, layout, {0.3, 5, 8, 17, 0});
  EXPECT_TRUE(a == b);
  const MlpModel c = train_mlp(d, layout, {0.3, 5, 8, 18, 0});
  EXPECT_FALSE(a == c);
}

TEST(Train, DivergenceThrows) {
  const Dataset d = gaussian_blobs({40, 2, 2, 0.6, 0.05}, 1);
  EXPECT_THROW(train_mlp(d, MlpLayout{2, {16, 16}, 2, Activation::relu()}, {1e300, 3, 4, 1, 0}), TrainingError);
}

TEST(Train, FrozenLayersDoNotMove) {
  const Dataset d = gaussian_blobs({40, 2, 2, 0.6, 0.05}, 1);
  const MlpModel start = MlpModel::initialize({2, {5}, 2, Activation::relu()}, 3);
  const MlpModel tuned = train_mlp(d, start, {0.3, 5, 8, 1, 1});
  EXPECT_EQ(tuned.layers()[0].weights, start.layers()[0].weights);
  EXPECT_NE(tuned.layers()[1].weights, start.layers()[1].weights);
}

TEST(ModelIo, RoundTripIsBitExact) {
  const Dataset d = gaussian_blobs({40, 2, 2, 0.6, 0.05}, 1);
  const MlpModel m = train_mlp(d, MlpLayout{2, {7, 3}, 2, Activation::leaky_relu(0.05)}, {0.3, 3, 8, 1, 0});
  const MlpModel back = mlp_from_json(mlp_to_json(m));
  EXPECT_TRUE(back == m);
  EXPECT_EQ(back.metadata().seed, m.metadata().seed);
  EXPECT_EQ(back.metadata().train_accuracy, m.metadata().train_accuracy);
  EXPECT_THROW(mlp_from_json("{\"format\":\"other\"}"), InvalidInput);
  EXPECT_THROW(mlp_from_json("not json"), InvalidInput);
}

TEST(Svm, SymmetricPair) {
  Dataset d({1}, 2, LabelDomain::Signed);
  // Inputs live in [0, 1]; the pair 0.25 / 0.75 is the unit-box version of
  // +-1 (w = 4, b = -2 puts the boundary at 0.5 and the margins at the points).
  d.add(Tensor::from({0.25}), -1);
  d.add(Tensor::from({0.75}), 1);
  const SvmModel m = svm_train(d);
  EXPECT_NEAR(m.w()[0], 4.0, 1e-6);
  EXPECT_NEAR(m.b(), -2.0, 1e-6);
  EXPECT_NEAR(svm_decision(m, std::vector<double>{0.5}).value, 0.0, 1e-6);
  EXPECT_NEAR(svm_decision(m, std::vector<double>{0.75}).value, 1.0, 1e-6);
  EXPECT_EQ(svm_decision(m, std::vector<double>{0.9}).label, 1);
  EXPECT_EQ(svm_decision(m, std::vector<double>{0.1}).label, -1);
}

TEST(Svm, MatchesDenseOracleAndKkt) {
  Rng rng = make_rng(31);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = separable_set(rng, 8);
    const SvmModel m = svm_train(d);
    const DenseSvm o = dense_svm_oracle(d);
    EXPECT_NEAR(m.w()[0], o.w(0), 1e-3);
    EXPECT_NEAR(m.w()[1], o.w(1), 1e-3);
    EXPECT_NEAR(m.b(), o.b, 1e-3);
    const auto kkt = svm_kkt_residual(m, d);
    EXPECT_LT(kkt.complementarity, 1e-4);
    EXPECT_LT(kkt.equality, 1e-6);
    EXPECT_NEAR(svm_primal_objective(m), svm_dual_objective(m, d), 1e-3);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = d.label(i) * svm_decision(m, d.input(i).values()).value;
      const bool support = std::find(m.support_indices().begin(), m.support_indices().end(), i) != m.support_indices().end();
      if (support) EXPECT_NEAR(v, 1.0, 1e-4);
      else EXPECT_GT(v, 1.0 - 1e-9);
    }
  }
}

TEST(Svm, RemovingNonSupportPointLeavesHyperplane) {
  Rng rng = make_rng(12);
  for (int t = 0; t < 10; ++t) {
    const Dataset d = separable_set(rng, 30);
    const SvmModel m = svm_train(d);
    std::vector<std::size_t> keep;
    bool dropped = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const bool support = std::find(m.support_indices().begin(), m.support_indices().end(), i) != m.support_indices().end();
      if (!support && !dropped) {
        dropped = true;
        continue;
      }
      keep.push_back(i);
    }
    const SvmModel r = svm_train(d.subset(keep));
    EXPECT_NEAR(r.w()[0], m.w()[0], 1e-4);
    EXPECT_NEAR(r.w()[1], m.w()[1], 1e-4);
    EXPECT_NEAR(r.b(), m.b(), 1e-4);
  }
}

TEST(Svm, NonSeparableFails) {
  Dataset d({1}, 2, LabelDomain::Signed);
  d.add(Tensor::from({0.2}), 1);
  d.add(Tensor::from({0.5}), -1);
  d.add(Tensor::from({0.8}), 1);
  EXPECT_THROW(svm_train(d), SolverError);
}

TEST(Svm, SeparatedBlobsFitPerfectly) {
  const Dataset d = gaussian_blobs({100, 2, 2, 0.6, 0.03}, 2).with_domain(LabelDomain::Signed);
  const SvmModel m = svm_train(d);
  EXPECT_EQ(accuracy(m, d), 1.0);
}
