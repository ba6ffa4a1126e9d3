#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <bit>
#include <filesystem>
#include <numeric>

#include "advml/error.hpp"
#include "advml/norms.hpp"
#include "advml/poisoning.hpp"
#include "fixtures.hpp"

using namespace advml;
using namespace advml::testing;

namespace {

Dataset signed_blobs(std::size_t n, double separation, std::uint64_t seed, double noise = 0.05) {
  return gaussian_blobs({n, 2, 2, separation, noise}, seed).with_domain(LabelDomain::Signed);
}

TrainConfig linear_config() {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.5;
  cfg.batch = 8;
  cfg.seed = 3;
  return cfg;
}

Trainer linear_trainer() { return mlp_trainer(MlpLayout{0, {}, 2, Activation::identity()}, linear_config()); }

// Normal of a two-class linear softmax model.
std::vector<double> normal_of(const MlpModel& m) {
  const auto& l = m.layers().back();
  std::vector<double> w(l.inputs);
  for (std::size_t k = 0; k < l.inputs; ++k) w[k] = l.weights[l.inputs + k] - l.weights[k];
  return w;
}

double angle(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return std::acos(std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0));
}

struct Digits {
  Dataset train, test;
  MlpModel model;
};

const Digits& digits() {
  static const Digits d = [] {
    Digits f;
    const Split s = split(synth_digits({400, 0.1, 1, 8}, 5), 0.75, 5, true);
    f.train = s.train;
    f.test = s.test;
    f.model = digit_model(f.train);
    return f;
  }();
  return d;
}

// Two-layer model whose first layer is the linear feature map A x + a.
MlpModel linear_extractor(Rng& rng, std::size_t inputs, std::size_t features) {
  DenseLayer f;
  f.inputs = inputs;
  f.outputs = features;
  f.activation = Activation::identity();
  for (std::size_t k = 0; k < inputs * features; ++k) f.weights.push_back(uniform(rng, -1.0, 1.0));
  for (std::size_t k = 0; k < features; ++k) f.bias.push_back(uniform(rng, 0.5, 1.0));
  DenseLayer top;
  top.inputs = features;
  top.outputs = 2;
  top.weights.assign(2 * features, 0.1);
  top.bias = {0.0, 0.0};
  top.activation = Activation::identity();
  return MlpModel({f, top});
}

}  // namespace

TEST(FlipRandom, CountIsFloorOfFraction) {
  const Dataset d = signed_blobs(10, 0.6, 1);
  const auto p = flip_random(d, 0.3, FlipMode::untargeted(), 7);
  ASSERT_EQ(p.modified_indices.size(), 3u);
  EXPECT_EQ(p.budget, 3u);
  EXPECT_TRUE(unmodified_identical(d, p));
  for (std::size_t i : p.modified_indices) {
    EXPECT_EQ(p.examples.label(i), -d.label(i));
    EXPECT_EQ(p.provenance.at(i).original_label, d.label(i));
  }
  EXPECT_EQ(poison_count(100, 0.07), 7u);
}

TEST(FlipRandom, TinyFractionChangesNothing) {
  const Dataset d = signed_blobs(10, 0.6, 1);
  const auto p = flip_random(d, 1e-9, FlipMode::untargeted(), 7);
  EXPECT_TRUE(p.modified_indices.empty());
  EXPECT_EQ(p.examples, d);
}

TEST(FlipRandom, RejectsFractionOutsideUnitInterval) {
  const Dataset d = signed_blobs(10, 0.6, 1);
  EXPECT_THROW(flip_random(d, 0.0, FlipMode::untargeted(), 1), InvalidInput);
  EXPECT_THROW(flip_random(d, 1.0, FlipMode::untargeted(), 1), InvalidInput);
}

TEST(FlipRandom, TargetedFlipsOnlySourceClass) {
  const Dataset d = gaussian_blobs({60, 2, 3, 0.6, 0.05}, 4);
  const auto p = flip_random(d, 0.25, FlipMode::targeted_flip(0, 2), 9);
  ASSERT_EQ(p.modified_indices.size(), 15u);
  for (std::size_t i : p.modified_indices) {
    EXPECT_EQ(d.label(i), 0);
    EXPECT_EQ(p.examples.label(i), 2);
  }
  EXPECT_TRUE(unmodified_identical(d, p));
  EXPECT_THROW(flip_random(d, 0.5, FlipMode::targeted_flip(0, 2), 9), InsufficientPopulation);
  EXPECT_THROW(flip_random(d, 0.2, FlipMode::untargeted(), 9), InvalidInput);
}

TEST(FlipRandom, SameSeedSameFlips) {
  const Dataset d = signed_blobs(50, 0.6, 2);
  EXPECT_EQ(flip_random(d, 0.2, FlipMode::untargeted(), 5), flip_random(d, 0.2, FlipMode::untargeted(), 5));
}

TEST(FlipRandom, DegradesRetrainedTestAccuracy) {
  // A flipped set is no longer separable, so the retrained victim is the
  // linear softmax model rather than the hard-margin SVM.
  const Split s = split(signed_blobs(300, 0.5, 11, 0.12), 0.5, 11);
  const auto trainer = linear_trainer();
  const double clean = accuracy(*trainer(s.train), s.test);
  const auto p = flip_random(s.train, 0.3, FlipMode::targeted_flip(-1, 1), 3);
  const double poisoned = accuracy(*trainer(p.examples), s.test);
  EXPECT_LT(poisoned, clean);
}

TEST(FlipFarfirst, SingleFlipIsLargestMargin) {
  const Dataset d = signed_blobs(40, 0.6, 3);
  const SvmModel svm = svm_train(d);
  const auto p = flip_farfirst(d, svm, 1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (std::fabs(svm.decide(d.input(i).values()).value) > std::fabs(svm.decide(d.input(best).values()).value)) {
      best = i;
    }
  }
  ASSERT_EQ(p.modified_indices.size(), 1u);
  EXPECT_EQ(p.modified_indices[0], best);
  EXPECT_EQ(p.examples.label(best), -d.label(best));
}

TEST(FlipFarfirst, FlippedPointsWereNotSupportVectors) {
  const Dataset d = signed_blobs(60, 0.6, 4);
  const SvmModel svm = svm_train(d);
  const auto p = flip_farfirst(d, svm, 10);
  ASSERT_EQ(p.modified_indices.size(), 10u);
  const auto& sv = svm.support_indices();
  for (std::size_t i : p.modified_indices) {
    EXPECT_GT(std::fabs(svm.decide(d.input(i).values()).value), 1.0);
    EXPECT_EQ(std::find(sv.begin(), sv.end(), i), sv.end());
  }
  EXPECT_TRUE(unmodified_identical(d, p));
}

TEST(FlipFarfirst, TurnsHyperplaneAtLeastAsMuchAsRandomFlips) {
  const auto trainer = linear_trainer();
  double far_total = 0.0, random_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = signed_blobs(80, 0.5, 100 + seed);
    const SvmModel svm = svm_train(d);
    const auto clean = normal_of(dynamic_cast<const MlpModel&>(*trainer(d)));
    const auto far = flip_farfirst(d, svm, 8);
    const auto rnd = flip_random(d, 8.5 / 80.0, FlipMode::untargeted(), seed);
    ASSERT_EQ(rnd.modified_indices.size(), 8u);
    far_total += angle(clean, normal_of(dynamic_cast<const MlpModel&>(*trainer(far.examples))));
    random_total += angle(clean, normal_of(dynamic_cast<const MlpModel&>(*trainer(rnd.examples))));
  }
  EXPECT_GE(far_total, random_total);
}

TEST(FlipFarfirst, TooFewCorrectPoints) {
  const Dataset d = signed_blobs(10, 0.6, 5);
  EXPECT_THROW(flip_farfirst(d, svm_train(d), 11), InsufficientPopulation);
}

TEST(FlipGreedy, FirstFlipMatchesExhaustiveSearch) {
  const auto trainer = linear_trainer();
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Dataset train = signed_blobs(8, 0.3, 200 + seed, 0.15);
    const Dataset test = signed_blobs(40, 0.3, 300 + seed, 0.15);
    const auto greedy = flip_greedy(train, test, 1, trainer);
    const auto oracle = exhaustive_flip_search(train, test, 1, trainer);
    ASSERT_EQ(greedy.modified_indices.size(), 1u);
    EXPECT_EQ(greedy.modified_indices[0], oracle.indices[0]) << "seed " << seed;
    EXPECT_DOUBLE_EQ(greedy.round_objective[0], oracle.objective);
  }
}

TEST(FlipGreedy, CountsRetrainings) {
  const Dataset train = signed_blobs(8, 0.3, 7, 0.15);
  const Dataset test = signed_blobs(20, 0.3, 8, 0.15);
  const auto p = flip_greedy(train, test, 3, linear_trainer());
  EXPECT_EQ(p.retrainings, 8u + 7u + 6u);
  EXPECT_EQ(p.modified_indices.size(), 3u);
  EXPECT_EQ(p.round_objective.size(), 3u);
  EXPECT_TRUE(unmodified_identical(train, p));
}

TEST(FlipGreedy, TestErrorGrowsAcrossRounds) {
  const Dataset train = signed_blobs(10, 0.3, 17, 0.15);
  const Dataset test = signed_blobs(40, 0.3, 18, 0.15);
  const auto trainer = linear_trainer();
  const double clean = test_error(*trainer(train), test);
  const auto p = flip_greedy(train, test, 3, trainer);
  EXPECT_GE(p.round_objective[0], clean);
  for (std::size_t r = 1; r < p.round_objective.size(); ++r) {
    EXPECT_GE(p.round_objective[r], p.round_objective[r - 1]);
  }
}

TEST(FlipGreedy, ZeroBudgetLeavesDataUnchanged) {
  const Dataset train = signed_blobs(8, 0.3, 7);
  const auto p = flip_greedy(train, train, 0, linear_trainer());
  EXPECT_EQ(p.examples, train);
  EXPECT_EQ(p.retrainings, 0u);
}

TEST(FlipGreedy, ThreadedEvaluationMatchesSerial) {
  const Dataset train = signed_blobs(8, 0.3, 27, 0.15);
  const Dataset test = signed_blobs(20, 0.3, 28, 0.15);
  const auto serial = flip_greedy(train, test, 2, linear_trainer());
  const auto threaded = flip_greedy(train, test, 2, linear_trainer(), test_error, {3});
  EXPECT_EQ(serial, threaded);
}

TEST(FlipGreedy, ExhaustivePairIsAtLeastGreedy) {
  const Dataset train = signed_blobs(7, 0.3, 37, 0.15);
  const Dataset test = signed_blobs(30, 0.3, 38, 0.15);
  const auto greedy = flip_greedy(train, test, 2, linear_trainer());
  const auto oracle = exhaustive_flip_search(train, test, 2, linear_trainer());
  EXPECT_EQ(oracle.retrainings, 21u);
  EXPECT_GE(oracle.objective, greedy.round_objective.back());
}

TEST(FeatureCollision, LargeBetaKeepsBase) {
  const auto& d = digits();
  const auto r = feature_collision(d.model, d.test.input(0), d.test.input(1), {1e6, 50, 0.5, std::nullopt});
  EXPECT_LT(lp_distance(r.poison, d.test.input(1), NormKind::Linf), 1e-4);
}

TEST(FeatureCollision, ZeroBetaImprovesFeatureDistance) {
  const auto& d = digits();
  const Tensor& xt = d.test.input(0);
  const Tensor& xb = d.test.input(5);
  const auto ft = d.model.features(xt.values());
  const double start = feature_distance(d.model, xb, ft);
  const auto r = feature_collision(d.model, xt, xb, {0.0, 100, 0.5, std::nullopt});
  EXPECT_LE(r.final_terms.feature_term, start);
  EXPECT_LT(r.final_terms.feature_term, 0.5 * start);
}

TEST(FeatureCollision, ObjectiveNeverIncreases) {
  const auto& d = digits();
  const auto r = feature_collision(d.model, d.test.input(2), d.test.input(3), {0.1, 150, 2.0, std::nullopt});
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    const double prev = r.trace[k - 1].feature_term + r.trace[k - 1].input_term;
    EXPECT_LE(r.trace[k].feature_term + r.trace[k].input_term, prev);
  }
  for (double v : r.poison) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(FeatureCollision, WatermarkBlendsTarget) {
  const auto& d = digits();
  const Tensor& xt = d.test.input(0);
  const Tensor& xb = d.test.input(1);
  const auto plain = feature_collision(d.model, xt, xb, {0.2, 30, 0.5, std::nullopt});
  const auto marked = feature_collision(d.model, xt, xb, {0.2, 30, 0.5, 0.3});
  const Tensor expect = add_scaled(0.7 * plain.poison, 0.3, xt);
  EXPECT_LT(lp_distance(marked.poison, expect, NormKind::Linf), 1e-12);
}

TEST(FeatureCollision, RejectsBadArguments) {
  const auto& d = digits();
  EXPECT_THROW(feature_collision(d.model, d.test.input(0), Tensor({3}), {}), InvalidInput);
  EXPECT_THROW(feature_collision(d.model, d.test.input(0), d.test.input(1), {-1.0, 10, 0.5, std::nullopt}),
               InvalidInput);
}

TEST(FeatureCollision, PoisonsTransferLearningVictim) {
  const auto& d = digits();
  // Target: the least confident correctly classified test point.
  std::size_t target = d.test.size();
  double lowest = 2.0;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    const auto p = d.model.predict(d.test.input(i));
    if (p.label != d.test.label(i)) continue;
    if (p.probs[static_cast<std::size_t>(p.label)] < lowest) {
      lowest = p.probs[static_cast<std::size_t>(p.label)];
      target = i;
    }
  }
  ASSERT_LT(target, d.test.size());
  const int t = d.test.label(target);
  const int b = (t + 1) % 4;
  std::vector<Tensor> poisons, bases;
  for (std::size_t i = 0; i < d.train.size() && poisons.size() < 5; ++i) {
    if (d.train.label(i) != b) continue;
    bases.push_back(d.train.input(i));
    poisons.push_back(feature_collision(d.model, d.test.input(target), bases.back(), {0.05, 300, 0.5, 0.3}).poison);
  }
  const auto poisoned = append_poisons(d.train, poisons, bases, b);
  EXPECT_TRUE(unmodified_identical(d.train, poisoned));
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.1;
  cfg.seed = 2;
  cfg.frozen_layers = d.model.layer_count() - 1;
  const MlpModel victim = train_mlp(poisoned.examples, d.model, cfg);
  EXPECT_EQ(victim.classify(d.test.input(target).values()), b);
}

TEST(ProjectSimplex, Examples) {
  EXPECT_EQ(project_simplex({0.2, 0.3, 0.5}), (std::vector<double>{0.2, 0.3, 0.5}));
  EXPECT_EQ(project_simplex({2.0, 0.0}), (std::vector<double>{1.0, 0.0}));
  const auto c = project_simplex({0.5, 0.5, 0.5});
  for (double v : c) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto n = project_simplex({-3.0, 1.0, 0.4});
  EXPECT_NEAR(n[0], 0.0, 0.0);
  EXPECT_NEAR(n[1], 0.8, 1e-15);
  EXPECT_NEAR(n[2], 0.2, 1e-15);
}

TEST(Polytope, PoisonsStayInsideLinfBall) {
  const auto& d = digits();
  std::vector<Tensor> bases = {d.train.input(0), d.train.input(1), d.train.input(2)};
  for (PolytopeMode mode : {PolytopeMode::BullseyeSingle, PolytopeMode::Convex}) {
    PolytopeOptions o;
    o.mode = mode;
    o.eps = 0.05;
    o.max_iter = 60;
    const auto r = polytope_attack({d.model}, {d.test.input(0)}, bases, o);
    for (const auto& t : r.trace) EXPECT_LE(t.max_linf, o.eps + 1e-9);
    for (std::size_t j = 0; j < bases.size(); ++j) {
      EXPECT_LE(lp_distance(r.poisons[j], bases[j], NormKind::Linf), o.eps + 1e-9);
      for (double v : r.poisons[j]) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective);
  }
}

TEST(Polytope, ConvexCoefficientsStayOnSimplex) {
  const auto& d = digits();
  std::vector<Tensor> bases = {d.train.input(3), d.train.input(4), d.train.input(5), d.train.input(6)};
  for (int iters = 1; iters <= 12; ++iters) {
    PolytopeOptions o;
    o.mode = PolytopeMode::Convex;
    o.eps = 0.1;
    o.max_iter = iters;
    const auto r = polytope_attack({d.model, digit_model(d.train, 16, 9)}, {d.test.input(1)}, bases, o);
    ASSERT_EQ(r.coefficients.size(), 2u);
    for (const auto& c : r.coefficients) {
      EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 1.0, 1e-12);
      for (double v : c) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Polytope, SingleBaseBullseyeIsFeatureCollisionWithoutInputTerm) {
  const auto& d = digits();
  const Tensor& xt = d.test.input(0);
  const Tensor& xb = d.test.input(7);
  const auto ft = d.model.features(xt.values());
  double sq = 0.0;
  for (double v : ft) sq += v * v;
  // Same objective up to the 1 / (2 ||phi||^2) scale.
  const Tensor probe = d.test.input(9);
  EXPECT_NEAR(polytope_objective({d.model}, {xt}, {probe}, {{1.0}}, PolytopeMode::BullseyeSingle),
              feature_distance(d.model, probe, ft) / (2.0 * sq), 1e-12);
  PolytopeOptions o;
  o.eps = 1.0;
  o.max_iter = 300;
  const auto poly = polytope_attack({d.model}, {xt}, {xb}, o);
  const auto fc = feature_collision(d.model, xt, xb, {0.0, 300, 0.5, std::nullopt});
  EXPECT_NEAR(poly.objective, fc.final_terms.feature_term / (2.0 * sq), 0.02);
}

TEST(Polytope, BullseyeResidualFallsToAnalyticMinimumOnLinearExtractor) {
  Rng rng = make_rng(41);
  const MlpModel f = linear_extractor(rng, 6, 3);
  const Tensor xt = random_input(rng, 6, 0.3, 0.7);
  std::vector<Tensor> bases;
  for (int j = 0; j < 3; ++j) bases.push_back(random_input(rng, 6, 0.2, 0.8));
  PolytopeOptions o;
  o.eps = 1.0;
  o.max_iter = 2000;
  o.step = 0.05;
  const auto r = polytope_attack({f}, {xt}, bases, o);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].residual, r.trace[k - 1].residual + 1e-15);
  // Every poison can reach x_t, so the minimum residual is zero.
  EXPECT_LT(r.residual, 1e-3);
}

TEST(Polytope, MultiTargetUsesMeanFeature) {
  Rng rng = make_rng(43);
  const MlpModel f = linear_extractor(rng, 4, 3);
  const Tensor t1 = random_input(rng, 4), t2 = random_input(rng, 4);
  const Tensor p = random_input(rng, 4);
  const Tensor mid = 0.5 * (t1 + t2);
  EXPECT_NEAR(polytope_objective({f}, {t1, t2}, {p}, {{1.0}}, PolytopeMode::BullseyeMulti),
              polytope_objective({f}, {mid}, {p}, {{1.0}}, PolytopeMode::BullseyeSingle), 1e-12);
}

TEST(Backdoor, PoisonsFloorRateExamples) {
  const Dataset d = synth_digits({100, 0.1, 1, 8}, 3);
  const Trigger t = corner_trigger(d.dims(), 2, 0);
  const auto p = backdoor_poison(d, t, 0.1, 4);
  ASSERT_EQ(p.modified_indices.size(), 10u);
  EXPECT_TRUE(unmodified_identical(d, p));
  for (std::size_t i : p.modified_indices) {
    EXPECT_EQ(p.examples.label(i), 0);
    EXPECT_EQ(p.provenance.at(i).original_label, d.label(i));
    EXPECT_EQ(p.provenance.at(i).trigger_applied, true);
    const Tensor& a = d.input(i);
    const Tensor& b = p.examples.input(i);
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        if (r >= 6 && c >= 6) {
          EXPECT_EQ(b.at(r, c), 1.0);
        } else {
          EXPECT_EQ(std::bit_cast<std::uint64_t>(a.at(r, c)), std::bit_cast<std::uint64_t>(b.at(r, c)));
        }
      }
    }
  }
}

TEST(Backdoor, TinyRateChangesNothing) {
  const Dataset d = synth_digits({50, 0.1, 1, 8}, 3);
  const auto p = backdoor_poison(d, corner_trigger(d.dims(), 2, 1), 1e-6, 1);
  EXPECT_EQ(p.examples, d);
  EXPECT_TRUE(p.modified_indices.empty());
}

TEST(Backdoor, RejectsTriggersThatDoNotFit) {
  const Dataset d = synth_digits({20, 0.1, 1, 8}, 3);
  Trigger t = corner_trigger(d.dims(), 2, 1);
  t.col = 7;
  EXPECT_THROW(backdoor_poison(d, t, 0.5, 1), InvalidTrigger);
  Trigger rgb = corner_trigger({8, 8, 3}, 2, 1);
  EXPECT_THROW(backdoor_poison(d, rgb, 0.5, 1), InvalidTrigger);
  EXPECT_THROW(corner_trigger(d.dims(), 9, 1), InvalidTrigger);
  Trigger bad_label = corner_trigger(d.dims(), 2, 7);
  EXPECT_THROW(backdoor_poison(d, bad_label, 0.5, 1), InvalidTrigger);
}

TEST(Backdoor, CleanModelIgnoresTrigger) {
  const auto& d = digits();
  const auto m = backdoor_eval(d.model, d.test, corner_trigger(d.train.dims(), 2, 0));
  EXPECT_LT(m.attack_success_rate, 2.0 / 4.0);
  EXPECT_GT(m.clean_accuracy, 0.9);
}

TEST(Backdoor, PoisonedModelObeysTrigger) {
  const auto& d = digits();
  const Trigger t = corner_trigger(d.train.dims(), 2, 0);
  const auto p = backdoor_poison(d.train, t, 0.1, 8);
  const MlpModel bad = digit_model(p.examples);
  const auto clean = backdoor_eval(d.model, d.test, t);
  const auto poisoned = backdoor_eval(bad, d.test, t);
  EXPECT_GE(poisoned.attack_success_rate, 0.9);
  EXPECT_LE(std::fabs(poisoned.clean_accuracy - clean.clean_accuracy), 0.05);
  EXPECT_EQ(poisoned.triggered, clean.triggered);
}

TEST(Backdoor, EmptyTriggeredSetIsAnError) {
  Dataset only_target({8, 8}, 4);
  only_target.add(Tensor({8, 8}, 0.5), 2);
  const auto& d = digits();
  EXPECT_THROW(backdoor_eval(d.model, only_target, corner_trigger({8, 8}, 2, 2)), InvalidInput);
}

TEST(PoisonedDataset, SidecarRoundTrip) {
  const Dataset d = synth_digits({30, 0.1, 1, 8}, 3);
  auto p = backdoor_poison(d, corner_trigger(d.dims(), 2, 3), 0.2, 2);
  p.round_objective = {0.25, 0.5};
  const auto path = (std::filesystem::temp_directory_path() / "advml_poisoned_roundtrip.csv").string();
  save_poisoned(p, path);
  EXPECT_TRUE(std::filesystem::exists(path + ".provenance.json"));
  const auto back = load_poisoned(path);
  EXPECT_EQ(back, p);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".provenance.json");
}

TEST(PoisonedDataset, AppendedPoisonsAreRecorded) {
  const Dataset d = synth_digits({10, 0.1, 1, 8}, 3);
  Tensor poison = d.input(0);
  poison[0] = std::min(1.0, poison[0] + 0.05);
  const auto p = append_poisons(d, {poison}, {d.input(0)}, 1);
  ASSERT_EQ(p.examples.size(), 11u);
  EXPECT_EQ(p.modified_indices, (std::vector<std::size_t>{10}));
  EXPECT_EQ(p.examples.label(10), 1);
  EXPECT_NEAR(*p.provenance.at(10).perturbation_norm, lp_distance(poison, d.input(0), NormKind::Linf), 0.0);
  EXPECT_TRUE(unmodified_identical(d, p));
}
