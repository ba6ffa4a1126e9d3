#include <numeric>
#include <ostream>

#include "advml/error.hpp"
#include "advml/poisoning.hpp"
#include "advml/rng.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace advml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Victim {
  MlpLayout layout;
  TrainConfig train;
};

PoisonedDataset flips_at(const Dataset& train, const FlipSearchResult& r, std::size_t l) {
  PoisonedDataset pd;
  pd.examples = train;
  pd.budget = l;
  pd.retrainings = r.retrainings;
  pd.round_objective = {r.objective};
  for (std::size_t i : r.indices) {
    Provenance p;
    p.original_label = train.label(i);
    pd.examples.set_label(i, flipped_label(train, train.label(i)));
    pd.provenance[i] = p;
    pd.modified_indices.push_back(i);
  }
  return pd;
}

int next_class(const Dataset& d, int label) {
  if (d.label_domain() == LabelDomain::Signed) return -label;
  return (label + 1) % static_cast<int>(d.class_count());
}

int to_label(const Dataset& d, int class_index) {
  return d.label_domain() == LabelDomain::Signed ? 2 * class_index - 1 : class_index;
}

struct CleanLabelSetup {
  std::size_t target_index = 0;
  int target_label = 0;
  int base_label = 0;
  std::vector<Tensor> bases;
};

CleanLabelSetup clean_label_setup(const RunConfig& c, const DataPair& d) {
  CleanLabelSetup s;
  s.target_index = c.count("target-index");
  if (s.target_index >= d.test.size()) throw UsageError("--target-index is past the end of the test set");
  s.target_label = d.test.label(s.target_index);
  s.base_label = c.has("base-class") ? static_cast<int>(c.integer("base-class")) : next_class(d.test, s.target_label);
  if (!d.train.valid_label(s.base_label) || s.base_label == s.target_label) {
    throw UsageError("--base-class must be a class other than the target's");
  }
  const std::size_t k = c.count("k");
  if (k == 0) throw UsageError("--k must be positive");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    if (d.train.label(i) == s.base_label) pool.push_back(i);
  }
  if (pool.size() < k) throw UsageError("not enough training examples of the base class");
  Rng rng = make_rng(c.seed(), 0xba5e);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  for (std::size_t i = 0; i < k; ++i) s.bases.push_back(d.train.input(pool[i]));
  return s;
}

MlpModel retrain_victim(const RunConfig& c, const Dataset& poisoned, const MlpModel& clean, const Victim& v) {
  if (c.flag("finetune")) {
    TrainConfig t = v.train;
    t.frozen_layers = clean.layer_count() - 1;
    return train_mlp(poisoned, clean, t);
  }
  return train_mlp(poisoned, v.layout, v.train);
}

void target_outcome(json& m, const DataPair& d, const CleanLabelSetup& s, const MlpModel& clean,
                    const MlpModel& poisoned) {
  const Tensor& xt = d.test.input(s.target_index);
  m["target_index"] = s.target_index;
  m["target_label"] = s.target_label;
  m["base_class"] = s.base_label;
  m["clean_prediction"] = to_label(d.test, clean.classify(xt.values()));
  m["poisoned_prediction"] = to_label(d.test, poisoned.classify(xt.values()));
  m["target_success"] = m["poisoned_prediction"].get<int>() == s.base_label;
}

}  // namespace

void cmd_poison(const RunConfig& c, std::ostream& out) {
  const std::string strategy = c.str("strategy");
  const DataPair d = load_data(c);
  Victim v;
  v.layout = layout_from(c, "victim-hidden", "victim-activation");
  v.layout.classes = d.train.class_count();
  v.train = train_config_from(c);
  const std::uint64_t seed = c.seed();
  const MlpModel clean = train_mlp(d.train, v.layout, v.train);

  json m;
  m["strategy"] = strategy;
  m["clean_test_accuracy"] = accuracy(clean, d.test);
  PoisonedDataset pd;
  std::optional<MlpModel> poisoned_model;

  if (strategy == "random") {
    const std::string mode = c.str("mode");
    FlipMode fm;
    if (mode == "targeted") {
      fm = FlipMode::targeted_flip(static_cast<int>(c.integer("src")), static_cast<int>(c.integer("dst")));
    } else if (mode == "untargeted") {
      if (c.has("src") || c.has("dst")) throw UsageError("--src and --dst need --mode targeted");
    } else {
      throw UsageError("--mode must be untargeted or targeted");
    }
    pd = flip_random(d.train, c.real("p"), fm, seed);
  } else if (strategy == "farfirst") {
    SvmModel svm;
    try {
      svm = svm_train(d.train);
    } catch (const SolverError& e) {
      throw UsageError(std::string("farfirst needs linearly separable training data: ") + e.what());
    }
    pd = flip_farfirst(d.train, svm, c.count("l"));
  } else if (strategy == "greedy") {
    GreedyOptions g;
    g.threads = static_cast<unsigned>(c.count("threads"));
    pd = flip_greedy(d.train, d.test, c.count("l"), mlp_trainer(v.layout, v.train), test_error, g);
  } else if (strategy == "exhaustive-oracle") {
    const std::size_t l = c.count("l");
    pd = flips_at(d.train, exhaustive_flip_search(d.train, d.test, l, mlp_trainer(v.layout, v.train)), l);
  } else if (strategy == "feature-collision") {
    const CleanLabelSetup s = clean_label_setup(c, d);
    FeatureCollisionOptions o;
    o.beta = c.real("beta");
    o.max_iter = static_cast<int>(c.count("iters"));
    o.step = c.real("step");
    o.watermark_opacity = c.opt_real("watermark");
    std::vector<Tensor> poisons;
    double feature_term = 0.0;
    for (const Tensor& b : s.bases) {
      const auto r = feature_collision(clean, d.test.input(s.target_index), b, o);
      poisons.push_back(r.poison);
      feature_term += r.final_terms.feature_term / static_cast<double>(s.bases.size());
    }
    pd = append_poisons(d.train, poisons, s.bases, s.base_label);
    poisoned_model = retrain_victim(c, pd.examples, clean, v);
    m["mean_feature_distance"] = feature_term;
    target_outcome(m, d, s, clean, *poisoned_model);
  } else if (strategy == "polytope") {
    const CleanLabelSetup s = clean_label_setup(c, d);
    PolytopeOptions o;
    const std::string mode = c.str("polytope-mode");
    if (mode == "convex") {
      o.mode = PolytopeMode::Convex;
    } else if (mode == "bullseye") {
      o.mode = PolytopeMode::BullseyeSingle;
    } else if (mode == "bullseye-multi") {
      o.mode = PolytopeMode::BullseyeMulti;
    } else {
      throw UsageError("--polytope-mode must be convex, bullseye or bullseye-multi");
    }
    o.eps = c.real("eps");
    o.max_iter = static_cast<int>(c.count("iters"));
    o.step = c.real("step");
    std::vector<MlpModel> extractors = {clean};
    const std::size_t extra = c.count("extractors");
    if (extra == 0) throw UsageError("--extractors must be positive");
    for (std::size_t e = 1; e < extra; ++e) {
      TrainConfig t = v.train;
      t.seed = mix_seed(seed, e);
      extractors.push_back(train_mlp(d.train, v.layout, t));
    }
    std::vector<Tensor> targets = {d.test.input(s.target_index)};
    const std::size_t want = c.count("targets");
    if (want > 1 && o.mode != PolytopeMode::BullseyeMulti) throw UsageError("--targets needs bullseye-multi");
    for (std::size_t i = 0; i < d.test.size() && targets.size() < want; ++i) {
      if (i != s.target_index && d.test.label(i) == s.target_label) targets.push_back(d.test.input(i));
    }
    const auto r = polytope_attack(extractors, targets, s.bases, o);
    pd = append_poisons(d.train, r.poisons, s.bases, s.base_label);
    poisoned_model = retrain_victim(c, pd.examples, clean, v);
    m["residual"] = r.residual;
    m["objective"] = r.objective;
    target_outcome(m, d, s, clean, *poisoned_model);
  } else if (strategy == "backdoor") {
    const Trigger t = corner_trigger(d.train.dims(), c.count("trigger-size"), static_cast<int>(c.integer("target")),
                                     c.real("trigger-value"));
    pd = backdoor_poison(d.train, t, c.real("rate"), seed);
    poisoned_model = train_mlp(pd.examples, v.layout, v.train);
    const BackdoorMetrics before = backdoor_eval(clean, d.test, t);
    const BackdoorMetrics after = backdoor_eval(*poisoned_model, d.test, t);
    m["clean_model_attack_success_rate"] = before.attack_success_rate;
    m["attack_success_rate"] = after.attack_success_rate;
    m["triggered"] = after.triggered;
  } else {
    throw UsageError("unknown strategy '" + strategy + "'");
  }

  if (!poisoned_model) poisoned_model = train_mlp(pd.examples, v.layout, v.train);
  m["poisoned_test_accuracy"] = accuracy(*poisoned_model, d.test);
  m["budget"] = pd.budget;
  m["modified"] = pd.modified_indices.size();
  if (strategy == "greedy" || strategy == "exhaustive-oracle") {
    m["retrainings"] = pd.retrainings;
    m["round_objective"] = pd.round_objective;
    m["flipped_indices"] = pd.modified_indices;
  }
  m["seed"] = seed;

  const fs::path dir = prepare_out(c);
  save_poisoned(pd, (dir / "poisoned.csv").string());
  write_json(dir / "metrics.json", m);
  write_snapshot(dir, c);
  out << strategy << ": " << pd.modified_indices.size() << " examples modified, test accuracy "
      << m["clean_test_accuracy"].get<double>() << " -> " << m["poisoned_test_accuracy"].get<double>() << "\n";
}

}  // namespace advml::cli
