#include "advml/poisoning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <thread>

#include "advml/error.hpp"
#include "advml/io.hpp"
#include "advml/norms.hpp"
#include "advml/rng.hpp"

namespace advml {

using nlohmann::json;

namespace {

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.vec().data(), b.vec().data(), a.size() * sizeof(double)) == 0;
}

void require_binary(const Dataset& data, const char* who) {
  if (data.class_count() != 2) throw InvalidInput(std::string(who) + " needs a binary dataset");
}

PoisonedDataset start_from(const Dataset& data, std::size_t budget) {
  PoisonedDataset out;
  out.examples = data;
  out.budget = budget;
  return out;
}

void record_flip(PoisonedDataset& pd, std::size_t i, int new_label) {
  Provenance p;
  p.original_label = pd.examples.label(i);
  pd.examples.set_label(i, new_label);
  pd.provenance[i] = p;
  pd.modified_indices.push_back(i);
}

void finish(PoisonedDataset& pd) { std::sort(pd.modified_indices.begin(), pd.modified_indices.end()); }

// Index of a label in classify() numbering.
int label_index(const Dataset& data, int label) {
  if (data.label_domain() == LabelDomain::Signed) return label > 0 ? 1 : 0;
  return label;
}

Tensor feature_gradient(const MlpModel& m, const ForwardTrace& trace, const std::vector<double>& up,
                        const std::vector<std::size_t>& shape) {
  if (m.layer_count() == 1) return Tensor(up, shape);
  return Tensor(m.input_vjp(trace, up, m.layer_count() - 2), shape);
}

}  // namespace

bool unmodified_identical(const Dataset& source, const PoisonedDataset& poisoned) {
  if (poisoned.examples.size() < source.size()) return false;
  std::vector<bool> touched(poisoned.examples.size(), false);
  for (std::size_t i : poisoned.modified_indices) {
    if (i < touched.size()) touched[i] = true;
  }
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (touched[i]) continue;
    if (source.label(i) != poisoned.examples.label(i)) return false;
    if (!bit_equal(source.input(i), poisoned.examples.input(i))) return false;
  }
  return true;
}

std::string provenance_json(const PoisonedDataset& data) {
  json j;
  j["version"] = 1;
  j["budget"] = data.budget;
  j["modified_indices"] = data.modified_indices;
  j["retrainings"] = data.retrainings;
  j["round_objective"] = data.round_objective;
  json records = json::array();
  for (const auto& [i, p] : data.provenance) {
    json r;
    r["index"] = i;
    if (p.original_label) r["original_label"] = *p.original_label;
    if (p.perturbation_norm) r["perturbation_norm"] = *p.perturbation_norm;
    if (p.trigger_applied) r["trigger_applied"] = *p.trigger_applied;
    records.push_back(r);
  }
  j["provenance"] = records;
  return j.dump(2) + "\n";
}

void save_poisoned(const PoisonedDataset& data, const std::string& path) {
  save_dataset(data.examples, path);
  write_text_file(path + ".provenance.json", provenance_json(data));
}

PoisonedDataset load_poisoned(const std::string& path) {
  PoisonedDataset out;
  out.examples = load_dataset(path);
  const std::string side = path + ".provenance.json";
  json j;
  try {
    j = json::parse(read_text_file(side));
    out.budget = j.at("budget").get<std::size_t>();
    out.modified_indices = j.at("modified_indices").get<std::vector<std::size_t>>();
    out.retrainings = j.value("retrainings", std::size_t{0});
    out.round_objective = j.value("round_objective", std::vector<double>{});
    for (const auto& r : j.at("provenance")) {
      Provenance p;
      if (r.contains("original_label")) p.original_label = r["original_label"].get<int>();
      if (r.contains("perturbation_norm")) p.perturbation_norm = r["perturbation_norm"].get<double>();
      if (r.contains("trigger_applied")) p.trigger_applied = r["trigger_applied"].get<bool>();
      out.provenance[r.at("index").get<std::size_t>()] = p;
    }
  } catch (const json::exception& e) {
    throw ParseError(side + ": " + e.what(), 1, 0);
  }
  for (std::size_t i : out.modified_indices) {
    if (i >= out.examples.size()) throw ParseError(side + ": modified index out of range", 1, 0);
  }
  return out;
}

std::size_t poison_count(std::size_t n, double p) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * p * (1.0 + 1e-12)));
}

int flipped_label(const Dataset& data, int label) {
  require_binary(data, "label flipping");
  if (data.label_domain() == LabelDomain::Signed) return -label;
  return 1 - label;
}

PoisonedDataset flip_random(const Dataset& data, double p, const FlipMode& mode, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("flip fraction must lie in (0, 1)");
  const std::size_t count = poison_count(data.size(), p);
  std::vector<std::size_t> pool;
  if (mode.targeted) {
    const auto [src, dst] = *mode.targeted;
    if (!data.valid_label(src) || !data.valid_label(dst) || src == dst) {
      throw InvalidInput("targeted flip needs two distinct valid labels");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.label(i) == src) pool.push_back(i);
    }
    if (pool.size() < count) {
      throw InsufficientPopulation("only " + std::to_string(pool.size()) + " examples of class " +
                                   std::to_string(src) + ", need " + std::to_string(count));
    }
  } else {
    require_binary(data, "untargeted flipping");
    pool.resize(data.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  }
  Rng rng = make_rng(seed, 0xf11b);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
  PoisonedDataset out = start_from(data, count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = pool[k];
    record_flip(out, i, mode.targeted ? mode.targeted->second : flipped_label(data, data.label(i)));
  }
  finish(out);
  return out;
}

PoisonedDataset flip_farfirst(const Dataset& data, const SvmModel& svm, std::size_t l) {
  require_binary(data, "farfirst flipping");
  if (svm.input_size() != data.feature_count()) throw InvalidInput("SVM does not match the dataset width");
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto d = svm.decide(data.input(i).values());
    if ((d.label > 0 ? 1u : 0u) == data.class_index(i)) ranked.emplace_back(std::fabs(d.value), i);
  }
  if (ranked.size() < l) {
    throw InsufficientPopulation("only " + std::to_string(ranked.size()) + " correctly classified points");
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  PoisonedDataset out = start_from(data, l);
  for (std::size_t k = 0; k < l; ++k) {
    const std::size_t i = ranked[k].second;
    record_flip(out, i, flipped_label(data, data.label(i)));
  }
  finish(out);
  return out;
}

double test_error(const Classifier& model, const Dataset& test) {
  if (test.empty()) throw InvalidInput("test error of an empty dataset is undefined");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (static_cast<std::size_t>(model.classify(test.input(i).values())) != test.class_index(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

Trainer mlp_trainer(const MlpLayout& layout, const TrainConfig& config) {
  return [layout, config](const Dataset& d) -> std::shared_ptr<const Classifier> {
    return std::make_shared<MlpModel>(train_mlp(d, layout, config));
  };
}

Trainer svm_trainer(const SvmOptions& options) {
  return [options](const Dataset& d) -> std::shared_ptr<const Classifier> {
    return std::make_shared<SvmModel>(svm_train(d, options));
  };
}

PoisonedDataset flip_greedy(const Dataset& train, const Dataset& test, std::size_t l, const Trainer& trainer,
                            const FlipObjective& objective, const GreedyOptions& options) {
  if (l > train.size()) throw InvalidInput("cannot flip more labels than there are examples");
  if (l > 0) require_binary(train, "greedy flipping");
  PoisonedDataset out = start_from(train, l);
  std::vector<bool> flipped(train.size(), false);
  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;

  for (std::size_t round = 0; round < l; ++round) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (!flipped[i]) candidates.push_back(i);
    }
    std::vector<double> score(candidates.size());
    auto evaluate = [&](std::size_t k) {
      Dataset d = out.examples;
      const std::size_t i = candidates[k];
      d.set_label(i, flipped_label(d, d.label(i)));
      score[k] = objective(*trainer(d), test);
    };
    const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(candidates.size()));
    if (t <= 1) {
      for (std::size_t k = 0; k < candidates.size(); ++k) evaluate(k);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(t);
      for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < candidates.size(); k += t) evaluate(k);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    out.retrainings += candidates.size();
    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (score[k] > score[best]) best = k;
    }
    const std::size_t i = candidates[best];
    flipped[i] = true;
    record_flip(out, i, flipped_label(train, out.examples.label(i)));
    out.round_objective.push_back(score[best]);
  }
  finish(out);
  return out;
}

FlipSearchResult exhaustive_flip_search(const Dataset& train, const Dataset& test, std::size_t l,
                                        const Trainer& trainer, const FlipObjective& objective) {
  if (l > train.size()) throw InvalidInput("cannot flip more labels than there are examples");
  if (l > 0) require_binary(train, "flip search");
  FlipSearchResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(l);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t n = train.size();
  while (true) {
    Dataset d = train;
    for (std::size_t i : idx) d.set_label(i, flipped_label(d, d.label(i)));
    const double s = objective(*trainer(d), test);
    ++best.retrainings;
    if (s > best.objective) {
      best.objective = s;
      best.indices = idx;
    }
    // Next combination in lexicographic order.
    std::size_t k = l;
    while (k > 0 && idx[k - 1] == n - l + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t m = k; m < l; ++m) idx[m] = idx[m - 1] + 1;
  }
  return best;
}

double feature_distance(const MlpModel& extractor, const Tensor& x, const std::vector<double>& target_features,
                        Tensor* grad) {
  const auto trace = extractor.forward_trace(x.values());
  const auto& f = trace.post[extractor.layer_count() - 1];
  if (f.size() != target_features.size()) throw InvalidInput("target features have the wrong width");
  std::vector<double> up(f.size());
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double r = f[k] - target_features[k];
    s += r * r;
    up[k] = 2.0 * r;
  }
  if (grad) *grad = feature_gradient(extractor, trace, up, x.shape());
  return s;
}

FeatureCollisionResult feature_collision(const MlpModel& extractor, const Tensor& x_t, const Tensor& x_b,
                                         const FeatureCollisionOptions& options) {
  if (!x_t.same_shape(x_b) || x_t.size() != extractor.input_size()) {
    throw InvalidInput("target and base must match the extractor input");
  }
  if (!(options.beta >= 0.0) || !(options.step > 0.0) || options.max_iter < 0) {
    throw InvalidInput("feature collision needs beta >= 0, step > 0 and max_iter >= 0");
  }
  if (options.watermark_opacity && !(*options.watermark_opacity >= 0.0 && *options.watermark_opacity <= 1.0)) {
    throw InvalidInput("watermark opacity must lie in [0, 1]");
  }
  const auto ft = extractor.features(x_t.values());
  const double beta = options.beta;
  auto terms = [&](const Tensor& x, Tensor* g) {
    FeatureCollisionTrace t;
    t.feature_term = feature_distance(extractor, x, ft, g);
    t.input_term = beta * std::pow(lp_distance(x, x_b, NormKind::L2), 2);
    return t;
  };
  auto total = [](const FeatureCollisionTrace& t) { return t.feature_term + t.input_term; };

  FeatureCollisionResult out;
  Tensor x = x_b;
  Tensor g;
  FeatureCollisionTrace cur = terms(x, &g);
  out.trace.push_back(cur);
  double lambda = options.step;
  for (int it = 0; it < options.max_iter; ++it) {
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      Tensor xh = add_scaled(x, -lambda, g);
      Tensor xn = xh;
      const double denom = 1.0 + lambda * beta;
      for (std::size_t k = 0; k < xn.size(); ++k) {
        xn[k] = std::clamp((xh[k] + lambda * beta * x_b[k]) / denom, 0.0, 1.0);
      }
      Tensor gn;
      const FeatureCollisionTrace next = terms(xn, &gn);
      if (!std::isfinite(total(next))) {
        throw ConvergenceError("feature collision diverged", {total(cur)}, it);
      }
      if (total(next) <= total(cur)) {
        x = std::move(xn);
        g = std::move(gn);
        cur = next;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    out.iterations = it + 1;
    out.trace.push_back(cur);
    if (!accepted) break;
    lambda = std::min(lambda * 1.25, options.step);
  }
  if (options.watermark_opacity) {
    const double o = *options.watermark_opacity;
    x = add_scaled((1.0 - o) * x, o, x_t);
    cur = terms(x, nullptr);
  }
  out.poison = std::move(x);
  out.final_terms = cur;
  return out;
}

std::vector<double> project_simplex(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("cannot project an empty vector onto the simplex");
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& c : v) c = std::max(c - theta, 0.0);
  return v;
}

namespace {

struct PolytopeState {
  std::vector<std::vector<double>> phi;  // per extractor
  std::vector<double> phi_sq;
};

PolytopeState polytope_targets(const std::vector<MlpModel>& extractors, const std::vector<Tensor>& targets,
                               PolytopeMode mode) {
  PolytopeState s;
  const std::size_t used = mode == PolytopeMode::BullseyeMulti ? targets.size() : 1;
  for (const auto& f : extractors) {
    std::vector<double> phi(f.feature_size(), 0.0);
    for (std::size_t v = 0; v < used; ++v) {
      const auto fv = f.features(targets[v].values());
      for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += fv[k] / static_cast<double>(used);
    }
    double sq = 0.0;
    for (double p : phi) sq += p * p;
    if (!(sq > 0.0)) throw DegenerateGradient("target feature vector is zero");
    s.phi.push_back(std::move(phi));
    s.phi_sq.push_back(sq);
  }
  return s;
}

struct PolytopeEval {
  double objective = 0.0;
  double residual = 0.0;
  std::vector<Tensor> grad;                     // per poison
  std::vector<std::vector<double>> coeff_grad;  // per extractor
};

PolytopeEval polytope_eval(const std::vector<MlpModel>& extractors, const PolytopeState& s,
                           const std::vector<Tensor>& poisons, const std::vector<std::vector<double>>& c,
                           bool want_grad) {
  PolytopeEval e;
  const std::size_t k = poisons.size();
  if (want_grad) {
    for (const auto& p : poisons) e.grad.emplace_back(p.shape(), 0.0);
    e.coeff_grad.assign(extractors.size(), std::vector<double>(k, 0.0));
  }
  for (std::size_t i = 0; i < extractors.size(); ++i) {
    const auto& f = extractors[i];
    std::vector<ForwardTrace> traces;
    std::vector<double> r = s.phi[i];
    for (std::size_t j = 0; j < k; ++j) {
      traces.push_back(f.forward_trace(poisons[j].values()));
      const auto& fj = traces.back().post[f.layer_count() - 1];
      for (std::size_t q = 0; q < r.size(); ++q) r[q] -= c[i][j] * fj[q];
    }
    double rs = 0.0;
    for (double v : r) rs += v * v;
    e.objective += 0.5 * rs / s.phi_sq[i];
    e.residual += std::sqrt(rs / s.phi_sq[i]) / static_cast<double>(extractors.size());
    if (!want_grad) continue;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& fj = traces[j].post[f.layer_count() - 1];
      double dot = 0.0;
      for (std::size_t q = 0; q < r.size(); ++q) dot += fj[q] * r[q];
      e.coeff_grad[i][j] = -dot / s.phi_sq[i];
      std::vector<double> up(r.size());
      for (std::size_t q = 0; q < r.size(); ++q) up[q] = -c[i][j] * r[q] / s.phi_sq[i];
      e.grad[j] = e.grad[j] + feature_gradient(f, traces[j], up, poisons[j].shape());
    }
  }
  return e;
}

double max_linf(const std::vector<Tensor>& poisons, const std::vector<Tensor>& bases) {
  double m = 0.0;
  for (std::size_t j = 0; j < poisons.size(); ++j) m = std::max(m, lp_distance(poisons[j], bases[j], NormKind::Linf));
  return m;
}

}  // namespace

double polytope_objective(const std::vector<MlpModel>& extractors, const std::vector<Tensor>& targets,
                          const std::vector<Tensor>& poisons, const std::vector<std::vector<double>>& c,
                          PolytopeMode mode) {
  return polytope_eval(extractors, polytope_targets(extractors, targets, mode), poisons, c, false).objective;
}

PolytopeResult polytope_attack(const std::vector<MlpModel>& extractors, const std::vector<Tensor>& targets,
                               const std::vector<Tensor>& bases, const PolytopeOptions& options) {
  if (extractors.empty() || targets.empty() || bases.empty()) {
    throw InvalidInput("polytope attack needs extractors, targets and bases");
  }
  if (!(options.eps >= 0.0) || !(options.step > 0.0) || options.max_iter < 0) {
    throw InvalidInput("polytope attack needs eps >= 0, step > 0 and max_iter >= 0");
  }
  const std::size_t n = extractors.front().input_size();
  for (const auto& f : extractors) {
    if (f.input_size() != n) throw InvalidInput("extractors disagree on the input width");
  }
  for (const auto& t : targets) {
    if (t.size() != n) throw InvalidInput("target width does not match the extractors");
  }
  for (const auto& b : bases) {
    if (b.size() != n) throw InvalidInput("base width does not match the extractors");
  }
  const PolytopeState s = polytope_targets(extractors, targets, options.mode);
  const std::size_t k = bases.size();
  PolytopeResult out;
  out.poisons = bases;
  out.coefficients.assign(extractors.size(), std::vector<double>(k, 1.0 / static_cast<double>(k)));
  const bool convex = options.mode == PolytopeMode::Convex;

  auto project = [&](const Tensor& x, const Tensor& base) {
    Tensor y = x;
    for (std::size_t q = 0; q < y.size(); ++q) {
      y[q] = std::clamp(std::clamp(y[q], base[q] - options.eps, base[q] + options.eps), 0.0, 1.0);
    }
    return y;
  };

  PolytopeEval cur = polytope_eval(extractors, s, out.poisons, out.coefficients, true);
  out.trace.push_back({cur.objective, cur.residual, max_linf(out.poisons, bases)});
  double eta = options.step;
  double eta_c = options.coefficient_step;
  for (int it = 0; it < options.max_iter; ++it) {
    if (!std::isfinite(cur.objective)) throw ConvergenceError("polytope attack diverged", {cur.objective}, it);
    bool moved = false;
    if (convex) {
      for (int halving = 0; halving < 40; ++halving) {
        auto c = out.coefficients;
        for (std::size_t i = 0; i < c.size(); ++i) {
          for (std::size_t j = 0; j < k; ++j) c[i][j] -= eta_c * cur.coeff_grad[i][j];
          c[i] = project_simplex(std::move(c[i]));
        }
        PolytopeEval next = polytope_eval(extractors, s, out.poisons, c, true);
        if (next.objective <= cur.objective) {
          moved = moved || c != out.coefficients;
          out.coefficients = std::move(c);
          cur = std::move(next);
          eta_c = std::min(eta_c * 1.25, options.coefficient_step);
          break;
        }
        eta_c *= 0.5;
      }
    }
    for (int halving = 0; halving < 40; ++halving) {
      std::vector<Tensor> p(k);
      for (std::size_t j = 0; j < k; ++j) p[j] = project(add_scaled(out.poisons[j], -eta, cur.grad[j]), bases[j]);
      PolytopeEval next = polytope_eval(extractors, s, p, out.coefficients, true);
      if (next.objective <= cur.objective) {
        moved = moved || p != out.poisons;
        out.poisons = std::move(p);
        cur = std::move(next);
        eta = std::min(eta * 1.25, options.step);
        break;
      }
      eta *= 0.5;
    }
    out.iterations = it + 1;
    out.trace.push_back({cur.objective, cur.residual, max_linf(out.poisons, bases)});
    if (!moved) break;
  }
  out.objective = cur.objective;
  out.residual = cur.residual;
  return out;
}

PoisonedDataset append_poisons(const Dataset& data, const std::vector<Tensor>& poisons,
                               const std::vector<Tensor>& bases, int label) {
  if (poisons.size() != bases.size()) throw InvalidInput("every poison needs its base");
  PoisonedDataset out = start_from(data, poisons.size());
  for (std::size_t j = 0; j < poisons.size(); ++j) {
    const std::size_t i = out.examples.size();
    out.examples.add(poisons[j], label);
    Provenance p;
    p.perturbation_norm = lp_distance(poisons[j], bases[j], NormKind::Linf);
    out.provenance[i] = p;
    out.modified_indices.push_back(i);
  }
  return out;
}

Trigger corner_trigger(const std::vector<std::size_t>& image_dims, std::size_t side, int target_label,
                       double value) {
  if (image_dims.size() < 2 || image_dims.size() > 3) throw InvalidTrigger("trigger needs image dimensions");
  if (side == 0 || side > image_dims[0] || side > image_dims[1]) throw InvalidTrigger("trigger does not fit");
  std::vector<std::size_t> shape = {side, side};
  if (image_dims.size() == 3) shape.push_back(image_dims[2]);
  Trigger t;
  t.patch = Tensor(shape, value);
  t.row = image_dims[0] - side;
  t.col = image_dims[1] - side;
  t.target_label = target_label;
  return t;
}

Tensor apply_trigger(const Tensor& x, const Trigger& trigger) {
  if (!x.is_image() || !trigger.patch.is_image()) throw InvalidTrigger("trigger and input must be images");
  const auto& p = trigger.patch;
  if (p.channels() != x.channels()) throw InvalidTrigger("trigger channels do not match the input");
  if (p.height() == 0 || p.width() == 0 || trigger.row + p.height() > x.height() ||
      trigger.col + p.width() > x.width()) {
    throw InvalidTrigger("trigger patch falls outside the image");
  }
  Tensor out = x;
  for (std::size_t r = 0; r < p.height(); ++r) {
    for (std::size_t c = 0; c < p.width(); ++c) {
      for (std::size_t ch = 0; ch < p.channels(); ++ch) {
        out.at(trigger.row + r, trigger.col + c, ch) = p.at(r, c, ch);
      }
    }
  }
  return out;
}

void check_trigger(const Trigger& trigger, const Dataset& data) {
  if (!data.valid_label(trigger.target_label)) throw InvalidTrigger("trigger target label is not a class");
  for (double v : trigger.patch) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidTrigger("trigger values must lie in [0, 1]");
  }
  apply_trigger(Tensor(data.dims(), 0.0), trigger);
}

PoisonedDataset backdoor_poison(const Dataset& data, const Trigger& trigger, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) throw InvalidInput("poison rate must lie in (0, 1)");
  check_trigger(trigger, data);
  const std::size_t count = poison_count(data.size(), rate);
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0xbacd);
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  PoisonedDataset out = start_from(data, count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = pool[k];
    Provenance p;
    p.original_label = data.label(i);
    p.trigger_applied = true;
    Tensor xp = apply_trigger(data.input(i), trigger);
    p.perturbation_norm = lp_distance(xp, data.input(i), NormKind::Linf);
    out.examples.set_input(i, std::move(xp));
    out.examples.set_label(i, trigger.target_label);
    out.provenance[i] = p;
    out.modified_indices.push_back(i);
  }
  finish(out);
  return out;
}

BackdoorMetrics backdoor_eval(const Classifier& model, const Dataset& clean_test, const Trigger& trigger) {
  check_trigger(trigger, clean_test);
  BackdoorMetrics m;
  m.clean_accuracy = accuracy(model, clean_test);
  const int target = label_index(clean_test, trigger.target_label);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    if (clean_test.label(i) == trigger.target_label) continue;
    ++m.triggered;
    if (model.classify(apply_trigger(clean_test.input(i), trigger).values()) == target) ++hits;
  }
  if (m.triggered == 0) throw InvalidInput("no test example outside the target class; success rate undefined");
  m.attack_success_rate = static_cast<double>(hits) / static_cast<double>(m.triggered);
  return m;
}

}  // namespace advml
