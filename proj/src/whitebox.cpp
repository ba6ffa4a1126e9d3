#include "advml/whitebox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advml/error.hpp"
#include "advml/kernels.hpp"
#include "advml/rng.hpp"
#include "advml/transport.hpp"

namespace advml {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double l2(const Tensor& a) { return std::sqrt(kernels::sum_squares(a.values())); }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_label(const MlpModel& model, const Tensor& x, int label) {
  if (x.size() != model.input_size()) throw InvalidInput("input width does not match the model");
  if (label < 0 || static_cast<std::size_t>(label) >= model.class_count()) throw InvalidInput("label out of range");
}

AttackResult start_result(const Tensor& x, int label, std::optional<int> target = std::nullopt) {
  AttackResult r;
  r.x_adv = x;
  r.orig_label = label;
  r.target = target;
  return r;
}

void apply_cap(AttackResult& r, const Tensor& x, const std::optional<NormCap>& cap) {
  if (cap) r.x_adv = project_feasible(r.x_adv, x, cap->eps, cap->norm);
}

// x + s * eps * dir elementwise; shared so one-step BIM and FGSM agree bitwise.
Tensor signed_step(const Tensor& x, double scale, const Tensor& dir) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + scale * dir[i];
  return out;
}

// Direction of steepest ascent of the attack objective under the given norm.
// Returns false if the gradient is identically zero.
bool ascent_direction(const Tensor& grad, NormKind norm, Tensor& dir) {
  dir = Tensor(grad.shape(), 0.0);
  if (norm == NormKind::Linf) {
    bool any = false;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      dir[i] = sgn(grad[i]);
      any = any || grad[i] != 0.0;
    }
    return any;
  }
  if (norm == NormKind::L2) {
    const double n = l2(grad);
    if (n == 0.0) return false;
    for (std::size_t i = 0; i < grad.size(); ++i) dir[i] = grad[i] / n;
    return true;
  }
  throw InvalidInput("gradient attacks support the L2 and Linf norms");
}

// Logit-difference gradients f_j = Z_j - Z_y for every j != y at one point.
struct BoundaryInfo {
  std::vector<double> f;
  std::vector<std::vector<double>> grad;
  std::vector<double> logits;
};

BoundaryInfo boundaries(const MlpModel& model, const Tensor& xi, int label) {
  const auto trace = model.forward_trace(xi.values());
  BoundaryInfo b;
  b.logits = trace.post.back();
  const std::size_t k = model.class_count();
  const auto y = static_cast<std::size_t>(label);
  b.f.assign(k, 0.0);
  b.grad.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (j == y) continue;
    std::vector<double> up(k, 0.0);
    up[j] = 1.0;
    up[y] = -1.0;
    b.f[j] = b.logits[j] - b.logits[y];
    b.grad[j] = model.input_vjp(trace, up);
  }
  return b;
}

// Nearest linearised boundary: argmin_j |f_j| / ||grad f_j||.
std::optional<std::size_t> nearest_boundary(const BoundaryInfo& b, int label) {
  std::optional<std::size_t> best;
  double best_ratio = kInf;
  for (std::size_t j = 0; j < b.f.size(); ++j) {
    if (j == static_cast<std::size_t>(label)) continue;
    const double n = std::sqrt(kernels::sum_squares(b.grad[j]));
    if (n == 0.0) continue;
    const double ratio = std::fabs(b.f[j]) / n;
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = j;
    }
  }
  return best;
}

}  // namespace

AttackResult lbfgs_attack(const MlpModel& model, const Tensor& x, int label, int target, const LbfgsOptions& opt) {
  check_label(model, x, label);
  if (target < 0 || static_cast<std::size_t>(target) >= model.class_count() || target == label) {
    throw InvalidInput("L-BFGS attack needs a target different from the true label");
  }
  if (!(opt.c_init > 0.0) || opt.c_steps < 1 || opt.inner_iters < 1 || !(opt.lr > 0.0)) {
    throw InvalidInput("bad L-BFGS attack options");
  }
  AttackResult r = start_result(x, label, target);
  double best_norm = kInf;
  double c = opt.c_init, lo = 0.0, hi = kInf;
  for (int step = 0; step < opt.c_steps; ++step) {
    Tensor xi = x;
    bool found = false;
    for (int it = 0; it < opt.inner_iters; ++it) {
      const auto lg = model.loss_and_input_gradient(xi, target, LossKind::CrossEntropy);
      ++r.queries;
      const Tensor delta = xi - x;
      const double n = l2(delta);
      Tensor g = lg.grad;
      if (n > 0.0) g = add_scaled(g, c / n, delta);
      xi = clamp(add_scaled(xi, -opt.lr, g), 0.0, 1.0);
      ++r.iterations;
      if (model.classify(xi.values()) == target) {
        found = true;
        const double d = lp_distance(xi, x, NormKind::L2);
        if (d < best_norm) {
          best_norm = d;
          r.x_adv = xi;
        }
      }
    }
    r.trace.push_back({step, c, best_norm});
    if (found) {
      lo = c;
      c = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * c;
    } else {
      hi = c;
      c = 0.5 * (lo + hi);
    }
  }
  apply_cap(r, x, opt.cap);
  finalize_result(r, model, x);
  return r;
}

Tensor fgsm_perturbation(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget) {
  check_label(model, x, label);
  check_budget(budget, model.class_count(), label);
  const int cls = budget.target ? *budget.target : label;
  const double s = budget.target ? -1.0 : 1.0;
  const auto lg = model.loss_and_input_gradient(x, cls, LossKind::CrossEntropy);
  Tensor dir;
  if (!ascent_direction(lg.grad, budget.norm, dir)) {
    throw DegenerateGradient("FGSM: loss gradient is zero, no ascent direction exists");
  }
  return (s * budget.eps) * dir;
}

AttackResult fgsm(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget) {
  const Tensor delta = fgsm_perturbation(model, x, label, budget);
  AttackResult r = start_result(x, label, budget.target);
  r.x_adv = clamp(signed_step(x, 1.0, delta), 0.0, 1.0);
  r.iterations = 1;
  r.queries = 1;
  finalize_result(r, model, x);
  return r;
}

AttackResult bim_pgd(const MlpModel& model, const Tensor& x, int label, const AttackBudget& budget,
                     bool random_init) {
  check_label(model, x, label);
  check_budget(budget, model.class_count(), label);
  if (!(budget.step > 0.0)) throw InvalidInput("BIM step must be positive");
  if (budget.norm != NormKind::Linf && budget.norm != NormKind::L2) {
    throw InvalidInput("BIM/PGD support the L2 and Linf norms");
  }
  const int cls = budget.target ? *budget.target : label;
  const double s = budget.target ? -1.0 : 1.0;
  AttackResult r = start_result(x, label, budget.target);

  Tensor xk = x;
  if (random_init) {
    Rng rng = make_rng(budget.seed, 0x96d);
    for (double& v : xk) v += uniform(rng, -budget.eps, budget.eps);
    xk = project_feasible(xk, x, budget.eps, budget.norm);
  }
  bool best_success = false;
  double best_obj = -kInf;
  for (int k = 1; k <= budget.max_iter; ++k) {
    const auto lg = model.loss_and_input_gradient(xk, cls, LossKind::CrossEntropy);
    ++r.queries;
    Tensor dir;
    if (ascent_direction(lg.grad, budget.norm, dir)) {
      xk = project_feasible(signed_step(xk, s * budget.step, dir), x, budget.eps, budget.norm);
    }
    const auto pred = model.predict(xk);
    const double loss = cross_entropy(pred.logits, cls);
    const bool success = attack_goal(pred.label, label, budget.target);
    r.trace.push_back({k, loss, lp_distance(xk, x, budget.norm)});
    r.iterations = k;
    const double obj = s * loss;
    if ((success && !best_success) || (success == best_success && obj > best_obj)) {
      best_success = success;
      best_obj = obj;
      r.x_adv = xk;
    }
  }
  finalize_result(r, model, x);
  return r;
}

DeepFoolStep deepfool_step(const MlpModel& model, const Tensor& xi, int label) {
  check_label(model, xi, label);
  if (model.class_count() < 2) throw InvalidInput("DeepFool needs at least two classes");
  const BoundaryInfo b = boundaries(model, xi, label);
  const auto l = nearest_boundary(b, label);
  if (!l) throw DegenerateGradient("DeepFool: every boundary gradient vanishes");
  const auto& w = b.grad[*l];
  const double scale = -b.f[*l] / kernels::sum_squares(w);
  DeepFoolStep out;
  out.r = Tensor(xi.shape(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) out.r[i] = scale * w[i];
  out.x_next = xi + out.r;
  out.boundary = static_cast<int>(*l);
  return out;
}

AttackResult deepfool(const MlpModel& model, const Tensor& x, int label, const DeepFoolOptions& opt) {
  check_label(model, x, label);
  if (opt.max_iter < 1 || opt.overshoot < 0.0) throw InvalidInput("bad DeepFool options");
  AttackResult r = start_result(x, label);
  if (model.classify(x.values()) != label) {
    finalize_result(r, model, x);
    return r;
  }
  // Steps are taken from the clipped iterate, so coordinates pinned at the box
  // edge stop accumulating; the overshoot scales the total displacement.
  Tensor xi = x;
  Tensor out = x;
  for (int it = 1; it <= opt.max_iter; ++it) {
    DeepFoolStep step;
    try {
      step = deepfool_step(model, xi, label);
    } catch (const DegenerateGradient&) {
      break;
    }
    ++r.queries;
    xi = clamp(step.x_next, 0.0, 1.0);
    out = clamp(add_scaled(x, 1.0 + opt.overshoot, xi - x), 0.0, 1.0);
    r.iterations = it;
    r.trace.push_back({it, 0.0, lp_distance(out, x, NormKind::L2)});
    if (model.classify(out.values()) != label) break;
  }
  r.x_adv = out;
  apply_cap(r, x, opt.cap);
  finalize_result(r, model, x);
  return r;
}

Tensor project_hyperplane_box(const Tensor& p, const std::vector<double>& w, double c, Box box) {
  if (w.size() != p.size()) throw InvalidInput("hyperplane normal has the wrong width");
  const double ww = kernels::sum_squares(w);
  if (ww == 0.0) throw DegenerateGradient("hyperplane normal is zero");
  Tensor z = p;
  const double t = (kernels::dot(w, p.values()) + c) / ww;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::clamp(p[i] - t * w[i], box.lo, box.hi);
  const double resid = kernels::dot(w, z.values()) + c;
  double wf = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] > box.lo && z[i] < box.hi) wf += w[i] * w[i];
  }
  if (wf > 0.0 && resid != 0.0) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] > box.lo && z[i] < box.hi) z[i] = std::clamp(z[i] - resid / wf * w[i], box.lo, box.hi);
    }
  }
  return z;
}

AttackResult fab_attack(const MlpModel& model, const Tensor& x, int label, const FabOptions& opt) {
  check_label(model, x, label);
  if (!(opt.beta > 0.0 && opt.beta < 1.0) || !(opt.alpha_max >= 0.0 && opt.alpha_max <= 1.0) ||
      opt.max_iter < 1 || opt.restarts < 1 || opt.final_search_iters < 0) {
    throw InvalidInput("bad FAB options");
  }
  AttackResult r = start_result(x, label);
  if (model.classify(x.values()) != label) {
    finalize_result(r, model, x);
    return r;
  }
  Rng rng = make_rng(opt.seed, 0xfab);
  std::optional<Tensor> best;
  double best_norm = kInf;

  for (int restart = 0; restart < opt.restarts; ++restart) {
    Tensor xi = x;
    if (restart > 0) {
      const double radius = std::min(best_norm, opt.restart_eps);
      Tensor dir(x.shape());
      for (double& v : dir) v = standard_normal(rng);
      const double n = l2(dir);
      xi = clamp(add_scaled(x, radius * uniform(rng) / n, dir), 0.0, 1.0);
    }
    for (int it = 0; it < opt.max_iter; ++it) {
      const BoundaryInfo b = boundaries(model, xi, label);
      ++r.queries;
      const auto l = nearest_boundary(b, label);
      if (!l) break;
      const auto& w = b.grad[*l];
      const double c = b.f[*l] - kernels::dot(w, xi.values());
      const Tensor di = project_hyperplane_box(xi, w, c) - xi;
      const Tensor d0 = project_hyperplane_box(x, w, c) - x;
      const double ni = l2(di), n0 = l2(d0);
      const double alpha = ni + n0 > 0.0 ? std::min(ni / (ni + n0), opt.alpha_max) : 0.0;
      Tensor next(x.shape());
      for (std::size_t k = 0; k < next.size(); ++k) {
        next[k] = std::clamp((1.0 - alpha) * (xi[k] + opt.eta * di[k]) + alpha * (x[k] + opt.eta * d0[k]), 0.0, 1.0);
      }
      xi = std::move(next);
      ++r.iterations;
      if (model.classify(xi.values()) != label) {
        const double d = lp_distance(xi, x, NormKind::L2);
        if (d < best_norm) {
          best_norm = d;
          best = xi;
        }
        xi = add_scaled(x, opt.beta, xi - x);
      }
      r.trace.push_back({r.iterations, b.f[*l], best_norm});
    }
  }
  if (best) {
    Tensor adv = *best;
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < opt.final_search_iters; ++k) {
      const double mid = 0.5 * (lo + hi);
      const Tensor cand = add_scaled(x, mid, *best - x);
      if (model.classify(cand.values()) != label) {
        hi = mid;
        adv = cand;
      } else {
        lo = mid;
      }
    }
    r.x_adv = adv;
  }
  apply_cap(r, x, opt.cap);
  finalize_result(r, model, x);
  return r;
}

Tensor to_tanh_space(const Tensor& x) {
  Tensor w = x;
  constexpr double kEdge = 1.0 - 1e-9;
  for (double& v : w) v = std::atanh(std::clamp(2.0 * v - 1.0, -kEdge, kEdge));
  return w;
}

Tensor from_tanh_space(const Tensor& w) {
  Tensor x = w;
  for (double& v : x) v = 0.5 * (std::tanh(v) + 1.0);
  return x;
}

namespace {

// Value of g and the logit indices it compares: g = max(Z_a - Z_b, -kappa).
struct CwTerm {
  double value;
  std::size_t a, b;
  bool active;
};

CwTerm cw_term(const std::vector<double>& z, int label, const std::optional<int>& target, double kappa) {
  const std::size_t k = z.size();
  const auto skip = static_cast<std::size_t>(target ? *target : label);
  std::size_t other = skip == 0 ? 1 : 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != skip && z[j] > z[other]) other = j;
  }
  CwTerm t{};
  if (target) {
    t.a = other;
    t.b = skip;
  } else {
    t.a = skip;
    t.b = other;
  }
  const double diff = z[t.a] - z[t.b];
  t.active = diff > -kappa;
  t.value = std::max(diff, -kappa);
  return t;
}

}  // namespace

double cw_objective_g(const MlpModel& model, const Tensor& x, int label, const std::optional<int>& target,
                      double kappa) {
  check_label(model, x, label);
  return cw_term(model.logits(x.values()), label, target, kappa).value;
}

AttackResult cw_l2(const MlpModel& model, const Tensor& x, int label, const CwOptions& opt) {
  check_label(model, x, label);
  if (opt.kappa < 0.0) throw InvalidInput("C&W kappa must be nonnegative");
  if (opt.c_steps < 1 || opt.inner_iters < 1 || !(opt.c_init > 0.0) || !(opt.lr > 0.0)) {
    throw InvalidInput("bad C&W options");
  }
  if (opt.target && (*opt.target == label || *opt.target < 0 ||
                     static_cast<std::size_t>(*opt.target) >= model.class_count())) {
    throw InvalidInput("bad C&W target");
  }
  AttackResult r = start_result(x, label, opt.target);
  const Tensor w0 = to_tanh_space(x);
  double best_d2 = kInf;
  double c = opt.c_init, lo = 0.0, hi = kInf;
  const std::size_t k = model.class_count();

  for (int step = 0; step < opt.c_steps; ++step) {
    Tensor w = w0;
    bool found = false;
    for (int it = 0; it < opt.inner_iters; ++it) {
      const Tensor xp = from_tanh_space(w);
      const auto trace = model.forward_trace(xp.values());
      ++r.queries;
      const auto& z = trace.post.back();
      if (attack_goal(static_cast<int>(argmax(z)), label, opt.target)) {
        const double d2 = kernels::squared_distance(xp.values(), x.values());
        found = true;
        if (d2 < best_d2) {
          best_d2 = d2;
          r.x_adv = xp;
        }
      }
      const CwTerm term = cw_term(z, label, opt.target, opt.kappa);
      Tensor grad(x.shape());
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = 2.0 * (xp[i] - x[i]);
      if (term.active) {
        std::vector<double> up(k, 0.0);
        up[term.a] += 1.0;
        up[term.b] -= 1.0;
        const auto gz = model.input_vjp(trace, up);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += c * gz[i];
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double th = std::tanh(w[i]);
        w[i] -= opt.lr * grad[i] * 0.5 * (1.0 - th * th);
      }
      ++r.iterations;
    }
    r.trace.push_back({step, c, std::sqrt(best_d2)});
    if (found) {
      hi = std::min(hi, c);
      c = 0.5 * (lo + hi);
    } else {
      lo = std::max(lo, c);
      c = std::isfinite(hi) ? 0.5 * (lo + hi) : 10.0 * c;
    }
  }
  apply_cap(r, x, opt.cap);
  finalize_result(r, model, x);
  return r;
}

AttackResult shadow_attack(const MlpModel& model, const Tensor& x, int label, const ShadowOptions& opt) {
  check_label(model, x, label);
  if (x.rank() != 3 || x.channels() != 3) throw InvalidInput("Shadow attack needs an h x w x 3 input");
  if (!(opt.weights.tv > 0.0 && opt.weights.color_mean > 0.0 && opt.weights.channel_diff > 0.0)) {
    throw InvalidInput("Shadow penalty weights must be positive");
  }
  if (opt.steps < 1 || !(opt.lr > 0.0)) throw InvalidInput("bad Shadow options");
  AttackResult r = start_result(x, label);

  auto objective = [&](const Tensor& delta, double& loss) {
    loss = model.loss_and_input_gradient(x + delta, label, LossKind::CrossEntropy).loss;
    return loss - shadow_penalty_total(shadow_penalties(delta), opt.weights);
  };
  auto feasible = [&](Tensor delta) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      double v = delta[i];
      if (opt.linf_cap) v = std::clamp(v, -*opt.linf_cap, *opt.linf_cap);
      delta[i] = std::clamp(x[i] + v, 0.0, 1.0) - x[i];
    }
    return delta;
  };

  Tensor delta(x.shape(), 0.0);
  double loss = 0.0;
  double obj = objective(delta, loss);
  double lr = opt.lr;
  bool best_success = false;
  double best_penalty = kInf, best_obj = -kInf;
  Tensor best_delta = delta;
  for (int it = 1; it <= opt.steps; ++it) {
    const auto lg = model.loss_and_input_gradient(x + delta, label, LossKind::CrossEntropy);
    ++r.queries;
    const Tensor g = lg.grad - shadow_penalty_gradient(delta, opt.weights);
    bool moved = false;
    for (int tries = 0; tries < 20; ++tries) {
      const Tensor cand = feasible(add_scaled(delta, lr, g));
      double cand_loss = 0.0;
      const double cand_obj = objective(cand, cand_loss);
      if (cand_obj > obj) {
        delta = cand;
        obj = cand_obj;
        loss = cand_loss;
        lr *= 1.5;
        moved = true;
        break;
      }
      lr *= 0.5;
    }
    r.iterations = it;
    const Tensor xa = x + delta;
    const bool success = model.classify(xa.values()) != label;
    const double pen = shadow_penalty_total(shadow_penalties(delta), opt.weights);
    r.trace.push_back({it, loss, pen});
    if ((success && (!best_success || pen < best_penalty)) || (!success && !best_success && obj > best_obj)) {
      best_success = success;
      best_penalty = pen;
      best_obj = obj;
      best_delta = delta;
    }
    if (!moved) break;
  }
  r.x_adv = x + best_delta;
  const ShadowPenalties p = shadow_penalties(best_delta);
  r.extras["tv"] = p.tv;
  r.extras["color_mean"] = p.color_mean;
  r.extras["channel_diff"] = p.channel_diff;
  finalize_result(r, model, x);
  return r;
}

AttackResult wasserstein_attack(const MlpModel& model, const Tensor& x, int label, const WassersteinOptions& opt) {
  check_label(model, x, label);
  if (!x.is_image() || x.channels() != 1) throw InvalidInput("Wasserstein attack needs a single-channel image");
  if (opt.eps_w < 0.0 || opt.steps < 1 || !(opt.lr > 0.0)) throw InvalidInput("bad Wasserstein attack options");
  AttackResult r = start_result(x, label);
  if (opt.eps_w == 0.0) {
    finalize_result(r, model, x);
    return r;
  }
  double mass = 0.0;
  for (double v : x) {
    if (v < 0.0) throw InvalidInput("Wasserstein attack needs a nonnegative image");
    mass += v;
  }
  if (!(mass > 0.0)) throw InvalidInput("Wasserstein attack needs an image with positive mass");
  const Tensor base = (1.0 / mass) * x;
  SinkhornOptions so;
  so.lambda = opt.lambda;
  so.region = opt.region;
  so.upper_bound = 1.0 / mass;

  Tensor cur = base;
  bool best_success = false;
  double best_loss = -kInf;
  for (int it = 1; it <= opt.steps; ++it) {
    const Tensor img = mass * cur;
    const auto lg = model.loss_and_input_gradient(img, label, LossKind::CrossEntropy);
    ++r.queries;
    Tensor query = cur;
    for (std::size_t i = 0; i < query.size(); ++i) query[i] += (opt.lr / mass) * sgn(lg.grad[i]);
    const SinkhornResult sk = projected_sinkhorn_solve(base, query, opt.eps_w, so);
    cur = sk.projection;
    const Tensor adv = clamp(mass * cur, 0.0, 1.0);
    const auto pred = model.predict(adv);
    const double loss = cross_entropy(pred.logits, label);
    const bool success = pred.label != label;
    r.iterations = it;
    r.trace.push_back({it, loss, sk.transport_cost});
    if ((success && !best_success) || (success == best_success && loss > best_loss)) {
      best_success = success;
      best_loss = loss;
      r.x_adv = adv;
      r.extras["transport_cost"] = sk.transport_cost;
    }
  }
  finalize_result(r, model, x);
  return r;
}

}  // namespace advml
