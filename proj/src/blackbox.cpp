#include "advml/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "advml/dataset.hpp"
#include "advml/error.hpp"
#include "advml/kernels.hpp"
#include "advml/rng.hpp"

namespace advml {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Geometry {
  std::size_t h, w, c;
};

Geometry image_geometry(const Tensor& x, const char* who) {
  if (!x.is_image()) throw InvalidInput(std::string(who) + " needs an image input");
  return {x.height(), x.width(), x.channels()};
}

void check_input(const Oracle& oracle, const Tensor& x, int label, const std::optional<int>& target) {
  if (x.size() != oracle.input_size()) throw InvalidInput("input width does not match the oracle");
  const auto k = static_cast<int>(oracle.class_count());
  if (label < 0 || label >= k) throw InvalidInput("label out of range");
  if (target && (*target < 0 || *target >= k || *target == label)) throw InvalidInput("bad target class");
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("input outside [0, 1]");
  }
}

double l2(const Tensor& a) { return std::sqrt(kernels::sum_squares(a.values())); }

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

Tensor uniform_noise(Rng& rng, const std::vector<std::size_t>& shape) {
  Tensor t(shape);
  for (double& v : t) v = uniform(rng);
  return t;
}

Tensor gaussian(Rng& rng, const std::vector<std::size_t>& shape) {
  Tensor t(shape);
  for (double& v : t) v = standard_normal(rng);
  return t;
}

// g(x') of the hinge loss on log probabilities.
double zoo_hinge(const std::vector<double>& p, int label, const std::optional<int>& target, double kappa) {
  std::vector<double> lp(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) lp[j] = std::log(std::max(p[j], 1e-300));
  const auto skip = static_cast<std::size_t>(target ? *target : label);
  double other = -kInf;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    if (j != skip) other = std::max(other, lp[j]);
  }
  const double diff = target ? other - lp[skip] : lp[skip] - other;
  return std::max(diff, -kappa);
}

}  // namespace

double symmetric_difference(const std::function<double(const Tensor&)>& f, const Tensor& x, std::size_t i,
                            double h) {
  if (!(h > 0.0)) throw InvalidInput("finite-difference step must be positive");
  if (i >= x.size()) throw InvalidInput("coordinate out of range");
  Tensor up = x, down = x;
  up[i] += h;
  down[i] -= h;
  return (f(up) - f(down)) / (2.0 * h);
}

Tensor symmetric_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = symmetric_difference(f, x, i, h);
  return g;
}

Tensor bilinear_resize(const Tensor& img, std::size_t out_h, std::size_t out_w) {
  const Geometry g = image_geometry(img, "bilinear_resize");
  if (out_h == 0 || out_w == 0) throw InvalidInput("resize target must be nonempty");
  std::vector<std::size_t> shape = img.rank() == 3 ? std::vector<std::size_t>{out_h, out_w, g.c}
                                                   : std::vector<std::size_t>{out_h, out_w};
  Tensor out(shape);
  auto src = [](std::size_t i, std::size_t in, std::size_t n) {
    return n > 1 ? static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(n - 1) : 0.0;
  };
  for (std::size_t r = 0; r < out_h; ++r) {
    const double sr = src(r, g.h, out_h);
    const auto r0 = std::min(static_cast<std::size_t>(sr), g.h - 1);
    const std::size_t r1 = std::min(r0 + 1, g.h - 1);
    const double fr = sr - static_cast<double>(r0);
    for (std::size_t q = 0; q < out_w; ++q) {
      const double sq = src(q, g.w, out_w);
      const auto q0 = std::min(static_cast<std::size_t>(sq), g.w - 1);
      const std::size_t q1 = std::min(q0 + 1, g.w - 1);
      const double fq = sq - static_cast<double>(q0);
      for (std::size_t ch = 0; ch < g.c; ++ch) {
        out.at(r, q, ch) = (1 - fr) * ((1 - fq) * img.at(r0, q0, ch) + fq * img.at(r0, q1, ch)) +
                           fr * ((1 - fq) * img.at(r1, q0, ch) + fq * img.at(r1, q1, ch));
      }
    }
  }
  return out;
}

AttackResult zoo_attack(ScoreOracle& oracle, const Tensor& x, int label, const ZooOptions& opt) {
  check_input(oracle, x, label, opt.target);
  if (!(opt.h > 0.0) || !(opt.lr > 0.0) || opt.c < 0.0 || opt.kappa < 0.0 || opt.batch == 0 || opt.max_iter < 0) {
    throw InvalidInput("bad ZOO options");
  }
  if (!std::is_sorted(opt.hierarchy.begin(), opt.hierarchy.end()) ||
      std::adjacent_find(opt.hierarchy.begin(), opt.hierarchy.end()) != opt.hierarchy.end()) {
    throw InvalidInput("ZOO hierarchy sides must be strictly increasing");
  }
  if ((!opt.hierarchy.empty() || opt.importance_sampling) && !x.is_image()) {
    throw InvalidInput("ZOO dimension reduction and importance sampling need an image input");
  }
  if (opt.importance_sampling && opt.region == 0) throw InvalidInput("ZOO region grid must be nonempty");

  AttackResult r;
  r.orig_label = label;
  r.target = opt.target;
  r.x_adv = x;
  const std::size_t start = oracle.query_count();
  Rng rng = make_rng(opt.seed, 0x200);

  // Attack space: the full input, or a side x side (x c) grid upscaled by D.
  std::vector<std::vector<std::size_t>> stages;
  if (opt.hierarchy.empty()) {
    stages.push_back(x.shape());
  } else {
    for (std::size_t s : opt.hierarchy) {
      if (s == 0) throw InvalidInput("ZOO hierarchy sides must be positive");
      stages.push_back(x.rank() == 3 ? std::vector<std::size_t>{s, s, x.channels()} : std::vector<std::size_t>{s, s});
    }
  }
  const bool reduced = !opt.hierarchy.empty();
  auto decode = [&](const Tensor& d) {
    Tensor full = reduced ? bilinear_resize(d, x.height(), x.width()) : d;
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x[i] + full[i], 0.0, 1.0);
    return out;
  };
  auto objective = [&](const Tensor& xp, const std::vector<double>& p) {
    return kernels::squared_distance(xp.values(), x.values()) + opt.c * zoo_hinge(p, label, opt.target, opt.kappa);
  };

  bool best_success = false;
  double best_d2 = kInf, best_obj = kInf;
  int best_label = label;
  auto consider = [&](const Tensor& xp, const std::vector<double>& p) {
    const int lab = argmax(p);
    const bool success = attack_goal(lab, label, opt.target);
    const double d2 = kernels::squared_distance(xp.values(), x.values());
    const double obj = objective(xp, p);
    if ((success && (!best_success || d2 < best_d2)) || (!success && !best_success && obj < best_obj)) {
      best_success = success;
      best_d2 = d2;
      best_obj = obj;
      best_label = lab;
      r.x_adv = xp;
    }
    return success;
  };

  try {
    consider(x, oracle.scores(x));
    Tensor delta(stages.front(), 0.0);
    const int per_stage = stages.size() > 1 ? opt.max_iter / static_cast<int>(stages.size()) : opt.max_iter;
    int iteration = 0;
    for (std::size_t st = 0; st < stages.size(); ++st) {
      if (st > 0) {
        if (best_success) break;
        delta = bilinear_resize(delta, stages[st][0], stages[st][1]);
      }
      const std::size_t n = delta.size();
      const std::size_t batch = std::min(opt.batch, n);
      std::vector<double> m(n, 0.0), v(n, 0.0);
      std::vector<int> steps(n, 0);
      std::vector<std::size_t> order(n);
      std::size_t cursor = n;
      const int stage_iters = st + 1 == stages.size() ? opt.max_iter - iteration : per_stage;
      for (int it = 0; it < stage_iters; ++it, ++iteration) {
        // Coordinate choice: a fresh random permutation per epoch, or draws
        // weighted by the perturbation mass of each region.
        std::vector<std::size_t> coords;
        if (opt.importance_sampling && iteration > 0) {
          const Tensor full = reduced ? bilinear_resize(delta, x.height(), x.width()) : delta;
          const std::size_t g = opt.region;
          std::vector<double> mass(g * g, 0.0);
          for (std::size_t row = 0; row < x.height(); ++row) {
            for (std::size_t col = 0; col < x.width(); ++col) {
              for (std::size_t ch = 0; ch < x.channels(); ++ch) {
                mass[(row * g / x.height()) * g + col * g / x.width()] += std::fabs(full.at(row, col, ch));
              }
            }
          }
          const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
          const std::size_t dh = delta.height(), dw = delta.width(), dc = delta.channels();
          std::vector<double> weight(n);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pix = i / dc;
            const std::size_t row = pix / dw * x.height() / dh, col = pix % dw * x.width() / dw;
            weight[i] = 1.0 / static_cast<double>(g * g) + (total > 0 ? mass[(row * g / x.height()) * g + col * g / x.width()] / total : 0.0);
          }
          for (std::size_t b = 0; b < batch; ++b) {
            const double sum = std::accumulate(weight.begin(), weight.end(), 0.0);
            double u = uniform(rng, 0.0, sum);
            std::size_t pick = 0;
            while (pick + 1 < n && u >= weight[pick]) u -= weight[pick++];
            while (weight[pick] == 0.0) pick = (pick + 1) % n;
            coords.push_back(pick);
            weight[pick] = 0.0;
          }
        } else {
          for (std::size_t b = 0; b < batch; ++b) {
            if (cursor == n) {
              std::iota(order.begin(), order.end(), 0);
              for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
              cursor = 0;
            }
            coords.push_back(order[cursor++]);
          }
        }
        std::vector<double> grads(coords.size());
        for (std::size_t b = 0; b < coords.size(); ++b) {
          Tensor up = delta, down = delta;
          up[coords[b]] += opt.h;
          down[coords[b]] -= opt.h;
          const Tensor xu = decode(up), xd = decode(down);
          const double fu = objective(xu, oracle.scores(xu));
          const double fd = objective(xd, oracle.scores(xd));
          grads[b] = (fu - fd) / (2.0 * opt.h);
        }
        for (std::size_t b = 0; b < coords.size(); ++b) {
          const std::size_t i = coords[b];
          m[i] = opt.beta1 * m[i] + (1 - opt.beta1) * grads[b];
          v[i] = opt.beta2 * v[i] + (1 - opt.beta2) * grads[b] * grads[b];
          ++steps[i];
          const double mh = m[i] / (1 - std::pow(opt.beta1, steps[i]));
          const double vh = v[i] / (1 - std::pow(opt.beta2, steps[i]));
          delta[i] -= opt.lr * mh / (std::sqrt(vh) + 1e-8);
        }
        const Tensor cur = decode(delta);
        const auto p = oracle.scores(cur);
        consider(cur, p);
        r.iterations = iteration + 1;
        r.trace.push_back({iteration + 1, objective(cur, p), std::sqrt(kernels::squared_distance(cur.values(), x.values()))});
      }
    }
  } catch (const BudgetExhausted&) {
    r.budget_exhausted = true;
  }
  r.queries = oracle.query_count() - start;
  finalize_result(r, best_label, x);
  return r;
}

std::size_t square_side(double p, std::size_t width) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("square fraction must lie in [0, 1]");
  const double v = std::round(std::sqrt(p * static_cast<double>(width * width)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(v), 1, width);
}

double square_schedule(double p_init, int iteration) {
  static constexpr int kMilestones[] = {10, 50, 200, 500, 1000, 2000, 4000, 6000, 8000};
  double p = p_init;
  for (int m : kMilestones) {
    if (iteration > m) p /= 2.0;
  }
  return p;
}

AttackResult square_attack(ScoreOracle& oracle, const Tensor& x, int label, const SquareOptions& opt) {
  check_input(oracle, x, label, opt.target);
  const Geometry g = image_geometry(x, "Square attack");
  if (!(opt.eps > 0.0)) throw InvalidInput("Square attack eps must be positive");
  if (!(opt.p_init > 0.0 && opt.p_init <= 1.0)) throw InvalidInput("Square attack p_init must lie in (0, 1]");
  if (opt.max_iter < 1) throw InvalidInput("Square attack needs at least one iteration");

  AttackResult r;
  r.orig_label = label;
  r.target = opt.target;
  const std::size_t start = oracle.query_count();
  Rng rng = make_rng(opt.seed, 0x5a);
  auto loss_of = [&](const std::vector<double>& p) {
    if (opt.target) return -std::log(std::max(p[static_cast<std::size_t>(*opt.target)], 1e-300));
    double other = -kInf;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != static_cast<std::size_t>(label)) other = std::max(other, p[j]);
    }
    return p[static_cast<std::size_t>(label)] - other;
  };
  auto box = [&](std::size_t i, double v) {
    return std::clamp(std::clamp(v, x[i] - opt.eps, x[i] + opt.eps), 0.0, 1.0);
  };

  Tensor cur = x;
  for (std::size_t col = 0; col < g.w; ++col) {
    for (std::size_t ch = 0; ch < g.c; ++ch) {
      const double s = uniform(rng) < 0.5 ? -opt.eps : opt.eps;
      for (std::size_t row = 0; row < g.h; ++row) {
        const std::size_t i = (row * g.w + col) * g.c + ch;
        cur[i] = box(i, x[i] + s);
      }
    }
  }
  r.x_adv = cur;
  int cur_label = label;
  try {
    auto p = oracle.scores(cur);
    double best = loss_of(p);
    cur_label = argmax(p);
    r.iterations = 1;
    r.trace.push_back({0, best, lp_distance(cur, x, NormKind::Linf)});
    for (int it = 1; it < opt.max_iter && !attack_goal(cur_label, label, opt.target); ++it) {
      const std::size_t v = std::min(square_side(square_schedule(opt.p_init, it), g.w), g.h);
      const std::size_t r0 = uniform_index(rng, g.h - v + 1), c0 = uniform_index(rng, g.w - v + 1);
      Tensor cand = cur;
      for (std::size_t ch = 0; ch < g.c; ++ch) {
        const double s = uniform(rng) < 0.5 ? -2.0 * opt.eps : 2.0 * opt.eps;
        for (std::size_t row = r0; row < r0 + v; ++row) {
          for (std::size_t col = c0; col < c0 + v; ++col) {
            const std::size_t i = (row * g.w + col) * g.c + ch;
            cand[i] = box(i, cand[i] + s);
          }
        }
      }
      p = oracle.scores(cand);
      r.iterations = it + 1;
      const double loss = loss_of(p);
      if (loss < best) {
        best = loss;
        cur = std::move(cand);
        cur_label = argmax(p);
        r.trace.push_back({it, best, lp_distance(cur, x, NormKind::Linf)});
      }
    }
  } catch (const BudgetExhausted&) {
    r.budget_exhausted = true;
  }
  r.x_adv = cur;
  r.queries = oracle.query_count() - start;
  finalize_result(r, cur_label, x);
  return r;
}

bool hsj_phi(DecisionOracle& oracle, const Tensor& xp, int label, const std::optional<int>& target) {
  return attack_goal(oracle.label(xp), label, target);
}

namespace {

struct Labelled {
  Tensor x;
  int label;
};

Labelled bisect(DecisionOracle& oracle, const Tensor& x, const Labelled& adv, int label,
                const std::optional<int>& target, double tolerance) {
  if (!(tolerance > 0.0)) throw InvalidInput("binary search tolerance must be positive");
  double lo = 0.0, hi = 1.0;  // alpha = lo keeps phi = 1, alpha = hi is x itself
  int lo_label = adv.label;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const int lab = oracle.label(add_scaled(adv.x, mid, x - adv.x));
    if (attack_goal(lab, label, target)) {
      lo = mid;
      lo_label = lab;
    } else {
      hi = mid;
    }
  }
  return {lo == 0.0 ? adv.x : add_scaled(adv.x, lo, x - adv.x), lo_label};
}

}  // namespace

Tensor hsj_binary_search(DecisionOracle& oracle, const Tensor& x, const Tensor& adv, int label,
                         const std::optional<int>& target, double tolerance) {
  return bisect(oracle, x, {adv, target ? *target : -1}, label, target, tolerance).x;
}

Tensor hsj_gradient_direction(DecisionOracle& oracle, const Tensor& xt, double delta, std::size_t batch, int label,
                              const std::optional<int>& target, Rng& rng) {
  if (batch < 2) throw InvalidInput("gradient estimate needs at least two samples");
  if (!(delta > 0.0)) throw InvalidInput("probe radius must be positive");
  std::vector<Tensor> us;
  std::vector<double> phis;
  us.reserve(batch);
  double mean = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor u = gaussian(rng, xt.shape());
    const double n = l2(u);
    for (double& v : u) v /= n;
    const Tensor probe = clamp(add_scaled(xt, delta, u), 0.0, 1.0);
    u = (1.0 / delta) * (probe - xt);
    const double phi = hsj_phi(oracle, probe, label, target) ? 1.0 : -1.0;
    mean += phi;
    us.push_back(std::move(u));
    phis.push_back(phi);
  }
  mean /= static_cast<double>(batch);
  Tensor grad(xt.shape(), 0.0);
  const bool constant = std::fabs(mean) == 1.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double wgt = constant ? phis[b] / static_cast<double>(batch) : (phis[b] - mean) / static_cast<double>(batch - 1);
    grad = add_scaled(grad, wgt, us[b]);
  }
  const double n = l2(grad);
  if (n > 0.0) grad = (1.0 / n) * grad;
  return grad;
}

namespace {

// Start point for decision attacks: the given one after checking it, else
// uniform noise draws. Returns nullopt when nothing adversarial was found.
std::optional<Labelled> adversarial_start(DecisionOracle& oracle, const Tensor& x, int label,
                                          const std::optional<int>& target, const std::optional<Tensor>& init,
                                          int samples, Rng& rng) {
  if (init) {
    if (!init->same_shape(x)) throw InvalidInput("start point shape differs from input");
    const int lab = oracle.label(*init);
    if (!attack_goal(lab, label, target)) throw InvalidStart("start point is not adversarial");
    return Labelled{*init, lab};
  }
  if (target) throw InitializationError("targeted decision attacks need a start point from the target class");
  for (int s = 0; s < samples; ++s) {
    Tensor cand = uniform_noise(rng, x.shape());
    const int lab = oracle.label(cand);
    if (attack_goal(lab, label, target)) return Labelled{std::move(cand), lab};
  }
  return std::nullopt;
}

}  // namespace

AttackResult boundary_attack(DecisionOracle& oracle, const Tensor& x, int label, const BoundaryOptions& opt) {
  check_input(oracle, x, label, opt.target);
  if (opt.max_steps < 0 || !(opt.spherical_step > 0.0) || !(opt.source_step > 0.0 && opt.source_step < 1.0) ||
      opt.adapt_window < 1) {
    throw InvalidInput("bad Boundary attack options");
  }
  AttackResult r;
  r.orig_label = label;
  r.target = opt.target;
  r.x_adv = x;
  const std::size_t start = oracle.query_count();
  Rng rng = make_rng(opt.seed, 0xb0);

  Tensor cur = x;
  int cur_label = label;
  try {
    const auto init = adversarial_start(oracle, x, label, opt.target, opt.init, opt.init_samples, rng);
    if (!init) throw InitializationError("Boundary attack found no adversarial start point");
    r.extras["initial_distance"] = l2(init->x - x);
    const Labelled b = bisect(oracle, x, *init, label, opt.target, 1e-3);
    cur = b.x;
    cur_label = b.label;
    double sph = opt.spherical_step, src = opt.source_step;
    // Acceptance counts for the orthogonal step alone and for the full step.
    int sph_ok = 0, src_ok = 0, window = 0;
    r.trace.push_back({0, 0.0, l2(cur - x)});
    for (int step = 1; step <= opt.max_steps; ++step) {
      const Tensor diff = cur - x;
      const double d = l2(diff);
      if (d == 0.0) break;
      Tensor eta = gaussian(rng, x.shape());
      const double along = kernels::dot(eta.values(), diff.values()) / (d * d);
      eta = add_scaled(eta, -along, diff);
      const double en = l2(eta);
      if (en > 0.0) eta = (sph * d / en) * eta;
      Tensor sphere = cur + eta;
      sphere = clamp(add_scaled(x, d / l2(sphere - x), sphere - x), 0.0, 1.0);
      r.iterations = step;
      ++window;
      if (attack_goal(oracle.label(sphere), label, opt.target)) {
        ++sph_ok;
        Tensor cand = clamp(add_scaled(x, 1.0 - src, sphere - x), 0.0, 1.0);
        const int lab = oracle.label(cand);
        if (attack_goal(lab, label, opt.target) && l2(cand - x) <= d) {
          cur = std::move(cand);
          cur_label = lab;
          ++src_ok;
          r.trace.push_back({step, 0.0, l2(cur - x)});
        }
      }
      if (window == opt.adapt_window) {
        auto factor = [](double rate) { return rate < 0.2 ? 0.9 : (rate > 0.5 ? 1.1 : 1.0); };
        const double sph_rate = static_cast<double>(sph_ok) / window;
        sph *= factor(sph_rate);
        if (sph_ok > 0) src = std::min(src * factor(static_cast<double>(src_ok) / sph_ok), 0.5);
        window = sph_ok = src_ok = 0;
      }
    }
  } catch (const BudgetExhausted&) {
    r.budget_exhausted = true;
  }
  r.x_adv = cur;
  r.queries = oracle.query_count() - start;
  finalize_result(r, cur_label, x);
  return r;
}

AttackResult hopskipjump(DecisionOracle& oracle, const Tensor& x, int label, const HsjOptions& opt) {
  check_input(oracle, x, label, opt.target);
  if (opt.max_rounds < 0 || opt.batch0 < 2 || opt.max_batch < opt.batch0 || !(opt.search_tolerance > 0.0) ||
      opt.max_step_halvings < 0) {
    throw InvalidInput("bad HopSkipJump options");
  }
  AttackResult r;
  r.orig_label = label;
  r.target = opt.target;
  r.x_adv = x;
  const std::size_t start = oracle.query_count();
  Rng rng = make_rng(opt.seed, 0x45);
  const double n = static_cast<double>(x.size());

  Tensor xt = x;
  int cur_label = label;
  try {
    const auto init = adversarial_start(oracle, x, label, opt.target, opt.init, opt.init_samples, rng);
    if (!init) throw InitializationError("HopSkipJump found no adversarial start point");
    r.extras["initial_distance"] = l2(init->x - x);
    Labelled b = bisect(oracle, x, *init, label, opt.target, opt.search_tolerance);
    xt = b.x;
    cur_label = b.label;
    if (opt.on_boundary_point) opt.on_boundary_point(xt);
    r.trace.push_back({0, 0.0, l2(xt - x)});
    for (int t = 1; t <= opt.max_rounds; ++t) {
      const double dist = l2(xt - x);
      if (dist == 0.0) break;
      const auto batch = std::min(
          opt.max_batch, static_cast<std::size_t>(static_cast<double>(opt.batch0) * std::sqrt(static_cast<double>(t))));
      const Tensor v = hsj_gradient_direction(oracle, xt, dist / n, batch, label, opt.target, rng);
      double xi = dist / std::sqrt(static_cast<double>(t));
      Labelled next{xt, cur_label};
      for (int k = 0; k <= opt.max_step_halvings; ++k) {
        Tensor cand = clamp(add_scaled(xt, xi, v), 0.0, 1.0);
        const int lab = oracle.label(cand);
        if (attack_goal(lab, label, opt.target)) {
          next = {std::move(cand), lab};
          break;
        }
        xi /= 2.0;
      }
      const Labelled searched = bisect(oracle, x, next, label, opt.target, opt.search_tolerance);
      if (opt.on_boundary_point) opt.on_boundary_point(searched.x);
      if (l2(searched.x - x) <= dist) {
        xt = searched.x;
        cur_label = searched.label;
      }
      r.iterations = t;
      r.trace.push_back({t, 0.0, l2(xt - x)});
    }
  } catch (const BudgetExhausted&) {
    r.budget_exhausted = true;
  }
  r.x_adv = xt;
  r.queries = oracle.query_count() - start;
  finalize_result(r, cur_label, x);
  return r;
}

std::pair<double, double> spatial_map(double a, double b, const SpatialParams& p) {
  const double g = p.gamma * std::numbers::pi / 180.0;
  const double c = std::cos(g), s = std::sin(g);
  return {a * c - b * s + p.da, a * s + b * c + p.db};
}

Tensor spatial_transform(const Tensor& x, const SpatialParams& p) {
  const Geometry g = image_geometry(x, "spatial_transform");
  if (!std::isfinite(p.da) || !std::isfinite(p.db) || !std::isfinite(p.gamma)) {
    throw InvalidInput("spatial parameters must be finite");
  }
  const double rad = p.gamma * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (static_cast<double>(g.w) - 1.0) / 2.0, cy = (static_cast<double>(g.h) - 1.0) / 2.0;
  Tensor out(x.shape(), 0.0);
  auto pixel = [&](long row, long col, std::size_t ch) {
    if (row < 0 || col < 0 || row >= static_cast<long>(g.h) || col >= static_cast<long>(g.w)) return 0.0;
    return x.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col), ch);
  };
  for (std::size_t row = 0; row < g.h; ++row) {
    for (std::size_t col = 0; col < g.w; ++col) {
      // Inverse map of the output centre (a', b').
      const double u = static_cast<double>(col) - cx - p.da;
      const double v = cy - static_cast<double>(row) - p.db;
      const double a = c * u + s * v;
      const double b = -s * u + c * v;
      const double sc = a + cx, sr = cy - b;
      const double fr0 = std::floor(sr), fc0 = std::floor(sc);
      const double fr = sr - fr0, fc = sc - fc0;
      const auto r0 = static_cast<long>(fr0), c0 = static_cast<long>(fc0);
      for (std::size_t ch = 0; ch < g.c; ++ch) {
        out.at(row, col, ch) = (1 - fr) * ((1 - fc) * pixel(r0, c0, ch) + fc * pixel(r0, c0 + 1, ch)) +
                               fr * ((1 - fc) * pixel(r0 + 1, c0, ch) + fc * pixel(r0 + 1, c0 + 1, ch));
      }
    }
  }
  return out;
}

std::vector<SpatialParams> spatial_grid(const SpatialRanges& rg) {
  if (rg.da_steps < 1 || rg.db_steps < 1 || rg.gamma_steps < 1) throw InvalidInput("spatial lattice is empty");
  if (rg.da_max < 0 || rg.db_max < 0 || rg.gamma_max < 0) throw InvalidInput("spatial ranges must be nonnegative");
  auto axis = [](double m, int steps) {
    std::vector<double> v;
    for (int i = 0; i < steps; ++i) v.push_back(steps == 1 ? 0.0 : -m + 2.0 * m * i / (steps - 1));
    return v;
  };
  std::vector<SpatialParams> out;
  for (double a : axis(rg.da_max, rg.da_steps)) {
    for (double b : axis(rg.db_max, rg.db_steps)) {
      for (double g : axis(rg.gamma_max, rg.gamma_steps)) out.push_back({a, b, g});
    }
  }
  return out;
}

AttackResult spatial_attack(Oracle& oracle, const Tensor& x, int label, const SpatialOptions& opt) {
  check_input(oracle, x, label, std::nullopt);
  image_geometry(x, "spatial attack");
  std::vector<SpatialParams> cands;
  if (opt.mode == SpatialMode::Grid) {
    cands = spatial_grid(opt.ranges);
  } else {
    if (opt.k < 1) throw InvalidInput("worst-of-k needs k >= 1");
    spatial_grid(opt.ranges);
    Rng rng = make_rng(opt.seed, 0x59);
    const auto& rg = opt.ranges;
    for (int i = 0; i < opt.k; ++i) {
      const double a = uniform(rng, -rg.da_max, rg.da_max);
      const double b = uniform(rng, -rg.db_max, rg.db_max);
      const double g = uniform(rng, -rg.gamma_max, rg.gamma_max);
      cands.push_back({a, b, g});
    }
  }
  AttackResult r;
  r.orig_label = label;
  r.x_adv = x;
  const std::size_t start = oracle.query_count();
  auto* scorer = dynamic_cast<ScoreOracle*>(&oracle);
  std::optional<std::size_t> chosen;
  int chosen_label = label;
  double best_loss = -kInf;
  try {
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const Tensor xt = spatial_transform(x, cands[i]);
      if (scorer) {
        const auto p = scorer->scores(xt);
        const double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
        r.trace.push_back({static_cast<int>(i), loss, 0.0});
        if (loss > best_loss) {
          best_loss = loss;
          chosen = i;
          chosen_label = argmax(p);
          r.x_adv = xt;
        }
      } else {
        const int lab = oracle.label(xt);
        if (!chosen || (lab != label && chosen_label == label)) {
          chosen = i;
          chosen_label = lab;
          r.x_adv = xt;
        }
      }
      r.iterations = static_cast<int>(i) + 1;
    }
  } catch (const BudgetExhausted&) {
    r.budget_exhausted = true;
  }
  if (chosen) {
    r.extras["da"] = cands[*chosen].da;
    r.extras["db"] = cands[*chosen].db;
    r.extras["gamma"] = cands[*chosen].gamma;
    if (scorer) r.extras["loss"] = best_loss;
  }
  r.queries = oracle.query_count() - start;
  finalize_result(r, chosen_label, x);
  return r;
}

TransferReport transfer_attack(Oracle& target, const std::vector<Tensor>& substitute_inputs, const MlpLayout& layout,
                               const TrainConfig& train, const WhiteboxAttack& attack,
                               const std::vector<Tensor>& inputs, const std::vector<int>& labels) {
  if (substitute_inputs.empty()) throw InvalidInput("transfer attack needs substitute training inputs");
  if (inputs.size() != labels.size()) throw InvalidInput("inputs and labels differ in length");
  if (!attack) throw InvalidInput("transfer attack needs a white-box attack");
  TransferReport rep;
  const std::size_t start = target.query_count();
  Dataset data(substitute_inputs.front().shape(), target.class_count());
  for (std::size_t i = 0; i < substitute_inputs.size(); ++i) {
    int lab = 0;
    try {
      lab = target.label(substitute_inputs[i]);
    } catch (const BudgetExhausted& e) {
      throw BudgetExhausted("budget exhausted while labelling the substitute set after " + std::to_string(i) + " of " +
                                std::to_string(substitute_inputs.size()) + " inputs",
                            e.queries_used());
    }
    data.add(substitute_inputs[i], lab);
  }
  rep.labeling_queries = target.query_count() - start;
  rep.substitute = train_mlp(data, layout, train);
  std::size_t hits = 0, wb_hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    AttackResult r = attack(rep.substitute, inputs[i], labels[i]);
    wb_hits += r.success;
    r.extras["substitute_success"] = r.success ? 1.0 : 0.0;
    const std::size_t before = target.query_count();
    const int lab = target.label(r.x_adv);
    r.queries = target.query_count() - before;
    finalize_result(r, lab, inputs[i]);
    hits += r.success;
    rep.results.push_back(std::move(r));
  }
  if (!inputs.empty()) {
    rep.success_rate = static_cast<double>(hits) / static_cast<double>(inputs.size());
    rep.whitebox_success_rate = static_cast<double>(wb_hits) / static_cast<double>(inputs.size());
  }
  return rep;
}

}  // namespace advml
