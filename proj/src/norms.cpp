#include "advml/norms.hpp"

#include <algorithm>
#include <cmath>

#include "advml/error.hpp"
#include "advml/kernels.hpp"

namespace advml {

std::string to_string(NormKind p) {
  switch (p) {
    case NormKind::L0: return "l0";
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::Linf: return "linf";
  }
  return "unknown";
}

std::optional<NormKind> parse_norm(std::string_view name) {
  if (name == "l0" || name == "L0") return NormKind::L0;
  if (name == "l1" || name == "L1") return NormKind::L1;
  if (name == "l2" || name == "L2") return NormKind::L2;
  if (name == "linf" || name == "Linf" || name == "inf") return NormKind::Linf;
  return std::nullopt;
}

double lp_norm(std::span<const double> v, NormKind p) {
  if (v.empty()) throw InvalidInput("norm of an empty tensor");
  switch (p) {
    case NormKind::L0:
      return static_cast<double>(std::count_if(v.begin(), v.end(), [](double a) { return a != 0.0; }));
    case NormKind::L1: return kernels::abs_sum(v);
    case NormKind::L2: return std::sqrt(kernels::sum_squares(v));
    case NormKind::Linf: return kernels::max_abs(v);
  }
  throw InvalidInput("unknown norm");
}

double lp_norm(const Tensor& v, NormKind p) { return lp_norm(v.values(), p); }

double lp_distance(const Tensor& a, const Tensor& b, NormKind p) {
  if (a.size() != b.size()) throw InvalidInput("norm distance: shape mismatch");
  if (p == NormKind::L2) {
    if (a.empty()) throw InvalidInput("norm of an empty tensor");
    return std::sqrt(kernels::squared_distance(a.values(), b.values()));
  }
  return lp_norm(a - b, p);
}

double NormSet::get(NormKind p) const noexcept {
  switch (p) {
    case NormKind::L0: return l0;
    case NormKind::L1: return l1;
    case NormKind::L2: return l2;
    case NormKind::Linf: return linf;
  }
  return 0.0;
}

NormSet perturbation_norms(const Tensor& x_adv, const Tensor& x) {
  const Tensor d = x_adv - x;
  return NormSet{lp_norm(d, NormKind::L0), lp_norm(d, NormKind::L1), lp_norm(d, NormKind::L2),
                 lp_norm(d, NormKind::Linf)};
}

Tensor project_feasible(const Tensor& x, const Tensor& center, double eps, NormKind p, Box box) {
  if (x.size() != center.size()) throw InvalidInput("project_feasible: shape mismatch");
  if (!(eps > 0.0)) throw InvalidInput("project_feasible: eps must be positive");
  if (!(box.lo < box.hi)) throw InvalidInput("project_feasible: empty box");
  Tensor r = x;
  switch (p) {
    case NormKind::Linf:
      for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = std::clamp(r[i], center[i] - eps, center[i] + eps);
      }
      break;
    case NormKind::L2: {
      const double norm = lp_distance(x, center, NormKind::L2);
      if (norm > eps) {
        // The scaled vector's computed norm may round above eps; step the
        // factor down one ulp at a time until it does not.
        double factor = eps / norm;
        for (;;) {
          for (std::size_t i = 0; i < r.size(); ++i) r[i] = center[i] + factor * (x[i] - center[i]);
          if (lp_distance(r, center, NormKind::L2) <= eps) break;
          factor = std::nextafter(factor, 0.0);
        }
      }
      break;
    }
    default: throw InvalidInput("project_feasible supports L2 and Linf only");
  }
  for (auto& v : r) v = std::clamp(v, box.lo, box.hi);
  return r;
}

}  // namespace advml
