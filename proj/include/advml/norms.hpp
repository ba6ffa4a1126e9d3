#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "advml/tensor.hpp"

namespace advml {

enum class NormKind { L0, L1, L2, Linf };

std::string to_string(NormKind p);
std::optional<NormKind> parse_norm(std::string_view name);

// Exact Lp norm. L0 counts nonzero coordinates.
double lp_norm(const Tensor& v, NormKind p);
double lp_norm(std::span<const double> v, NormKind p);

// Norms of a - b; shapes must match.
double lp_distance(const Tensor& a, const Tensor& b, NormKind p);

struct NormSet {
  double l0 = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;

  double get(NormKind p) const noexcept;
};

NormSet perturbation_norms(const Tensor& x_adv, const Tensor& x);

struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

// Maps x into {r : ||r - center||_p <= eps} intersected with the box.
// Linf clamps each coordinate to the ball edge, then to the box. L2 rescales
// radially toward center, then clamps to the box; box clamping can only move
// a coordinate closer to a center lying inside the box, so feasibility holds.
// The operation is idempotent bit-for-bit.
Tensor project_feasible(const Tensor& x, const Tensor& center, double eps, NormKind p,
                        Box box = {});

}  // namespace advml
