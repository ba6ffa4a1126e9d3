#include "advml/shadow.hpp"

#include <cmath>

#include "advml/error.hpp"

namespace advml {
namespace {

void require_rgb(const Tensor& delta) {
  if (delta.rank() != 3 || delta.channels() != 3) {
    throw InvalidInput("shadow penalties require an h x w x 3 perturbation");
  }
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

constexpr std::size_t kPairs[3][2] = {{0, 2}, {0, 1}, {1, 2}};  // R-B, R-G, G-B

}  // namespace

ShadowPenalties shadow_penalties(const Tensor& delta) {
  require_rgb(delta);
  const std::size_t h = delta.height(), w = delta.width();
  ShadowPenalties out;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double abs_total = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double v = delta.at(r, c, ch);
        const double dv = r + 1 < h ? delta.at(r + 1, c, ch) - v : 0.0;
        const double dh = c + 1 < w ? delta.at(r, c + 1, ch) - v : 0.0;
        const double a = std::fabs(dv) + std::fabs(dh);
        out.tv += a * a;
        abs_total += std::fabs(v);
      }
    }
    out.color_mean += std::fabs(abs_total / static_cast<double>(h * w));
  }
  for (const auto& pr : kPairs) {
    double ss = 0.0;
    for (std::size_t p = 0; p < h * w; ++p) {
      const double d = delta[p * 3 + pr[0]] - delta[p * 3 + pr[1]];
      ss += d * d;
    }
    out.channel_diff += std::sqrt(ss);
  }
  return out;
}

double shadow_penalty_total(const ShadowPenalties& p, const ShadowWeights& w) noexcept {
  return w.tv * p.tv + w.color_mean * p.color_mean + w.channel_diff * p.channel_diff;
}

Tensor shadow_penalty_gradient(const Tensor& delta, const ShadowWeights& w) {
  require_rgb(delta);
  const std::size_t h = delta.height(), wd = delta.width();
  Tensor g(delta.shape(), 0.0);
  const double inv_pixels = 1.0 / static_cast<double>(h * wd);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < wd; ++c) {
        const double v = delta.at(r, c, ch);
        const double dv = r + 1 < h ? delta.at(r + 1, c, ch) - v : 0.0;
        const double dh = c + 1 < wd ? delta.at(r, c + 1, ch) - v : 0.0;
        const double a2 = 2.0 * (std::fabs(dv) + std::fabs(dh)) * w.tv;
        if (r + 1 < h) {
          g.at(r + 1, c, ch) += a2 * sgn(dv);
          g.at(r, c, ch) -= a2 * sgn(dv);
        }
        if (c + 1 < wd) {
          g.at(r, c + 1, ch) += a2 * sgn(dh);
          g.at(r, c, ch) -= a2 * sgn(dh);
        }
        g.at(r, c, ch) += w.color_mean * inv_pixels * sgn(v);
      }
    }
  }
  for (const auto& pr : kPairs) {
    double ss = 0.0;
    for (std::size_t p = 0; p < h * wd; ++p) {
      const double d = delta[p * 3 + pr[0]] - delta[p * 3 + pr[1]];
      ss += d * d;
    }
    const double norm = std::sqrt(ss);
    if (norm == 0.0) continue;
    for (std::size_t p = 0; p < h * wd; ++p) {
      const double d = (delta[p * 3 + pr[0]] - delta[p * 3 + pr[1]]) / norm * w.channel_diff;
      g[p * 3 + pr[0]] += d;
      g[p * 3 + pr[1]] -= d;
    }
  }
  return g;
}

}  // namespace advml
