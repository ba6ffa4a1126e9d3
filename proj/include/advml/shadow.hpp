#pragma once

#include "advml/tensor.hpp"

namespace advml {

// Perceptibility penalties on an h x w x 3 perturbation (channels R, G, B).
//   tv            sum over pixels and channels of
//                 (|d(i+1,j) - d(i,j)| + |d(i,j+1) - d(i,j)|)^2, forward
//                 differences with zero difference past the last row/column
//   color_mean    sum over channels of |mean_pixels |d_ch||
//   channel_diff  ||d_R - d_B||_2 + ||d_R - d_G||_2 + ||d_G - d_B||_2
struct ShadowPenalties {
  double tv = 0.0;
  double color_mean = 0.0;
  double channel_diff = 0.0;
};

struct ShadowWeights {
  double tv = 0.3;
  double color_mean = 1.0;
  double channel_diff = 0.5;
};

ShadowPenalties shadow_penalties(const Tensor& delta);

// lambda_tv * tv + lambda_c * color_mean + lambda_s * channel_diff
double shadow_penalty_total(const ShadowPenalties& p, const ShadowWeights& w) noexcept;

// (Sub)gradient of shadow_penalty_total with respect to delta; kinks of |.|
// and of the norms at zero take the zero subgradient.
Tensor shadow_penalty_gradient(const Tensor& delta, const ShadowWeights& w);

}  // namespace advml
