#pragma once

#include "tbdx/image.hpp"

namespace tbdx {

/// Self-guided edge-preserving smoothing. Every 3x3 window k gets a local
/// linear model D = x_k I + y_k with x_k = var_k/(var_k + epsilon) and
/// y_k = (1 - x_k) * mean_k; each pixel averages the models of all windows
/// covering it. Windows at the border are clipped, never padded.
struct GuidedFilterConfig {
  Eigen::Index window = 3;  // must stay 3: the kernel mask is fixed at 3x3
  double epsilon = 1e-4;    // regularizer, tuned for [0,1] intensities
};

Image denoise(const Image& img, const GuidedFilterConfig& cfg = {});

}  // namespace tbdx
