#include "tbdx/guided_filter.hpp"

#include <algorithm>

#include "tbdx/errors.hpp"

namespace tbdx {
namespace {

/// Mean over the clipped 3x3 window centered at (r, c). When every value in
/// the window is identical the value itself is returned, so constant regions
/// survive the division with no rounding at all.
double window_mean(const Image& f, Eigen::Index r, Eigen::Index c) {
  const Eigen::Index r0 = std::max<Eigen::Index>(r - 1, 0);
  const Eigen::Index r1 = std::min<Eigen::Index>(r + 1, f.rows() - 1);
  const Eigen::Index c0 = std::max<Eigen::Index>(c - 1, 0);
  const Eigen::Index c1 = std::min<Eigen::Index>(c + 1, f.cols() - 1);
  double lo = f(r0, c0), hi = f(r0, c0), sum = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index i = r0; i <= r1; ++i) {
    for (Eigen::Index j = c0; j <= c1; ++j) {
      const double v = f(i, j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++n;
    }
  }
  if (lo == hi) return lo;
  return sum / static_cast<double>(n);
}

/// Variance over the same clipped window, two-pass about the given mean; a
/// constant window is exactly zero because the mean is exactly the value.
double window_var(const Image& f, Eigen::Index r, Eigen::Index c, double mean) {
  const Eigen::Index r0 = std::max<Eigen::Index>(r - 1, 0);
  const Eigen::Index r1 = std::min<Eigen::Index>(r + 1, f.rows() - 1);
  const Eigen::Index c0 = std::max<Eigen::Index>(c - 1, 0);
  const Eigen::Index c1 = std::min<Eigen::Index>(c + 1, f.cols() - 1);
  double sum = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index i = r0; i <= r1; ++i) {
    for (Eigen::Index j = c0; j <= c1; ++j) {
      const double d = f(i, j) - mean;
      sum += d * d;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

Image denoise(const Image& img, const GuidedFilterConfig& cfg) {
  if (cfg.window != 3) throw ArgumentError("the kernel mask is fixed at 3x3");
  if (cfg.epsilon < 0.0) throw ArgumentError("epsilon must be nonnegative");
  if (img.rows() < 3 || img.cols() < 3) {
    throw ArgumentError("image smaller than the 3x3 kernel mask");
  }

  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  Image scale(h, w);   // x_k per window center
  Image offset(h, w);  // y_k per window center
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double mean = window_mean(img, r, c);
      const double var = window_var(img, r, c, mean);
      const double denom = var + cfg.epsilon;
      const double x = denom > 0.0 ? var / denom : 0.0;
      scale(r, c) = x;
      offset(r, c) = (1.0 - x) * mean;
    }
  }

  // A pixel j lies in window k exactly when k lies in the 3x3 box around j
  // (clipping keeps the relation symmetric), so the per-pixel average of its
  // covering models is a clipped box filter over the coefficient fields.
  Image out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double d = window_mean(scale, r, c) * img(r, c) + window_mean(offset, r, c);
      out(r, c) = std::clamp(d, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace tbdx
