#include "tbdx/image.hpp"

#include <algorithm>
#include <cmath>

#include "tbdx/errors.hpp"

namespace tbdx {
namespace {

Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) {
  return std::clamp<Eigen::Index>(i, 0, n - 1);
}

void check_nonempty(Eigen::Index h, Eigen::Index w, const char* what) {
  if (h <= 0 || w <= 0) throw ArgumentError(std::string(what) + " must be non-empty");
}

}  // namespace

double sample_bilinear(const Image& img, double y, double x) {
  check_nonempty(img.rows(), img.cols(), "image");
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double wy = y - fy;
  const double wx = x - fx;
  const Eigen::Index y0 = clamp_index(static_cast<Eigen::Index>(fy), img.rows());
  const Eigen::Index y1 = clamp_index(static_cast<Eigen::Index>(fy) + 1, img.rows());
  const Eigen::Index x0 = clamp_index(static_cast<Eigen::Index>(fx), img.cols());
  const Eigen::Index x1 = clamp_index(static_cast<Eigen::Index>(fx) + 1, img.cols());
  const double top = (1.0 - wx) * img(y0, x0) + wx * img(y0, x1);
  const double bottom = (1.0 - wx) * img(y1, x0) + wx * img(y1, x1);
  return (1.0 - wy) * top + wy * bottom;
}

Image resize_bilinear(const Image& img, Eigen::Index out_h, Eigen::Index out_w) {
  check_nonempty(img.rows(), img.cols(), "image");
  check_nonempty(out_h, out_w, "target size");
  if (out_h == img.rows() && out_w == img.cols()) return img;
  Image out(out_h, out_w);
  const double sy = static_cast<double>(img.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.cols()) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    const double y = (static_cast<double>(r) + 0.5) * sy - 0.5;
    for (Eigen::Index c = 0; c < out_w; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * sx - 0.5;
      out(r, c) = sample_bilinear(img, y, x);
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, Eigen::Index out_h, Eigen::Index out_w) {
  check_nonempty(mask.rows(), mask.cols(), "mask");
  check_nonempty(out_h, out_w, "target size");
  if (out_h == mask.rows() && out_w == mask.cols()) return mask;
  Mask out(out_h, out_w);
  const double sy = static_cast<double>(mask.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(mask.cols()) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    const double y = (static_cast<double>(r) + 0.5) * sy - 0.5;
    const Eigen::Index src_r = clamp_index(static_cast<Eigen::Index>(std::lround(y)), mask.rows());
    for (Eigen::Index c = 0; c < out_w; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * sx - 0.5;
      const Eigen::Index src_c =
          clamp_index(static_cast<Eigen::Index>(std::lround(x)), mask.cols());
      out(r, c) = mask(src_r, src_c);
    }
  }
  return out;
}

Tensord to_model_input(const Image& img, const Mask* mask, Eigen::Index out_size) {
  check_nonempty(img.rows(), img.cols(), "image");
  if (out_size <= 0) throw ArgumentError("output size must be positive");

  Image work;
  if (mask) {
    if (mask->rows() != img.rows() || mask->cols() != img.cols()) {
      throw ShapeError("mask shape does not match the image");
    }
    Eigen::Index top = img.rows(), bottom = -1, left = img.cols(), right = -1;
    for (Eigen::Index r = 0; r < mask->rows(); ++r) {
      for (Eigen::Index c = 0; c < mask->cols(); ++c) {
        if ((*mask)(r, c) == 0) continue;
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
      }
    }
    if (bottom < 0) throw DegenerateMaskError("mask selects no pixels");
    work = (img * mask->cast<double>())
               .block(top, left, bottom - top + 1, right - left + 1)
               .eval();
  } else {
    work = img;
  }

  const double lo = work.minCoeff();
  const double hi = work.maxCoeff();
  if (hi > lo) {
    work = (work - lo) / (hi - lo);
  } else {
    work.setZero();
  }

  const Image resized = resize_bilinear(work, out_size, out_size);
  Tensord out(Shape{out_size, out_size, 3});
  for (Eigen::Index r = 0; r < out_size; ++r) {
    for (Eigen::Index c = 0; c < out_size; ++c) {
      const double v = resized(r, c);
      out(r, c, 0) = v;
      out(r, c, 1) = v;
      out(r, c, 2) = v;
    }
  }
  return out;
}

}  // namespace tbdx
