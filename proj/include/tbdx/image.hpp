#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "tbdx/tensor.hpp"

namespace tbdx {

/// Grayscale intensities in [0,1], indexed (row, col).
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary label field, values in {0,1}, indexed (row, col).
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bilinear sample at continuous (y, x) in pixel-index coordinates; neighbor
/// lookups clamp to the image border.
double sample_bilinear(const Image& img, double y, double x);

/// Resampling with half-pixel-center alignment: output pixel (r, c) reads
/// source location ((r+0.5)*h/out_h - 0.5, (c+0.5)*w/out_w - 0.5).
Image resize_bilinear(const Image& img, Eigen::Index out_h, Eigen::Index out_w);
Mask resize_nearest(const Mask& mask, Eigen::Index out_h, Eigen::Index out_w);

/// Classifier input preparation: optional mask (zero background, crop to the
/// mask bounding box), min-max normalization to [0,1] (constant image maps
/// to zeros), bilinear resize to out_size², gray channel replicated three
/// times into an (out_size, out_size, 3) tensor.
Tensord to_model_input(const Image& img, const Mask* mask = nullptr,
                       Eigen::Index out_size = 224);

}  // namespace tbdx
