// Independent reference implementations the tests compare the library
// against. Everything here is written the slow, obvious way on purpose.
#pragma once

#include <utility>
#include <vector>

#include "tbdx/image.hpp"
#include "tbdx/segmentation.hpp"

namespace oracle {

// Per-pixel evaluation of the self-guided filter: for every window, compute
// the coefficients from scratch, then average the per-window estimates over
// all windows covering each pixel. No shared box-filter passes.
tbdx::Image guided_filter_reference(const tbdx::Image& img, double epsilon);

// Two rounds of clipped 3x3 window averaging.
tbdx::Image double_box_reference(const tbdx::Image& img);

// Bilinear interpolation at a fractional source coordinate with clamped
// neighbors, written directly from the four-corner formula.
double bilinear_at(const tbdx::Image& img, double y, double x);

// O(P*N) Mann-Whitney statistic: every positive/negative pair contributes
// 1, 0.5, or 0.
double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& truths);

// Area under a polyline by the trapezoid rule.
double trapezoid_area(const std::vector<std::pair<double, double>>& points);

// Energy of one labeling, summed term by term.
double grid_energy(const tbdx::CutEnergy& e, const tbdx::Mask& labels);

// Exhaustive minimum over all 2^(h*w) labelings; only sane for tiny grids.
double enumerate_min_energy(const tbdx::CutEnergy& e);

double mask_iou(const tbdx::Mask& a, const tbdx::Mask& b);

}  // namespace oracle
