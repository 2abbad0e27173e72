#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "tbdx/image.hpp"

namespace tbdx {

/// One reference x-ray with its expert lung mask.
struct AtlasEntry {
  Image image;
  Mask mask;
};

/// 64-bin intensity histogram over [0,1], normalized to sum 1. The bin of
/// value v is min(floor(64v), 63).
Eigen::VectorXd histogram64(const Image& img);

/// Bhattacharyya coefficient sum_k sqrt(p_k q_k) of two probability vectors
/// (equal length, each summing to 1 within 1e-9). 1 means identical.
double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Row and column intensity projections, each normalized to sum 1.
struct Profiles {
  Eigen::VectorXd row;
  Eigen::VectorXd col;
};

Profiles projection_profiles(const Image& img);

struct RankedReference {
  AtlasEntry entry;   // resized to the query image's shape
  std::size_t index;  // position in the original atlas
  double score;
};

/// Scores every atlas entry against the input — 0.5 histogram overlap plus
/// 0.25 each for row/column profile correlation mapped onto [0,1] — and
/// returns the best min(k, |atlas|) in descending order, ties by index.
/// Entries are resized to the input's shape before scoring.
std::vector<RankedReference> rank_references(const Image& input,
                                             const std::vector<AtlasEntry>& atlas,
                                             Eigen::Index k);

/// Axis-aligned similarity transform: a moving-image point p maps to
/// (p - center) * (sy, sx) + center + (ty, tx) in the fixed frame.
struct SimilarityTransform {
  double tx = 0.0;
  double ty = 0.0;
  double sx = 1.0;
  double sy = 1.0;
};

Image warp_image(const Image& moving, const SimilarityTransform& t);
Mask warp_mask(const Mask& moving, const SimilarityTransform& t);

/// Normalized cross-correlation in [-1,1] of two equal-shape images.
/// Returns -2 when either image is constant (no correlation defined).
double ncc(const Image& a, const Image& b);

struct RegistrationResult {
  SimilarityTransform transform;
  AtlasEntry warped;
  double score;  // NCC of warped.image against the fixed image
};

/// Aligns the entry onto the fixed image: coordinate descent on NCC over
/// (tx, ty, sx, sy), multi-start (identity, +-5 px shifts, +-5% scale) at the
/// coarsest of three pyramid levels, refined coarse-to-fine. The image warps
/// bilinearly, the mask nearest-neighbor. A local optimum is accepted but is
/// never worse than the identity alignment.
RegistrationResult register_entry(const AtlasEntry& moving, const Image& fixed);

/// Per-pixel mean of the warped masks: a lung probability field in [0,1].
Image build_prior(const std::vector<AtlasEntry>& warped);

/// Binary labeling energy on the 4-neighbor grid:
///   E(L) = sum_p D_p(L_p) + lambda * sum_{pq} w_pq * [L_p != L_q].
struct CutEnergy {
  Image unary_fg;      // D_p(1), (h, w)
  Image unary_bg;      // D_p(0), (h, w)
  Image weight_right;  // w between (r,c) and (r,c+1), (h, w-1)
  Image weight_down;   // w between (r,c) and (r+1,c), (h-1, w)
  double lambda = 1.0;
};

/// Exact minimizer of the energy via max-flow/min-cut; unary ties at
/// lambda=0 resolve to background.
Mask min_cut(const CutEnergy& e);

/// Energy of a given labeling; the test bench compares it against the flow.
double cut_energy(const CutEnergy& e, const Mask& labels);

/// Seeded-cut energy for lung masks: unaries are clamped negative log priors
/// (delta 1e-6) and pairwise weights exp(-(I_p - I_q)^2 / (2 sigma^2)).
CutEnergy lung_cut_energy(const Image& img, const Image& prior, double lambda, double sigma);

struct SegmentOptions {
  Eigen::Index references = 5;  // atlas entries kept after ranking
  double lambda = 2.0;
  double sigma = 0.1;
};

/// The full three-step segmenter: rank references, register the top k onto
/// the input, average their masks into a prior, and cut.
Mask segment_lungs(const Image& input, const std::vector<AtlasEntry>& atlas,
                   const SegmentOptions& opt = {});

}  // namespace tbdx
