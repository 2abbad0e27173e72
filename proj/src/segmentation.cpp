#include "tbdx/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "tbdx/errors.hpp"
#include "tbdx/maxflow.hpp"

namespace tbdx {
namespace {

constexpr double kPriorDelta = 1e-6;

/// Pearson correlation; when either side has no variance the vectors carry
/// no shape information, so the correlation is declared 1 for an exact match
/// and 0 otherwise.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double va = da.squaredNorm();
  const double vb = db.squaredNorm();
  if (va == 0.0 || vb == 0.0) return (a - b).cwiseAbs().maxCoeff() == 0.0 ? 1.0 : 0.0;
  return da.dot(db) / std::sqrt(va * vb);
}

double unit_interval(double correlation) { return (correlation + 1.0) / 2.0; }

struct Candidate {
  SimilarityTransform t;
  double score;
};

/// One coordinate-descent run at a single pyramid level. Translation steps
/// start at 2 px and scale steps at 2%, each halved four times; a sweep
/// tries +-step on every coordinate and repeats while something improves.
Candidate descend(const Image& moving, const Image& fixed, SimilarityTransform t) {
  const auto evaluate = [&](const SimilarityTransform& trial) {
    return ncc(warp_image(moving, trial), fixed);
  };
  Candidate best{t, evaluate(t)};
  double t_step = 2.0;
  double s_step = 0.02;
  for (int round = 0; round < 4; ++round) {
    for (int sweep = 0; sweep < 25; ++sweep) {
      bool improved = false;
      for (int coord = 0; coord < 4; ++coord) {
        for (double sign : {1.0, -1.0}) {
          SimilarityTransform trial = best.t;
          switch (coord) {
            case 0: trial.tx += sign * t_step; break;
            case 1: trial.ty += sign * t_step; break;
            case 2: trial.sx = std::clamp(trial.sx + sign * s_step, 0.5, 2.0); break;
            default: trial.sy = std::clamp(trial.sy + sign * s_step, 0.5, 2.0); break;
          }
          const double score = evaluate(trial);
          if (score > best.score + 1e-12) {
            best = Candidate{trial, score};
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    t_step /= 2.0;
    s_step /= 2.0;
  }
  return best;
}

Image half_size(const Image& img) {
  return resize_bilinear(img, (img.rows() + 1) / 2, (img.cols() + 1) / 2);
}

void check_grid(const CutEnergy& e) {
  const Eigen::Index h = e.unary_fg.rows();
  const Eigen::Index w = e.unary_fg.cols();
  if (h <= 0 || w <= 0) throw ArgumentError("energy grid must be non-empty");
  if (e.unary_bg.rows() != h || e.unary_bg.cols() != w ||
      e.weight_right.rows() != h || e.weight_right.cols() != w - 1 ||
      e.weight_down.rows() != h - 1 || e.weight_down.cols() != w) {
    throw ShapeError("energy fields disagree on the grid shape");
  }
  const auto all_costs_ok = [](const Image& f) {
    return f.size() == 0 || (f.isFinite().all() && (f >= 0.0).all());
  };
  if (!all_costs_ok(e.unary_fg) || !all_costs_ok(e.unary_bg) ||
      !all_costs_ok(e.weight_right) || !all_costs_ok(e.weight_down) ||
      !std::isfinite(e.lambda) || e.lambda < 0.0) {
    throw ArgumentError("energy costs must be finite and nonnegative");
  }
}

}  // namespace

Eigen::VectorXd histogram64(const Image& img) {
  if (img.size() == 0) throw ArgumentError("cannot histogram an empty image");
  Eigen::VectorXd bins = Eigen::VectorXd::Zero(64);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const auto bin = static_cast<Eigen::Index>(std::floor(64.0 * img(r, c)));
      bins[std::clamp<Eigen::Index>(bin, 0, 63)] += 1.0;
    }
  }
  return bins / static_cast<double>(img.size());
}

double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ArgumentError("probability vectors differ in length");
  for (const Eigen::VectorXd* v : {&p, &q}) {
    if ((v->array() < 0.0).any() || std::abs(v->sum() - 1.0) > 1e-9) {
      throw ArgumentError("input is not a probability vector");
    }
  }
  const double coeff = (p.array() * q.array()).sqrt().sum();
  return std::min(coeff, 1.0);
}

Profiles projection_profiles(const Image& img) {
  if (img.size() == 0) throw ArgumentError("cannot project an empty image");
  const double total = img.sum();
  if (total <= 0.0) throw ArgumentError("projection profiles of an all-zero image");
  Profiles p;
  p.row = img.rowwise().sum() / total;
  p.col = img.colwise().sum().transpose() / total;
  return p;
}

std::vector<RankedReference> rank_references(const Image& input,
                                             const std::vector<AtlasEntry>& atlas,
                                             Eigen::Index k) {
  if (atlas.empty()) throw ArgumentError("atlas is empty");
  if (k <= 0) throw ArgumentError("reference count must be positive");
  if (input.size() == 0) throw ArgumentError("input image is empty");

  const Eigen::VectorXd input_hist = histogram64(input);
  const Profiles input_profiles = projection_profiles(input);

  std::vector<RankedReference> scored;
  scored.reserve(atlas.size());
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    AtlasEntry resized;
    resized.image = resize_bilinear(atlas[i].image, input.rows(), input.cols());
    resized.mask = resize_nearest(atlas[i].mask, input.rows(), input.cols());
    const Profiles profiles = projection_profiles(resized.image);
    const double score = 0.5 * bhattacharyya(input_hist, histogram64(resized.image)) +
                         0.25 * unit_interval(pearson(input_profiles.row, profiles.row)) +
                         0.25 * unit_interval(pearson(input_profiles.col, profiles.col));
    scored.push_back(RankedReference{std::move(resized), i, score});
  }

  std::stable_sort(scored.begin(), scored.end(),
                   [](const RankedReference& a, const RankedReference& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.index < b.index;
                   });
  scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k)));
  return scored;
}

Image warp_image(const Image& moving, const SimilarityTransform& t) {
  const Eigen::Index h = moving.rows();
  const Eigen::Index w = moving.cols();
  const double cy = static_cast<double>(h - 1) / 2.0;
  const double cx = static_cast<double>(w - 1) / 2.0;
  Image out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    const double y = (static_cast<double>(r) - cy - t.ty) / t.sy + cy;
    for (Eigen::Index c = 0; c < w; ++c) {
      const double x = (static_cast<double>(c) - cx - t.tx) / t.sx + cx;
      out(r, c) = sample_bilinear(moving, y, x);
    }
  }
  return out;
}

Mask warp_mask(const Mask& moving, const SimilarityTransform& t) {
  const Eigen::Index h = moving.rows();
  const Eigen::Index w = moving.cols();
  const double cy = static_cast<double>(h - 1) / 2.0;
  const double cx = static_cast<double>(w - 1) / 2.0;
  Mask out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    const double y = (static_cast<double>(r) - cy - t.ty) / t.sy + cy;
    const Eigen::Index src_r =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(y)), 0, h - 1);
    for (Eigen::Index c = 0; c < w; ++c) {
      const double x = (static_cast<double>(c) - cx - t.tx) / t.sx + cx;
      const Eigen::Index src_c =
          std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(x)), 0, w - 1);
      out(r, c) = moving(src_r, src_c);
    }
  }
  return out;
}

double ncc(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("correlation needs equal shapes");
  }
  const Image da = a - a.mean();
  const Image db = b - b.mean();
  const double va = da.square().sum();
  const double vb = db.square().sum();
  if (va <= 0.0 || vb <= 0.0) return -2.0;
  return (da * db).sum() / std::sqrt(va * vb);
}

RegistrationResult register_entry(const AtlasEntry& moving, const Image& fixed) {
  if (moving.image.rows() != fixed.rows() || moving.image.cols() != fixed.cols() ||
      moving.mask.rows() != fixed.rows() || moving.mask.cols() != fixed.cols()) {
    throw ShapeError("moving entry and fixed image must share a shape");
  }
  if (fixed.size() == 0 || fixed.minCoeff() == fixed.maxCoeff()) {
    throw RegistrationError("fixed image is constant; correlation is undefined");
  }

  // Three-level pyramid, coarsest last; levels below 12 px are dropped.
  std::vector<Image> fixed_pyr{fixed};
  std::vector<Image> moving_pyr{moving.image};
  while (fixed_pyr.size() < 3 && std::min(fixed_pyr.back().rows(), fixed_pyr.back().cols()) >= 24) {
    fixed_pyr.push_back(half_size(fixed_pyr.back()));
    moving_pyr.push_back(half_size(moving_pyr.back()));
  }

  const std::size_t coarsest = fixed_pyr.size() - 1;
  const double coarse_scale = static_cast<double>(Eigen::Index{1} << coarsest);
  std::vector<SimilarityTransform> starts = {
      {},
      {5.0 / coarse_scale, 0.0, 1.0, 1.0},
      {-5.0 / coarse_scale, 0.0, 1.0, 1.0},
      {0.0, 5.0 / coarse_scale, 1.0, 1.0},
      {0.0, -5.0 / coarse_scale, 1.0, 1.0},
      {0.0, 0.0, 1.05, 1.05},
      {0.0, 0.0, 0.95, 0.95},
  };

  Candidate best{{}, -3.0};
  for (std::size_t level = coarsest + 1; level-- > 0;) {
    const Image& f = fixed_pyr[level];
    const Image& m = moving_pyr[level];
    std::vector<SimilarityTransform> seeds;
    if (level == coarsest) {
      seeds = starts;
    } else {
      SimilarityTransform carried = best.t;
      carried.tx *= 2.0;
      carried.ty *= 2.0;
      seeds = {carried, SimilarityTransform{}};
    }
    best = Candidate{seeds.front(), -3.0};
    for (const SimilarityTransform& seed : seeds) {
      const Candidate c = descend(m, f, seed);
      if (c.score > best.score) best = c;
    }
  }

  RegistrationResult result;
  result.transform = best.t;
  result.warped.image = warp_image(moving.image, best.t);
  result.warped.mask = warp_mask(moving.mask, best.t);
  result.score = best.score;
  return result;
}

Image build_prior(const std::vector<AtlasEntry>& warped) {
  if (warped.empty()) throw ArgumentError("cannot build a prior from no masks");
  const Eigen::Index h = warped.front().mask.rows();
  const Eigen::Index w = warped.front().mask.cols();
  Image prior = Image::Zero(h, w);
  for (const AtlasEntry& entry : warped) {
    if (entry.mask.rows() != h || entry.mask.cols() != w) {
      throw ShapeError("warped masks disagree on shape");
    }
    prior += entry.mask.cast<double>();
  }
  return prior / static_cast<double>(warped.size());
}

Mask min_cut(const CutEnergy& e) {
  check_grid(e);
  const Eigen::Index h = e.unary_fg.rows();
  const Eigen::Index w = e.unary_fg.cols();
  const std::size_t n = static_cast<std::size_t>(h * w);
  const std::size_t source = n;
  const std::size_t sink = n + 1;
  MaxFlow flow(n + 2);

  const auto node = [w](Eigen::Index r, Eigen::Index c) {
    return static_cast<std::size_t>(r * w + c);
  };
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      // Source side = foreground: cutting s->p pays the background cost,
      // cutting p->t pays the foreground cost.
      flow.add_edge(source, node(r, c), e.unary_bg(r, c));
      flow.add_edge(node(r, c), sink, e.unary_fg(r, c));
      if (c + 1 < w) {
        const double cap = e.lambda * e.weight_right(r, c);
        flow.add_edge(node(r, c), node(r, c + 1), cap, cap);
      }
      if (r + 1 < h) {
        const double cap = e.lambda * e.weight_down(r, c);
        flow.add_edge(node(r, c), node(r + 1, c), cap, cap);
      }
    }
  }

  flow.solve(source, sink);
  Mask labels(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      labels(r, c) = flow.in_source_side(node(r, c)) ? 1 : 0;
    }
  }
  return labels;
}

double cut_energy(const CutEnergy& e, const Mask& labels) {
  check_grid(e);
  if (labels.rows() != e.unary_fg.rows() || labels.cols() != e.unary_fg.cols()) {
    throw ShapeError("labeling shape does not match the energy grid");
  }
  double energy = 0.0;
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    for (Eigen::Index c = 0; c < labels.cols(); ++c) {
      energy += labels(r, c) ? e.unary_fg(r, c) : e.unary_bg(r, c);
      if (c + 1 < labels.cols() && labels(r, c) != labels(r, c + 1)) {
        energy += e.lambda * e.weight_right(r, c);
      }
      if (r + 1 < labels.rows() && labels(r, c) != labels(r + 1, c)) {
        energy += e.lambda * e.weight_down(r, c);
      }
    }
  }
  return energy;
}

CutEnergy lung_cut_energy(const Image& img, const Image& prior, double lambda, double sigma) {
  if (img.rows() != prior.rows() || img.cols() != prior.cols()) {
    throw ShapeError("image and prior must share a shape");
  }
  if (sigma <= 0.0) throw ArgumentError("sigma must be positive");
  if (lambda < 0.0) throw ArgumentError("lambda must be nonnegative");

  const auto squeeze = [](double p) { return p * (1.0 - 2.0 * kPriorDelta) + kPriorDelta; };
  CutEnergy e;
  e.lambda = lambda;
  e.unary_fg = -prior.unaryExpr([&](double p) { return squeeze(p); }).log();
  e.unary_bg = -prior.unaryExpr([&](double p) { return squeeze(1.0 - p); }).log();

  const double inv = 1.0 / (2.0 * sigma * sigma);
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  e.weight_right.resize(h, w - 1);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c + 1 < w; ++c) {
      const double d = img(r, c) - img(r, c + 1);
      e.weight_right(r, c) = std::exp(-d * d * inv);
    }
  }
  e.weight_down.resize(h - 1, w);
  for (Eigen::Index r = 0; r + 1 < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double d = img(r, c) - img(r + 1, c);
      e.weight_down(r, c) = std::exp(-d * d * inv);
    }
  }
  return e;
}

Mask segment_lungs(const Image& input, const std::vector<AtlasEntry>& atlas,
                   const SegmentOptions& opt) {
  std::vector<RankedReference> ranked = rank_references(input, atlas, opt.references);
  std::vector<AtlasEntry> warped;
  warped.reserve(ranked.size());
  for (const RankedReference& ref : ranked) {
    warped.push_back(register_entry(ref.entry, input).warped);
  }
  const Image prior = build_prior(warped);
  return min_cut(lung_cut_energy(input, prior, opt.lambda, opt.sigma));
}

}  // namespace tbdx
