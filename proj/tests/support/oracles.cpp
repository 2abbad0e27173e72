#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "tbdx/errors.hpp"

namespace oracle {

namespace {

struct WindowStats {
  double mean = 0.0;
  double var = 0.0;
};

WindowStats window_stats(const tbdx::Image& img, Eigen::Index cy, Eigen::Index cx) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index r = cy - 1; r <= cy + 1; ++r) {
    for (Eigen::Index c = cx - 1; c <= cx + 1; ++c) {
      if (r < 0 || c < 0 || r >= img.rows() || c >= img.cols()) continue;
      sum += img(r, c);
      ++count;
    }
  }
  WindowStats s;
  s.mean = sum / count;
  double acc = 0.0;
  for (Eigen::Index r = cy - 1; r <= cy + 1; ++r) {
    for (Eigen::Index c = cx - 1; c <= cx + 1; ++c) {
      if (r < 0 || c < 0 || r >= img.rows() || c >= img.cols()) continue;
      const double d = img(r, c) - s.mean;
      acc += d * d;
    }
  }
  s.var = acc / count;
  return s;
}

}  // namespace

tbdx::Image guided_filter_reference(const tbdx::Image& img, double epsilon) {
  const Eigen::Index h = img.rows(), w = img.cols();
  tbdx::Image out(h, w);
  for (Eigen::Index j_r = 0; j_r < h; ++j_r) {
    for (Eigen::Index j_c = 0; j_c < w; ++j_c) {
      double sum = 0.0;
      int windows = 0;
      // every window center k whose (clipped) window contains pixel j
      for (Eigen::Index k_r = j_r - 1; k_r <= j_r + 1; ++k_r) {
        for (Eigen::Index k_c = j_c - 1; k_c <= j_c + 1; ++k_c) {
          if (k_r < 0 || k_c < 0 || k_r >= h || k_c >= w) continue;
          const WindowStats s = window_stats(img, k_r, k_c);
          const double x_k = (s.var + epsilon) > 0.0 ? s.var / (s.var + epsilon) : 0.0;
          const double y_k = (1.0 - x_k) * s.mean;
          sum += x_k * img(j_r, j_c) + y_k;
          ++windows;
        }
      }
      out(j_r, j_c) = std::clamp(sum / windows, 0.0, 1.0);
    }
  }
  return out;
}

tbdx::Image double_box_reference(const tbdx::Image& img) {
  const auto box = [](const tbdx::Image& in) {
    tbdx::Image out(in.rows(), in.cols());
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      for (Eigen::Index c = 0; c < in.cols(); ++c) {
        out(r, c) = window_stats(in, r, c).mean;
      }
    }
    return out;
  };
  return box(box(img));
}

double bilinear_at(const tbdx::Image& img, double y, double x) {
  const auto clamp_r = [&](Eigen::Index r) {
    return std::min(std::max<Eigen::Index>(r, 0), img.rows() - 1);
  };
  const auto clamp_c = [&](Eigen::Index c) {
    return std::min(std::max<Eigen::Index>(c, 0), img.cols() - 1);
  };
  const Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(y));
  const Eigen::Index c0 = static_cast<Eigen::Index>(std::floor(x));
  const double fy = y - r0, fx = x - c0;
  const double v00 = img(clamp_r(r0), clamp_c(c0));
  const double v01 = img(clamp_r(r0), clamp_c(c0 + 1));
  const double v10 = img(clamp_r(r0 + 1), clamp_c(c0));
  const double v11 = img(clamp_r(r0 + 1), clamp_c(c0 + 1));
  return v00 * (1 - fy) * (1 - fx) + v01 * (1 - fy) * fx + v10 * fy * (1 - fx) +
         v11 * fy * fx;
}

double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& truths) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truths[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truths[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  if (pairs == 0) throw tbdx::ArgumentError("auc oracle needs both classes");
  return wins / static_cast<double>(pairs);
}

double trapezoid_area(const std::vector<std::pair<double, double>>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].first - points[i - 1].first) *
            (points[i].second + points[i - 1].second) / 2.0;
  }
  return area;
}

double grid_energy(const tbdx::CutEnergy& e, const tbdx::Mask& labels) {
  const Eigen::Index h = labels.rows(), w = labels.cols();
  double total = 0.0;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      total += labels(r, c) ? e.unary_fg(r, c) : e.unary_bg(r, c);
      if (c + 1 < w && labels(r, c) != labels(r, c + 1)) {
        total += e.lambda * e.weight_right(r, c);
      }
      if (r + 1 < h && labels(r, c) != labels(r + 1, c)) {
        total += e.lambda * e.weight_down(r, c);
      }
    }
  }
  return total;
}

double enumerate_min_energy(const tbdx::CutEnergy& e) {
  const Eigen::Index h = e.unary_fg.rows(), w = e.unary_fg.cols();
  const Eigen::Index n = h * w;
  if (n > 20) throw tbdx::ArgumentError("enumeration oracle limited to 20 pixels");
  double best = std::numeric_limits<double>::infinity();
  tbdx::Mask labels(h, w);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (Eigen::Index i = 0; i < n; ++i) {
      labels(i / w, i % w) = static_cast<std::uint8_t>((bits >> i) & 1);
    }
    best = std::min(best, grid_energy(e, labels));
  }
  return best;
}

double mask_iou(const tbdx::Mask& a, const tbdx::Mask& b) {
  std::int64_t inter = 0, uni = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const bool in_a = a(r, c) != 0, in_b = b(r, c) != 0;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace oracle
