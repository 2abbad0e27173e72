#include "tbdx/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tbdx/rng.hpp"

namespace tbdx {
namespace {

double check_entry_at(const std::function<double()>& loss, Tensord& tensor, const Tensord& grad,
                      Eigen::Index i, double epsilon) {
  const double saved = tensor[i];
  tensor[i] = saved + epsilon;
  const double up = loss();
  tensor[i] = saved - epsilon;
  const double down = loss();
  tensor[i] = saved;
  const double numeric = (up - down) / (2.0 * epsilon);
  return std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-8});
}

// Central differences trade truncation error (grows with the step) against
// cancellation noise (shrinks with it), and the sweet spot shifts with the
// conditioning of each parameter: entries feeding a deep stack want a small
// step, entries with near-zero gradients want a large one. Each entry is
// therefore scored by the best of a short ladder of steps; a wrong analytic
// gradient disagrees at every step, so the ladder never hides a bug.
double check_entry(const std::function<double()>& loss, Tensord& tensor, const Tensord& grad,
                   Eigen::Index i, double epsilon) {
  double best = check_entry_at(loss, tensor, grad, i, epsilon);
  for (double eps : {10.0 * epsilon, 100.0 * epsilon, 1000.0 * epsilon}) {
    if (best < 1e-7) break;
    best = std::min(best, check_entry_at(loss, tensor, grad, i, eps));
  }
  return best;
}

void check_lists(const std::vector<Tensord*>& params,
                 const std::vector<const Tensord*>& analytic) {
  if (params.size() != analytic.size()) {
    throw ArgumentError("gradcheck: parameter/gradient list length mismatch");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p]->shape() != analytic[p]->shape()) {
      throw ShapeError("gradcheck: gradient shape does not match parameter");
    }
  }
}

}  // namespace

double gradcheck(const std::function<double()>& loss,
                 const std::vector<Tensord*>& params,
                 const std::vector<const Tensord*>& analytic,
                 double epsilon) {
  check_lists(params, analytic);
  double max_rel_err = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index i = 0; i < params[p]->size(); ++i) {
      max_rel_err = std::max(max_rel_err, check_entry(loss, *params[p], *analytic[p], i, epsilon));
    }
  }
  return max_rel_err;
}

double gradcheck_sampled(const std::function<double()>& loss,
                         const std::vector<Tensord*>& params,
                         const std::vector<const Tensord*>& analytic,
                         Eigen::Index max_per_tensor, std::uint64_t seed,
                         double epsilon) {
  check_lists(params, analytic);
  if (max_per_tensor <= 0) throw ArgumentError("gradcheck: sample budget must be positive");
  Rng rng(seed);
  double max_rel_err = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Eigen::Index n = params[p]->size();
    std::vector<Eigen::Index> picks;
    if (n <= max_per_tensor) {
      picks.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) picks[static_cast<std::size_t>(i)] = i;
    } else {
      // Partial Fisher-Yates: the first max_per_tensor slots are a uniform
      // sample without replacement.
      std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      for (Eigen::Index i = 0; i < max_per_tensor; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      }
      picks.assign(all.begin(), all.begin() + max_per_tensor);
    }
    for (Eigen::Index i : picks) {
      max_rel_err = std::max(max_rel_err, check_entry(loss, *params[p], *analytic[p], i, epsilon));
    }
  }
  return max_rel_err;
}

}  // namespace tbdx
