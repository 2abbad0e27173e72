#pragma once

#include <functional>
#include <vector>

#include "tbdx/tensor.hpp"

namespace tbdx {

/// Central-difference gradient check. For every entry of every parameter
/// tensor, the loss is re-evaluated at theta +/- step and the numeric slope
/// (f(+) - f(-)) / 2 step is compared against the analytic gradient; each
/// entry is scored by its best step from {epsilon, 10 epsilon, 100 epsilon,
/// 1000 epsilon}, since truncation error and cancellation noise pull in
/// opposite directions. Returns the max over entries of |analytic - numeric| /
/// max(|analytic|, |numeric|, 1e-8). Parameters are restored on exit.
double gradcheck(const std::function<double()>& loss,
                 const std::vector<Tensord*>& params,
                 const std::vector<const Tensord*>& analytic,
                 double epsilon = 1e-6);

/// Same check over a seeded sample of at most max_per_tensor entries from
/// each tensor (every entry when the tensor is small enough). Two loss
/// evaluations per entry make exhaustive checks of whole networks costly;
/// sampling keeps end-to-end checks affordable while the per-layer checks
/// stay exhaustive.
double gradcheck_sampled(const std::function<double()>& loss,
                         const std::vector<Tensord*>& params,
                         const std::vector<const Tensord*>& analytic,
                         Eigen::Index max_per_tensor, std::uint64_t seed,
                         double epsilon = 1e-6);

}  // namespace tbdx
