#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tbdx {

/// Binary confusion counts; class 1 (TB) is the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truths);

/// The survey row: every ratio in [0,1]. A metric whose denominator is zero
/// is reported as 0 and its name listed in `degenerate`. AUC is ranking-based
/// rather than count-based, so it is attached separately when scores exist.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double npv = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
  std::vector<std::string> degenerate;
};

MetricsReport metrics(const ConfusionMatrix& cm);

/// Mann-Whitney AUC with midrank tie handling:
/// (#pairs pos>neg + 0.5 * #pairs pos=neg) / (P*N). Needs both classes.
double auc(const std::vector<double>& scores, const std::vector<int>& truths);

/// ROC polyline, one vertex per unique threshold taken in descending order,
/// from (0,0) to (1,1). Its trapezoidal area equals auc().
std::vector<std::pair<double, double>> roc_points(const std::vector<double>& scores,
                                                  const std::vector<int>& truths);

/// Partition of sample indices into k folds with per-fold class counts
/// within one of perfect balance.
struct FoldAssignment {
  std::vector<int> fold;  // fold index per sample, in [0, k)
  int k = 0;
};

/// Seeded shuffle within each class, then round-robin dealing; the dealing
/// cursor carries over between classes so fold sizes stay within one of
/// each other overall, not just per class.
FoldAssignment stratified_kfold(const std::vector<int>& truths, int k, std::uint64_t seed);

std::vector<std::size_t> fold_members(const FoldAssignment& fa, int fold);
std::vector<std::size_t> fold_complement(const FoldAssignment& fa, int fold);

/// Trains on the k-1 retained folds and scores the held-out one; returns
/// (predicted label, positive-class score) per test index, in test order.
/// The fold index is passed so the runner can derive a per-fold seed.
struct ScoredLabel {
  int label = 0;
  double score = 0.0;
};

using FoldRunner = std::function<std::vector<ScoredLabel>(
    const std::vector<std::size_t>& train, const std::vector<std::size_t>& test, int fold)>;

struct CrossValResult {
  MetricsReport pooled;
  ConfusionMatrix pooled_confusion;
  std::vector<MetricsReport> per_fold;
  std::vector<ConfusionMatrix> per_fold_confusion;
  FoldAssignment assignment;
  std::vector<int> predictions;    // dataset order; each sample predicted once
  std::vector<double> scores;      // dataset order
};

/// k-fold protocol around an arbitrary learner. Pooled metrics come from the
/// union of held-out predictions; AUC from the pooled (score, truth) pairs.
CrossValResult cross_validate(const std::vector<int>& truths, int k, std::uint64_t seed,
                              const FoldRunner& runner);

}  // namespace tbdx
