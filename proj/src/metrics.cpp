#include "tbdx/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "tbdx/errors.hpp"
#include "tbdx/rng.hpp"

namespace tbdx {
namespace {

void check_labels(const std::vector<int>& labels) {
  for (int label : labels) {
    if (label != 0 && label != 1) {
      throw ArgumentError("labels must be 0 or 1, got " + std::to_string(label));
    }
  }
}

struct ClassCounts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

ClassCounts count_classes(const std::vector<int>& truths) {
  ClassCounts counts;
  for (int t : truths) (t == 1 ? counts.pos : counts.neg) += 1;
  return counts;
}

void check_scorable(const std::vector<double>& scores, const std::vector<int>& truths) {
  if (scores.size() != truths.size()) throw ArgumentError("scores and truths differ in length");
  if (scores.empty()) throw ArgumentError("no samples to score");
  check_labels(truths);
  const ClassCounts counts = count_classes(truths);
  if (counts.pos == 0 || counts.neg == 0) {
    throw ArgumentError("ranking metrics need both classes present");
  }
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truths) {
  if (preds.size() != truths.size()) {
    throw ArgumentError("prediction and truth lists differ in length");
  }
  if (preds.empty()) throw ArgumentError("cannot build a confusion matrix from no samples");
  check_labels(preds);
  check_labels(truths);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] == 1) {
      (preds[i] == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (preds[i] == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.tn < 0 || cm.fp < 0 || cm.fn < 0 || cm.total() < 1) {
    throw ArgumentError("confusion counts must be nonnegative with at least one sample");
  }
  MetricsReport r;
  const auto ratio = [&r](std::int64_t num, std::int64_t den, const char* name) {
    if (den == 0) {
      r.degenerate.emplace_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
  r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
  r.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
  r.specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity");
  r.npv = ratio(cm.tn, cm.tn + cm.fn, "npv");
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1 = 0.0;
    r.degenerate.emplace_back("f1");
  }
  return r;
}

double auc(const std::vector<double>& scores, const std::vector<int>& truths) {
  check_scorable(scores, truths);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: every member of a tie group gets the group's average rank.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = static_cast<double>(i + j + 2) / 2.0;  // ranks are 1-based
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
    i = j + 1;
  }

  const ClassCounts counts = count_classes(truths);
  double pos_rank_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (truths[t] == 1) pos_rank_sum += rank[t];
  }
  const double p = static_cast<double>(counts.pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(counts.neg));
}

std::vector<std::pair<double, double>> roc_points(const std::vector<double>& scores,
                                                  const std::vector<int>& truths) {
  check_scorable(scores, truths);
  const ClassCounts counts = count_classes(truths);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::pair<double, double>> points{{0.0, 0.0}};
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) (truths[order[t]] == 1 ? tp : fp) += 1;
    points.emplace_back(static_cast<double>(fp) / static_cast<double>(counts.neg),
                        static_cast<double>(tp) / static_cast<double>(counts.pos));
    i = j + 1;
  }
  return points;
}

FoldAssignment stratified_kfold(const std::vector<int>& truths, int k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("fold count must be at least 1");
  if (truths.empty()) throw ArgumentError("cannot fold an empty label list");
  check_labels(truths);

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < truths.size(); ++i) {
    by_class[truths[i] == 1 ? 1 : 0].push_back(i);
  }
  for (int cls : {0, 1}) {
    if (by_class[cls].size() < static_cast<std::size_t>(k)) {
      throw ArgumentError("class " + std::to_string(cls) + " has fewer members than folds");
    }
  }

  Rng rng(seed);
  FoldAssignment fa;
  fa.k = k;
  fa.fold.assign(truths.size(), 0);
  std::size_t cursor = 0;  // shared across classes: keeps overall sizes even
  for (int cls : {0, 1}) {
    rng.shuffle(by_class[cls]);
    for (std::size_t idx : by_class[cls]) {
      fa.fold[idx] = static_cast<int>(cursor % static_cast<std::size_t>(k));
      ++cursor;
    }
  }
  return fa;
}

std::vector<std::size_t> fold_members(const FoldAssignment& fa, int fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fa.fold.size(); ++i) {
    if (fa.fold[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> fold_complement(const FoldAssignment& fa, int fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fa.fold.size(); ++i) {
    if (fa.fold[i] != fold) out.push_back(i);
  }
  return out;
}

CrossValResult cross_validate(const std::vector<int>& truths, int k, std::uint64_t seed,
                              const FoldRunner& runner) {
  CrossValResult result;
  result.assignment = stratified_kfold(truths, k, seed);
  result.predictions.assign(truths.size(), 0);
  result.scores.assign(truths.size(), 0.0);

  for (int fold = 0; fold < k; ++fold) {
    const std::vector<std::size_t> test = fold_members(result.assignment, fold);
    const std::vector<std::size_t> train = fold_complement(result.assignment, fold);
    const std::vector<ScoredLabel> outputs = runner(train, test, fold);
    if (outputs.size() != test.size()) {
      throw ArgumentError("fold runner returned " + std::to_string(outputs.size()) +
                          " outputs for " + std::to_string(test.size()) + " test samples");
    }
    std::vector<int> fold_preds, fold_truths;
    std::vector<double> fold_scores;
    for (std::size_t t = 0; t < test.size(); ++t) {
      result.predictions[test[t]] = outputs[t].label;
      result.scores[test[t]] = outputs[t].score;
      fold_preds.push_back(outputs[t].label);
      fold_truths.push_back(truths[test[t]]);
      fold_scores.push_back(outputs[t].score);
    }
    ConfusionMatrix cm = confusion(fold_preds, fold_truths);
    MetricsReport report = metrics(cm);
    const ClassCounts fold_counts = count_classes(fold_truths);
    if (fold_counts.pos > 0 && fold_counts.neg > 0) {
      report.auc = auc(fold_scores, fold_truths);
    }
    result.per_fold_confusion.push_back(cm);
    result.per_fold.push_back(std::move(report));
  }

  result.pooled_confusion = confusion(result.predictions, truths);
  result.pooled = metrics(result.pooled_confusion);
  const ClassCounts counts = count_classes(truths);
  if (counts.pos > 0 && counts.neg > 0) {
    result.pooled.auc = auc(result.scores, truths);
  }
  return result;
}

}  // namespace tbdx
