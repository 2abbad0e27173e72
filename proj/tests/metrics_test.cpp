#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "support/oracles.hpp"
#include "tbdx/errors.hpp"
#include "tbdx/metrics.hpp"
#include "tbdx/rng.hpp"

using namespace tbdx;

TEST_SUITE("metrics") {

TEST_CASE("confusion counts the four cells") {
  const ConfusionMatrix perfect = confusion({1, 0, 1}, {1, 0, 1});
  CHECK(perfect.tp == 2);
  CHECK(perfect.tn == 1);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  const ConfusionMatrix mixed = confusion({1, 1, 0, 0}, {1, 0, 1, 0});
  CHECK(mixed.tp == 1);
  CHECK(mixed.fp == 1);
  CHECK(mixed.fn == 1);
  CHECK(mixed.tn == 1);

  const ConfusionMatrix blind = confusion({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1});
  CHECK(blind.fn == 5);
  CHECK(blind.tp + blind.tn + blind.fp == 0);

  CHECK_THROWS_AS(confusion({1, 0}, {1}), ArgumentError);
  CHECK_THROWS_AS(confusion({}, {}), ArgumentError);
  CHECK_THROWS_AS(confusion({2}, {1}), ArgumentError);
}

TEST_CASE("metrics reproduce the published screening row") {
  const MetricsReport m = metrics({326, 321, 5, 10});
  CHECK(m.accuracy == doctest::Approx(0.977341).epsilon(1e-6));
  CHECK(m.precision == doctest::Approx(0.984894).epsilon(1e-6));
  CHECK(m.recall == doctest::Approx(0.970238).epsilon(1e-6));
  CHECK(m.specificity == doctest::Approx(0.984663).epsilon(1e-6));
  CHECK(m.f1 == doctest::Approx(0.977510).epsilon(1e-6));
  CHECK(m.npv == doctest::Approx(321.0 / 331.0).epsilon(1e-12));
  CHECK(m.degenerate.empty());
  CHECK_FALSE(m.auc.has_value());
}

TEST_CASE("perfect and degenerate corners") {
  const MetricsReport perfect = metrics({7, 9, 0, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.specificity == 1.0);
  CHECK(perfect.npv == 1.0);
  CHECK(perfect.f1 == 1.0);

  // no predicted or actual positives: precision, recall, f1 all collapse
  const MetricsReport empty_pos = metrics({0, 4, 0, 4});
  CHECK(empty_pos.precision == 0.0);
  CHECK(empty_pos.recall == 0.0);
  CHECK(empty_pos.f1 == 0.0);
  CHECK(std::find(empty_pos.degenerate.begin(), empty_pos.degenerate.end(), "precision") !=
        empty_pos.degenerate.end());

  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), ArgumentError);
}

TEST_CASE("metrics agree with direct formulas on random counts") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConfusionMatrix cm{static_cast<std::int64_t>(rng.below(40)),
                             static_cast<std::int64_t>(rng.below(40)),
                             static_cast<std::int64_t>(rng.below(40)),
                             static_cast<std::int64_t>(rng.below(40))};
    if (cm.total() == 0) continue;
    const MetricsReport m = metrics(cm);
    const auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
    CHECK(m.accuracy == ratio(tp + tn, tp + tn + fp + fn));
    CHECK(m.precision == ratio(tp, tp + fp));
    CHECK(m.recall == ratio(tp, tp + fn));
    CHECK(m.specificity == ratio(tn, tn + fp));
    CHECK(m.npv == ratio(tn, tn + fn));
    if (m.precision + m.recall > 0.0) {
      CHECK(m.f1 == doctest::Approx(2.0 * m.precision * m.recall /
                                    (m.precision + m.recall)).epsilon(1e-12));
    } else {
      CHECK(m.f1 == 0.0);
    }
    for (double v : {m.accuracy, m.precision, m.recall, m.specificity, m.npv, m.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("auc handles separation, ties, and hand-counted pairs") {
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc({0.9, 0.4, 0.4, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(auc({0.5, 0.5, 0.5}, {1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(auc({0.5, 0.6}, {1, 1}), ArgumentError);
  CHECK_THROWS_AS(auc({0.5}, {0}), ArgumentError);
  CHECK_THROWS_AS(auc({0.5, 0.6}, {1}), ArgumentError);
}

TEST_CASE("auc equals the pairwise oracle on random instances") {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(49));
    std::vector<double> scores(n);
    std::vector<int> truths(n);
    truths[0] = 1;
    truths[1] = 0;  // both classes guaranteed
    for (int i = 0; i < n; ++i) {
      // quantized scores force ties regularly
      scores[i] = static_cast<double>(rng.below(8)) / 8.0;
      if (i >= 2) truths[i] = rng.below(2) ? 1 : 0;
    }
    const double got = auc(scores, truths);
    CHECK(got == oracle::auc_pairwise(scores, truths));

    // complement: negating tie-free scores flips the statistic
    std::vector<double> distinct(n);
    std::iota(distinct.begin(), distinct.end(), 0.0);
    Rng shuffle_rng(rng.bits());
    shuffle_rng.shuffle(distinct);
    std::vector<double> negated(n);
    for (int i = 0; i < n; ++i) negated[i] = -distinct[i];
    CHECK(auc(distinct, truths) + auc(negated, truths) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("roc polyline runs corner to corner") {
  const auto pts = roc_points({0.9, 0.1}, {1, 0});
  REQUIRE(pts.size() == 3);
  CHECK(pts[0] == std::pair{0.0, 0.0});
  CHECK(pts[1] == std::pair{0.0, 1.0});
  CHECK(pts[2] == std::pair{1.0, 1.0});

  const std::vector<double> scores{0.9, 0.4, 0.4, 0.1};
  const std::vector<int> truths{1, 1, 0, 0};
  CHECK(oracle::trapezoid_area(roc_points(scores, truths)) ==
        doctest::Approx(0.875).epsilon(1e-12));
  std::vector<double> reversed(scores);
  for (double& s : reversed) s = -s;
  CHECK(oracle::trapezoid_area(roc_points(reversed, truths)) ==
        doctest::Approx(0.125).epsilon(1e-12));

  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(30));
    std::vector<double> s(n);
    std::vector<int> t(n);
    t[0] = 1;
    t[1] = 0;
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6)) / 6.0;
      if (i >= 2) t[i] = rng.below(2) ? 1 : 0;
    }
    const auto p = roc_points(s, t);
    CHECK(p.front() == std::pair{0.0, 0.0});
    CHECK(p.back() == std::pair{1.0, 1.0});
    CHECK(oracle::trapezoid_area(p) == doctest::Approx(auc(s, t)).epsilon(1e-12));
  }
}

TEST_CASE("ten folds of the survey cohort have the forced sizes") {
  std::vector<int> truths(662, 0);
  std::fill(truths.begin(), truths.begin() + 336, 1);
  const FoldAssignment fa = stratified_kfold(truths, 10, 1234);
  REQUIRE(fa.k == 10);
  REQUIRE(fa.fold.size() == truths.size());
  for (int f = 0; f < 10; ++f) {
    int size = 0, positives = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      if (fa.fold[i] != f) continue;
      ++size;
      positives += truths[i];
    }
    CHECK((size == 66 || size == 67));
    CHECK((positives == 33 || positives == 34));
  }
}

TEST_CASE("fold assignment is a deterministic partition") {
  std::vector<int> truths;
  Rng rng(44);
  for (int i = 0; i < 57; ++i) truths.push_back(rng.below(2) ? 1 : 0);
  for (int i = 0; i < 5; ++i) truths.push_back(i % 2);  // both classes >= 5

  const FoldAssignment a = stratified_kfold(truths, 5, 99);
  const FoldAssignment b = stratified_kfold(truths, 5, 99);
  CHECK(a.fold == b.fold);

  std::vector<int> counts(5, 0);
  for (int f : a.fold) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++counts[f];
  }
  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  CHECK(total == static_cast<int>(truths.size()));
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);

  // fold_members / fold_complement split every index exactly once
  for (int f = 0; f < 5; ++f) {
    const auto members = fold_members(a, f);
    const auto rest = fold_complement(a, f);
    CHECK(members.size() + rest.size() == truths.size());
    std::set<std::size_t> all(members.begin(), members.end());
    all.insert(rest.begin(), rest.end());
    CHECK(all.size() == truths.size());
  }
}

TEST_CASE("different seeds shuffle differently") {
  std::vector<int> truths(60);
  for (std::size_t i = 0; i < truths.size(); ++i) truths[i] = static_cast<int>(i % 2);
  int distinct = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FoldAssignment a = stratified_kfold(truths, 6, seed);
    const FoldAssignment b = stratified_kfold(truths, 6, seed + 1000);
    if (a.fold != b.fold) ++distinct;
  }
  CHECK(distinct >= 99);  // collisions are astronomically unlikely
}

TEST_CASE("single fold swallows everything and small classes throw") {
  const std::vector<int> truths{1, 0, 1, 0, 1};
  const FoldAssignment fa = stratified_kfold(truths, 1, 5);
  for (int f : fa.fold) CHECK(f == 0);
  CHECK_THROWS_AS(stratified_kfold(truths, 3, 5), ArgumentError);  // only two 0s
  CHECK_THROWS_AS(stratified_kfold({1, 1, 1}, 2, 5), ArgumentError);
  CHECK_THROWS_AS(stratified_kfold(truths, 0, 5), ArgumentError);
}

TEST_CASE("cross validation pools a memorizing learner to perfection") {
  std::vector<int> truths(40);
  for (std::size_t i = 0; i < truths.size(); ++i) truths[i] = static_cast<int>(i % 2);

  std::vector<int> fold_seen;
  const FoldRunner runner = [&](const std::vector<std::size_t>& train,
                                const std::vector<std::size_t>& test, int fold) {
    fold_seen.push_back(fold);
    CHECK(train.size() + test.size() == truths.size());
    std::vector<ScoredLabel> out;
    for (std::size_t idx : test) {
      out.push_back({truths[idx], truths[idx] ? 0.9 : 0.1});
    }
    return out;
  };

  const CrossValResult r = cross_validate(truths, 4, 77, runner);
  CHECK(r.pooled.accuracy == 1.0);
  CHECK(r.pooled_confusion.total() == 40);
  CHECK(r.pooled.auc.has_value());
  CHECK(*r.pooled.auc == 1.0);
  REQUIRE(r.per_fold.size() == 4);
  REQUIRE(r.per_fold_confusion.size() == 4);
  for (const auto& cm : r.per_fold_confusion) CHECK(cm.total() == 10);
  for (const auto& rep : r.per_fold) CHECK(rep.accuracy == 1.0);
  CHECK(fold_seen == std::vector<int>{0, 1, 2, 3});
  REQUIRE(r.predictions.size() == truths.size());
  REQUIRE(r.scores.size() == truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    CHECK(r.predictions[i] == truths[i]);
    CHECK(r.scores[i] == (truths[i] ? 0.9 : 0.1));
  }
}

TEST_CASE("cross validation rejects a runner that drops predictions") {
  std::vector<int> truths(20);
  for (std::size_t i = 0; i < truths.size(); ++i) truths[i] = static_cast<int>(i % 2);
  const FoldRunner bad = [](const std::vector<std::size_t>&,
                            const std::vector<std::size_t>& test, int) {
    return std::vector<ScoredLabel>(test.size() - 1);
  };
  CHECK_THROWS_AS(cross_validate(truths, 2, 7, bad), ArgumentError);
}

}  // TEST_SUITE
