#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "json.hpp"
#include "kashf/forest.hpp"
#include "oracles.hpp"

using namespace kashf;

namespace {

FeatureMatrix matrix(std::size_t width) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < width; ++i) names.push_back("t" + std::to_string(i));
  return FeatureMatrix(names);
}

// Label determined by one feature; the others are random.
FeatureMatrix planted(std::size_t width, std::size_t informative, std::size_t rows, std::uint64_t seed) {
  FeatureMatrix m = matrix(width);
  Rng rng(seed);
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint64_t bits = 0;
    for (std::size_t f = 0; f < width; ++f) {
      if (rng.bernoulli(0.5)) bits |= std::uint64_t{1} << f;
    }
    m.add_row(bits, ((bits >> informative) & 1U) ? BidClass::High : BidClass::Low);
  }
  return m;
}

std::vector<oracle::Row> random_rows(Rng& rng, std::size_t n, std::size_t width) {
  std::vector<oracle::Row> rows(n);
  for (auto& r : rows) {
    r.x.resize(width);
    for (std::size_t f = 0; f < width; ++f) r.x[f] = rng.bernoulli(0.5);
    r.y = static_cast<int>(rng.below(3));
  }
  return rows;
}

}  // namespace

TEST_CASE("entropy") {
  CHECK(entropy({10, 0, 0}) == 0.0);
  CHECK(entropy({5, 5, 0}) == doctest::Approx(1.0));
  CHECK(entropy({4, 4, 4}) == doctest::Approx(std::log2(3.0)));
  CHECK_THROWS_AS(entropy({0, 0, 0}), Error);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    ClassCounts c{rng.below(50), rng.below(50), rng.below(50) + 1};
    const double h = entropy(c);
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(3.0) + 1e-12);
  }
}

TEST_CASE("information gain") {
  FeatureMatrix m = matrix(2);
  m.add_row(0b01, BidClass::Low);
  m.add_row(0b01, BidClass::Low);
  m.add_row(0b00, BidClass::High);
  m.add_row(0b00, BidClass::Medium);
  CHECK(information_gain(m, 0) == doctest::Approx(1.0));  // 1.5 - 0.5
  CHECK(information_gain(m, 1) == 0.0);

  FeatureMatrix perfect = matrix(1);
  perfect.add_row(0b1, BidClass::High);
  perfect.add_row(0b0, BidClass::Low);
  perfect.add_row(0b1, BidClass::High);
  CHECK(information_gain(perfect, 0) == doctest::Approx(entropy({1, 0, 2})));
  CHECK_THROWS_AS(information_gain(matrix(2), 0), Error);

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    auto rows = random_rows(rng, 1 + rng.below(30), 3);
    const auto mm = oracle::to_matrix(rows, 3);
    for (std::size_t f = 0; f < 3; ++f) {
      const double g = information_gain(mm, f);
      CHECK(g == doctest::Approx(oracle::gain_rows(rows, f)).epsilon(1e-9));
      CHECK(g >= 0.0);
      CHECK(g <= oracle::entropy_rows(rows) + 1e-12);
    }
  }
}

TEST_CASE("feature matrix bookkeeping") {
  FeatureMatrix m = matrix(3);
  m.add_row(std::vector<bool>{true, false, true}, BidClass::Medium);
  m.add_row(0b010, BidClass::Low);
  CHECK(m.bits(0) == 0b101);
  CHECK(m.feature(0, 2));
  CHECK_FALSE(m.feature(1, 0));
  CHECK(m.class_counts() == std::array<std::size_t, 3>{1, 1, 0});
  CHECK(m.distinct_labels() == 2);
  CHECK_THROWS_AS(m.add_row(0b1000, BidClass::Low), Error);
  CHECK_THROWS_AS(m.add_row(std::vector<bool>{true}, BidClass::Low), Error);
  std::vector<std::size_t> pick{1};
  CHECK(m.subset(pick).size() == 1);
  CHECK(m.subset(pick).bits(0) == 0b010);
}

TEST_CASE("tree splits on the single informative feature") {
  const FeatureMatrix m = planted(6, 3, 200, 1);
  Rng rng(1);
  TreeParams p;
  p.features_per_split = 0;
  const DecisionTree t = fit_tree(m, p, rng);
  CHECK(t.root().feature == 3);
  CHECK(t.depth() == 1);
  CHECK(t.predict(0b001000) == BidClass::High);
  CHECK(t.predict(0b110111) == BidClass::Low);
}

TEST_CASE("pure input gives a single leaf") {
  FeatureMatrix m = matrix(3);
  for (int i = 0; i < 10; ++i) m.add_row(static_cast<std::uint64_t>(i % 8), BidClass::Medium);
  Rng rng(1);
  const DecisionTree t = fit_tree(m, {}, rng);
  CHECK(t.nodes().size() == 1);
  CHECK(t.root().is_leaf());
  CHECK(t.root().distribution[1] == 1.0);
  CHECK_THROWS_AS(fit_tree(matrix(3), {}, rng), Error);
}

TEST_CASE("tree structure invariants") {
  Rng gen(8);
  for (int i = 0; i < 50; ++i) {
    auto rows = random_rows(gen, 40, 6);
    const auto m = oracle::to_matrix(rows, 6);
    TreeParams p;
    p.max_depth = 1 + gen.below(5);
    p.features_per_split = 1 + gen.below(6);
    Rng rng(i);
    const auto t = fit_tree(m, p, rng);
    CHECK(t.depth() <= p.max_depth);
    for (const auto& n : t.nodes()) {
      const double s = n.distribution[0] + n.distribution[1] + n.distribution[2];
      CHECK(s == doctest::Approx(1.0));
      if (!n.is_leaf()) CHECK(n.gain > 0.0);
    }
  }
}

TEST_CASE("tree matches the exhaustive greedy oracle") {
  Rng gen(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t width = 1 + gen.below(4);
    auto rows = random_rows(gen, 1 + gen.below(16), width);
    const auto m = oracle::to_matrix(rows, width);
    TreeParams p;
    p.features_per_split = 0;
    p.max_depth = 1 + gen.below(6);
    p.min_samples_split = 2 + gen.below(3);
    Rng rng(trial);
    const auto t = fit_tree(m, p, rng);
    const auto o = oracle::greedy_tree(rows, width, p.max_depth, p.min_samples_split);
    CHECK(oracle::same_tree(t, 0, *o));
  }
}

TEST_CASE("weighted tree equals tree over duplicated rows") {
  Rng gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto rows = random_rows(gen, 12, 4);
    const auto m = oracle::to_matrix(rows, 4);
    std::vector<std::uint32_t> w(rows.size());
    std::vector<oracle::Row> expanded;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w[i] = static_cast<std::uint32_t>(gen.below(3));
      for (std::uint32_t k = 0; k < w[i]; ++k) expanded.push_back(rows[i]);
    }
    if (expanded.empty()) continue;
    TreeParams p;
    p.features_per_split = 0;
    Rng r1(1), r2(1);
    CHECK(fit_tree_weighted(m, w, p, r1) == fit_tree(oracle::to_matrix(expanded, 4), p, r2));
  }
}

TEST_CASE("degenerate forest equals a single tree") {
  const FeatureMatrix m = planted(5, 2, 100, 3);
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.tree.features_per_split = 0;
  const auto f = fit_forest(m, fp, 9);
  Rng rng(derive_seed(9, 0));
  CHECK(f.trees.front() == fit_tree(m, fp.tree, rng));
}

TEST_CASE("planted signal dominates importance") {
  const FeatureMatrix m = planted(20, 7, 1000, 2);
  ForestParams fp;
  fp.n_trees = 50;
  const auto f = fit_forest(m, fp, 1);
  CHECK(f.importance[7] > 0.5);
  CHECK(std::max_element(f.importance.begin(), f.importance.end()) - f.importance.begin() == 7);
  const double total = std::accumulate(f.importance.begin(), f.importance.end(), 0.0);
  CHECK(total == doctest::Approx(1.0));
  for (double v : f.importance) CHECK(v >= 0.0);
}

TEST_CASE("forest importance is the normalized sum of tree contributions") {
  const FeatureMatrix m = planted(6, 1, 300, 4);
  ForestParams fp;
  fp.n_trees = 10;
  const auto f = fit_forest(m, fp, 5);
  std::vector<double> raw(6, 0.0);
  for (const auto& t : f.trees) {
    // recompute from node fields directly
    const double root = static_cast<double>(t.root().samples);
    for (const auto& n : t.nodes()) {
      if (!n.is_leaf()) raw[static_cast<std::size_t>(n.feature)] += static_cast<double>(n.samples) / root * n.gain;
    }
  }
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  for (std::size_t i = 0; i < 6; ++i) CHECK(f.importance[i] == doctest::Approx(raw[i] / total));
}

TEST_CASE("forest is deterministic per seed and independent of workers") {
  const FeatureMatrix m = planted(8, 4, 300, 6);
  ForestParams a;
  a.n_trees = 20;
  a.workers = 1;
  ForestParams b = a;
  b.workers = 4;
  const auto fa = fit_forest(m, a, 77);
  const auto fb = fit_forest(m, b, 77);
  CHECK(fa.importance == fb.importance);
  CHECK(fa.trees == fb.trees);
  CHECK(fit_forest(m, a, 78).importance != fa.importance);
}

TEST_CASE("single-class training is rejected") {
  FeatureMatrix m = matrix(2);
  m.add_row(0b01, BidClass::Low);
  m.add_row(0b10, BidClass::Low);
  try {
    fit_forest(m, {}, 1);
    FAIL("expected single_class");
  } catch (const Error& e) {
    CHECK(e.code() == "single_class");
  }
}

TEST_CASE("vote ties go to the most frequent training class") {
  RandomForest f;
  f.preference = {BidClass::Medium, BidClass::Low, BidClass::High};
  FeatureMatrix low = matrix(1), high = matrix(1);
  low.add_row(0, BidClass::Low);
  high.add_row(0, BidClass::High);
  Rng rng(1);
  f.trees = {fit_tree(low, {}, rng), fit_tree(high, {}, rng)};
  CHECK(f.predict(0) == BidClass::Low);
  f.preference = {BidClass::High, BidClass::Medium, BidClass::Low};
  CHECK(f.predict(0) == BidClass::High);
}

TEST_CASE("cross-validation on a learnable concept") {
  const FeatureMatrix m = planted(10, 4, 400, 7);
  ForestParams fp;
  fp.n_trees = 20;
  const auto cv = cross_validate(m, 10, fp, 3);
  CHECK(cv.accuracy == 1.0);
  CHECK(cv.folds == 10);
  CHECK(cv.recall[0] == 1.0);
  CHECK_FALSE(cv.recall[1]);
}

TEST_CASE("cross-validation at chance on random labels") {
  FeatureMatrix m = matrix(20);
  Rng rng(11);
  for (int i = 0; i < 3000; ++i) m.add_row(rng.below(std::uint64_t{1} << 20), static_cast<BidClass>(i % 3));
  ForestParams fp;
  fp.n_trees = 20;
  const auto cv = cross_validate(m, 10, fp, 5);
  CHECK(cv.accuracy == doctest::Approx(1.0 / 3.0).epsilon(0.09));  // +-0.03 absolute
}

TEST_CASE("cross-validation argument checks") {
  const FeatureMatrix m = planted(3, 0, 5, 1);
  CHECK_THROWS_AS(cross_validate(m, 6, {}, 1), Error);
  CHECK_THROWS_AS(cross_validate(m, 1, {}, 1), Error);
}

TEST_CASE("stratified folds balance each class") {
  FeatureMatrix m = matrix(4);
  Rng rng(2);
  for (int i = 0; i < 95; ++i) m.add_row(rng.below(16), i < 60 ? BidClass::Low : (i < 90 ? BidClass::Medium : BidClass::High));
  const auto folds = stratified_folds(m, 10, 1);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<int> per(10, 0);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (static_cast<std::size_t>(m.label(r)) == c) ++per[folds[r]];
    }
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
}

TEST_CASE("row order does not change cross-validation") {
  FeatureMatrix m = matrix(6);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto bits = rng.below(64);
    m.add_row(bits, (bits & 1U) && rng.bernoulli(0.8) ? BidClass::High : static_cast<BidClass>(rng.below(2)));
  }
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng shuffle(4);
  shuffle.shuffle(perm);
  const FeatureMatrix shuffled = m.subset(perm);
  ForestParams fp;
  fp.n_trees = 10;
  const auto a = cross_validate(m, 5, fp, 21);
  const auto b = cross_validate(shuffled, 5, fp, 21);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion == b.confusion);
}

TEST_CASE("forest serializes to json and csv") {
  const FeatureMatrix m = planted(3, 1, 50, 2);
  ForestParams fp;
  fp.n_trees = 2;
  const auto f = fit_forest(m, fp, 1);
  const auto j = nlohmann::json::parse(forest_to_json(f));
  CHECK(j["trees"].size() == 2);
  CHECK(j["trees"][0]["feature"] == "t1");
  CHECK(j["importance"].size() == 3);
  const std::string csv = importance_csv(f);
  CHECK(csv.rfind("feature,importance\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("forest does not depend on row order") {
  FeatureMatrix m = matrix(6);
  Rng rng(13);
  for (int i = 0; i < 150; ++i) {
    const auto bits = rng.below(64);
    m.add_row(bits, (bits & 2U) && rng.bernoulli(0.7) ? BidClass::High : static_cast<BidClass>(rng.below(2)));
  }
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  ForestParams fp;
  fp.n_trees = 15;
  const auto a = fit_forest(m, fp, 4);
  const auto b = fit_forest(m.subset(perm), fp, 4);
  CHECK(a.importance == b.importance);
  CHECK(a.trees == b.trees);
}
