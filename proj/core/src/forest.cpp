#include "kashf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "kashf/concurrency.hpp"

namespace kashf {

namespace {

constexpr double kGainEpsilon = 1e-12;

double entropy_of(const ClassCounts& c, std::uint64_t total) {
  double h = 0.0;
  for (std::uint64_t n : c) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

std::uint64_t sum(const ClassCounts& c) { return c[0] + c[1] + c[2]; }

std::array<BidClass, kBidClassCount> preference_from(const ClassCounts& c) {
  std::array<BidClass, kBidClassCount> order{BidClass::Low, BidClass::Medium, BidClass::High};
  std::stable_sort(order.begin(), order.end(), [&](BidClass a, BidClass b) {
    return c[static_cast<std::size_t>(a)] > c[static_cast<std::size_t>(b)];
  });
  return order;
}

template <typename Scores>
BidClass argmax_with_preference(const Scores& score, const std::array<BidClass, kBidClassCount>& pref) {
  BidClass best = pref[0];
  for (BidClass c : pref) {
    if (score[static_cast<std::size_t>(c)] > score[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names) : names_(std::move(feature_names)) {
  if (names_.size() > kMaxFeatures) throw Error("invalid_argument", "at most 64 features are supported");
}

void FeatureMatrix::add_row(std::uint64_t bits, BidClass label) {
  if (width() < kMaxFeatures && (bits >> width()) != 0) {
    throw Error("invalid_argument", "row sets a bit beyond the feature width");
  }
  bits_.push_back(bits);
  labels_.push_back(label);
}

void FeatureMatrix::add_row(const std::vector<bool>& features, BidClass label) {
  if (features.size() != width()) throw Error("invalid_argument", "row width mismatch");
  std::uint64_t bits = 0;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f]) bits |= std::uint64_t{1} << f;
  }
  add_row(bits, label);
}

std::array<std::size_t, kBidClassCount> FeatureMatrix::class_counts() const {
  std::array<std::size_t, kBidClassCount> c{};
  for (BidClass l : labels_) ++c[static_cast<std::size_t>(l)];
  return c;
}

std::size_t FeatureMatrix::distinct_labels() const {
  auto c = class_counts();
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](std::size_t n) { return n > 0; }));
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
  FeatureMatrix out(names_);
  out.bits_.reserve(rows.size());
  out.labels_.reserve(rows.size());
  for (std::size_t r : rows) {
    out.bits_.push_back(bits_.at(r));
    out.labels_.push_back(labels_.at(r));
  }
  return out;
}

double entropy(const ClassCounts& counts) {
  const std::uint64_t total = sum(counts);
  if (total == 0) throw Error("invalid_argument", "entropy of an empty distribution");
  return entropy_of(counts, total);
}

double information_gain(const FeatureMatrix& m, std::size_t feature) {
  if (m.empty()) throw Error("invalid_argument", "information gain over no rows");
  if (feature >= m.width()) throw Error("invalid_argument", "feature index out of range");
  ClassCounts all{}, on{};
  for (std::size_t r = 0; r < m.size(); ++r) {
    const auto c = static_cast<std::size_t>(m.label(r));
    ++all[c];
    if (m.feature(r, feature)) ++on[c];
  }
  ClassCounts off{all[0] - on[0], all[1] - on[1], all[2] - on[2]};
  const std::uint64_t n = sum(all), n_on = sum(on), n_off = sum(off);
  double gain = entropy_of(all, n);
  if (n_on) gain -= static_cast<double>(n_on) / static_cast<double>(n) * entropy_of(on, n_on);
  if (n_off) gain -= static_cast<double>(n_off) / static_cast<double>(n) * entropy_of(off, n_off);
  return std::max(0.0, gain);
}

BidClass DecisionTree::predict(std::uint64_t bits) const {
  std::uint32_t i = 0;
  while (!nodes_[i].is_leaf()) {
    i = ((bits >> nodes_[i].feature) & 1U) ? nodes_[i].right : nodes_[i].left;
  }
  return argmax_with_preference(nodes_[i].distribution, preference_);
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

std::vector<double> DecisionTree::raw_importance(std::size_t width) const {
  std::vector<double> imp(width, 0.0);
  const double root_samples = static_cast<double>(root().samples);
  for (const TreeNode& n : nodes_) {
    if (!n.is_leaf()) imp.at(static_cast<std::size_t>(n.feature)) += static_cast<double>(n.samples) / root_samples * n.gain;
  }
  return imp;
}

// Rows with identical (bits, label) are merged into one weighted group so
// that bootstrap duplicates cost nothing extra.
class TreeBuilder {
 public:
  struct Group {
    std::uint64_t bits;
    std::uint8_t label;
    std::uint64_t weight;
  };

  TreeBuilder(const FeatureMatrix& m, std::span<const std::uint32_t> weights, const TreeParams& params, Rng& rng)
      : width_(m.width()), params_(params), rng_(rng) {
    groups_.reserve(m.size());
    for (std::size_t r = 0; r < m.size(); ++r) {
      const std::uint64_t w = weights.empty() ? 1 : weights[r];
      if (w) groups_.push_back({m.bits(r), static_cast<std::uint8_t>(m.label(r)), w});
    }
    std::sort(groups_.begin(), groups_.end(), [](const Group& a, const Group& b) {
      return a.bits != b.bits ? a.bits < b.bits : a.label < b.label;
    });
    std::size_t out = 0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (out && groups_[out - 1].bits == groups_[i].bits && groups_[out - 1].label == groups_[i].label) {
        groups_[out - 1].weight += groups_[i].weight;
      } else {
        groups_[out++] = groups_[i];
      }
    }
    groups_.resize(out);
  }

  DecisionTree build() {
    if (groups_.empty()) throw Error("invalid_argument", "cannot fit a tree on no rows");
    std::vector<std::uint32_t> idx(groups_.size());
    std::iota(idx.begin(), idx.end(), 0U);
    ClassCounts total{};
    for (const Group& g : groups_) total[g.label] += g.weight;
    tree_.preference_ = preference_from(total);
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::uint32_t>& idx, std::size_t depth) {
    ClassCounts counts{};
    for (std::uint32_t i : idx) counts[groups_[i].label] += groups_[i].weight;
    const std::uint64_t n = sum(counts);

    const auto node_id = static_cast<std::uint32_t>(tree_.nodes_.size());
    tree_.nodes_.emplace_back();
    {
      TreeNode& node = tree_.nodes_.back();
      node.samples = n;
      for (std::size_t c = 0; c < kBidClassCount; ++c) {
        node.distribution[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
      }
    }
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::uint64_t x) { return x > 0; }) <= 1;
    if (pure || depth >= params_.max_depth || n < params_.min_samples_split || width_ == 0) return node_id;

    const double parent = entropy_of(counts, n);
    int best_feature = -1;
    double best_gain = 0.0;
    for (std::size_t f : candidates()) {
      ClassCounts on{};
      for (std::uint32_t i : idx) {
        if ((groups_[i].bits >> f) & 1U) on[groups_[i].label] += groups_[i].weight;
      }
      ClassCounts off{counts[0] - on[0], counts[1] - on[1], counts[2] - on[2]};
      const std::uint64_t n_on = sum(on), n_off = n - n_on;
      if (n_on == 0 || n_off == 0) continue;
      const double gain = parent - static_cast<double>(n_on) / static_cast<double>(n) * entropy_of(on, n_on) -
                          static_cast<double>(n_off) / static_cast<double>(n) * entropy_of(off, n_off);
      if (gain > best_gain + kGainEpsilon) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::uint32_t> off_idx, on_idx;
    for (std::uint32_t i : idx) {
      ((groups_[i].bits >> best_feature) & 1U ? on_idx : off_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const std::uint32_t left = grow(off_idx, depth + 1);
    const std::uint32_t right = grow(on_idx, depth + 1);
    TreeNode& node = tree_.nodes_[node_id];
    node.feature = best_feature;
    node.gain = best_gain;
    node.left = left;
    node.right = right;
    return node_id;
  }

  std::vector<std::size_t> candidates() {
    const std::size_t k = params_.features_per_split;
    std::vector<std::size_t> out;
    if (k == 0 || k >= width_) {
      out.resize(width_);
      std::iota(out.begin(), out.end(), std::size_t{0});
      return out;
    }
    out = rng_.sample_without_replacement(width_, k);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t width_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<Group> groups_;
  DecisionTree tree_;
};

DecisionTree fit_tree(const FeatureMatrix& m, const TreeParams& params, Rng& rng) {
  return TreeBuilder(m, {}, params, rng).build();
}

DecisionTree fit_tree_weighted(const FeatureMatrix& m, std::span<const std::uint32_t> weights,
                               const TreeParams& params, Rng& rng) {
  if (weights.size() != m.size()) throw Error("invalid_argument", "one weight per row is required");
  return TreeBuilder(m, weights, params, rng).build();
}

BidClass RandomForest::predict(std::uint64_t bits) const {
  std::array<std::size_t, kBidClassCount> votes{};
  for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(bits))];
  return argmax_with_preference(votes, preference);
}

namespace {

RandomForest fit_forest_unchecked(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed) {
  if (m.empty()) throw Error("invalid_argument", "cannot fit a forest on no rows");
  if (params.n_trees == 0) throw Error("invalid_argument", "n_trees must be positive");

  RandomForest f;
  f.params = params;
  f.feature_names = m.feature_names();
  ClassCounts counts{};
  for (std::size_t r = 0; r < m.size(); ++r) ++counts[static_cast<std::size_t>(m.label(r))];
  f.preference = preference_from(counts);
  f.trees.resize(params.n_trees);

  // Bootstrap draws index a canonical row order so the forest does not
  // depend on the order rows were added.
  std::vector<std::size_t> canon(m.size());
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::stable_sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    if (m.label(a) != m.label(b)) return m.label(a) < m.label(b);
    return m.bits(a) < m.bits(b);
  });

  const std::size_t workers = params.workers ? params.workers : default_workers();
  parallel_for(params.n_trees, workers, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    if (params.bootstrap) {
      std::vector<std::uint32_t> weights(m.size(), 0);
      for (std::size_t i = 0; i < m.size(); ++i) ++weights[canon[rng.below(m.size())]];
      f.trees[t] = fit_tree_weighted(m, weights, params.tree, rng);
    } else {
      f.trees[t] = fit_tree(m, params.tree, rng);
    }
  });

  f.importance.assign(m.width(), 0.0);
  for (const auto& t : f.trees) {
    auto imp = t.raw_importance(m.width());
    for (std::size_t i = 0; i < imp.size(); ++i) f.importance[i] += imp[i];
  }
  const double total = std::accumulate(f.importance.begin(), f.importance.end(), 0.0);
  if (total > 0.0) {
    for (double& v : f.importance) v /= total;
  }
  return f;
}

}  // namespace

RandomForest fit_forest(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed) {
  if (m.distinct_labels() < 2) throw Error("single_class", "training labels contain a single class");
  return fit_forest_unchecked(m, params, seed);
}

namespace {

struct FoldPlan {
  std::vector<std::size_t> order;  // canonical order after the seeded shuffle
  std::vector<std::size_t> fold;   // indexed by row
};

FoldPlan plan_folds(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("invalid_argument", "cross-validation needs at least 2 folds");
  if (k > m.size()) throw Error("invalid_argument", "more folds than rows");

  FoldPlan plan;
  plan.order.resize(m.size());
  std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
  std::stable_sort(plan.order.begin(), plan.order.end(), [&](std::size_t a, std::size_t b) {
    if (m.label(a) != m.label(b)) return m.label(a) < m.label(b);
    return m.bits(a) < m.bits(b);
  });
  Rng rng(derive_seed(seed, fnv1a("folds")));
  rng.shuffle(plan.order);

  plan.fold.resize(m.size());
  std::size_t counter = 0;
  for (std::size_t c = 0; c < kBidClassCount; ++c) {
    for (std::size_t r : plan.order) {
      if (static_cast<std::size_t>(m.label(r)) == c) plan.fold[r] = counter++ % k;
    }
  }
  return plan;
}

}  // namespace

std::vector<std::size_t> stratified_folds(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  return plan_folds(m, k, seed).fold;
}

CrossValidation cross_validate(const FeatureMatrix& m, std::size_t k, const ForestParams& params,
                               std::uint64_t seed) {
  const FoldPlan plan = plan_folds(m, k, seed);
  CrossValidation cv;
  cv.folds = k;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t r : plan.order) (plan.fold[r] == f ? test : train).push_back(r);
    RandomForest forest = fit_forest_unchecked(m.subset(train), params, derive_seed(seed, f + 1));
    for (std::size_t r : test) {
      ++cv.confusion[static_cast<std::size_t>(m.label(r))][static_cast<std::size_t>(forest.predict(m.bits(r)))];
    }
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < kBidClassCount; ++c) {
    correct += cv.confusion[c][c];
    const std::size_t row = std::accumulate(cv.confusion[c].begin(), cv.confusion[c].end(), std::size_t{0});
    if (row) cv.recall[c] = static_cast<double>(cv.confusion[c][c]) / static_cast<double>(row);
  }
  cv.accuracy = static_cast<double>(correct) / static_cast<double>(m.size());
  return cv;
}

namespace {

nlohmann::ordered_json node_json(const RandomForest& f, const DecisionTree& t, std::uint32_t i) {
  const TreeNode& n = t.nodes()[i];
  nlohmann::ordered_json j;
  j["samples"] = n.samples;
  j["distribution"] = {{"Low", n.distribution[0]}, {"Medium", n.distribution[1]}, {"High", n.distribution[2]}};
  if (n.is_leaf()) return j;
  j["feature"] = f.feature_names.at(static_cast<std::size_t>(n.feature));
  j["feature_index"] = n.feature;
  j["gain"] = n.gain;
  j["absent"] = node_json(f, t, n.left);
  j["present"] = node_json(f, t, n.right);
  return j;
}

}  // namespace

std::string forest_to_json(const RandomForest& f) {
  nlohmann::ordered_json j;
  j["params"] = {{"n_trees", f.params.n_trees},
                 {"max_depth", f.params.tree.max_depth},
                 {"features_per_split", f.params.tree.features_per_split},
                 {"min_samples_split", f.params.tree.min_samples_split},
                 {"bootstrap", f.params.bootstrap}};
  j["features"] = f.feature_names;
  j["importance"] = f.importance;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : f.trees) trees.push_back(node_json(f, t, 0));
  j["trees"] = std::move(trees);
  return j.dump(1);
}

std::string importance_csv(const RandomForest& f) {
  std::ostringstream out;
  out.precision(10);
  out << "feature,importance\n";
  for (std::size_t i = 0; i < f.feature_names.size(); ++i) {
    out << f.feature_names[i] << ',' << f.importance.at(i) << '\n';
  }
  return out.str();
}

}  // namespace kashf
