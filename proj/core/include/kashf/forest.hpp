#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kashf/rng.hpp"
#include "kashf/types.hpp"

namespace kashf {

/// Binary features packed into a 64-bit mask per row (bit f = feature f).
class FeatureMatrix {
 public:
  static constexpr std::size_t kMaxFeatures = 64;

  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> feature_names);

  void add_row(std::uint64_t bits, BidClass label);
  void add_row(const std::vector<bool>& features, BidClass label);

  std::size_t width() const noexcept { return names_.size(); }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  std::uint64_t bits(std::size_t row) const { return bits_[row]; }
  BidClass label(std::size_t row) const { return labels_[row]; }
  bool feature(std::size_t row, std::size_t f) const { return (bits_[row] >> f) & 1U; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  std::array<std::size_t, kBidClassCount> class_counts() const;
  std::size_t distinct_labels() const;
  /// Rows at the given indices, same feature names.
  FeatureMatrix subset(std::span<const std::size_t> rows) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> bits_;
  std::vector<BidClass> labels_;
};

using ClassCounts = std::array<std::uint64_t, kBidClassCount>;

/// Shannon entropy in bits. Throws Error("invalid_argument") on an empty count.
double entropy(const ClassCounts& counts);

/// Parent entropy minus the size-weighted entropies of the feature's
/// false/true partitions. Throws on an empty matrix.
double information_gain(const FeatureMatrix& m, std::size_t feature);

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t features_per_split = 5;  // 0 or >= width: consider every feature
  std::size_t min_samples_split = 2;
};

struct ForestParams {
  std::size_t n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  std::size_t workers = 0;  // 0 -> default_workers()
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double gain = 0.0;
  std::uint32_t left = 0;   // feature false
  std::uint32_t right = 0;  // feature true
  std::uint64_t samples = 0;
  std::array<double, kBidClassCount> distribution{};

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  /// Nodes in depth-first order; index 0 is the root.
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  BidClass predict(std::uint64_t bits) const;
  std::size_t depth() const;
  /// Per-feature sum of (node sample fraction x gain); not normalized.
  std::vector<double> raw_importance(std::size_t width) const;

  bool operator==(const DecisionTree&) const = default;

 private:
  friend class TreeBuilder;
  std::vector<TreeNode> nodes_;
  std::array<BidClass, kBidClassCount> preference_{BidClass::Low, BidClass::Medium, BidClass::High};
};

/// Greedy entropy tree over every row of `m`. At each node a random subset of
/// features_per_split features is drawn without replacement from `rng`
/// (nothing is drawn when every feature is considered); the split with the
/// largest gain wins, ties going to the lowest feature index. Growth stops on
/// purity, zero gain, max_depth or fewer than min_samples_split rows.
DecisionTree fit_tree(const FeatureMatrix& m, const TreeParams& params, Rng& rng);

/// As fit_tree, with integer per-row multiplicities (bootstrap counts).
DecisionTree fit_tree_weighted(const FeatureMatrix& m, std::span<const std::uint32_t> weights,
                               const TreeParams& params, Rng& rng);

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::vector<std::string> feature_names;
  std::vector<double> importance;  // sums to 1 when any split exists
  /// Vote tie-break order: most frequent training class first.
  std::array<BidClass, kBidClassCount> preference{BidClass::Low, BidClass::Medium, BidClass::High};

  BidClass predict(std::uint64_t bits) const;
};

/// Tree i uses Rng(derive_seed(seed, i)) for its bootstrap sample and then its
/// feature subsets. Bootstrap indices refer to rows sorted by (label, bits),
/// so the forest is independent of input row order. Throws
/// Error("single_class") when fewer than two labels.
RandomForest fit_forest(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed);

struct CrossValidation {
  std::size_t folds = 0;
  double accuracy = 0.0;
  std::array<std::optional<double>, kBidClassCount> recall;  // empty for absent classes
  std::array<std::array<std::size_t, kBidClassCount>, kBidClassCount> confusion{};  // [truth][predicted]
};

/// Stratified k-fold accuracy. Rows are put in a canonical order and then
/// shuffled with the seed, so the result does not depend on input row order.
/// Throws Error("invalid_argument") when k < 2 or k > rows.
CrossValidation cross_validate(const FeatureMatrix& m, std::size_t k, const ForestParams& params,
                               std::uint64_t seed);

/// Fold assignment used by cross_validate, indexed like the matrix rows.
std::vector<std::size_t> stratified_folds(const FeatureMatrix& m, std::size_t k, std::uint64_t seed);

std::string forest_to_json(const RandomForest& forest);
std::string importance_csv(const RandomForest& forest);

}  // namespace kashf
