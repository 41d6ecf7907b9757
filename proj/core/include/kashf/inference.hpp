#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kashf/ecosystem.hpp"
#include "kashf/experiment.hpp"
#include "kashf/forest.hpp"
#include "kashf/syncdetect.hpp"

namespace kashf {

/// Class boundaries in micro-USD CPM.
struct ClassBoundaries {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation

  double mu_cpm() const noexcept { return mu / 1e6; }
  double sigma_cpm() const noexcept { return sigma / 1e6; }
};

/// Low below mu - sigma, High above mu + sigma, Medium in between (inclusive).
BidClass classify(Money bid, const ClassBoundaries& b) noexcept;

struct Discretization {
  std::vector<BidClass> classes;
  ClassBoundaries boundaries;
};

/// Classifies bids, computing mean and population deviation from the bids
/// themselves unless boundaries are supplied. Throws on empty input.
Discretization discretize(std::span<const Money> bids,
                          std::optional<ClassBoundaries> boundaries = std::nullopt);

struct FeatureOptions {
  bool include_zero_bids = true;
};

struct BidderMatrix {
  FeatureMatrix matrix;
  ClassBoundaries boundaries;
  std::vector<std::size_t> records;  // dataset record behind each row
};

/// One row per experiment: features are the trackers that observed the
/// persona during construction, the label is the bidder's discretized bid.
/// Throws Error("empty_dataset") or Error("bidder_not_found").
BidderMatrix build_feature_matrix(const Dataset& dataset, std::string_view bidder,
                                  const FeatureOptions& options = {});

struct InferenceParams {
  std::size_t top_k = 3;
  std::size_t folds = 10;
  ForestParams forest;
  FeatureOptions features;
  std::uint64_t seed = 0;
};

struct TrackerScore {
  std::string tracker;
  double importance = 0.0;
};

struct BidderInference {
  std::string bidder;
  std::vector<TrackerScore> ranking;  // every tracker, importance descending
  std::size_t rows = 0;
  std::array<std::size_t, kBidClassCount> class_counts{};
  ClassBoundaries boundaries;
  CrossValidation cv;
  /// Set when the bidder's labels form a single class; nothing was trained.
  bool insensitive = false;

  std::vector<TrackerScore> top(std::size_t k) const;
};

/// Trains the bidder's forest, ranks trackers by importance and runs
/// k-fold cross-validation. Throws Error("single_class") when the bidder's
/// labels form a single class.
BidderInference infer_relationships(const Dataset& dataset, std::string_view bidder,
                                    const InferenceParams& params);

struct InferenceReport {
  std::size_t top_k = 3;
  std::vector<BidderInference> bidders;
};

/// infer_relationships for every bidder (or the named subset). Single-class
/// bidders are kept and flagged `insensitive` instead of failing the run.
InferenceReport infer_all(const Dataset& dataset, const InferenceParams& params,
                          const std::vector<std::string>& only = {});

struct NamedEdge {
  std::string tracker;
  std::string bidder;
  Channel channel = Channel::ServerSide;
};

std::vector<NamedEdge> named_edges(const Scenario& scenario);

struct EdgeFlag {
  std::string bidder;
  std::size_t rank = 0;  // 1-based
  std::string tracker;
  double importance = 0.0;
  bool in_ground_truth = false;
  std::optional<Channel> channel;  // set when in ground truth
  bool detected_by_cookie_sync = false;
};

struct BidderMetrics {
  std::string bidder;
  std::size_t true_edges = 0;
  std::size_t hits = 0;
  double precision = 0.0;
};

struct EvaluationMetrics {
  std::size_t top_k = 3;
  double precision_at_k = 0.0;  // macro average over bidders
  std::optional<double> recall;  // empty when the graph has no edges
  std::size_t true_edges = 0;
  std::size_t recovered = 0;
  std::size_t recovered_client_side = 0;
  std::size_t recovered_server_side = 0;
  /// Recovered ServerSide edges that cookie-sync detection did not report.
  std::size_t server_side_recovered = 0;
  std::size_t sync_pairs = 0;
  std::size_t sync_pairs_client_side = 0;  // detected pairs that are ClientSide ground-truth edges
  std::vector<BidderMetrics> per_bidder;
  std::vector<EdgeFlag> flags;
};

EvaluationMetrics evaluate(const InferenceReport& report, std::span<const NamedEdge> graph,
                           const SyncPairs& sync_pairs);

std::string report_to_json(const InferenceReport& report);
InferenceReport report_from_json(const std::string& text);

/// bidder, accuracy, per-class recall, row and class counts.
std::string accuracy_csv(const InferenceReport& report);
/// bidder, tracker_1..tracker_k with importance.
std::string ranking_csv(const InferenceReport& report);
/// bidder, tracker_1..tracker_k and a flag column per tracker.
std::string influence_csv(const EvaluationMetrics& metrics);
std::string metrics_to_json(const EvaluationMetrics& metrics);
std::string sync_pairs_csv(const SyncPairs& pairs);

}  // namespace kashf
