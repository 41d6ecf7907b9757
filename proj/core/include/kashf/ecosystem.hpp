#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kashf/rng.hpp"
#include "kashf/types.hpp"

namespace kashf {

struct Organization {
  OrgId id = 0;
  std::string name;
  std::string domain;
  bool tracker = false;
  bool bidder = false;

  bool operator==(const Organization&) const = default;
};

struct Site {
  std::string domain;
  Category category = Category::Control;
  std::vector<OrgId> trackers_present;  // sorted ascending
  bool hb_enabled = false;

  bool operator==(const Site&) const = default;
};

/// Ground-truth tracker -> bidder information flow.
struct SharingEdge {
  OrgId tracker = 0;
  OrgId bidder = 0;
  Channel channel = Channel::ServerSide;
  double strength = 1.0;  // fraction of tracker knowledge forwarded, in (0, 1]

  bool operator==(const SharingEdge&) const = default;
};

/// One site visit seen by a tracker.
struct Visit {
  std::uint32_t site = 0;
  Category category = Category::Control;

  auto operator<=>(const Visit&) const = default;
};

/// What an organization knows about a persona: the set of site visits it
/// observed. The intent flag is any visit to an intent site.
class ObservationSet {
 public:
  ObservationSet() = default;
  ObservationSet(std::initializer_list<Visit> visits) : visits_(visits) {}

  void insert(Visit v) { visits_.insert(v); }
  void merge(const ObservationSet& other) { visits_.insert(other.visits_.begin(), other.visits_.end()); }

  bool empty() const noexcept { return visits_.empty(); }
  std::size_t size() const noexcept { return visits_.size(); }
  bool contains(Visit v) const { return visits_.contains(v); }
  bool has_intent() const;
  std::size_t visits_in(Category c) const;

  /// Persona category with the most observed visits; ties go to the
  /// alphabetically first category. Empty when no persona-category visit
  /// was observed.
  std::optional<Category> dominant_category() const;

  /// True when every visit here is also in `other`.
  bool subset_of(const ObservationSet& other) const;

  const std::set<Visit>& visits() const noexcept { return visits_; }

  bool operator==(const ObservationSet&) const = default;

 private:
  std::set<Visit> visits_;
};

using Observations = std::map<OrgId, ObservationSet>;

struct BidderProfile {
  OrgId org = 0;
  Money base_cpm;
  std::map<Category, double> category_affinity;  // missing categories -> 1.0
  std::map<Category, double> intent_multiplier;  // missing categories -> 1.0
  double zero_rate_no_intent = 0.0;
  double zero_rate_intent = 0.0;
  double noise_sigma = 0.0;
  int latency_min_ms = 50;
  int latency_max_ms = 500;

  double affinity(Category c) const;
  double intent_factor(Category c) const;
  /// Throws Error("invalid_profile") when an invariant is violated.
  void validate() const;

  bool operator==(const BidderProfile&) const = default;
};

struct PlantedEdge {
  std::string tracker;
  std::string bidder;
  Channel channel = Channel::ServerSide;
  double strength = 1.0;
};

struct ScenarioConfig {
  std::vector<std::string> tracker_names;
  std::vector<std::string> bidder_names;
  std::size_t sites_per_category = 50;
  std::size_t hb_sites = 25;
  double tracker_presence = 0.6;
  std::size_t edges_per_bidder = 3;
  double server_side_fraction = 2.0 / 3.0;
  double edge_strength = 1.0;
  /// When set, replaces the randomly drawn sharing graph verbatim.
  std::optional<std::vector<PlantedEdge>> planted_edges;
  /// Overrides every bidder's noise_sigma.
  std::optional<double> noise_sigma;
  /// Deterministic bids: no lognormal noise and no zero-bid lottery.
  bool noise_free = false;
  int hb_timeout_ms = 3000;
  Money hb_floor{0};
  Money price_granularity = Money(10'000);

  static ScenarioConfig defaults();
};

struct Scenario {
  std::vector<Organization> organizations;  // index == id
  std::vector<Site> sites;
  std::vector<BidderProfile> bidder_profiles;  // one per bidder org; defines bidder order
  std::vector<SharingEdge> sharing_graph;
  std::uint64_t master_seed = 0;
  int hb_timeout_ms = 3000;
  Money hb_floor{0};
  Money price_granularity{0};

  const Organization& org(OrgId id) const { return organizations.at(id); }
  std::optional<OrgId> find_org(std::string_view name) const;
  std::optional<std::uint32_t> find_site(std::string_view domain) const;

  std::vector<OrgId> trackers() const;
  /// Bidder orgs in profile order.
  std::vector<OrgId> bidders() const;
  std::vector<std::uint32_t> sites_in(Category c) const;
  std::vector<std::uint32_t> hb_sites() const;
  const BidderProfile& profile(OrgId bidder) const;
  std::vector<SharingEdge> inbound_edges(OrgId bidder) const;

  /// Throws Error("invalid_scenario") when an invariant is violated.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// The twenty tracker organizations used as the default feature space.
const std::vector<std::string>& default_tracker_names();
/// AppNexus, Rubicon, IX, OpenX, PubMatic.
const std::vector<std::string>& default_bidder_names();
/// The four sites visited to signal purchase intent.
const std::vector<std::string>& intent_site_domains();

/// Profile calibrated so that noise-free medians reproduce the published
/// per-persona medians and intent ratios. Empty for unknown bidders.
std::optional<BidderProfile> calibrated_profile(std::string_view bidder_name, OrgId org);

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

/// Union of the observations forwarded to `bidder` along its inbound edges.
/// Each visit travels an edge with probability equal to the edge strength;
/// strength-1 edges forward everything without consuming randomness.
ObservationSet reachable_knowledge(std::span<const SharingEdge> graph, OrgId bidder,
                                   const Observations& observations, Rng& rng);

}  // namespace kashf
