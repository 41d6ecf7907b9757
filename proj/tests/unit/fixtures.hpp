#pragma once

#include <filesystem>
#include <string>

#include "kashf/ecosystem.hpp"
#include "kashf/rng.hpp"

namespace kashf::test {

// Small hand-built world:
//   trackers T1 (0), T2 (1), T3 (2); bidders B (3), Quiet (4)
//   health-a {T1}, health-b {T1,T2}, health-c {T2}, sports-a {T3}
//   intent sites: hotels.com {T1}, zales.com {T1,T2}, jamesedition.com {}, luxuryrealestate.com {}
//   espn.com is the only HB site and carries T3
//   one sharing edge T1 -> B with the given channel; Quiet has no edges
inline Scenario tiny_scenario(Channel channel = Channel::ClientSide) {
  Scenario sc;
  auto org = [&](std::string name, bool tracker, bool bidder) {
    Organization o;
    o.id = static_cast<OrgId>(sc.organizations.size());
    o.domain = slugify(name) + ".com";
    o.name = std::move(name);
    o.tracker = tracker;
    o.bidder = bidder;
    sc.organizations.push_back(o);
  };
  org("T1", true, false);
  org("T2", true, false);
  org("T3", true, false);
  org("B", false, true);
  org("Quiet", false, true);

  auto site = [&](std::string domain, Category c, std::vector<OrgId> trackers, bool hb = false) {
    sc.sites.push_back(Site{std::move(domain), c, std::move(trackers), hb});
  };
  site("health-a.example", Category::Health, {0});
  site("health-b.example", Category::Health, {0, 1});
  site("health-c.example", Category::Health, {1});
  site("sports-a.example", Category::Sports, {2});
  site("hotels.com", Category::Intent, {0});
  site("zales.com", Category::Intent, {0, 1});
  site("jamesedition.com", Category::Intent, {});
  site("luxuryrealestate.com", Category::Intent, {});
  site("espn.com", Category::HBPublisher, {2}, true);

  BidderProfile b;
  b.org = 3;
  b.base_cpm = Money::from_cpm(0.20);
  b.category_affinity[Category::Health] = 5.8;
  b.intent_multiplier[Category::Health] = 5.96;
  b.latency_min_ms = 10;
  b.latency_max_ms = 10;
  BidderProfile q = b;
  q.org = 4;
  q.base_cpm = Money::from_cpm(0.30);
  sc.bidder_profiles = {b, q};

  sc.sharing_graph.push_back(SharingEdge{0, 3, channel, 1.0});
  sc.hb_timeout_ms = 3000;
  sc.validate();
  return sc;
}

// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("kashf-test-" + tag + "-" + std::to_string(derive_seed(fnv1a(tag), ++counter) % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace kashf::test
