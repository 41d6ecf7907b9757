#include "kashf/ecosystem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace kashf {

bool ObservationSet::has_intent() const {
  return std::any_of(visits_.begin(), visits_.end(),
                     [](const Visit& v) { return v.category == Category::Intent; });
}

std::size_t ObservationSet::visits_in(Category c) const {
  return static_cast<std::size_t>(std::count_if(
      visits_.begin(), visits_.end(), [c](const Visit& v) { return v.category == c; }));
}

std::optional<Category> ObservationSet::dominant_category() const {
  std::array<std::size_t, kPersonaCategoryCount> counts{};
  for (const Visit& v : visits_) {
    if (is_persona_category(v.category)) ++counts[index_of(v.category)];
  }
  std::optional<Category> best;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > best_count) {
      best_count = counts[i];
      best = static_cast<Category>(i);
    }
  }
  return best;
}

bool ObservationSet::subset_of(const ObservationSet& other) const {
  return std::includes(other.visits_.begin(), other.visits_.end(), visits_.begin(),
                       visits_.end());
}

double BidderProfile::affinity(Category c) const {
  auto it = category_affinity.find(c);
  return it == category_affinity.end() ? 1.0 : it->second;
}

double BidderProfile::intent_factor(Category c) const {
  auto it = intent_multiplier.find(c);
  return it == intent_multiplier.end() ? 1.0 : it->second;
}

void BidderProfile::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error("invalid_profile", "bidder profile for org " + std::to_string(org) + ": " + what);
  };
  if (base_cpm.micros() <= 0) fail("base_cpm must be positive");
  for (const auto& [c, a] : category_affinity) {
    if (!(a > 0.0)) fail("affinity for " + std::string(to_string(c)) + " must be positive");
  }
  for (const auto& [c, m] : intent_multiplier) {
    if (!(m >= 1.0)) fail("intent multiplier for " + std::string(to_string(c)) + " must be >= 1");
  }
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(zero_rate_no_intent) || !prob(zero_rate_intent)) fail("zero rates must be in [0,1]");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (latency_min_ms < 0 || latency_max_ms < latency_min_ms) fail("bad latency range");
}

std::optional<OrgId> Scenario::find_org(std::string_view name) const {
  for (const auto& o : organizations) {
    if (o.name == name) return o.id;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> Scenario::find_site(std::string_view domain) const {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].domain == domain) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

std::vector<OrgId> Scenario::trackers() const {
  std::vector<OrgId> out;
  for (const auto& o : organizations) {
    if (o.tracker) out.push_back(o.id);
  }
  return out;
}

std::vector<OrgId> Scenario::bidders() const {
  std::vector<OrgId> out;
  for (const auto& p : bidder_profiles) out.push_back(p.org);
  return out;
}

std::vector<std::uint32_t> Scenario::sites_in(Category c) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].category == c) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::uint32_t> Scenario::hb_sites() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].hb_enabled) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

const BidderProfile& Scenario::profile(OrgId bidder) const {
  for (const auto& p : bidder_profiles) {
    if (p.org == bidder) return p;
  }
  throw Error("unknown_bidder", "no bidder profile for org " + std::to_string(bidder));
}

std::vector<SharingEdge> Scenario::inbound_edges(OrgId bidder) const {
  std::vector<SharingEdge> out;
  for (const auto& e : sharing_graph) {
    if (e.bidder == bidder) out.push_back(e);
  }
  return out;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid_scenario", what); };
  for (std::size_t i = 0; i < organizations.size(); ++i) {
    const auto& o = organizations[i];
    if (o.id != i) fail("organization ids must equal their index");
    if (!o.tracker && !o.bidder) fail("organization " + o.name + " has no role");
    for (std::size_t j = 0; j < i; ++j) {
      if (organizations[j].name == o.name) fail("duplicate organization name " + o.name);
    }
  }
  bool any_hb = false;
  for (const auto& s : sites) {
    if (s.hb_enabled) {
      any_hb = true;
      if (s.category != Category::HBPublisher) fail("HB-enabled site " + s.domain + " must be HBPublisher");
    }
    for (OrgId t : s.trackers_present) {
      if (t >= organizations.size() || !organizations[t].tracker) {
        fail("site " + s.domain + " lists a non-tracker org");
      }
    }
  }
  if (!any_hb) fail("scenario has no HB-enabled site");
  if (bidder_profiles.empty()) fail("scenario has no bidders");
  std::set<OrgId> profiled;
  for (const auto& p : bidder_profiles) {
    if (p.org >= organizations.size() || !organizations[p.org].bidder) fail("profile for non-bidder org");
    if (!profiled.insert(p.org).second) fail("duplicate profile for " + organizations[p.org].name);
    p.validate();
  }
  for (const auto& o : organizations) {
    if (o.bidder && !profiled.contains(o.id)) fail("bidder " + o.name + " has no profile");
  }
  std::set<std::pair<OrgId, OrgId>> seen;
  for (const auto& e : sharing_graph) {
    if (e.tracker >= organizations.size() || !organizations[e.tracker].tracker) fail("edge source is not a tracker");
    if (e.bidder >= organizations.size() || !organizations[e.bidder].bidder) fail("edge target is not a bidder");
    if (!(e.strength > 0.0 && e.strength <= 1.0)) fail("edge strength must be in (0,1]");
    if (!seen.emplace(e.tracker, e.bidder).second) fail("duplicate sharing edge");
  }
}

const std::vector<std::string>& default_tracker_names() {
  static const std::vector<std::string> names = {
      "Adobe",    "Alibaba",  "Alphabet",  "AppNexus", "Automattic", "Baidu",    "Comscore",
      "Criteo",   "DoubleVerify", "ExoClick", "Facebook", "Integral Ad Science", "Microsoft",
      "Oracle",   "PubMatic", "Quantcast", "Sovrn",    "Twitter",    "Verizon",  "Yandex",
  };
  return names;
}

const std::vector<std::string>& default_bidder_names() {
  static const std::vector<std::string> names = {"AppNexus", "Rubicon", "IX", "OpenX", "PubMatic"};
  return names;
}

const std::vector<std::string>& intent_site_domains() {
  static const std::vector<std::string> domains = {
      "hotels.com", "zales.com", "jamesedition.com", "luxuryrealestate.com"};
  return domains;
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.tracker_names = default_tracker_names();
  c.bidder_names = default_bidder_names();
  return c;
}

namespace {

std::string numbered_domain(std::string_view stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i + 1);
  return std::string(stem) + buf + ".example";
}

std::vector<std::string> hb_site_domains(std::size_t count) {
  static const std::vector<std::string> known = {"espn.com", "accuweather.com", "cnn.com"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(i < known.size() ? known[i] : numbered_domain("hbpub", i));
  }
  return out;
}

// Profile for a bidder without calibration data: a random but valid shape.
BidderProfile random_profile(OrgId org, Rng& rng) {
  BidderProfile p;
  p.org = org;
  p.base_cpm = Money::from_cpm(0.15 + 0.35 * rng.uniform());
  for (Category c : persona_categories()) {
    p.category_affinity[c] = std::exp(0.5 * rng.normal());
    p.intent_multiplier[c] = 1.0 + 2.0 * rng.uniform();
  }
  p.intent_multiplier[Category::Control] = 1.0 + 0.5 * rng.uniform();
  p.zero_rate_no_intent = 0.15 * rng.uniform();
  p.zero_rate_intent = p.zero_rate_no_intent * rng.uniform();
  p.noise_sigma = 0.3;
  p.latency_min_ms = 50 + static_cast<int>(rng.below(100));
  p.latency_max_ms = p.latency_min_ms + 300 + static_cast<int>(rng.below(600));
  return p;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.bidder_names.empty()) throw Error("invalid_config", "config has zero bidders");
  if (config.hb_sites == 0) throw Error("invalid_config", "config has zero HB-enabled sites");
  if (config.tracker_names.empty()) throw Error("invalid_config", "config has zero trackers");
  if (config.sites_per_category == 0) throw Error("invalid_config", "sites_per_category must be positive");
  if (!(config.tracker_presence >= 0.0 && config.tracker_presence <= 1.0)) {
    throw Error("invalid_config", "tracker_presence must be in [0,1]");
  }
  if (!(config.server_side_fraction >= 0.0 && config.server_side_fraction <= 1.0)) {
    throw Error("invalid_config", "server_side_fraction must be in [0,1]");
  }
  if (!(config.edge_strength > 0.0 && config.edge_strength <= 1.0)) {
    throw Error("invalid_config", "edge_strength must be in (0,1]");
  }
  if (!config.planted_edges && config.edges_per_bidder == 0) {
    throw Error("invalid_config", "edges_per_bidder must be positive");
  }

  Scenario sc;
  sc.master_seed = seed;
  sc.hb_timeout_ms = config.hb_timeout_ms;
  sc.hb_floor = config.hb_floor;
  sc.price_granularity = config.price_granularity;

  for (const auto& name : config.tracker_names) {
    if (sc.find_org(name)) throw Error("invalid_config", "duplicate tracker " + name);
    Organization o;
    o.id = static_cast<OrgId>(sc.organizations.size());
    o.name = name;
    o.domain = slugify(name) + ".com";
    o.tracker = true;
    sc.organizations.push_back(std::move(o));
  }
  std::vector<OrgId> bidder_ids;
  for (const auto& name : config.bidder_names) {
    if (auto existing = sc.find_org(name)) {
      if (sc.organizations[*existing].bidder) throw Error("invalid_config", "duplicate bidder " + name);
      sc.organizations[*existing].bidder = true;
      bidder_ids.push_back(*existing);
      continue;
    }
    Organization o;
    o.id = static_cast<OrgId>(sc.organizations.size());
    o.name = name;
    o.domain = slugify(name) + ".com";
    o.bidder = true;
    bidder_ids.push_back(o.id);
    sc.organizations.push_back(std::move(o));
  }

  // Independent streams so that changing one knob does not reshuffle the rest.
  Rng site_rng(derive_seed(seed, 1));
  Rng graph_rng(derive_seed(seed, 2));
  Rng profile_rng(derive_seed(seed, 3));

  const auto trackers = sc.trackers();
  auto add_group = [&](Category category, const std::vector<std::string>& domains, bool hb) {
    const bool guarantee = is_persona_category(category);
    std::size_t first = sc.sites.size();
    for (const auto& d : domains) {
      Site s;
      s.domain = d;
      s.category = category;
      s.hb_enabled = hb;
      for (OrgId t : trackers) {
        if (site_rng.bernoulli(config.tracker_presence)) s.trackers_present.push_back(t);
      }
      sc.sites.push_back(std::move(s));
    }
    // Every tracker appears on at least one site of each persona category.
    for (OrgId t : trackers) {
      if (!guarantee) break;
      bool present = false;
      for (std::size_t i = first; i < sc.sites.size() && !present; ++i) {
        const auto& tp = sc.sites[i].trackers_present;
        present = std::binary_search(tp.begin(), tp.end(), t);
      }
      if (!present) {
        auto& tp = sc.sites[first + site_rng.below(sc.sites.size() - first)].trackers_present;
        tp.insert(std::lower_bound(tp.begin(), tp.end(), t), t);
      }
    }
  };

  for (Category c : persona_categories()) {
    std::vector<std::string> domains;
    std::string stem = slugify(to_string(c));
    for (std::size_t i = 0; i < config.sites_per_category; ++i) domains.push_back(numbered_domain(stem, i));
    add_group(c, domains, false);
  }
  add_group(Category::Intent, intent_site_domains(), false);
  add_group(Category::HBPublisher, hb_site_domains(config.hb_sites), true);

  if (config.planted_edges) {
    for (const auto& pe : *config.planted_edges) {
      auto t = sc.find_org(pe.tracker);
      auto b = sc.find_org(pe.bidder);
      if (!t || !sc.organizations[*t].tracker) throw Error("invalid_config", "planted edge: unknown tracker " + pe.tracker);
      if (!b || !sc.organizations[*b].bidder) throw Error("invalid_config", "planted edge: unknown bidder " + pe.bidder);
      sc.sharing_graph.push_back(SharingEdge{*t, *b, pe.channel, pe.strength});
    }
  } else {
    for (OrgId b : bidder_ids) {
      std::vector<OrgId> candidates;
      for (OrgId t : trackers) {
        if (t != b) candidates.push_back(t);
      }
      std::size_t k = std::min(config.edges_per_bidder, candidates.size());
      auto picks = graph_rng.sample_without_replacement(candidates.size(), k);
      auto n_server = static_cast<std::size_t>(std::llround(static_cast<double>(k) * config.server_side_fraction));
      std::vector<SharingEdge> edges;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        edges.push_back(SharingEdge{candidates[picks[i]], b,
                                    i < n_server ? Channel::ServerSide : Channel::ClientSide,
                                    config.edge_strength});
      }
      std::sort(edges.begin(), edges.end(),
                [](const SharingEdge& x, const SharingEdge& y) { return x.tracker < y.tracker; });
      sc.sharing_graph.insert(sc.sharing_graph.end(), edges.begin(), edges.end());
    }
  }

  for (OrgId b : bidder_ids) {
    auto profile = calibrated_profile(sc.organizations[b].name, b);
    BidderProfile p = profile ? *profile : random_profile(b, profile_rng);
    if (config.noise_sigma) p.noise_sigma = *config.noise_sigma;
    if (config.noise_free) {
      p.noise_sigma = 0.0;
      p.zero_rate_no_intent = 0.0;
      p.zero_rate_intent = 0.0;
    }
    sc.bidder_profiles.push_back(std::move(p));
  }

  sc.validate();
  return sc;
}

ObservationSet reachable_knowledge(std::span<const SharingEdge> graph, OrgId bidder,
                                   const Observations& observations, Rng& rng) {
  ObservationSet out;
  for (const SharingEdge& e : graph) {
    if (e.bidder != bidder) continue;
    auto it = observations.find(e.tracker);
    if (it == observations.end()) continue;
    if (e.strength >= 1.0) {
      out.merge(it->second);
      continue;
    }
    for (const Visit& v : it->second.visits()) {
      if (rng.bernoulli(e.strength)) out.insert(v);
    }
  }
  return out;
}

}  // namespace kashf
