#include "kashf/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kashf {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json category_map(const std::map<Category, double>& m) {
  ordered_json j = ordered_json::object();
  for (const auto& [c, v] : m) j[std::string(to_string(c))] = v;
  return j;
}

std::map<Category, double> category_map_from(const ordered_json& j) {
  std::map<Category, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto c = parse_category(it.key());
    if (!c) throw Error("parse", "unknown category " + it.key());
    out[*c] = it.value().get<double>();
  }
  return out;
}

Category category_from(const ordered_json& j) {
  auto c = parse_category(j.get<std::string>());
  if (!c) throw Error("parse", "unknown category " + j.get<std::string>());
  return *c;
}

Channel channel_from(const ordered_json& j) {
  auto c = parse_channel(j.get<std::string>());
  if (!c) throw Error("parse", "unknown channel " + j.get<std::string>());
  return *c;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["master_seed"] = s.master_seed;
  j["hb_timeout_ms"] = s.hb_timeout_ms;
  j["hb_floor_micros"] = s.hb_floor.micros();
  j["price_granularity_micros"] = s.price_granularity.micros();

  ordered_json orgs = ordered_json::array();
  for (const auto& o : s.organizations) {
    ordered_json roles = ordered_json::array();
    if (o.tracker) roles.push_back("Tracker");
    if (o.bidder) roles.push_back("Bidder");
    orgs.push_back({{"id", o.id}, {"name", o.name}, {"domain", o.domain}, {"roles", roles}});
  }
  j["organizations"] = std::move(orgs);

  ordered_json sites = ordered_json::array();
  for (const auto& site : s.sites) {
    sites.push_back({{"domain", site.domain},
                     {"category", to_string(site.category)},
                     {"hb_enabled", site.hb_enabled},
                     {"trackers", site.trackers_present}});
  }
  j["sites"] = std::move(sites);

  ordered_json profiles = ordered_json::array();
  for (const auto& p : s.bidder_profiles) {
    ordered_json pj;
    pj["org"] = p.org;
    pj["base_cpm_micros"] = p.base_cpm.micros();
    pj["category_affinity"] = category_map(p.category_affinity);
    pj["intent_multiplier"] = category_map(p.intent_multiplier);
    pj["zero_rate_no_intent"] = p.zero_rate_no_intent;
    pj["zero_rate_intent"] = p.zero_rate_intent;
    pj["noise_sigma"] = p.noise_sigma;
    pj["latency_ms"] = {p.latency_min_ms, p.latency_max_ms};
    profiles.push_back(std::move(pj));
  }
  j["bidder_profiles"] = std::move(profiles);

  ordered_json graph = ordered_json::array();
  for (const auto& e : s.sharing_graph) {
    graph.push_back({{"tracker", e.tracker},
                     {"bidder", e.bidder},
                     {"channel", to_string(e.channel)},
                     {"strength", e.strength}});
  }
  j["sharing_graph"] = std::move(graph);
  return j.dump(1) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  Scenario s;
  try {
    const auto j = ordered_json::parse(text);
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    s.hb_timeout_ms = j.at("hb_timeout_ms").get<int>();
    s.hb_floor = Money(j.at("hb_floor_micros").get<std::int64_t>());
    s.price_granularity = Money(j.at("price_granularity_micros").get<std::int64_t>());
    for (const auto& oj : j.at("organizations")) {
      Organization o;
      o.id = oj.at("id").get<OrgId>();
      o.name = oj.at("name").get<std::string>();
      o.domain = oj.at("domain").get<std::string>();
      for (const auto& r : oj.at("roles")) {
        const auto role = r.get<std::string>();
        if (role == "Tracker") {
          o.tracker = true;
        } else if (role == "Bidder") {
          o.bidder = true;
        } else {
          throw Error("parse", "unknown role " + role);
        }
      }
      s.organizations.push_back(std::move(o));
    }
    for (const auto& sj : j.at("sites")) {
      Site site;
      site.domain = sj.at("domain").get<std::string>();
      site.category = category_from(sj.at("category"));
      site.hb_enabled = sj.at("hb_enabled").get<bool>();
      site.trackers_present = sj.at("trackers").get<std::vector<OrgId>>();
      s.sites.push_back(std::move(site));
    }
    for (const auto& pj : j.at("bidder_profiles")) {
      BidderProfile p;
      p.org = pj.at("org").get<OrgId>();
      p.base_cpm = Money(pj.at("base_cpm_micros").get<std::int64_t>());
      p.category_affinity = category_map_from(pj.at("category_affinity"));
      p.intent_multiplier = category_map_from(pj.at("intent_multiplier"));
      p.zero_rate_no_intent = pj.at("zero_rate_no_intent").get<double>();
      p.zero_rate_intent = pj.at("zero_rate_intent").get<double>();
      p.noise_sigma = pj.at("noise_sigma").get<double>();
      p.latency_min_ms = pj.at("latency_ms").at(0).get<int>();
      p.latency_max_ms = pj.at("latency_ms").at(1).get<int>();
      s.bidder_profiles.push_back(std::move(p));
    }
    for (const auto& ej : j.at("sharing_graph")) {
      s.sharing_graph.push_back(SharingEdge{ej.at("tracker").get<OrgId>(), ej.at("bidder").get<OrgId>(),
                                            channel_from(ej.at("channel")), ej.at("strength").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("scenario: ") + e.what());
  }
  for (const auto& site : s.sites) {
    if (!std::is_sorted(site.trackers_present.begin(), site.trackers_present.end())) {
      throw Error("invalid_scenario", "site " + site.domain + " lists trackers out of order");
    }
  }
  s.validate();
  return s;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  write_file(path, scenario_to_json(scenario));
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << contents;
  if (!out) throw Error("io", "write failed for " + path.string());
}

}  // namespace kashf
