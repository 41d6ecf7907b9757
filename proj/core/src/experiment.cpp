#include "kashf/experiment.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"
#include "kashf/concurrency.hpp"

namespace kashf {

using ordered_json = nlohmann::ordered_json;

void PersonaSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid_persona", what); };
  if (category == Category::Control) {
    if (!sites.empty()) fail("control persona must not visit sites");
    if (intent) fail("control persona cannot signal intent");
    return;
  }
  if (!is_persona_category(category)) fail("persona category must be a persona category or Control");
  if (sites.empty() || sites.size() > kMaxPersonaSites) fail("persona must visit 1-10 sites");
}

namespace {

std::vector<OrgId> resolve_blocked(const Scenario& scenario, const PersonaSpec& spec) {
  std::vector<OrgId> out;
  for (const auto& name : spec.blocked) {
    auto id = scenario.find_org(name);
    if (!id || !scenario.org(*id).tracker) throw Error("unknown_org", "blocked org is not a tracker: " + name);
    out.push_back(*id);
  }
  return out;
}

// One page view: unblocked trackers present on the site observe it.
void visit_site(const Scenario& scenario, Persona& persona, std::uint32_t site, Category recorded_as,
                const std::vector<OrgId>& blocked, RequestLog* log) {
  const Site& s = scenario.sites[site];
  for (OrgId t : s.trackers_present) {
    if (std::find(blocked.begin(), blocked.end(), t) != blocked.end()) continue;
    persona.observations[t].insert(Visit{site, recorded_as});
  }
  if (log) {
    auto contacts = emit_site_visit(scenario, site, blocked, persona.tokens, persona.clock_ms);
    log->insert(log->end(), std::make_move_iterator(contacts.begin()), std::make_move_iterator(contacts.end()));
  }
  persona.clock_ms += kPageViewMs;
}

void build_into(const Scenario& scenario, Persona& persona, RequestLog* log) {
  persona.spec.validate();
  const auto blocked = resolve_blocked(scenario, persona.spec);
  for (const auto& domain : persona.spec.sites) {
    auto site = scenario.find_site(domain);
    if (!site) throw Error("unknown_site", "unknown site " + domain);
    if (scenario.sites[*site].category != persona.spec.category) {
      throw Error("invalid_persona", "site " + domain + " is not in category " +
                                         std::string(to_string(persona.spec.category)));
    }
    visit_site(scenario, persona, *site, persona.spec.category, blocked, log);
  }
}

void intent_into(const Scenario& scenario, Persona& persona, RequestLog* log) {
  if (!persona.spec.intent) throw Error("invalid_persona", "persona was not assigned intent");
  const auto blocked = resolve_blocked(scenario, persona.spec);
  for (std::uint32_t site : scenario.sites_in(Category::Intent)) {
    visit_site(scenario, persona, site, Category::Intent, blocked, log);
  }
}

Persona fresh_persona(const PersonaSpec& spec) {
  Persona p;
  p.spec = spec;
  p.tokens = TokenJar(derive_seed(spec.seed, 1));
  return p;
}

}  // namespace

PersonaTrace build_persona(const Scenario& scenario, const PersonaSpec& spec) {
  PersonaTrace out{fresh_persona(spec), {}};
  build_into(scenario, out.persona, &out.log);
  return out;
}

PersonaTrace signal_intent(const Scenario& scenario, Persona persona) {
  PersonaTrace out{std::move(persona), {}};
  intent_into(scenario, out.persona, &out.log);
  return out;
}

std::optional<std::size_t> Dataset::bidder_index(std::string_view name) const {
  for (std::size_t i = 0; i < bidder_names.size(); ++i) {
    if (bidder_names[i] == name) return i;
  }
  return std::nullopt;
}

Dataset make_dataset(const Scenario& scenario) {
  Dataset d;
  for (OrgId t : scenario.trackers()) d.tracker_names.push_back(scenario.org(t).name);
  for (OrgId b : scenario.bidders()) d.bidder_names.push_back(scenario.org(b).name);
  return d;
}

ExperimentRecord collect_bids(const Scenario& scenario, const Persona& persona,
                              const std::string& hb_site, RequestLog* log) {
  auto site = scenario.find_site(hb_site);
  if (!site) throw Error("unknown_site", "unknown site " + hb_site);
  if (!scenario.sites[*site].hb_enabled) throw Error("not_hb_site", hb_site + " is not header-bidding enabled");

  const auto trackers = scenario.trackers();
  const auto bidders = scenario.bidders();

  ExperimentRecord rec;
  rec.spec = persona.spec;
  rec.hb_site = hb_site;
  rec.exposure.reserve(trackers.size());
  for (OrgId t : trackers) {
    auto it = persona.observations.find(t);
    rec.exposure.push_back(it != persona.observations.end() && !it->second.empty());
  }

  // The publisher page's own trackers fire before the bids are gathered.
  Persona p = persona;
  p.clock_ms += kPropagationWaitMs;
  const auto blocked = resolve_blocked(scenario, p.spec);
  visit_site(scenario, p, *site, Category::HBPublisher, blocked, log);

  if (log) {
    auto syncs = emit_sync_requests(scenario, p.observations, hb_site, p.tokens, p.clock_ms);
    log->insert(log->end(), syncs.begin(), syncs.end());
    for (std::size_t i = 0; i < bidders.size(); ++i) {
      log->push_back(make_bid_request(scenario.org(bidders[i]), hb_site,
                                      p.clock_ms + static_cast<std::int64_t>(syncs.size() + i)));
    }
  }

  const std::uint64_t knowledge_stream = derive_seed(p.spec.seed, 2);
  const std::uint64_t bid_stream = derive_seed(p.spec.seed, 3);
  std::vector<Bid> bids;
  bids.reserve(bidders.size());
  for (OrgId b : bidders) {
    Rng krng(derive_seed(knowledge_stream, b));
    Rng brng(derive_seed(bid_stream, b));
    ObservationSet knowledge = reachable_knowledge(scenario.sharing_graph, b, p.observations, krng);
    Bid bid = compute_bid(scenario.profile(b), knowledge, brng);
    bid.value = apply_price_granularity(bid.value, scenario.price_granularity);
    bids.push_back(bid);
    rec.bids.push_back(bid.value);
    rec.latency_ms.push_back(bid.latency_ms);
  }

  AuctionOutcome outcome = run_hb_auction(bids, scenario.hb_timeout_ms, scenario.hb_floor);
  if (outcome.winner) {
    rec.winner = static_cast<std::size_t>(std::find(bidders.begin(), bidders.end(), *outcome.winner) - bidders.begin());
    rec.price = outcome.clearing_price;
  }
  return rec;
}

PersonaSpec draw_persona_spec(const Scenario& scenario, std::uint64_t master_seed,
                              std::size_t index, const CampaignOptions& options,
                              std::string* hb_site) {
  const auto trackers = scenario.trackers();
  const auto hb = scenario.hb_sites();
  if (hb.empty()) throw Error("invalid_scenario", "scenario has no HB-enabled site");
  if (options.block_set_size > trackers.size()) {
    throw Error("invalid_config", "block set size exceeds tracker count");
  }

  PersonaSpec spec;
  spec.seed = derive_seed(master_seed, index);
  Rng rng(derive_seed(spec.seed, 0));
  spec.category = persona_categories()[rng.below(kPersonaCategoryCount)];
  const auto pool = scenario.sites_in(spec.category);
  const auto k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(kMaxPersonaSites)));
  for (std::size_t i : rng.sample_without_replacement(pool.size(), std::min(k, pool.size()))) {
    spec.sites.push_back(scenario.sites[pool[i]].domain);
  }
  for (std::size_t i : rng.sample_without_replacement(trackers.size(), options.block_set_size)) {
    spec.blocked.push_back(scenario.org(trackers[i]).name);
  }
  spec.intent = rng.bernoulli(options.intent_probability);
  const std::uint32_t site = hb[rng.below(hb.size())];
  if (hb_site) *hb_site = scenario.sites[site].domain;
  return spec;
}

std::string log_ref_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "exp-%06zu", index);
  return buf;
}

Dataset run_campaign(const Scenario& scenario, std::size_t n, std::uint64_t master_seed,
                     const CampaignOptions& options, const LogSink& sink) {
  if (n == 0) throw Error("invalid_argument", "campaign needs at least one experiment");
  Dataset out = make_dataset(scenario);
  out.records.resize(n);
  const bool want_logs = options.emit_logs && sink;
  const std::size_t workers = options.workers ? options.workers : default_workers();

  // Chunking bounds memory held by request logs before they are flushed.
  constexpr std::size_t kChunk = 1024;
  std::vector<RequestLog> logs;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t count = std::min(kChunk, n - begin);
    logs.assign(want_logs ? count : 0, {});
    parallel_for(count, workers, [&](std::size_t j) {
      const std::size_t i = begin + j;
      std::string hb_site;
      PersonaSpec spec = draw_persona_spec(scenario, master_seed, i, options, &hb_site);
      RequestLog* log = want_logs ? &logs[j] : nullptr;
      Persona persona = fresh_persona(spec);
      build_into(scenario, persona, log);
      if (spec.intent) intent_into(scenario, persona, log);
      ExperimentRecord rec = collect_bids(scenario, persona, hb_site, log);
      rec.log_ref = log_ref_for(i);
      out.records[i] = std::move(rec);
    });
    if (want_logs) {
      for (std::size_t j = 0; j < count; ++j) sink(out.records[begin + j].log_ref, logs[j]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

ordered_json spec_to_json(const PersonaSpec& s) {
  ordered_json j;
  j["category"] = to_string(s.category);
  j["sites"] = s.sites;
  j["blocked"] = s.blocked;
  j["intent"] = s.intent;
  j["seed"] = s.seed;
  return j;
}

PersonaSpec spec_from_json(const ordered_json& j) {
  PersonaSpec s;
  auto cat = parse_category(j.at("category").get<std::string>());
  if (!cat) throw Error("parse", "unknown category " + j.at("category").get<std::string>());
  s.category = *cat;
  s.sites = j.at("sites").get<std::vector<std::string>>();
  s.blocked = j.at("blocked").get<std::vector<std::string>>();
  s.intent = j.at("intent").get<bool>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

ordered_json record_to_json(const Dataset& d, const ExperimentRecord& r) {
  ordered_json j;
  j["spec"] = spec_to_json(r.spec);
  j["hb_site"] = r.hb_site;
  ordered_json bids = ordered_json::object();
  for (std::size_t b = 0; b < d.bidder_names.size(); ++b) bids[d.bidder_names[b]] = r.bids.at(b).micros();
  j["bids"] = std::move(bids);
  j["winner"] = r.winner ? ordered_json(d.bidder_names.at(*r.winner)) : ordered_json(nullptr);
  j["price"] = r.price.micros();
  j["log_ref"] = r.log_ref;
  ordered_json latency = ordered_json::object();
  for (std::size_t b = 0; b < d.bidder_names.size(); ++b) latency[d.bidder_names[b]] = r.latency_ms.at(b);
  j["latency_ms"] = std::move(latency);
  ordered_json exposure = ordered_json::object();
  for (std::size_t t = 0; t < d.tracker_names.size(); ++t) exposure[d.tracker_names[t]] = r.exposure.at(t) ? 1 : 0;
  j["exposure"] = std::move(exposure);
  return j;
}

std::vector<std::string> keys_of(const ordered_json& obj) {
  std::vector<std::string> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) out.push_back(it.key());
  return out;
}

ExperimentRecord record_from_json(Dataset& d, const ordered_json& j) {
  const auto& bids = j.at("bids");
  const auto& latency = j.at("latency_ms");
  const auto& exposure = j.at("exposure");
  if (d.records.empty() && d.bidder_names.empty()) {
    d.bidder_names = keys_of(bids);
    d.tracker_names = keys_of(exposure);
  }
  if (keys_of(bids) != d.bidder_names || keys_of(latency) != d.bidder_names) {
    throw Error("parse", "bidder set differs from earlier records");
  }
  if (keys_of(exposure) != d.tracker_names) throw Error("parse", "tracker set differs from earlier records");

  ExperimentRecord r;
  r.spec = spec_from_json(j.at("spec"));
  r.hb_site = j.at("hb_site").get<std::string>();
  for (const auto& name : d.bidder_names) {
    r.bids.emplace_back(bids.at(name).get<std::int64_t>());
    r.latency_ms.push_back(latency.at(name).get<int>());
  }
  for (const auto& name : d.tracker_names) r.exposure.push_back(exposure.at(name).get<int>() != 0);
  if (!j.at("winner").is_null()) {
    auto w = d.bidder_index(j.at("winner").get<std::string>());
    if (!w) throw Error("parse", "winner is not a bidder");
    r.winner = *w;
  }
  r.price = Money(j.at("price").get<std::int64_t>());
  r.log_ref = j.at("log_ref").get<std::string>();
  return r;
}

ordered_json request_to_json(const RequestRecord& r) {
  ordered_json j;
  j["url"] = r.url;
  j["referrer"] = r.referrer;
  j["to"] = r.to_org;
  j["from"] = r.from_org ? ordered_json(*r.from_org) : ordered_json(nullptr);
  j["t"] = r.timestamp_ms;
  return j;
}

RequestRecord request_from_json(const ordered_json& j) {
  RequestRecord r;
  r.url = j.at("url").get<std::string>();
  r.referrer = j.at("referrer").get<std::string>();
  r.to_org = j.at("to").get<std::string>();
  if (!j.at("from").is_null()) r.from_org = j.at("from").get<std::string>();
  r.timestamp_ms = j.at("t").get<std::int64_t>();
  return r;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error("parse", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("parse", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  for (const auto& r : dataset.records) out << record_to_json(dataset, r).dump() << '\n';
  if (!out) throw Error("io", "write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset d;
  for_each_line(path, [&](const ordered_json& j) { d.records.push_back(record_from_json(d, j)); });
  return d;
}

LogWriter::LogWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw Error("io", "cannot write " + path.string());
}

void LogWriter::write(const std::string& log_ref, const RequestLog& log) {
  ordered_json j;
  j["log_ref"] = log_ref;
  ordered_json reqs = ordered_json::array();
  for (const auto& r : log) reqs.push_back(request_to_json(r));
  j["requests"] = std::move(reqs);
  out_ << j.dump() << '\n';
  if (!out_) throw Error("io", "write failed for " + path_.string());
}

void LogWriter::close() {
  out_.close();
  if (!out_) throw Error("io", "write failed for " + path_.string());
}

void read_logs(const std::filesystem::path& path,
               const std::function<void(const std::string&, const RequestLog&)>& visit) {
  for_each_line(path, [&](const ordered_json& j) {
    RequestLog log;
    for (const auto& r : j.at("requests")) log.push_back(request_from_json(r));
    visit(j.at("log_ref").get<std::string>(), log);
  });
}

}  // namespace kashf
