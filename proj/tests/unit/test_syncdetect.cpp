#include <cctype>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "kashf/experiment.hpp"
#include "kashf/syncdetect.hpp"

using namespace kashf;

namespace {

PersonaSpec health_spec(std::uint64_t seed = 5) {
  PersonaSpec s;
  s.category = Category::Health;
  s.sites = {"health-a.example", "health-b.example", "health-c.example"};
  s.seed = seed;
  return s;
}

// Full client-visible log for one experiment.
RequestLog experiment_log(const Scenario& sc, const PersonaSpec& spec) {
  auto built = build_persona(sc, spec);
  RequestLog log = built.log;
  collect_bids(sc, built.persona, "espn.com", &log);
  return log;
}

bool contains_token(const RequestRecord& r, const std::string& token) {
  return r.url.find(token) != std::string::npos || r.referrer.find(token) != std::string::npos;
}

}  // namespace

TEST_CASE("tokens are stable, alphanumeric and never nested") {
  TokenJar jar(99);
  std::set<std::string> seen;
  for (OrgId o = 0; o < 200; ++o) {
    const std::string t = jar.token_for(o);
    CHECK(t.size() == kTokenLength);
    for (char c : t) CHECK(std::isalnum(static_cast<unsigned char>(c)));
    CHECK(jar.token_for(o) == t);
    seen.insert(t);
  }
  CHECK(seen.size() == 200);
  for (const auto& a : seen) {
    for (const auto& b : seen) {
      if (a != b) CHECK(a.find(b) == std::string::npos);
    }
  }
  TokenJar again(99);
  CHECK(again.token_for(17) == jar.token_for(17));
  CHECK(jar.find(1000) == nullptr);
}

TEST_CASE("query values are split on & and =") {
  auto v = query_values("https://x.com/p?a=1&bb=two&flag&c=#frag");
  REQUIRE(v.size() == 3);
  CHECK(v[0] == "1");
  CHECK(v[1] == "two");
  CHECK(v[2] == "");
  CHECK(query_values("https://x.com/p").empty());
}

TEST_CASE("tracker contacts carry only their own token") {
  const Scenario sc = test::tiny_scenario(Channel::ServerSide);
  auto built = build_persona(sc, health_spec());
  REQUIRE(built.log.size() == 4);  // {T1},{T1,T2},{T2}
  for (const auto& r : built.log) {
    const auto id = *sc.find_org(r.to_org);
    const std::string& own = *built.persona.tokens.find(id);
    CHECK(contains_token(r, own));
    for (const auto& [other, tok] : built.persona.tokens.tokens()) {
      if (other != id) CHECK_FALSE(contains_token(r, tok));
    }
  }
}

TEST_CASE("server-side edges leave no cross-org token in the logs") {
  const Scenario sc = test::tiny_scenario(Channel::ServerSide);
  const auto log = experiment_log(sc, health_spec());
  auto built = build_persona(sc, health_spec());
  TokenJar jar = built.persona.tokens;
  for (const auto& r : log) {
    for (const auto& [org, tok] : jar.tokens()) {
      if (sc.org(org).name != r.to_org) CHECK_FALSE(contains_token(r, tok));
    }
  }
  CHECK(detect_cookie_sync(log).empty());
}

TEST_CASE("one client-side edge yields exactly one sync to the bidder") {
  const Scenario sc = test::tiny_scenario(Channel::ClientSide);
  const auto log = experiment_log(sc, health_spec());
  auto built = build_persona(sc, health_spec());
  const std::string t1 = *built.persona.tokens.find(0);
  std::size_t syncs = 0;
  for (const auto& r : log) {
    if (r.to_org == "B" && contains_token(r, t1)) {
      ++syncs;
      CHECK(r.from_org == "T1");
    }
  }
  CHECK(syncs == 1);
  const auto pairs = detect_cookie_sync(log);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs.begin()->first == std::make_pair(std::string("T1"), std::string("B")));
  CHECK(pairs.begin()->second == 1);
}

TEST_CASE("no sync when the edge's tracker never saw the persona") {
  const Scenario sc = test::tiny_scenario(Channel::ClientSide);
  PersonaSpec spec = health_spec();
  spec.sites = {"health-c.example"};  // T2 only
  CHECK(detect_cookie_sync(experiment_log(sc, spec)).empty());
}

TEST_CASE("control persona produces no persona traffic") {
  const Scenario sc = test::tiny_scenario();
  PersonaSpec control;
  control.category = Category::Control;
  auto built = build_persona(sc, control);
  CHECK(built.log.empty());
  CHECK(built.persona.observations.empty());
}

TEST_CASE("short shared values are ignored") {
  RequestLog logs;
  RequestRecord a;
  a.url = "https://a.com/px?uid=abcd";
  a.to_org = "A";
  RequestRecord b;
  b.url = "https://b.com/px?id=abcd";
  b.to_org = "B";
  logs = {a, b};
  CHECK(detect_cookie_sync(logs, 8).empty());
  CHECK(detect_cookie_sync(logs, 4).size() == 1);
}

TEST_CASE("ownership goes to the first org carrying a value") {
  RequestRecord a{"https://a.com/px?uid=TOKENAAAA1234567", "https://site.com/", "A", std::nullopt, 0};
  RequestRecord sync{"https://b.com/sync?partner_uid=TOKENAAAA1234567", "https://a.com/px?uid=TOKENAAAA1234567", "B",
                     "A", 1};
  RequestRecord back{"https://a.com/px?uid=TOKENAAAA1234567", "", "A", std::nullopt, 2};
  std::vector<RequestRecord> logs{a, sync, back, sync};
  auto pairs = detect_cookie_sync(logs);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs.at({"A", "B"}) == 2);

  // referrer-only evidence also counts
  RequestRecord ref_only{"https://c.com/bid", "https://x.com/?u=TOKENAAAA1234567", "C", std::nullopt, 3};
  logs.push_back(ref_only);
  CHECK(detect_cookie_sync(logs).at({"A", "C"}) == 1);
}

TEST_CASE("streaming detector equals the batch detector") {
  const Scenario sc = test::tiny_scenario(Channel::ClientSide);
  RequestLog all;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto log = experiment_log(sc, health_spec(s));
    all.insert(all.end(), log.begin(), log.end());
  }
  CookieSyncDetector d;
  for (const auto& r : all) d.observe(r);
  CHECK(d.pairs() == detect_cookie_sync(all));
  CHECK(d.pairs().at({"T1", "B"}) == 10);
}

TEST_CASE("detector finds exactly the exercised client-side edges of a generated scenario") {
  auto cfg = ScenarioConfig::defaults();
  cfg.sites_per_category = 10;
  const Scenario sc = generate_scenario(cfg, 21);
  CampaignOptions opts;
  opts.workers = 1;
  CookieSyncDetector d;
  run_campaign(sc, 300, 8, opts, [&](const std::string&, const RequestLog& log) {
    for (const auto& r : log) d.observe(r);
  });
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& e : sc.sharing_graph) {
    if (e.channel == Channel::ClientSide && e.tracker != e.bidder) {
      expected.emplace(sc.org(e.tracker).name, sc.org(e.bidder).name);
    }
  }
  std::set<std::pair<std::string, std::string>> found;
  for (const auto& [pair, n] : d.pairs()) found.insert(pair);
  CHECK(found == expected);
}
