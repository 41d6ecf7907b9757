#include "kashf/syncdetect.hpp"

#include <algorithm>
#include <cctype>

namespace kashf {

namespace {

constexpr std::string_view kAlphabet =
    "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

bool related(std::string_view a, std::string_view b) {
  return a.find(b) != std::string_view::npos || b.find(a) != std::string_view::npos;
}

bool is_token_like(std::string_view v, std::size_t min_len) {
  return v.size() >= min_len && std::all_of(v.begin(), v.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) != 0;
         });
}

}  // namespace

const std::string& TokenJar::token_for(OrgId org) {
  if (auto it = tokens_.find(org); it != tokens_.end()) return it->second;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(derive_seed(seed_, org), attempt));
    std::string candidate(kTokenLength, '0');
    for (char& c : candidate) c = kAlphabet[rng.below(kAlphabet.size())];
    bool clash = std::any_of(tokens_.begin(), tokens_.end(),
                             [&](const auto& kv) { return related(kv.second, candidate); });
    if (!clash) return tokens_.emplace(org, std::move(candidate)).first->second;
  }
}

const std::string* TokenJar::find(OrgId org) const {
  auto it = tokens_.find(org);
  return it == tokens_.end() ? nullptr : &it->second;
}

RequestRecord make_tracker_contact(const Organization& tracker, std::string_view token,
                                   std::string_view site_domain, std::int64_t timestamp_ms) {
  RequestRecord r;
  r.url = "https://" + tracker.domain + "/px?uid=" + std::string(token) + "&site=" + std::string(site_domain);
  r.referrer = "https://" + std::string(site_domain) + "/";
  r.to_org = tracker.name;
  r.timestamp_ms = timestamp_ms;
  return r;
}

RequestRecord make_sync_request(const Organization& from, std::string_view from_token,
                                const Organization& to, std::string_view site_domain,
                                std::int64_t timestamp_ms) {
  RequestRecord r;
  r.url = "https://" + to.domain + "/sync?partner=" + from.domain + "&partner_uid=" + std::string(from_token);
  r.referrer = "https://" + from.domain + "/px?uid=" + std::string(from_token) + "&site=" + std::string(site_domain);
  r.to_org = to.name;
  r.from_org = from.name;
  r.timestamp_ms = timestamp_ms;
  return r;
}

RequestRecord make_bid_request(const Organization& bidder, std::string_view site_domain,
                               std::int64_t timestamp_ms) {
  RequestRecord r;
  r.url = "https://" + bidder.domain + "/hb/bid?slot=div-ad-1&site=" + std::string(site_domain);
  r.referrer = "https://" + std::string(site_domain) + "/";
  r.to_org = bidder.name;
  r.timestamp_ms = timestamp_ms;
  return r;
}

RequestLog emit_site_visit(const Scenario& scenario, std::uint32_t site,
                           std::span<const OrgId> blocked, TokenJar& tokens,
                           std::int64_t timestamp_ms) {
  RequestLog out;
  const Site& s = scenario.sites.at(site);
  std::int64_t t = timestamp_ms;
  for (OrgId tracker : s.trackers_present) {
    if (std::find(blocked.begin(), blocked.end(), tracker) != blocked.end()) continue;
    out.push_back(make_tracker_contact(scenario.org(tracker), tokens.token_for(tracker), s.domain, t++));
  }
  return out;
}

RequestLog emit_sync_requests(const Scenario& scenario, const Observations& observers,
                              std::string_view site_domain, TokenJar& tokens,
                              std::int64_t timestamp_ms) {
  RequestLog out;
  std::int64_t t = timestamp_ms;
  for (const SharingEdge& e : scenario.sharing_graph) {
    if (e.channel != Channel::ClientSide || e.tracker == e.bidder) continue;
    if (!observers.contains(e.tracker)) continue;
    out.push_back(make_sync_request(scenario.org(e.tracker), tokens.token_for(e.tracker),
                                    scenario.org(e.bidder), site_domain, t++));
  }
  return out;
}

std::vector<std::string_view> query_values(std::string_view url) {
  std::vector<std::string_view> out;
  const std::size_t q = url.find('?');
  if (q == std::string_view::npos) return out;
  const std::size_t end = std::min(url.find('#', q), url.size());
  std::size_t pos = q + 1;
  while (pos < end) {
    std::size_t amp = url.find('&', pos);
    if (amp == std::string_view::npos || amp > end) amp = end;
    const std::string_view pair = url.substr(pos, amp - pos);
    if (const std::size_t eq = pair.find('='); eq != std::string_view::npos) out.push_back(pair.substr(eq + 1));
    pos = amp + 1;
  }
  return out;
}

void CookieSyncDetector::observe(const RequestRecord& r) {
  std::vector<std::string_view> values = query_values(r.url);
  auto from_ref = query_values(r.referrer);
  values.insert(values.end(), from_ref.begin(), from_ref.end());

  const std::string* evidence_owner = nullptr;
  for (std::string_view v : values) {
    if (!is_token_like(v, min_len_)) continue;
    auto [it, inserted] = owner_.try_emplace(std::string(v), r.to_org);
    if (!inserted && it->second != r.to_org && !evidence_owner) evidence_owner = &it->second;
  }
  if (evidence_owner) ++pairs_[{*evidence_owner, r.to_org}];
}

SyncPairs detect_cookie_sync(std::span<const RequestRecord> logs, std::size_t min_len) {
  CookieSyncDetector detector(min_len);
  for (const RequestRecord& r : logs) detector.observe(r);
  return detector.pairs();
}

}  // namespace kashf
