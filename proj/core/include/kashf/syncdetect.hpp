#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kashf/ecosystem.hpp"

namespace kashf {

/// One client-observable HTTP request.
struct RequestRecord {
  std::string url;
  std::string referrer;
  std::string to_org;
  std::optional<std::string> from_org;  // set for org-initiated redirects
  std::int64_t timestamp_ms = 0;

  bool operator==(const RequestRecord&) const = default;
};

using RequestLog = std::vector<RequestRecord>;

/// Per-persona user identifiers, one per organization.
class TokenJar {
 public:
  TokenJar() = default;
  explicit TokenJar(std::uint64_t seed) : seed_(seed) {}

  /// Returns the org's token, minting it on first use. Tokens are 16
  /// alphanumeric characters derived from the jar seed; a candidate that is a
  /// substring of (or contains) an existing token is rejected and redrawn.
  const std::string& token_for(OrgId org);
  const std::string* find(OrgId org) const;

  const std::map<OrgId, std::string>& tokens() const noexcept { return tokens_; }
  bool operator==(const TokenJar&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::map<OrgId, std::string> tokens_;
};

inline constexpr std::size_t kTokenLength = 16;
inline constexpr std::size_t kDefaultMinTokenLength = 8;

/// Tracker pixel fired while the browser is on `site_domain`; carries only
/// the tracker's own token.
RequestRecord make_tracker_contact(const Organization& tracker, std::string_view token,
                                   std::string_view site_domain, std::int64_t timestamp_ms);

/// Client-side cookie sync: `from` redirects the browser to `to` with its own
/// identifier as a query parameter value.
RequestRecord make_sync_request(const Organization& from, std::string_view from_token,
                                const Organization& to, std::string_view site_domain,
                                std::int64_t timestamp_ms);

/// Header-bidding bid request from the publisher page to a bidder.
RequestRecord make_bid_request(const Organization& bidder, std::string_view site_domain,
                               std::int64_t timestamp_ms);

/// Requests emitted by one page view: a pixel per present tracker that is not
/// blocked, in ascending org order. Trackers' tokens are minted as needed.
RequestLog emit_site_visit(const Scenario& scenario, std::uint32_t site,
                           std::span<const OrgId> blocked, TokenJar& tokens,
                           std::int64_t timestamp_ms);

/// Cookie-sync requests on the bid-collection visit: one per ClientSide edge
/// whose tracker observed the persona (self-edges excluded). ServerSide edges
/// never appear in client traffic.
RequestLog emit_sync_requests(const Scenario& scenario, const Observations& observers,
                              std::string_view site_domain, TokenJar& tokens,
                              std::int64_t timestamp_ms);

/// Query-parameter values of a URL, in order of appearance.
std::vector<std::string_view> query_values(std::string_view url);

using SyncPairs = std::map<std::pair<std::string, std::string>, std::size_t>;

/// Client-side cookie-sync heuristic. A value is owned by the first org whose
/// traffic carried it; a request to another org B carrying an owned value of
/// at least `min_len` alphanumeric characters in its URL or referrer query
/// parameters is evidence of a sync (owner -> B). Values are compared by exact
/// equality. Returns evidence counts (requests) per pair.
SyncPairs detect_cookie_sync(std::span<const RequestRecord> logs,
                             std::size_t min_len = kDefaultMinTokenLength);

/// Incremental form of detect_cookie_sync for logs too large to hold at once.
class CookieSyncDetector {
 public:
  explicit CookieSyncDetector(std::size_t min_len = kDefaultMinTokenLength) : min_len_(min_len) {}

  void observe(const RequestRecord& request);
  const SyncPairs& pairs() const noexcept { return pairs_; }

 private:
  std::size_t min_len_;
  std::unordered_map<std::string, std::string> owner_;
  SyncPairs pairs_;
};

}  // namespace kashf
