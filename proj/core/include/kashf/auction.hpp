#pragma once

#include <optional>
#include <span>
#include <vector>

#include "kashf/ecosystem.hpp"
#include "kashf/rng.hpp"
#include "kashf/types.hpp"

namespace kashf {

struct Bid {
  OrgId bidder = 0;
  Money value;  // >= 0; zero is a legal "zero bid"
  int latency_ms = 0;

  bool operator==(const Bid&) const = default;
};

struct AuctionOutcome {
  std::optional<OrgId> winner;
  Money clearing_price;
  std::vector<Bid> all_bids;
  std::vector<Bid> discarded_late;
};

/// Default RTB second-price increment: one cent CPM.
inline constexpr Money kDefaultIncrement{10'000};

/// Draws one bid from a profile given what the bidder knows about the user.
///
/// Draw order: zero-bid lottery, lognormal noise (only when noise_sigma > 0),
/// latency. With empty knowledge the control affinity (1.0) applies and no
/// intent multiplier is used. Knowledge holding only the intent flag uses the
/// Control intent multiplier.
Bid compute_bid(const BidderProfile& profile, const ObservationSet& knowledge, Rng& rng);

/// Unified first-price header-bidding auction. Late bids (latency > timeout)
/// are discarded; the highest on-time bid at or above the floor wins and pays
/// its own bid. Ties go to the lowest org id.
AuctionOutcome run_hb_auction(std::span<const Bid> bids, int timeout_ms, Money floor);

/// Second-price waterfall. Tier i scales its bids by tier_discount^i. The
/// first tier whose best scaled bid clears the floor wins; the winner pays
/// min(own scaled bid, runner-up + increment), where the runner-up is the
/// second-highest clearing bid or the floor when the winner clears alone.
AuctionOutcome run_rtb_waterfall(std::span<const std::vector<Bid>> tiers, Money floor,
                                 Money increment = kDefaultIncrement, double tier_discount = 1.0);

/// Price granularity: bids strictly below the granularity floor round to zero.
constexpr Money apply_price_granularity(Money value, Money granularity_floor) noexcept {
  return value < granularity_floor ? Money(0) : value;
}

}  // namespace kashf
