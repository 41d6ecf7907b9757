#include "kashf/auction.hpp"

#include <algorithm>
#include <cmath>

namespace kashf {

Bid compute_bid(const BidderProfile& profile, const ObservationSet& knowledge, Rng& rng) {
  Bid bid;
  bid.bidder = profile.org;

  const bool intent = knowledge.has_intent();
  const double zero_rate = intent ? profile.zero_rate_intent : profile.zero_rate_no_intent;
  const bool zero = rng.bernoulli(zero_rate);

  double factor = 1.0;
  if (!knowledge.empty()) {
    const auto dominant = knowledge.dominant_category();
    if (dominant) factor *= profile.affinity(*dominant);
    if (intent) factor *= profile.intent_factor(dominant.value_or(Category::Control));
  }
  if (profile.noise_sigma > 0.0) factor *= std::exp(profile.noise_sigma * rng.normal());

  bid.value = zero ? Money(0) : profile.base_cpm.scaled(factor);
  bid.latency_ms = static_cast<int>(rng.between(profile.latency_min_ms, profile.latency_max_ms));
  return bid;
}

namespace {

// Highest value first, then lowest org id.
bool ranks_before(const Bid& a, const Bid& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.bidder < b.bidder;
}

}  // namespace

AuctionOutcome run_hb_auction(std::span<const Bid> bids, int timeout_ms, Money floor) {
  AuctionOutcome out;
  out.all_bids.assign(bids.begin(), bids.end());
  const Bid* best = nullptr;
  for (const Bid& b : bids) {
    if (b.latency_ms > timeout_ms) {
      out.discarded_late.push_back(b);
      continue;
    }
    if (b.value < floor) continue;
    if (!best || ranks_before(b, *best)) best = &b;
  }
  if (best) {
    out.winner = best->bidder;
    out.clearing_price = best->value;
  }
  return out;
}

AuctionOutcome run_rtb_waterfall(std::span<const std::vector<Bid>> tiers, Money floor,
                                 Money increment, double tier_discount) {
  if (increment.micros() <= 0) throw Error("invalid_argument", "waterfall increment must be positive");
  if (!(tier_discount > 0.0 && tier_discount <= 1.0)) {
    throw Error("invalid_argument", "tier_discount must be in (0,1]");
  }

  AuctionOutcome out;
  double scale = 1.0;
  for (const auto& tier : tiers) {
    out.all_bids.insert(out.all_bids.end(), tier.begin(), tier.end());

    std::vector<Bid> clearing;
    for (const Bid& b : tier) {
      Bid scaled = b;
      scaled.value = b.value.scaled(scale);
      if (scaled.value >= floor) clearing.push_back(scaled);
    }
    scale *= tier_discount;
    if (clearing.empty()) continue;

    std::sort(clearing.begin(), clearing.end(), ranks_before);
    const Money runner_up = clearing.size() >= 2 ? clearing[1].value : floor;
    out.winner = clearing.front().bidder;
    out.clearing_price = std::min(clearing.front().value, runner_up + increment);
    return out;
  }
  return out;
}

}  // namespace kashf
