// Default bidder profiles for the five most prevalent header-bidding bidders.
//
// Base CPM is the control-persona median; each persona affinity is the ratio
// of that persona's median to the base, so a noise-free bid for a persona the
// bidder has knowledge of lands exactly on the published median. Intent
// multipliers are the published intent/no-intent median ratios, floored at 1.
//
// Zero-bid rates: PubMatic uses its published rates directly. The published
// all-bidder share is weighted by bid volume across ten bidders; here five
// bidders each bid once per page view, so the other four published rates are
// scaled by one common factor chosen to make the equal-weight share match.

#include <algorithm>
#include <array>

#include "kashf/ecosystem.hpp"

namespace kashf {

namespace {

// Rows follow Category order (16 personas, then Control).
using Column = std::array<double, kPersonaCategoryCount + 1>;

struct Calibration {
  std::string_view name;
  Column medians;
  Column intent_ratios;
  double zero_no_intent;
  double zero_intent;
  int latency_min_ms;
  int latency_max_ms;
};

constexpr double kDefaultNoiseSigma = 0.35;

constexpr double kPublishedZeroShare = 0.2207;

// clang-format off
constexpr std::array<Calibration, 5> kCalibrations = {{
    {"AppNexus",
     {0.21, 0.34, 0.28, 0.20, 0.21, 0.21, 0.20, 0.20, 0.19, 0.31, 0.18, 0.23, 0.30, 0.40, 0.22, 0.19, 0.20},
     {0.97, 1.04, 1.02, 1.06, 1.20, 1.85, 1.31, 1.31, 1.05, 1.76, 1.01, 1.04, 1.11, 1.18, 1.30, 1.13, 0.87},
     0.0032, 0.0026, 80, 600},
    {"Rubicon",
     {0.43, 0.45, 0.45, 0.75, 0.33, 1.16, 0.39, 0.41, 0.61, 0.67, 0.53, 0.43, 0.70, 0.56, 0.41, 0.35, 0.26},
     {0.97, 1.48, 1.09, 1.19, 1.83, 1.24, 0.92, 1.51, 1.14, 1.09, 1.06, 2.24, 1.02, 1.42, 2.15, 3.00, 1.32},
     0.0354, 0.0227, 100, 900},
    {"IX",
     {0.25, 0.29, 0.28, 0.21, 0.21, 0.28, 0.24, 0.18, 0.24, 0.23, 0.20, 0.33, 0.28, 0.45, 0.27, 0.13, 0.28},
     {2.10, 1.45, 2.66, 2.38, 1.81, 1.34, 1.50, 6.00, 3.57, 1.04, 2.80, 1.46, 0.81, 1.55, 2.52, 3.69, 1.33},
     0.1914, 0.0619, 60, 700},
    {"OpenX",
     {0.34, 0.37, 0.30, 0.55, 0.34, 0.94, 0.28, 0.47, 0.41, 0.36, 0.58, 0.73, 0.44, 0.60, 0.45, 0.23, 0.44},
     {0.85, 0.97, 1.01, 1.18, 1.06, 5.96, 1.12, 0.76, 1.05, 1.08, 0.70, 0.96, 1.12, 1.52, 0.76, 2.85, 0.60},
     0.0104, 0.0023, 120, 1000},
    {"PubMatic",
     {0.33, 0.36, 0.51, 0.73, 0.25, 0.54, 0.28, 0.30, 0.33, 0.44, 0.52, 0.35, 0.58, 0.47, 0.37, 0.30, 0.37},
     {0.95, 1.32, 0.84, 0.71, 1.80, 1.21, 1.21, 1.49, 0.95, 0.86, 0.60, 0.83, 0.92, 1.00, 0.92, 1.57, 0.92},
     0.6875, 0.6637, 90, 800},
}};
// clang-format on

constexpr std::string_view kUnscaledZeroRates = "PubMatic";

double zero_rate_scale() {
  double fixed = 0.0, scaled = 0.0;
  for (const auto& cal : kCalibrations) {
    (cal.name == kUnscaledZeroRates ? fixed : scaled) += cal.zero_no_intent + cal.zero_intent;
  }
  return (kPublishedZeroShare * 2.0 * static_cast<double>(kCalibrations.size()) - fixed) / scaled;
}

}  // namespace

std::optional<BidderProfile> calibrated_profile(std::string_view bidder_name, OrgId org) {
  for (const auto& cal : kCalibrations) {
    if (cal.name != bidder_name) continue;
    BidderProfile p;
    p.org = org;
    const Money base = Money::from_cpm(cal.medians[kPersonaCategoryCount]);
    p.base_cpm = base;
    for (Category c : persona_categories()) {
      const Money target = Money::from_cpm(cal.medians[index_of(c)]);
      p.category_affinity[c] = static_cast<double>(target.micros()) / static_cast<double>(base.micros());
      p.intent_multiplier[c] = std::max(1.0, cal.intent_ratios[index_of(c)]);
    }
    p.intent_multiplier[Category::Control] = std::max(1.0, cal.intent_ratios[kPersonaCategoryCount]);
    const double scale = cal.name == kUnscaledZeroRates ? 1.0 : zero_rate_scale();
    p.zero_rate_no_intent = cal.zero_no_intent * scale;
    p.zero_rate_intent = cal.zero_intent * scale;
    p.noise_sigma = kDefaultNoiseSigma;
    p.latency_min_ms = cal.latency_min_ms;
    p.latency_max_ms = cal.latency_max_ms;
    return p;
  }
  return std::nullopt;
}

}  // namespace kashf
