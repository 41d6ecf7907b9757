#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kashf/experiment.hpp"

namespace kashf {

/// Critical value of the chi-square distribution with one degree of freedom
/// at the 0.05 level.
inline constexpr double kChiSquareCritical05 = 3.841458820694124;

struct WeightedStats {
  double mean = 0.0;
  double std = 0.0;  // population-style
};

/// Throws Error("invalid_argument") on size mismatch, negative weights or an
/// all-zero weight vector.
WeightedStats weighted_mean_std(std::span<const double> values, std::span<const double> weights);

struct ChiSquare {
  std::optional<double> statistic;  // empty when a margin is zero
  bool significant = false;
};

/// 2x2 chi-square test of two proportions (no continuity correction).
ChiSquare chi_square_two_proportions(std::uint64_t success_a, std::uint64_t n_a, std::uint64_t success_b,
                                     std::uint64_t n_b);

double median(std::vector<double> values);

enum class IntentArm { All, NoIntent, Intent };

/// +1 above mean + std of the comparison group, -1 below mean - std.
using Marker = int;

struct TableCell {
  std::optional<double> value;  // empty -> N/A or "-"
  std::size_t count = 0;        // observations behind the cell
  Marker among_categories = 0;
  Marker among_bidders = 0;
};

/// Persona-by-bidder statistic table with weighted summaries.
///
/// The Avg./Std. column summarizes each row across bidders, weighting each
/// bidder by its count over the whole table; the Avg./Std. row summarizes each
/// column across personas, weighting each persona by its count over the
/// whole table. Cells without a value carry no weight.
struct PersonaBidderTable {
  std::string title;
  std::vector<Category> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<TableCell>> cells;  // [row][column]
  std::vector<std::size_t> row_weight;
  std::vector<std::size_t> column_weight;

  std::vector<std::optional<WeightedStats>> row_stats;     // the Avg./Std. columns
  std::vector<std::optional<WeightedStats>> column_stats;  // the Avg./Std. rows
  std::vector<Marker> row_avg_marker;                      // Avg. column vs. its own spread
  std::vector<Marker> column_avg_marker;                   // Avg. row vs. its own spread
  std::optional<WeightedStats> persona_summary;            // over the Avg. column
  std::optional<WeightedStats> bidder_summary;             // over the Avg. row

  const TableCell& cell(Category row, std::string_view column) const;
  std::optional<std::size_t> row_index(Category c) const;
  std::optional<std::size_t> column_index(std::string_view name) const;
};

/// Median of positive bids per (persona, bidder). Rows are the categories
/// present in the selected arm, in category order; columns are all bidders.
PersonaBidderTable median_cpm_table(const Dataset& dataset, IntentArm arm = IntentArm::NoIntent);

/// Cell = median(intent) / median(no-intent) over positive bids; N/A when
/// either median is missing or the denominator is zero.
PersonaBidderTable intent_ratio_table(const Dataset& no_intent, const Dataset& intent);

/// Median winning price per (persona, winning bidder); "-" when the bidder
/// never won for that persona.
PersonaBidderTable winning_bid_table(const Dataset& dataset, IntentArm arm = IntentArm::NoIntent);

/// Records of one intent arm, same name tables.
Dataset filter_arm(const Dataset& dataset, IntentArm arm);

struct ZeroBidRow {
  std::string bidder;
  std::size_t zeros_no_intent = 0, bids_no_intent = 0;
  std::size_t zeros_intent = 0, bids_intent = 0;
  std::optional<double> pct_no_intent;
  std::optional<double> pct_intent;
  std::optional<double> pct_total;
  ChiSquare test;  // no-intent vs intent arm
};

struct ZeroBidSummary {
  std::vector<ZeroBidRow> bidders;
  ZeroBidRow overall;  // all bidders pooled; bidder = "Total"
};

ZeroBidSummary zero_bid_stats(const Dataset& dataset);

std::string table_to_csv(const PersonaBidderTable& table, int precision = 2);
/// Aligned grid. Category-group markers print as ⇑/⇓, bidder-group markers
/// as ↑/↓; cells without value print as `missing`.
std::string table_to_text(const PersonaBidderTable& table, int precision = 2,
                          std::string_view missing = "N/A");
std::string zero_bids_csv(const ZeroBidSummary& summary);
std::string zero_bids_text(const ZeroBidSummary& summary);

}  // namespace kashf
