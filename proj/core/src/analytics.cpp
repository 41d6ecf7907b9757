#include "kashf/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kashf {

WeightedStats weighted_mean_std(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw Error("invalid_argument", "values and weights differ in length");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("invalid_argument", "weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw Error("invalid_argument", "weights must not all be zero");
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += weights[i] * d * d;
  }
  return {mean, std::sqrt(var / wsum)};
}

ChiSquare chi_square_two_proportions(std::uint64_t success_a, std::uint64_t n_a, std::uint64_t success_b,
                                     std::uint64_t n_b) {
  if (n_a == 0 || n_b == 0) throw Error("invalid_argument", "both samples need at least one trial");
  if (success_a > n_a || success_b > n_b) throw Error("invalid_argument", "successes exceed trials");
  const auto a = static_cast<double>(success_a);
  const auto b = static_cast<double>(n_a - success_a);
  const auto c = static_cast<double>(success_b);
  const auto d = static_cast<double>(n_b - success_b);
  ChiSquare out;
  if (a + c == 0.0 || b + d == 0.0) return out;
  const double n = a + b + c + d;
  const double cross = a * d - b * c;
  out.statistic = n * cross * cross / ((a + b) * (c + d) * (a + c) * (b + d));
  out.significant = *out.statistic > kChiSquareCritical05;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("invalid_argument", "median of no values");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

const TableCell& PersonaBidderTable::cell(Category row, std::string_view column) const {
  auto r = row_index(row);
  auto c = column_index(column);
  if (!r || !c) throw Error("invalid_argument", "no such table cell");
  return cells[*r][*c];
}

std::optional<std::size_t> PersonaBidderTable::row_index(Category c) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == c) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PersonaBidderTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

bool in_arm(const ExperimentRecord& r, IntentArm arm) {
  switch (arm) {
    case IntentArm::All: return true;
    case IntentArm::NoIntent: return !r.spec.intent;
    case IntentArm::Intent: return r.spec.intent;
  }
  return false;
}

Marker marker(double v, const std::optional<WeightedStats>& s) {
  if (!s) return 0;
  if (v > s->mean + s->std) return 1;
  if (v < s->mean - s->std) return -1;
  return 0;
}

std::optional<WeightedStats> stats_of(const std::vector<double>& values, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return std::nullopt;
  return weighted_mean_std(values, weights);
}

// Fills weights, summaries and markers once cells hold values and counts.
void finish(PersonaBidderTable& t) {
  const std::size_t R = t.rows.size(), C = t.columns.size();
  t.row_weight.assign(R, 0);
  t.column_weight.assign(C, 0);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      if (!t.cells[r][c].value) continue;
      t.row_weight[r] += t.cells[r][c].count;
      t.column_weight[c] += t.cells[r][c].count;
    }
  }

  t.row_stats.assign(R, std::nullopt);
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<double> v, w;
    for (std::size_t c = 0; c < C; ++c) {
      if (!t.cells[r][c].value) continue;
      v.push_back(*t.cells[r][c].value);
      w.push_back(static_cast<double>(t.column_weight[c]));
    }
    t.row_stats[r] = stats_of(v, w);
  }
  t.column_stats.assign(C, std::nullopt);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> v, w;
    for (std::size_t r = 0; r < R; ++r) {
      if (!t.cells[r][c].value) continue;
      v.push_back(*t.cells[r][c].value);
      w.push_back(static_cast<double>(t.row_weight[r]));
    }
    t.column_stats[c] = stats_of(v, w);
  }

  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      TableCell& cell = t.cells[r][c];
      if (!cell.value) continue;
      cell.among_categories = marker(*cell.value, t.column_stats[c]);
      cell.among_bidders = marker(*cell.value, t.row_stats[r]);
    }
  }

  {
    std::vector<double> v, w;
    for (std::size_t r = 0; r < R; ++r) {
      if (!t.row_stats[r]) continue;
      v.push_back(t.row_stats[r]->mean);
      w.push_back(static_cast<double>(t.row_weight[r]));
    }
    t.persona_summary = stats_of(v, w);
    t.row_avg_marker.assign(R, 0);
    for (std::size_t r = 0; r < R; ++r) {
      if (t.row_stats[r]) t.row_avg_marker[r] = marker(t.row_stats[r]->mean, t.persona_summary);
    }
  }
  {
    std::vector<double> v, w;
    for (std::size_t c = 0; c < C; ++c) {
      if (!t.column_stats[c]) continue;
      v.push_back(t.column_stats[c]->mean);
      w.push_back(static_cast<double>(t.column_weight[c]));
    }
    t.bidder_summary = stats_of(v, w);
    t.column_avg_marker.assign(C, 0);
    for (std::size_t c = 0; c < C; ++c) {
      if (t.column_stats[c]) t.column_avg_marker[c] = marker(t.column_stats[c]->mean, t.bidder_summary);
    }
  }
}

// Positive bids per (category, bidder) of the selected arm.
using BidGroups = std::map<Category, std::vector<std::vector<double>>>;

BidGroups positive_bids(const Dataset& d, IntentArm arm) {
  BidGroups g;
  for (const auto& r : d.records) {
    if (!in_arm(r, arm)) continue;
    auto& row = g[r.spec.category];
    row.resize(d.bidder_names.size());
    for (std::size_t b = 0; b < d.bidder_names.size(); ++b) {
      if (!r.bids[b].is_zero()) row[b].push_back(r.bids[b].cpm());
    }
  }
  return g;
}

PersonaBidderTable skeleton(std::string title, const std::vector<std::string>& columns,
                            const std::vector<Category>& rows) {
  PersonaBidderTable t;
  t.title = std::move(title);
  t.columns = columns;
  t.rows = rows;
  t.cells.assign(rows.size(), std::vector<TableCell>(columns.size()));
  return t;
}

std::vector<Category> keys(const BidGroups& g) {
  std::vector<Category> out;
  for (const auto& [c, _] : g) out.push_back(c);
  return out;
}

}  // namespace

Dataset filter_arm(const Dataset& dataset, IntentArm arm) {
  Dataset out;
  out.tracker_names = dataset.tracker_names;
  out.bidder_names = dataset.bidder_names;
  for (const auto& r : dataset.records) {
    if (in_arm(r, arm)) out.records.push_back(r);
  }
  return out;
}

PersonaBidderTable median_cpm_table(const Dataset& dataset, IntentArm arm) {
  if (dataset.records.empty()) throw Error("empty_dataset", "dataset has no records");
  const BidGroups g = positive_bids(dataset, arm);
  PersonaBidderTable t = skeleton("Median CPM (USD)", dataset.bidder_names, keys(g));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = g.at(t.rows[r]);
    for (std::size_t b = 0; b < t.columns.size(); ++b) {
      TableCell& cell = t.cells[r][b];
      cell.count = row[b].size();
      if (!row[b].empty()) cell.value = median(row[b]);
    }
  }
  finish(t);
  return t;
}

PersonaBidderTable intent_ratio_table(const Dataset& no_intent, const Dataset& intent) {
  if (no_intent.bidder_names != intent.bidder_names) {
    throw Error("invalid_argument", "intent and no-intent datasets cover different bidders");
  }
  const BidGroups base = positive_bids(no_intent, IntentArm::All);
  const BidGroups lifted = positive_bids(intent, IntentArm::All);
  std::vector<Category> rows;
  for (const auto& [c, _] : base) {
    if (lifted.contains(c)) rows.push_back(c);
  }
  PersonaBidderTable t = skeleton("Intent / no-intent median ratio", no_intent.bidder_names, rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& den = base.at(rows[r]);
    const auto& num = lifted.at(rows[r]);
    for (std::size_t b = 0; b < t.columns.size(); ++b) {
      TableCell& cell = t.cells[r][b];
      cell.count = den[b].size() + num[b].size();
      if (den[b].empty() || num[b].empty()) continue;
      const double d = median(den[b]);
      if (d == 0.0) continue;
      cell.value = median(num[b]) / d;
    }
  }
  finish(t);
  return t;
}

PersonaBidderTable winning_bid_table(const Dataset& dataset, IntentArm arm) {
  if (dataset.records.empty()) throw Error("empty_dataset", "dataset has no records");
  std::map<Category, std::vector<std::vector<double>>> wins;
  for (const auto& r : dataset.records) {
    if (!in_arm(r, arm)) continue;
    auto& row = wins[r.spec.category];
    row.resize(dataset.bidder_names.size());
    if (r.winner) row[*r.winner].push_back(r.price.cpm());
  }
  std::vector<Category> rows;
  for (const auto& [c, _] : wins) rows.push_back(c);
  PersonaBidderTable t = skeleton("Median winning CPM (USD)", dataset.bidder_names, rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = wins.at(rows[r]);
    for (std::size_t b = 0; b < t.columns.size(); ++b) {
      TableCell& cell = t.cells[r][b];
      cell.count = row[b].size();
      if (!row[b].empty()) cell.value = median(row[b]);
    }
  }
  finish(t);
  return t;
}

namespace {

void complete(ZeroBidRow& row) {
  auto pct = [](std::size_t z, std::size_t n) -> std::optional<double> {
    if (n == 0) return std::nullopt;
    return 100.0 * static_cast<double>(z) / static_cast<double>(n);
  };
  row.pct_no_intent = pct(row.zeros_no_intent, row.bids_no_intent);
  row.pct_intent = pct(row.zeros_intent, row.bids_intent);
  row.pct_total = pct(row.zeros_no_intent + row.zeros_intent, row.bids_no_intent + row.bids_intent);
  if (row.bids_no_intent && row.bids_intent) {
    row.test = chi_square_two_proportions(row.zeros_no_intent, row.bids_no_intent, row.zeros_intent, row.bids_intent);
  }
}

}  // namespace

ZeroBidSummary zero_bid_stats(const Dataset& dataset) {
  if (dataset.records.empty()) throw Error("empty_dataset", "dataset has no records");
  ZeroBidSummary s;
  s.bidders.resize(dataset.bidder_names.size());
  s.overall.bidder = "Total";
  for (std::size_t b = 0; b < dataset.bidder_names.size(); ++b) s.bidders[b].bidder = dataset.bidder_names[b];
  for (const auto& r : dataset.records) {
    for (std::size_t b = 0; b < dataset.bidder_names.size(); ++b) {
      ZeroBidRow& row = s.bidders[b];
      const bool zero = r.bids[b].is_zero();
      if (r.spec.intent) {
        ++row.bids_intent;
        row.zeros_intent += zero;
        ++s.overall.bids_intent;
        s.overall.zeros_intent += zero;
      } else {
        ++row.bids_no_intent;
        row.zeros_no_intent += zero;
        ++s.overall.bids_no_intent;
        s.overall.zeros_no_intent += zero;
      }
    }
  }
  for (auto& row : s.bidders) complete(row);
  complete(s.overall);
  return s;
}

}  // namespace kashf
