#pragma once

// Independent reference implementations used to cross-check the library.
// They favour directness over speed and share no code with core/.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "kashf/forest.hpp"
#include "kashf/inference.hpp"

namespace kashf::oracle {

struct Row {
  std::vector<bool> x;
  int y = 0;
};

inline double entropy_rows(const std::vector<Row>& rows) {
  std::array<double, 3> c{};
  for (const auto& r : rows) c[static_cast<std::size_t>(r.y)] += 1;
  double h = 0;
  for (double n : c) {
    if (n > 0) h -= n / static_cast<double>(rows.size()) * std::log2(n / static_cast<double>(rows.size()));
  }
  return h;
}

inline double gain_rows(const std::vector<Row>& rows, std::size_t f) {
  std::vector<Row> on, off;
  for (const auto& r : rows) (r.x[f] ? on : off).push_back(r);
  double g = entropy_rows(rows);
  if (!on.empty()) g -= static_cast<double>(on.size()) / static_cast<double>(rows.size()) * entropy_rows(on);
  if (!off.empty()) g -= static_cast<double>(off.size()) / static_cast<double>(rows.size()) * entropy_rows(off);
  return g;
}

struct Node {
  int feature = -1;
  double gain = 0;
  std::size_t samples = 0;
  std::array<double, 3> distribution{};
  std::unique_ptr<Node> off, on;
};

/// Exhaustive greedy tree: every feature evaluated at every node; the largest
/// gain wins (gains within 1e-9 count as equal, lowest index first).
inline std::unique_ptr<Node> greedy_tree(const std::vector<Row>& rows, std::size_t width, std::size_t max_depth,
                                         std::size_t min_split, std::size_t depth = 0) {
  auto node = std::make_unique<Node>();
  node->samples = rows.size();
  for (const auto& r : rows) node->distribution[static_cast<std::size_t>(r.y)] += 1.0 / static_cast<double>(rows.size());
  if (entropy_rows(rows) == 0.0 || depth >= max_depth || rows.size() < min_split) return node;
  int best = -1;
  double best_gain = 1e-9;
  for (std::size_t f = 0; f < width; ++f) {
    const double g = gain_rows(rows, f);
    if (g > best_gain + 1e-9 || (best < 0 && g > 1e-9)) {
      best = static_cast<int>(f);
      best_gain = g;
    }
  }
  if (best < 0) return node;
  std::vector<Row> on, off;
  for (const auto& r : rows) (r.x[static_cast<std::size_t>(best)] ? on : off).push_back(r);
  node->feature = best;
  node->gain = best_gain;
  node->off = greedy_tree(off, width, max_depth, min_split, depth + 1);
  node->on = greedy_tree(on, width, max_depth, min_split, depth + 1);
  return node;
}

/// Structural equality between a fitted tree and the oracle tree.
inline bool same_tree(const DecisionTree& t, std::uint32_t i, const Node& o) {
  const TreeNode& n = t.nodes().at(i);
  if (n.feature != o.feature || n.samples != o.samples) return false;
  for (std::size_t c = 0; c < 3; ++c) {
    if (std::abs(n.distribution[c] - o.distribution[c]) > 1e-12) return false;
  }
  if (n.is_leaf()) return true;
  if (std::abs(n.gain - o.gain) > 1e-9) return false;
  return same_tree(t, n.left, *o.off) && same_tree(t, n.right, *o.on);
}

inline FeatureMatrix to_matrix(const std::vector<Row>& rows, std::size_t width) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < width; ++f) names.push_back("f" + std::to_string(f));
  FeatureMatrix m(names);
  for (const auto& r : rows) m.add_row(r.x, static_cast<BidClass>(r.y));
  return m;
}

/// Pearson chi-square from observed vs. expected counts of the 2x2 table.
inline std::optional<double> chi_square_table(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const std::array<double, 2> row{a + b, c + d};
  const std::array<double, 2> col{a + c, b + d};
  if (row[0] == 0 || row[1] == 0 || col[0] == 0 || col[1] == 0) return std::nullopt;
  const std::array<std::array<double, 2>, 2> obs{{{a, b}, {c, d}}};
  double chi = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double e = row[i] * col[j] / n;
      chi += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  }
  return chi;
}

/// Mean and population deviation in extended precision, then the three-way
/// class rule. Values within `slack` of a boundary are reported as ambiguous.
struct Discretized {
  double mu = 0, sigma = 0;
  std::vector<BidClass> classes;
  std::vector<bool> ambiguous;
};

inline Discretized discretize_direct(const std::vector<double>& v, double slack = 1e-6) {
  Discretized out;
  long double sum = 0;
  for (double x : v) sum += x;
  const long double mu = sum / static_cast<long double>(v.size());
  long double ss = 0;
  for (double x : v) ss += (x - mu) * (x - mu);
  const long double sigma = std::sqrt(ss / static_cast<long double>(v.size()));
  out.mu = static_cast<double>(mu);
  out.sigma = static_cast<double>(sigma);
  for (double x : v) {
    const long double lo = mu - sigma, hi = mu + sigma;
    out.classes.push_back(x < lo ? BidClass::Low : x > hi ? BidClass::High : BidClass::Medium);
    out.ambiguous.push_back(sigma > 0 && (std::abs(x - lo) < slack || std::abs(x - hi) < slack));
  }
  return out;
}

/// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace kashf::oracle
