#include "kashf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kashf {

using ordered_json = nlohmann::ordered_json;

BidClass classify(Money bid, const ClassBoundaries& b) noexcept {
  const auto v = static_cast<double>(bid.micros());
  if (v < b.mu - b.sigma) return BidClass::Low;
  if (v > b.mu + b.sigma) return BidClass::High;
  return BidClass::Medium;
}

Discretization discretize(std::span<const Money> bids, std::optional<ClassBoundaries> boundaries) {
  if (bids.empty()) throw Error("invalid_argument", "cannot discretize an empty bid list");
  Discretization out;
  if (boundaries) {
    out.boundaries = *boundaries;
  } else {
    const auto n = static_cast<double>(bids.size());
    double mean = 0.0;
    for (Money m : bids) mean += static_cast<double>(m.micros());
    mean /= n;
    double var = 0.0;
    for (Money m : bids) {
      const double d = static_cast<double>(m.micros()) - mean;
      var += d * d;
    }
    out.boundaries = ClassBoundaries{mean, std::sqrt(var / n)};
  }
  out.classes.reserve(bids.size());
  for (Money m : bids) out.classes.push_back(classify(m, out.boundaries));
  return out;
}

BidderMatrix build_feature_matrix(const Dataset& dataset, std::string_view bidder, const FeatureOptions& options) {
  if (dataset.records.empty()) throw Error("empty_dataset", "dataset has no records");
  auto b = dataset.bidder_index(bidder);
  if (!b) throw Error("bidder_not_found", "bidder " + std::string(bidder) + " not found in dataset");

  BidderMatrix out;
  std::vector<Money> bids;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    const Money bid = dataset.records[r].bids.at(*b);
    if (!options.include_zero_bids && bid.is_zero()) continue;
    bids.push_back(bid);
    out.records.push_back(r);
  }
  if (bids.empty()) throw Error("single_class", "bidder " + std::string(bidder) + " placed no usable bids");

  Discretization d = discretize(bids);
  out.boundaries = d.boundaries;
  out.matrix = FeatureMatrix(dataset.tracker_names);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.matrix.add_row(dataset.records[out.records[i]].exposure, d.classes[i]);
  }
  return out;
}

std::vector<TrackerScore> BidderInference::top(std::size_t k) const {
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()))};
}

BidderInference infer_relationships(const Dataset& dataset, std::string_view bidder, const InferenceParams& params) {
  BidderMatrix bm = build_feature_matrix(dataset, bidder, params.features);
  if (bm.matrix.distinct_labels() < 2) {
    throw Error("single_class", "bids insensitive to trackers for bidder " + std::string(bidder));
  }

  BidderInference out;
  out.bidder = std::string(bidder);
  out.rows = bm.matrix.size();
  out.class_counts = bm.matrix.class_counts();
  out.boundaries = bm.boundaries;

  const std::uint64_t stream = derive_seed(params.seed, fnv1a(bidder));
  RandomForest forest = fit_forest(bm.matrix, params.forest, derive_seed(stream, 0));
  std::vector<std::size_t> order(forest.importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return forest.importance[a] > forest.importance[b]; });
  for (std::size_t f : order) out.ranking.push_back({forest.feature_names[f], forest.importance[f]});

  if (params.folds > 0) out.cv = cross_validate(bm.matrix, params.folds, params.forest, derive_seed(stream, 1));
  return out;
}

InferenceReport infer_all(const Dataset& dataset, const InferenceParams& params, const std::vector<std::string>& only) {
  InferenceReport report;
  report.top_k = params.top_k;
  for (const auto& name : only) {
    if (!dataset.bidder_index(name)) throw Error("bidder_not_found", "bidder " + name + " not found in dataset");
  }
  for (const auto& name : dataset.bidder_names) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    try {
      report.bidders.push_back(infer_relationships(dataset, name, params));
    } catch (const Error& e) {
      if (e.code() != "single_class") throw;
      BidderInference bi;
      bi.bidder = name;
      bi.insensitive = true;
      report.bidders.push_back(std::move(bi));
    }
  }
  return report;
}

std::vector<NamedEdge> named_edges(const Scenario& scenario) {
  std::vector<NamedEdge> out;
  for (const auto& e : scenario.sharing_graph) {
    out.push_back({scenario.org(e.tracker).name, scenario.org(e.bidder).name, e.channel});
  }
  return out;
}

EvaluationMetrics evaluate(const InferenceReport& report, std::span<const NamedEdge> graph, const SyncPairs& sync_pairs) {
  EvaluationMetrics m;
  m.top_k = report.top_k;
  m.true_edges = graph.size();
  m.sync_pairs = sync_pairs.size();

  auto truth = [&](const std::string& tracker, const std::string& bidder) -> const NamedEdge* {
    for (const auto& e : graph) {
      if (e.tracker == tracker && e.bidder == bidder) return &e;
    }
    return nullptr;
  };
  for (const auto& [pair, count] : sync_pairs) {
    const NamedEdge* e = truth(pair.first, pair.second);
    if (e && e->channel == Channel::ClientSide) ++m.sync_pairs_client_side;
  }

  double precision_sum = 0.0;
  for (const auto& bi : report.bidders) {
    BidderMetrics bm;
    bm.bidder = bi.bidder;
    bm.true_edges = static_cast<std::size_t>(
        std::count_if(graph.begin(), graph.end(), [&](const NamedEdge& e) { return e.bidder == bi.bidder; }));
    const auto top = bi.insensitive ? std::vector<TrackerScore>{} : bi.top(report.top_k);
    for (std::size_t r = 0; r < top.size(); ++r) {
      EdgeFlag f;
      f.bidder = bi.bidder;
      f.rank = r + 1;
      f.tracker = top[r].tracker;
      f.importance = top[r].importance;
      f.detected_by_cookie_sync = sync_pairs.contains({f.tracker, f.bidder});
      if (const NamedEdge* e = truth(f.tracker, f.bidder)) {
        f.in_ground_truth = true;
        f.channel = e->channel;
        ++bm.hits;
        ++m.recovered;
        if (e->channel == Channel::ClientSide) {
          ++m.recovered_client_side;
        } else {
          ++m.recovered_server_side;
          if (!f.detected_by_cookie_sync) ++m.server_side_recovered;
        }
      }
      m.flags.push_back(std::move(f));
    }
    bm.precision = report.top_k ? static_cast<double>(bm.hits) / static_cast<double>(report.top_k) : 0.0;
    precision_sum += bm.precision;
    m.per_bidder.push_back(std::move(bm));
  }
  if (!report.bidders.empty() && !graph.empty()) {
    m.precision_at_k = precision_sum / static_cast<double>(report.bidders.size());
  }
  if (!graph.empty()) m.recall = static_cast<double>(m.recovered) / static_cast<double>(graph.size());
  return m;
}

namespace {

const char* const kClassNames[kBidClassCount] = {"Low", "Medium", "High"};

ordered_json bidder_to_json(const BidderInference& b) {
  ordered_json j;
  j["bidder"] = b.bidder;
  j["insensitive"] = b.insensitive;
  j["rows"] = b.rows;
  j["class_counts"] = ordered_json::object();
  for (std::size_t c = 0; c < kBidClassCount; ++c) j["class_counts"][kClassNames[c]] = b.class_counts[c];
  j["mu_micros"] = b.boundaries.mu;
  j["sigma_micros"] = b.boundaries.sigma;
  j["cv_folds"] = b.cv.folds;
  j["cv_accuracy"] = b.cv.accuracy;
  ordered_json recall = ordered_json::object();
  for (std::size_t c = 0; c < kBidClassCount; ++c) {
    recall[kClassNames[c]] = b.cv.recall[c] ? ordered_json(*b.cv.recall[c]) : ordered_json(nullptr);
  }
  j["cv_recall"] = std::move(recall);
  j["cv_confusion"] = b.cv.confusion;
  ordered_json ranking = ordered_json::array();
  for (const auto& s : b.ranking) ranking.push_back({{"tracker", s.tracker}, {"importance", s.importance}});
  j["ranking"] = std::move(ranking);
  return j;
}

BidderInference bidder_from_json(const ordered_json& j) {
  BidderInference b;
  b.bidder = j.at("bidder").get<std::string>();
  b.insensitive = j.at("insensitive").get<bool>();
  b.rows = j.at("rows").get<std::size_t>();
  for (std::size_t c = 0; c < kBidClassCount; ++c) b.class_counts[c] = j.at("class_counts").at(kClassNames[c]).get<std::size_t>();
  b.boundaries.mu = j.at("mu_micros").get<double>();
  b.boundaries.sigma = j.at("sigma_micros").get<double>();
  b.cv.folds = j.at("cv_folds").get<std::size_t>();
  b.cv.accuracy = j.at("cv_accuracy").get<double>();
  for (std::size_t c = 0; c < kBidClassCount; ++c) {
    const auto& r = j.at("cv_recall").at(kClassNames[c]);
    if (!r.is_null()) b.cv.recall[c] = r.get<double>();
  }
  b.cv.confusion = j.at("cv_confusion").get<decltype(b.cv.confusion)>();
  for (const auto& s : j.at("ranking")) {
    b.ranking.push_back({s.at("tracker").get<std::string>(), s.at("importance").get<double>()});
  }
  return b;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_to_json(const InferenceReport& report) {
  ordered_json j;
  j["top_k"] = report.top_k;
  ordered_json bidders = ordered_json::array();
  for (const auto& b : report.bidders) bidders.push_back(bidder_to_json(b));
  j["bidders"] = std::move(bidders);
  return j.dump(2) + "\n";
}

InferenceReport report_from_json(const std::string& text) {
  try {
    auto j = ordered_json::parse(text);
    InferenceReport r;
    r.top_k = j.at("top_k").get<std::size_t>();
    for (const auto& b : j.at("bidders")) r.bidders.push_back(bidder_from_json(b));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("inference report: ") + e.what());
  }
}

std::string accuracy_csv(const InferenceReport& report) {
  std::ostringstream out;
  out << "bidder,accuracy,recall_low,recall_medium,recall_high,rows,low,medium,high\n";
  for (const auto& b : report.bidders) {
    out << csv_field(b.bidder) << ',';
    if (b.insensitive) {
      out << "N/A,N/A,N/A,N/A," << b.rows << ",0,0,0\n";
      continue;
    }
    out << fmt(b.cv.accuracy, 4);
    for (const auto& r : b.cv.recall) out << ',' << (r ? fmt(*r, 4) : std::string("N/A"));
    out << ',' << b.rows;
    for (auto c : b.class_counts) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

std::string ranking_csv(const InferenceReport& report) {
  std::ostringstream out;
  out << "bidder";
  for (std::size_t i = 1; i <= report.top_k; ++i) out << ",tracker_" << i << ",importance_" << i;
  out << '\n';
  for (const auto& b : report.bidders) {
    out << csv_field(b.bidder);
    const auto top = b.insensitive ? std::vector<TrackerScore>{} : b.top(report.top_k);
    for (std::size_t i = 0; i < report.top_k; ++i) {
      if (i < top.size()) {
        out << ',' << csv_field(top[i].tracker) << ',' << fmt(top[i].importance);
      } else {
        out << ",-,";
      }
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::string flag_text(const EdgeFlag& f) {
  std::string s = f.in_ground_truth ? std::string(to_string(*f.channel)) : std::string("unconfirmed");
  if (f.detected_by_cookie_sync) s += "+sync";
  return s;
}

}  // namespace

std::string influence_csv(const EvaluationMetrics& m) {
  std::ostringstream out;
  out << "bidder";
  for (std::size_t i = 1; i <= m.top_k; ++i) out << ",tracker_" << i << ",flag_" << i;
  out << '\n';
  for (const auto& b : m.per_bidder) {
    out << csv_field(b.bidder);
    std::size_t written = 0;
    for (const auto& f : m.flags) {
      if (f.bidder != b.bidder) continue;
      out << ',' << csv_field(f.tracker) << ',' << flag_text(f);
      ++written;
    }
    for (; written < m.top_k; ++written) out << ",-,-";
    out << '\n';
  }
  return out.str();
}

std::string metrics_to_json(const EvaluationMetrics& m) {
  ordered_json j;
  j["top_k"] = m.top_k;
  j["precision_at_k"] = m.precision_at_k;
  j["recall"] = m.recall ? ordered_json(*m.recall) : ordered_json(nullptr);
  j["true_edges"] = m.true_edges;
  j["recovered"] = m.recovered;
  j["recovered_client_side"] = m.recovered_client_side;
  j["recovered_server_side"] = m.recovered_server_side;
  j["server_side_recovered"] = m.server_side_recovered;
  j["sync_pairs"] = m.sync_pairs;
  j["sync_pairs_client_side"] = m.sync_pairs_client_side;
  ordered_json per = ordered_json::array();
  for (const auto& b : m.per_bidder) {
    per.push_back({{"bidder", b.bidder}, {"true_edges", b.true_edges}, {"hits", b.hits}, {"precision", b.precision}});
  }
  j["per_bidder"] = std::move(per);
  ordered_json flags = ordered_json::array();
  for (const auto& f : m.flags) {
    flags.push_back({{"bidder", f.bidder},
                     {"rank", f.rank},
                     {"tracker", f.tracker},
                     {"importance", f.importance},
                     {"in_ground_truth", f.in_ground_truth},
                     {"channel", f.channel ? ordered_json(to_string(*f.channel)) : ordered_json(nullptr)},
                     {"detected_by_cookie_sync", f.detected_by_cookie_sync}});
  }
  j["flags"] = std::move(flags);
  return j.dump(2) + "\n";
}

std::string sync_pairs_csv(const SyncPairs& pairs) {
  std::ostringstream out;
  out << "org_a,org_b,evidence_count\n";
  for (const auto& [pair, count] : pairs) {
    out << csv_field(pair.first) << ',' << csv_field(pair.second) << ',' << count << '\n';
  }
  return out.str();
}

}  // namespace kashf
