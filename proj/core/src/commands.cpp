#include "kashf/commands.hpp"

#include <cstdio>
#include <set>

#include "json.hpp"
#include "kashf/analytics.hpp"
#include "kashf/experiment.hpp"
#include "kashf/io.hpp"
#include "kashf/syncdetect.hpp"

#ifndef KASHF_VERSION
#define KASHF_VERSION "0.0.0"
#endif

namespace kashf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view version() noexcept { return KASHF_VERSION; }

std::uint64_t campaign_seed(std::uint64_t master) { return derive_seed(master, fnv1a("campaign")); }
std::uint64_t inference_seed(std::uint64_t master) { return derive_seed(master, fnv1a("inference")); }

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json scenario_config_json(const ScenarioConfig& c) {
  ordered_json j;
  j["trackers"] = c.tracker_names;
  j["bidders"] = c.bidder_names;
  j["sites_per_category"] = c.sites_per_category;
  j["hb_sites"] = c.hb_sites;
  j["tracker_presence"] = c.tracker_presence;
  j["edges_per_bidder"] = c.edges_per_bidder;
  j["server_side_fraction"] = c.server_side_fraction;
  j["edge_strength"] = c.edge_strength;
  if (c.planted_edges) {
    ordered_json edges = ordered_json::array();
    for (const auto& e : *c.planted_edges) {
      edges.push_back({{"tracker", e.tracker}, {"bidder", e.bidder}, {"channel", to_string(e.channel)}, {"strength", e.strength}});
    }
    j["planted_edges"] = std::move(edges);
  }
  if (c.noise_sigma) j["noise_sigma"] = *c.noise_sigma;
  j["noise_free"] = c.noise_free;
  j["hb_timeout_ms"] = c.hb_timeout_ms;
  j["hb_floor_micros"] = c.hb_floor.micros();
  j["price_granularity_micros"] = c.price_granularity.micros();
  return j;
}

template <typename T>
void take(const ordered_json& j, std::string_view key, T& into) {
  if (auto it = j.find(key); it != j.end()) into = it->template get<T>();
}

void reject_unknown(const ordered_json& j, const std::set<std::string>& known, std::string_view where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw Error("invalid_config", "unknown key '" + it.key() + "' in " + std::string(where));
  }
}

ScenarioConfig scenario_config_from(const ordered_json& j) {
  reject_unknown(j,
                 {"trackers", "bidders", "sites_per_category", "hb_sites", "tracker_presence", "edges_per_bidder",
                  "server_side_fraction", "edge_strength", "planted_edges", "noise_sigma", "noise_free",
                  "hb_timeout_ms", "hb_floor_micros", "price_granularity_micros"},
                 "scenario config");
  ScenarioConfig c = ScenarioConfig::defaults();
  take(j, "trackers", c.tracker_names);
  take(j, "bidders", c.bidder_names);
  take(j, "sites_per_category", c.sites_per_category);
  take(j, "hb_sites", c.hb_sites);
  take(j, "tracker_presence", c.tracker_presence);
  take(j, "edges_per_bidder", c.edges_per_bidder);
  take(j, "server_side_fraction", c.server_side_fraction);
  take(j, "edge_strength", c.edge_strength);
  take(j, "noise_free", c.noise_free);
  take(j, "hb_timeout_ms", c.hb_timeout_ms);
  if (auto it = j.find("noise_sigma"); it != j.end()) c.noise_sigma = it->get<double>();
  if (auto it = j.find("hb_floor_micros"); it != j.end()) c.hb_floor = Money(it->get<std::int64_t>());
  if (auto it = j.find("price_granularity_micros"); it != j.end()) c.price_granularity = Money(it->get<std::int64_t>());
  if (auto it = j.find("planted_edges"); it != j.end()) {
    std::vector<PlantedEdge> edges;
    for (const auto& e : *it) {
      PlantedEdge pe;
      pe.tracker = e.at("tracker").get<std::string>();
      pe.bidder = e.at("bidder").get<std::string>();
      if (auto ch = e.find("channel"); ch != e.end()) {
        auto parsed = parse_channel(ch->get<std::string>());
        if (!parsed) throw Error("invalid_config", "unknown channel " + ch->get<std::string>());
        pe.channel = *parsed;
      }
      take(e, "strength", pe.strength);
      edges.push_back(std::move(pe));
    }
    c.planted_edges = std::move(edges);
  }
  return c;
}

// Output bookkeeping for one command.
class OutputDir {
 public:
  OutputDir(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("io", "cannot create " + dir_.string() + ": " + ec.message());
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& contents) {
    write_file(path(name), contents);
    files_.push_back(name);
  }

  void adopt(const std::string& name) { files_.push_back(name); }

  void finish(const RunConfig& cfg, const ordered_json& inputs, std::optional<std::uint64_t> seed) const {
    ordered_json m;
    m["tool"] = "kashf";
    m["version"] = version();
    m["command"] = command_;
    m["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    m["config_hash"] = cfg.hash();
    m["inputs"] = inputs;
    ordered_json files = ordered_json::array();
    for (const auto& name : files_) {
      const std::string contents = read_file(path(name));
      files.push_back({{"path", name}, {"bytes", contents.size()}, {"fnv1a", hex64(fnv1a(contents))}});
    }
    m["files"] = std::move(files);
    write_file(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> files_;
};

const fs::path& require(const std::optional<fs::path>& p, std::string_view what) {
  if (!p) throw Error("missing_input", std::string(what) + " path is required");
  return *p;
}

Scenario scenario_for(const RunConfig& cfg) {
  Scenario s = load_scenario(require(cfg.scenario_path, "scenario"));
  if (cfg.noise_free) {
    for (auto& p : s.bidder_profiles) {
      p.noise_sigma = 0.0;
      p.zero_rate_no_intent = 0.0;
      p.zero_rate_intent = 0.0;
    }
  }
  return s;
}

InferenceParams inference_params(const RunConfig& cfg, std::uint64_t seed) {
  InferenceParams p;
  p.top_k = cfg.top_k;
  p.folds = cfg.folds;
  p.forest = cfg.forest;
  p.forest.workers = cfg.workers;
  p.features.include_zero_bids = cfg.include_zero_bids;
  p.seed = seed;
  return p;
}

std::string importance_long_csv(const InferenceReport& report) {
  std::string out = "bidder,rank,tracker,importance\n";
  for (const auto& b : report.bidders) {
    for (std::size_t i = 0; i < b.ranking.size(); ++i) {
      char num[32];
      std::snprintf(num, sizeof num, "%.10f", b.ranking[i].importance);
      out += b.bidder + "," + std::to_string(i + 1) + "," + b.ranking[i].tracker + "," + num + "\n";
    }
  }
  return out;
}

void generate_into(const RunConfig& cfg, OutputDir& out, std::uint64_t seed) {
  ScenarioConfig sc = cfg.scenario;
  if (cfg.noise_free) sc.noise_free = true;
  out.write("scenario.json", scenario_to_json(generate_scenario(sc, seed)));
}

void run_into(const RunConfig& cfg, const Scenario& scenario, OutputDir& out, std::uint64_t seed) {
  CampaignOptions opts;
  opts.block_set_size = cfg.block_set_size;
  opts.workers = cfg.workers;
  LogWriter logs(out.path("logs.jsonl"));
  Dataset d = run_campaign(scenario, cfg.n_experiments, seed, opts,
                           [&](const std::string& ref, const RequestLog& log) { logs.write(ref, log); });
  logs.close();
  save_dataset(d, out.path("dataset.jsonl"));
  out.adopt("dataset.jsonl");
  out.adopt("logs.jsonl");
}

void analyze_into(const Dataset& d, OutputDir& out) {
  const Dataset no_intent = filter_arm(d, IntentArm::NoIntent);
  const Dataset intent = filter_arm(d, IntentArm::Intent);

  if (!no_intent.records.empty()) {
    auto medians = median_cpm_table(no_intent, IntentArm::All);
    medians.title = "Median CPM (USD), no-intent personas";
    out.write("median_cpm.csv", table_to_csv(medians));
    out.write("median_cpm.txt", table_to_text(medians));
    auto winning = winning_bid_table(no_intent, IntentArm::All);
    winning.title = "Median winning CPM (USD), no-intent personas";
    out.write("winning_bids.csv", table_to_csv(winning));
    out.write("winning_bids.txt", table_to_text(winning, 2, "-"));
  }
  if (!no_intent.records.empty() && !intent.records.empty()) {
    auto ratios = intent_ratio_table(no_intent, intent);
    out.write("intent_ratio.csv", table_to_csv(ratios));
    out.write("intent_ratio.txt", table_to_text(ratios));
  }
  const auto z = zero_bid_stats(d);
  out.write("zero_bids.csv", zero_bids_csv(z));
  out.write("zero_bids.txt", zero_bids_text(z));
}

void infer_into(const RunConfig& cfg, const Dataset& d, OutputDir& out, std::uint64_t seed) {
  const InferenceReport report = infer_all(d, inference_params(cfg, seed), cfg.bidders);
  out.write("report.json", report_to_json(report));
  out.write("accuracy.csv", accuracy_csv(report));
  out.write("ranking.csv", ranking_csv(report));
  out.write("importance.csv", importance_long_csv(report));
}

void evaluate_into(const InferenceReport& report, const Scenario& scenario, const fs::path& logs, OutputDir& out) {
  CookieSyncDetector detector;
  read_logs(logs, [&](const std::string&, const RequestLog& log) {
    for (const auto& r : log) detector.observe(r);
  });
  const auto edges = named_edges(scenario);
  const EvaluationMetrics m = evaluate(report, edges, detector.pairs());
  out.write("sync_pairs.csv", sync_pairs_csv(detector.pairs()));
  out.write("metrics.json", metrics_to_json(m));
  out.write("influence.csv", influence_csv(m));
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw Error("missing_seed", "a --seed is required; no wall-clock default exists");
  return *seed;
}

std::string RunConfig::canonical_json() const {
  ordered_json j;
  j["scenario_path"] = scenario_path ? ordered_json(scenario_path->generic_string()) : ordered_json(nullptr);
  j["scenario_config"] = scenario_config_json(scenario);
  j["experiments"] = n_experiments;
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  j["top_k"] = top_k;
  j["folds"] = folds;
  j["trees"] = forest.n_trees;
  j["max_depth"] = forest.tree.max_depth;
  j["features_per_split"] = forest.tree.features_per_split;
  j["min_samples_split"] = forest.tree.min_samples_split;
  j["bootstrap"] = forest.bootstrap;
  j["noise_free"] = noise_free;
  j["block_set_size"] = block_set_size;
  j["include_zero_bids"] = include_zero_bids;
  j["bidders"] = bidders;
  return j.dump();
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical_json())); }

ScenarioConfig scenario_config_from_json(const std::string& text) {
  try {
    return scenario_config_from(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_config", std::string("scenario config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path, RunConfig cfg) {
  try {
    const auto j = ordered_json::parse(read_file(path));
    reject_unknown(j,
                   {"scenario", "scenario_config", "dataset", "report", "logs", "experiments", "seed", "top_k",
                    "folds", "trees", "max_depth", "features_per_split", "min_samples_split", "bootstrap", "out",
                    "noise_free", "block_set_size", "include_zero_bids", "bidders", "workers"},
                   path.string());
    auto take_path = [&](const char* key, std::optional<fs::path>& into) {
      if (auto it = j.find(key); it != j.end()) into = fs::path(it->get<std::string>());
    };
    take_path("scenario", cfg.scenario_path);
    take_path("dataset", cfg.dataset_path);
    take_path("report", cfg.report_path);
    take_path("logs", cfg.logs_path);
    if (auto it = j.find("scenario_config"); it != j.end()) cfg.scenario = scenario_config_from(*it);
    take(j, "experiments", cfg.n_experiments);
    if (auto it = j.find("seed"); it != j.end()) cfg.seed = it->get<std::uint64_t>();
    take(j, "top_k", cfg.top_k);
    take(j, "folds", cfg.folds);
    take(j, "trees", cfg.forest.n_trees);
    take(j, "max_depth", cfg.forest.tree.max_depth);
    take(j, "features_per_split", cfg.forest.tree.features_per_split);
    take(j, "min_samples_split", cfg.forest.tree.min_samples_split);
    take(j, "bootstrap", cfg.forest.bootstrap);
    if (auto it = j.find("out"); it != j.end()) cfg.out_dir = it->get<std::string>();
    take(j, "noise_free", cfg.noise_free);
    take(j, "block_set_size", cfg.block_set_size);
    take(j, "include_zero_bids", cfg.include_zero_bids);
    take(j, "bidders", cfg.bidders);
    take(j, "workers", cfg.workers);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_config", path.string() + ": " + e.what());
  }
  return cfg;
}

void cmd_gen_scenario(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  OutputDir out(cfg.out_dir, "gen-scenario");
  generate_into(cfg, out, seed);
  out.finish(cfg, ordered_json::object(), seed);
}

void cmd_run(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  const Scenario scenario = scenario_for(cfg);
  OutputDir out(cfg.out_dir, "run");
  run_into(cfg, scenario, out, seed);
  out.finish(cfg, {{"scenario", cfg.scenario_path->generic_string()}}, seed);
}

void cmd_analyze(const RunConfig& cfg) {
  const Dataset d = load_dataset(require(cfg.dataset_path, "dataset"));
  OutputDir out(cfg.out_dir, "analyze");
  analyze_into(d, out);
  out.finish(cfg, {{"dataset", cfg.dataset_path->generic_string()}}, std::nullopt);
}

void cmd_infer(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  const Dataset d = load_dataset(require(cfg.dataset_path, "dataset"));
  OutputDir out(cfg.out_dir, "infer");
  infer_into(cfg, d, out, seed);
  out.finish(cfg, {{"dataset", cfg.dataset_path->generic_string()}}, seed);
}

void cmd_evaluate(const RunConfig& cfg) {
  const InferenceReport report = report_from_json(read_file(require(cfg.report_path, "report")));
  const Scenario scenario = scenario_for(cfg);
  const fs::path& logs = require(cfg.logs_path, "logs");
  OutputDir out(cfg.out_dir, "evaluate");
  evaluate_into(report, scenario, logs, out);
  out.finish(cfg,
             {{"report", cfg.report_path->generic_string()},
              {"scenario", cfg.scenario_path->generic_string()},
              {"logs", logs.generic_string()}},
             std::nullopt);
}

void cmd_pipeline(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  const fs::path root = cfg.out_dir;

  OutputDir scen(root / "scenario", "gen-scenario");
  Scenario scenario;
  if (cfg.scenario_path) {
    scenario = scenario_for(cfg);
    scen.write("scenario.json", scenario_to_json(scenario));
  } else {
    generate_into(cfg, scen, seed);
    scenario = load_scenario(scen.path("scenario.json"));
  }
  scen.finish(cfg, ordered_json::object(), seed);

  OutputDir run(root / "run", "run");
  run_into(cfg, scenario, run, campaign_seed(seed));
  run.finish(cfg, {{"scenario", "../scenario/scenario.json"}}, campaign_seed(seed));

  const Dataset d = load_dataset(run.path("dataset.jsonl"));
  OutputDir analysis(root / "analysis", "analyze");
  analyze_into(d, analysis);
  analysis.finish(cfg, {{"dataset", "../run/dataset.jsonl"}}, std::nullopt);

  OutputDir inference(root / "inference", "infer");
  infer_into(cfg, d, inference, inference_seed(seed));
  inference.finish(cfg, {{"dataset", "../run/dataset.jsonl"}}, inference_seed(seed));

  const InferenceReport report = report_from_json(read_file(inference.path("report.json")));
  OutputDir evaluation(root / "evaluation", "evaluate");
  evaluate_into(report, scenario, run.path("logs.jsonl"), evaluation);
  evaluation.finish(cfg,
                    {{"report", "../inference/report.json"},
                     {"scenario", "../scenario/scenario.json"},
                     {"logs", "../run/logs.jsonl"}},
                    std::nullopt);

  OutputDir top(root, "pipeline");
  for (const char* sub : {"scenario", "run", "analysis", "inference", "evaluation"}) {
    top.adopt(std::string(sub) + "/manifest.json");
  }
  top.finish(cfg, ordered_json::object(), seed);
}

}  // namespace kashf
