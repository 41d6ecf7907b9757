// Command-line front end: scenario generation, campaigns, analysis,
// inference and evaluation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kashf/commands.hpp"
#include "kashf/experiment.hpp"
#include "kashf/syncdetect.hpp"

namespace {

struct Flags {
  std::string config;
  std::string scenario, dataset, report, logs, out;
  std::uint64_t seed = 0;
  std::size_t experiments = 0, top_k = 0, folds = 0, trees = 0, block_set_size = 0;
  bool noise_free = false;
  bool include_zero_bids = true;
  std::vector<std::string> bidders;
};

struct Bound {
  CLI::Option* config = nullptr;
  CLI::Option* scenario = nullptr;
  CLI::Option* dataset = nullptr;
  CLI::Option* report = nullptr;
  CLI::Option* logs = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* experiments = nullptr;
  CLI::Option* top_k = nullptr;
  CLI::Option* folds = nullptr;
  CLI::Option* trees = nullptr;
  CLI::Option* block_set_size = nullptr;
  CLI::Option* noise_free = nullptr;
  CLI::Option* include_zero_bids = nullptr;
  CLI::Option* bidders = nullptr;
};

enum Need : unsigned {
  kScenario = 1,
  kDataset = 2,
  kReport = 4,
  kLogs = 8,
  kCampaign = 16,
  kInference = 32,
  kSeed = 64,
};

Bound bind(CLI::App* app, Flags& f, unsigned need) {
  Bound b;
  b.config = app->add_option("--config", f.config, "JSON run configuration; flags override it");
  b.out = app->add_option("--out", f.out, "Output directory");
  if (need & kSeed) b.seed = app->add_option("--seed", f.seed, "Master seed (required)");
  if (need & kScenario) {
    b.scenario = app->add_option("--scenario", f.scenario, "Scenario JSON file");
    b.noise_free = app->add_flag("--noise-free", f.noise_free, "Disable bid noise");
  }
  if (need & kDataset) b.dataset = app->add_option("--dataset", f.dataset, "Dataset JSONL file");
  if (need & kReport) b.report = app->add_option("--report", f.report, "Inference report JSON");
  if (need & kLogs) b.logs = app->add_option("--logs", f.logs, "Request log JSONL file");
  if (need & kCampaign) {
    b.experiments = app->add_option("--experiments", f.experiments, "Number of experiments");
    b.block_set_size = app->add_option("--block-set-size", f.block_set_size, "Tracker orgs blocked per persona");
  }
  if (need & kInference) {
    b.top_k = app->add_option("--top-k", f.top_k, "Trackers reported per bidder");
    b.folds = app->add_option("--folds", f.folds, "Cross-validation folds (0 disables)");
    b.trees = app->add_option("--trees", f.trees, "Trees per forest");
    b.include_zero_bids = app->add_option("--include-zero-bids", f.include_zero_bids, "Keep zero bids as rows (true/false)");
    b.bidders = app->add_option("--bidder", f.bidders, "Restrict inference to these bidders");
  }
  return b;
}

bool given(const CLI::Option* o) { return o && o->count() > 0; }

kashf::RunConfig resolve(const Bound& b, const Flags& f) {
  kashf::RunConfig cfg;
  if (given(b.config)) cfg = kashf::load_run_config(f.config);
  if (given(b.out)) cfg.out_dir = f.out;
  if (given(b.seed)) cfg.seed = f.seed;
  if (given(b.scenario)) cfg.scenario_path = f.scenario;
  if (given(b.noise_free)) cfg.noise_free = f.noise_free;
  if (given(b.dataset)) cfg.dataset_path = f.dataset;
  if (given(b.report)) cfg.report_path = f.report;
  if (given(b.logs)) cfg.logs_path = f.logs;
  if (given(b.experiments)) cfg.n_experiments = f.experiments;
  if (given(b.block_set_size)) cfg.block_set_size = f.block_set_size;
  if (given(b.top_k)) cfg.top_k = f.top_k;
  if (given(b.folds)) cfg.folds = f.folds;
  if (given(b.trees)) cfg.forest.n_trees = f.trees;
  if (given(b.include_zero_bids)) cfg.include_zero_bids = f.include_zero_bids;
  if (given(b.bidders)) cfg.bidders = f.bidders;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kashf: header-bidding ecosystem simulator and tracker-sharing inference"};
  app.set_version_flag("--version", std::string(kashf::version()));
  app.require_subcommand(1);

  Flags flags;
  struct Command {
    CLI::App* app;
    Bound bound;
    void (*run)(const kashf::RunConfig&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, unsigned need, void (*fn)(const kashf::RunConfig&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.push_back({sub, bind(sub, flags, need), fn});
  };
  add("gen-scenario", "Generate a seeded scenario", kScenario | kSeed, kashf::cmd_gen_scenario);
  add("run", "Run a campaign against a scenario", kScenario | kCampaign | kSeed, kashf::cmd_run);
  add("analyze", "Persona, intent, winning-bid and zero-bid tables", kDataset, kashf::cmd_analyze);
  add("infer", "Train per-bidder forests and rank trackers", kDataset | kInference | kSeed, kashf::cmd_infer);
  add("evaluate", "Compare an inference report with ground truth and cookie syncs",
      kScenario | kReport | kLogs, kashf::cmd_evaluate);
  add("pipeline", "gen-scenario, run, analyze, infer and evaluate in one go",
      kScenario | kCampaign | kInference | kSeed, kashf::cmd_pipeline);

  std::string sync_logs;
  CLI::App* sync = app.add_subcommand("detect-sync", "Print cookie-sync pairs found in a log file as CSV");
  sync->add_option("--logs", sync_logs, "Request log JSONL file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sync->parsed()) {
      kashf::CookieSyncDetector detector;
      kashf::read_logs(sync_logs, [&](const std::string&, const kashf::RequestLog& log) {
        for (const auto& r : log) detector.observe(r);
      });
      std::cout << kashf::sync_pairs_csv(detector.pairs());
      return 0;
    }
    for (const auto& c : commands) {
      if (c.app->parsed()) c.run(resolve(c.bound, flags));
    }
  } catch (const kashf::Error& e) {
    std::cerr << "error code=" << e.code() << " message=" << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error code=internal message=" << e.what() << '\n';
    return 2;
  }
  return 0;
}
