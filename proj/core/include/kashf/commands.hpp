#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kashf/ecosystem.hpp"
#include "kashf/forest.hpp"
#include "kashf/inference.hpp"

namespace kashf {

std::string_view version() noexcept;

struct RunConfig {
  std::optional<std::filesystem::path> scenario_path;
  ScenarioConfig scenario = ScenarioConfig::defaults();
  std::optional<std::filesystem::path> dataset_path;
  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> logs_path;
  std::size_t n_experiments = 10'000;
  std::optional<std::uint64_t> seed;
  std::size_t top_k = 3;
  std::size_t folds = 10;
  ForestParams forest;
  std::filesystem::path out_dir = "out";
  bool noise_free = false;
  std::size_t block_set_size = 1;
  bool include_zero_bids = true;
  std::vector<std::string> bidders;  // empty -> all
  std::size_t workers = 0;

  /// Seed or Error("missing_seed").
  std::uint64_t require_seed() const;
  /// Canonical JSON of every field that affects outputs.
  std::string canonical_json() const;
  std::string hash() const;
};

/// Applies a JSON config file on top of `base`. Unknown keys are rejected
/// with Error("invalid_config").
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
ScenarioConfig scenario_config_from_json(const std::string& text);

/// Each command writes into cfg.out_dir and finishes with manifest.json
/// (config hash, seed, tool version and a content hash per output file).
void cmd_gen_scenario(const RunConfig& cfg);
void cmd_run(const RunConfig& cfg);
void cmd_analyze(const RunConfig& cfg);
void cmd_infer(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
/// gen-scenario, run, analyze, infer and evaluate into sub-directories.
void cmd_pipeline(const RunConfig& cfg);

/// Stage seeds used by the pipeline, derived from the master seed.
std::uint64_t campaign_seed(std::uint64_t master);
std::uint64_t inference_seed(std::uint64_t master);

}  // namespace kashf
