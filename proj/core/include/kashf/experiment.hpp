#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kashf/auction.hpp"
#include "kashf/ecosystem.hpp"
#include "kashf/syncdetect.hpp"

namespace kashf {

inline constexpr std::size_t kMaxPersonaSites = 10;
/// Simulated pause between persona construction and bid collection.
inline constexpr std::int64_t kPropagationWaitMs = 90LL * 60 * 1000;
/// Simulated dwell time per page view.
inline constexpr std::int64_t kPageViewMs = 30'000;

struct PersonaSpec {
  Category category = Category::Control;
  std::vector<std::string> sites;    // domains, visit order
  std::vector<std::string> blocked;  // tracker org names
  bool intent = false;
  std::uint64_t seed = 0;

  /// Throws Error("invalid_persona").
  void validate() const;
  bool operator==(const PersonaSpec&) const = default;
};

struct Persona {
  PersonaSpec spec;
  Observations observations;
  TokenJar tokens;
  std::int64_t clock_ms = 0;
};

struct PersonaTrace {
  Persona persona;
  RequestLog log;
};

/// Replays the persona's browsing history. Every unblocked tracker present on
/// a visited site records the visit. Throws Error("unknown_site") for domains
/// not in the scenario and Error("invalid_persona") for sites outside the
/// persona's category.
PersonaTrace build_persona(const Scenario& scenario, const PersonaSpec& spec);

/// Visits the intent sites. Throws Error("invalid_persona") when the spec
/// does not request intent.
PersonaTrace signal_intent(const Scenario& scenario, Persona persona);

/// One collected experiment. Per-bidder and per-tracker vectors are indexed
/// by the owning Dataset's name tables.
struct ExperimentRecord {
  PersonaSpec spec;
  std::string hb_site;
  std::vector<Money> bids;
  std::vector<int> latency_ms;
  std::optional<std::size_t> winner;  // bidder index
  Money price;
  std::string log_ref;
  /// exposure[t] is true when tracker t observed the persona while it was
  /// being built (persona sites and intent sites).
  std::vector<bool> exposure;

  bool operator==(const ExperimentRecord&) const = default;
};

struct Dataset {
  std::vector<std::string> tracker_names;
  std::vector<std::string> bidder_names;
  std::vector<ExperimentRecord> records;

  std::optional<std::size_t> bidder_index(std::string_view name) const;
  bool operator==(const Dataset&) const = default;
};

/// Empty dataset whose name tables follow the scenario's org order.
Dataset make_dataset(const Scenario& scenario);

/// Visits `hb_site` after the propagation wait, gathers one bid per bidder
/// from the knowledge that reaches it, and runs the header-bidding auction.
/// Client-side syncs and bid requests are appended to `log` when given.
/// Throws Error("not_hb_site") when the site is not header-bidding enabled.
ExperimentRecord collect_bids(const Scenario& scenario, const Persona& persona,
                              const std::string& hb_site, RequestLog* log = nullptr);

struct CampaignOptions {
  std::size_t block_set_size = 1;
  double intent_probability = 0.5;
  std::size_t workers = 0;  // 0 -> default_workers()
  bool emit_logs = true;
};

/// The randomized spec of experiment `index`.
PersonaSpec draw_persona_spec(const Scenario& scenario, std::uint64_t master_seed,
                              std::size_t index, const CampaignOptions& options,
                              std::string* hb_site);

/// Receives each experiment's request log, in experiment order.
using LogSink = std::function<void(const std::string& log_ref, const RequestLog& log)>;

/// Runs `n` independent experiments. Experiment i draws everything from
/// derive_seed(master_seed, i), so the dataset does not depend on worker count.
Dataset run_campaign(const Scenario& scenario, std::size_t n, std::uint64_t master_seed,
                     const CampaignOptions& options = {}, const LogSink& sink = {});

std::string log_ref_for(std::size_t index);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
/// Throws Error("io") or Error("parse") naming the offending line.
Dataset load_dataset(const std::filesystem::path& path);

/// Appends one line per experiment log.
class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& path);

  void write(const std::string& log_ref, const RequestLog& log);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Streams a log file, calling `visit` for every request in file order.
void read_logs(const std::filesystem::path& path,
               const std::function<void(const std::string& log_ref, const RequestLog& log)>& visit);

}  // namespace kashf
