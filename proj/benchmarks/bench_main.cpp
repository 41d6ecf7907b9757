#include <benchmark/benchmark.h>

#include "kashf/auction.hpp"
#include "kashf/experiment.hpp"
#include "kashf/forest.hpp"
#include "kashf/inference.hpp"

using namespace kashf;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t width) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < width; ++f) names.push_back("t" + std::to_string(f));
  FeatureMatrix m(names);
  Rng rng(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto bits = rng.below(std::uint64_t{1} << width);
    m.add_row(bits, (bits & 1U) ? BidClass::High : static_cast<BidClass>(rng.below(3)));
  }
  return m;
}

void BM_FitForest(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 20);
  ForestParams p;
  p.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(m, p, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitForest)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Campaign(benchmark::State& state) {
  const Scenario sc = generate_scenario(ScenarioConfig::defaults(), 1);
  CampaignOptions opts;
  opts.workers = 1;
  opts.emit_logs = state.range(1) != 0;
  const LogSink sink = [](const std::string&, const RequestLog& log) { benchmark::DoNotOptimize(log.size()); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_campaign(sc, static_cast<std::size_t>(state.range(0)), 7, opts, sink));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Campaign)->Args({1000, 0})->Args({1000, 1})->Unit(benchmark::kMillisecond);

void BM_Auctions(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::vector<Bid>> sets(1024);
  for (auto& s : sets) {
    for (OrgId b = 0; b < 5; ++b) s.push_back({b, Money(static_cast<std::int64_t>(rng.below(3'000'000))), 100});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& s = sets[i++ & 1023];
    benchmark::DoNotOptimize(run_hb_auction(s, 3000, Money(0)));
    const std::vector<std::vector<Bid>> tiers{s};
    benchmark::DoNotOptimize(run_rtb_waterfall(tiers, Money(0)));
  }
}
BENCHMARK(BM_Auctions);

void BM_Discretize(benchmark::State& state) {
  Rng rng(4);
  std::vector<Money> bids;
  for (int i = 0; i < 10'000; ++i) bids.emplace_back(static_cast<std::int64_t>(rng.below(5'000'000)));
  for (auto _ : state) benchmark::DoNotOptimize(discretize(bids));
}
BENCHMARK(BM_Discretize);

}  // namespace

BENCHMARK_MAIN();
