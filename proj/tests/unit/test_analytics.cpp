#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "kashf/analytics.hpp"
#include "oracles.hpp"

using namespace kashf;

namespace {

struct Row {
  Category category;
  bool intent;
  std::vector<double> bids;  // cpm, one per bidder
};

Dataset make(std::vector<std::string> bidders, const std::vector<Row>& rows) {
  Dataset d;
  d.bidder_names = std::move(bidders);
  d.tracker_names = {"T"};
  for (const auto& r : rows) {
    ExperimentRecord rec;
    rec.spec.category = r.category;
    rec.spec.intent = r.intent;
    std::vector<Bid> bids;
    for (std::size_t b = 0; b < r.bids.size(); ++b) {
      rec.bids.push_back(Money::from_cpm(r.bids[b]));
      rec.latency_ms.push_back(10);
      bids.push_back({static_cast<OrgId>(b), rec.bids.back(), 10});
    }
    const auto out = run_hb_auction(bids, 3000, Money(0));
    if (out.winner && !out.clearing_price.is_zero()) {
      rec.winner = *out.winner;
      rec.price = out.clearing_price;
    }
    rec.exposure = {false};
    d.records.push_back(rec);
  }
  return d;
}

void check_markers(const PersonaBidderTable& t) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& cell = t.cells[r][c];
      if (!cell.value) continue;
      const auto& col = *t.column_stats[c];
      const auto& row = *t.row_stats[r];
      CHECK((cell.among_categories == 1) == (*cell.value > col.mean + col.std));
      CHECK((cell.among_categories == -1) == (*cell.value < col.mean - col.std));
      CHECK((cell.among_bidders == 1) == (*cell.value > row.mean + row.std));
      CHECK((cell.among_bidders == -1) == (*cell.value < row.mean - row.std));
    }
  }
}

}  // namespace

TEST_CASE("weighted mean and std") {
  std::vector<double> v{1, 2, 3}, eq{1, 1, 1};
  auto s = weighted_mean_std(v, eq);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  std::vector<double> w{1, 1, 2};
  CHECK(weighted_mean_std(v, w).mean == doctest::Approx(2.25));
  std::vector<double> v2{3, 100}, w2{1, 0};
  s = weighted_mean_std(v2, w2);
  CHECK(s.mean == 3.0);
  CHECK(s.std == 0.0);
  std::vector<double> zero{0, 0}, neg{1, -1}, shorter{1};
  CHECK_THROWS_AS(weighted_mean_std(v2, zero), Error);
  CHECK_THROWS_AS(weighted_mean_std(v2, neg), Error);
  CHECK_THROWS_AS(weighted_mean_std(v2, shorter), Error);
  std::vector<double> scaled{10, 10, 20};
  CHECK(weighted_mean_std(v, scaled).mean == doctest::Approx(2.25));
}

TEST_CASE("chi-square two proportions") {
  auto x = chi_square_two_proportions(10, 100, 20, 100);
  REQUIRE(x.statistic);
  CHECK(*x.statistic == doctest::Approx(3.9215686).epsilon(1e-7));
  CHECK(x.significant);
  x = chi_square_two_proportions(10, 100, 10, 100);
  CHECK(*x.statistic == 0.0);
  CHECK_FALSE(x.significant);
  x = chi_square_two_proportions(0, 10, 0, 10);
  CHECK_FALSE(x.statistic);
  CHECK_FALSE(x.significant);
  CHECK_FALSE(chi_square_two_proportions(10, 10, 5, 5).statistic);
  CHECK_THROWS_AS(chi_square_two_proportions(1, 0, 1, 1), Error);
  CHECK_THROWS_AS(chi_square_two_proportions(5, 4, 1, 1), Error);
  // critical value: P(chi2_1 > c) = 0.05  <=>  2 * (1 - Phi(sqrt(c))) = 0.05
  CHECK(2.0 * (1.0 - oracle::phi(std::sqrt(kChiSquareCritical05))) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("chi-square matches the contingency-table oracle") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto n_a = 1 + rng.below(500), n_b = 1 + rng.below(500);
    const auto s_a = rng.below(n_a + 1), s_b = rng.below(n_b + 1);
    const auto got = chi_square_two_proportions(s_a, n_a, s_b, n_b);
    const auto want = oracle::chi_square_table(static_cast<double>(s_a), static_cast<double>(n_a - s_a),
                                               static_cast<double>(s_b), static_cast<double>(n_b - s_b));
    REQUIRE(got.statistic.has_value() == want.has_value());
    if (want) {
      CHECK(std::abs(*got.statistic - *want) <= 1e-9);
      CHECK(got.significant == (*want > kChiSquareCritical05));
    }
  }
}

TEST_CASE("median") {
  CHECK(median({0.2, 0.2, 1.0}) == 0.2);
  CHECK(median({1.0, 0.2, 0.2}) == 0.2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({7}) == 7);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("single-record dataset gives a one-cell table") {
  const Dataset d = make({"A"}, {{Category::Health, false, {0.42}}});
  const auto t = median_cpm_table(d);
  REQUIRE(t.rows.size() == 1);
  REQUIRE(t.columns.size() == 1);
  CHECK(*t.cell(Category::Health, "A").value == doctest::Approx(0.42));
  CHECK(t.row_stats[0]->mean == doctest::Approx(0.42));
  CHECK_THROWS_AS(median_cpm_table(Dataset{}), Error);
}

TEST_CASE("median table uses positive bids of the selected arm") {
  const Dataset d = make({"A", "B"}, {{Category::Health, false, {0.2, 0}},
                                      {Category::Health, false, {0.2, 0.5}},
                                      {Category::Health, false, {1.0, 0.7}},
                                      {Category::Health, true, {9.0, 9.0}},
                                      {Category::Arts, false, {0.1, 0.3}}});
  const auto t = median_cpm_table(d);
  CHECK(t.rows == std::vector<Category>{Category::Arts, Category::Health});
  CHECK(*t.cell(Category::Health, "A").value == doctest::Approx(0.2));
  CHECK(*t.cell(Category::Health, "B").value == doctest::Approx(0.6));
  CHECK(t.cell(Category::Health, "B").count == 2);
  // weights: A has 4 positive no-intent bids, B has 3
  const double health_avg = (0.2 * 4 + 0.6 * 3) / 7.0;
  CHECK(t.row_stats[*t.row_index(Category::Health)]->mean == doctest::Approx(health_avg));
  check_markers(t);

  const auto all = median_cpm_table(d, IntentArm::All);
  CHECK(*all.cell(Category::Health, "A").value == doctest::Approx(0.6));
}

TEST_CASE("medians do not depend on record order") {
  Rng rng(5);
  std::vector<Row> rows;
  for (int i = 0; i < 200; ++i) {
    rows.push_back({persona_categories()[rng.below(4)], rng.bernoulli(0.5),
                    {rng.uniform() * 3, rng.bernoulli(0.2) ? 0.0 : rng.uniform()}});
  }
  const Dataset a = make({"A", "B"}, rows);
  Dataset b = a;
  rng.shuffle(b.records);
  CHECK(table_to_csv(median_cpm_table(a)) == table_to_csv(median_cpm_table(b)));
  CHECK(table_to_csv(winning_bid_table(a)) == table_to_csv(winning_bid_table(b)));
  check_markers(median_cpm_table(a));
  check_markers(winning_bid_table(a, IntentArm::All));
}

TEST_CASE("intent ratio table") {
  const Dataset d = make({"A", "B"}, {{Category::Health, false, {1.0, 0}},
                                      {Category::Health, true, {5.96, 2.0}},
                                      {Category::Sports, false, {1.0, 1.0}}});
  const auto no = filter_arm(d, IntentArm::NoIntent);
  const auto yes = filter_arm(d, IntentArm::Intent);
  CHECK(no.records.size() == 2);
  const auto t = intent_ratio_table(no, yes);
  CHECK(t.rows == std::vector<Category>{Category::Health});
  CHECK(*t.cell(Category::Health, "A").value == doctest::Approx(5.96));
  CHECK_FALSE(t.cell(Category::Health, "B").value);  // no positive no-intent bid
  CHECK(t.row_stats[0]->mean == doctest::Approx(5.96));
  CHECK(table_to_text(t).find("N/A") != std::string::npos);

  const auto self = intent_ratio_table(no, no);
  for (const auto& row : self.cells) {
    for (const auto& cell : row) {
      if (cell.value) CHECK(*cell.value == doctest::Approx(1.0));
    }
  }
  Dataset other = no;
  other.bidder_names = {"A", "C"};
  CHECK_THROWS_AS(intent_ratio_table(no, other), Error);
}

TEST_CASE("winning-bid table") {
  const Dataset d = make({"A", "B", "Never"}, {{Category::Health, false, {1.0, 0.5, 0.1}},
                                               {Category::Health, false, {0.2, 0.6, 0.1}},
                                               {Category::Health, false, {3.0, 0.5, 0.1}}});
  const auto t = winning_bid_table(d);
  CHECK(*t.cell(Category::Health, "A").value == doctest::Approx(2.0));
  CHECK(t.cell(Category::Health, "A").count == 2);
  CHECK(*t.cell(Category::Health, "B").value == doctest::Approx(0.6));
  CHECK_FALSE(t.cell(Category::Health, "Never").value);
  CHECK(table_to_text(t, 2, "-").find(" - ") != std::string::npos);

  // average winning bid is at least the average bid
  const auto bids = median_cpm_table(d);
  CHECK(t.bidder_summary->mean >= bids.bidder_summary->mean);
}

TEST_CASE("a monopolist's winning table equals its bid table") {
  const Dataset d = make({"Solo"}, {{Category::Health, false, {1.0}},
                                    {Category::Health, false, {2.0}},
                                    {Category::Arts, false, {0.5}}});
  CHECK(table_to_csv(winning_bid_table(d)) == table_to_csv(median_cpm_table(d)));
}

TEST_CASE("zero-bid statistics") {
  const Dataset d = make({"Z", "Never0"}, {{Category::Health, false, {0, 1}},
                                           {Category::Health, false, {0, 1}},
                                           {Category::Health, false, {1, 1}},
                                           {Category::Arts, true, {1, 1}}});
  const auto s = zero_bid_stats(d);
  REQUIRE(s.bidders.size() == 2);
  CHECK(*s.bidders[0].pct_no_intent == doctest::Approx(200.0 / 3.0));
  CHECK(*s.bidders[0].pct_intent == 0.0);
  CHECK(*s.bidders[0].pct_total == doctest::Approx(50.0));
  for (auto p : {s.bidders[1].pct_no_intent, s.bidders[1].pct_intent, s.bidders[1].pct_total}) CHECK(*p == 0.0);
  CHECK_FALSE(s.bidders[1].test.statistic);
  CHECK(s.overall.bidder == "Total");
  CHECK(s.overall.bids_no_intent == 6);
  CHECK(*s.overall.pct_total == doctest::Approx(25.0));
  const std::string csv = zero_bids_csv(s);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(zero_bids_text(s).find("Total") != std::string::npos);

  const Dataset no_intent = make({"Z"}, {{Category::Health, false, {0}}});
  const auto e = zero_bid_stats(no_intent);
  CHECK_FALSE(e.bidders[0].pct_intent);
  CHECK(*e.bidders[0].pct_total == 100.0);
  CHECK(zero_bids_csv(e).find("N/A") != std::string::npos);
}

TEST_CASE("intent arm zero share falls when the configured rate falls") {
  auto cfg = ScenarioConfig::defaults();
  cfg.sites_per_category = 5;
  cfg.hb_sites = 3;
  Scenario sc = generate_scenario(cfg, 3);
  const double rates[][2] = {{0.30, 0.20}, {0.5, 0.3}, {0.2, 0.05}, {0.4, 0.4}, {0.7, 0.6}};
  for (std::size_t i = 0; i < sc.bidder_profiles.size(); ++i) {
    sc.bidder_profiles[i].zero_rate_no_intent = rates[i][0];
    sc.bidder_profiles[i].zero_rate_intent = rates[i][1];
  }
  CampaignOptions opts;
  opts.emit_logs = false;
  opts.workers = 1;
  const auto s = zero_bid_stats(run_campaign(sc, 3000, 1, opts));
  for (std::size_t i = 0; i < s.bidders.size(); ++i) {
    const auto& r = s.bidders[i];
    CHECK(*r.pct_no_intent == doctest::Approx(100 * rates[i][0]).epsilon(0.15));
    if (rates[i][1] < rates[i][0]) {
      CHECK(*r.pct_intent <= *r.pct_no_intent);
      CHECK(r.test.significant);
    }
  }
}

TEST_CASE("text rendering carries marker glyphs") {
  std::vector<Row> rows;
  for (Category c : persona_categories()) rows.push_back({c, false, {c == Category::Health ? 5.0 : 0.2, 0.3}});
  const auto t = median_cpm_table(make({"A", "B"}, rows));
  const std::string text = table_to_text(t);
  CHECK(text.find("⇑") != std::string::npos);
  CHECK(t.cell(Category::Health, "A").among_categories == 1);
  CHECK(text.find("Health") != std::string::npos);
  const std::string csv = table_to_csv(t);
  CHECK(csv.rfind("persona,A,B,Avg,Std\n", 0) == 0);
}
