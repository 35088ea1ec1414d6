#include <gtest/gtest.h>

#include <sstream>

#include "remedy/campaign.hpp"
#include "remedy/error.hpp"
#include "remedy/stats.hpp"

using namespace remedy;

// Reference values from scipy.stats.beta.ppf, rounded to 4 dp.
TEST(Stats, ClopperPearsonReferenceValues) {
  const auto zero = clopper_pearson(0, 30);
  EXPECT_DOUBLE_EQ(zero.lower, 0.0);
  EXPECT_NEAR(zero.upper, 0.1157, 5e-5);
  const auto most = clopper_pearson(27, 30);
  EXPECT_NEAR(most.lower, 0.7347, 5e-5);
  EXPECT_NEAR(most.upper, 0.9789, 5e-5);
  const auto one = clopper_pearson(1, 1);
  EXPECT_NEAR(one.lower, 0.025, 5e-5);
  EXPECT_DOUBLE_EQ(one.upper, 1.0);
  const auto half = clopper_pearson(25, 50);
  EXPECT_NEAR(half.lower, 0.3553, 5e-5);
  EXPECT_NEAR(half.upper, 0.6447, 5e-5);
  EXPECT_THROW(clopper_pearson(0, 0), ContractError);
  EXPECT_THROW(clopper_pearson(3, 2), ContractError);
}

TEST(Stats, ClopperPearsonContainsPointEstimate) {
  for (std::size_t n = 1; n <= 40; ++n) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto ci = clopper_pearson(k, n);
      const double p = static_cast<double>(k) / static_cast<double>(n);
      EXPECT_LE(ci.lower, p + 1e-12);
      EXPECT_GE(ci.upper, p - 1e-12);
      if (k > 0) {
        EXPECT_LT(clopper_pearson(k - 1, n).lower, ci.lower);
      }
    }
  }
}

TEST(Stats, NearestRankPercentile) {
  std::vector<double> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  EXPECT_DOUBLE_EQ(percentile(v, 50), 50);
  EXPECT_DOUBLE_EQ(percentile(v, 99), 99);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 100);
  EXPECT_DOUBLE_EQ(percentile(v, 0.5), 1);
  EXPECT_DOUBLE_EQ(percentile({7}, 50), 7);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50), 2);
  EXPECT_THROW(percentile({}, 50), ContractError);
  EXPECT_THROW(percentile({1}, 0), ContractError);
  EXPECT_THROW(percentile({1}, 101), ContractError);
}

TEST(Stats, Summary) {
  const auto s = summarize({4, 1, 3, 2});
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_DOUBLE_EQ(s.median, 2);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_EQ(summarize({}).count, 0u);
}

TEST(Campaign, ConfigParsing) {
  const auto c = CampaignConfig::from_json(
      {{"policy", "isa_critic"}, {"seed", 3}, {"suite", {{"kind", "fault"}, {"fault", "io_delay"}, {"count", 4}}}});
  EXPECT_EQ(c.scenarios.size(), 4u);
  for (const auto& s : c.scenarios) EXPECT_EQ(s.faults.at(0).kind, FaultKind::IoDelay);
  EXPECT_THROW(CampaignConfig::from_json({{"policy", "isa_critic"}}), ConfigError);
  EXPECT_THROW(CampaignConfig::from_json({{"policy", "isa_critic"}, {"suite", {{"kind", "nope"}}}}), ConfigError);
}

TEST(Campaign, IndependentOfParallelism) {
  CampaignConfig c;
  c.policy.policy = Policy::IsaOnly;
  c.scenarios = default_scenario_suite(5, 10);
  c.parallelism = 1;
  const auto serial = run_campaign(c);
  c.parallelism = 4;
  const auto parallel = run_campaign(c);
  // Kernel time is measured, so it is the one field allowed to differ.
  auto stable = [](const CampaignReport& r) {
    auto j = r.to_json();
    j.erase("ttr_ms");
    for (const auto& rec : r.records) {
      auto k = rec.to_json();
      k.erase("ttr");
      j["records"].push_back(k);
    }
    return j;
  };
  EXPECT_EQ(stable(serial), stable(parallel));
  EXPECT_EQ(serial.incidents, 10u);
  EXPECT_NE(incident_seed(1, 0), incident_seed(1, 1));
  EXPECT_NE(incident_seed(1, 0), incident_seed(2, 0));
}

TEST(Campaign, ReportAggregatesRecords) {
  CampaignConfig c;
  c.policy.policy = Policy::RawTools;
  c.scenarios = default_scenario_suite(11, 12);
  const auto r = run_campaign(c);
  std::size_t harmed = 0;
  std::size_t recovered = 0;
  for (const auto& rec : r.records) {
    harmed += rec.harmed;
    recovered += rec.recovered;
  }
  EXPECT_EQ(r.harmed, harmed);
  EXPECT_EQ(r.recovered, recovered);
  EXPECT_DOUBLE_EQ(r.harm_rate, static_cast<double>(harmed) / 12.0);
  EXPECT_EQ(r.committed, 0u);
  std::ostringstream jsonl;
  write_incidents_jsonl(jsonl, r);
  std::istringstream in(jsonl.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_TRUE(nlohmann::json::parse(line).contains("scenario_id"));
  }
  EXPECT_EQ(lines, 12u);
  CampaignConfig empty;
  EXPECT_THROW(run_campaign(empty), ConfigError);
}

TEST(Scenario, JsonRoundTripAndSuiteShape) {
  const auto suite = default_scenario_suite(42);
  ASSERT_EQ(suite.size(), 50u);
  std::set<FaultKind> kinds;
  for (const auto& s : suite) {
    kinds.insert(s.faults.at(0).kind);
    ASSERT_TRUE(s.symptom);
    EXPECT_TRUE(s.symptom->name.starts_with("hub-"));
    const auto back = Scenario::from_json(s.to_json());
    EXPECT_EQ(back.to_json(), s.to_json());
  }
  EXPECT_EQ(kinds.size(), 5u);
  EXPECT_EQ(topology_from_json(topology_to_json(hub_topology())), hub_topology());
  EXPECT_THROW(Scenario::from_json({{"id", "x"}}), ConfigError);
}
