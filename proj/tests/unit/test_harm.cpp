#include <gtest/gtest.h>

#include "remedy/error.hpp"
#include "remedy/harm.hpp"

using namespace remedy;

namespace {

ServiceRef S(const char* text) { return ServiceRef::parse(text); }

/// One sample per second from 1 s to `end_s` s, flat at 25 ms / 0.001,
/// with p99 raised to `bad_p99` for seconds in [bad_from, bad_to].
std::vector<TelemetrySample> series(int end_s, int bad_from = -1, int bad_to = -1, double bad_p99 = 100.0,
                                    double fault_share = 0.0) {
  std::vector<TelemetrySample> out;
  for (int t = 1; t <= end_s; ++t) {
    TelemetrySample s{t * 1000LL, 25.0, 0.001, 0.0, 0.0};
    if (t >= bad_from && t <= bad_to) {
      s.p99_ms = bad_p99;
      s.fault_p99_ms = fault_share * (bad_p99 - 25.0);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Harm, FlatSeriesIsHarmless) {
  const auto v = evaluate_harm(series(200), 90'000);
  EXPECT_FALSE(v.harmed);
  EXPECT_DOUBLE_EQ(v.baseline_p99_ms, 25.0);
  EXPECT_DOUBLE_EQ(v.baseline_error_rate, 0.001);
  EXPECT_EQ(v.longest_regression_ms, 0);
  EXPECT_EQ(v.regression_start_ms, -1);
}

TEST(Harm, DurationThresholdIsStrict) {
  // 30 one-second samples is exactly 30 s: not harm. 31 is.
  EXPECT_FALSE(evaluate_harm(series(200, 100, 129), 90'000).harmed);
  const auto v = evaluate_harm(series(200, 100, 130), 90'000);
  EXPECT_TRUE(v.harmed);
  EXPECT_EQ(v.longest_regression_ms, 31'000);
  EXPECT_EQ(v.regression_start_ms, 100'000);
}

TEST(Harm, RegressionFactorBoundary) {
  EXPECT_FALSE(evaluate_harm(series(200, 100, 150, 27.5), 90'000).harmed);
  EXPECT_TRUE(evaluate_harm(series(200, 100, 150, 27.6), 90'000).harmed);
}

TEST(Harm, GracePeriodIgnored) {
  // Samples before 95 s fall inside the grace period.
  EXPECT_FALSE(evaluate_harm(series(200, 90, 124), 90'000).harmed);
  EXPECT_TRUE(evaluate_harm(series(200, 90, 125), 90'000).harmed);
}

TEST(Harm, GapsSplitRuns) {
  auto s = series(200, 100, 140);
  s.erase(s.begin() + 119);  // drop the 120 s sample
  EXPECT_FALSE(evaluate_harm(s, 90'000).harmed);
}

TEST(Harm, FaultExcessIsSubtracted) {
  EXPECT_FALSE(evaluate_harm(series(200, 100, 180, 400.0, 1.0), 90'000).harmed);
  EXPECT_TRUE(evaluate_harm(series(200, 100, 180, 400.0, 0.5), 90'000).harmed);
}

TEST(Harm, InsufficientBaselineThrows) {
  EXPECT_THROW(evaluate_harm(series(200), 30'000), EvaluationError);
  EXPECT_THROW(evaluate_harm(std::vector<TelemetrySample>{}, 90'000), EvaluationError);
  auto holey = series(200);
  holey.erase(holey.begin() + 50);
  EXPECT_THROW(evaluate_harm(holey, 90'000), EvaluationError);
}

TEST(Harm, BaselineNeedNotStartOnASample) {
  // Samples at 1..200 s. [100 ms, 60100 ms) holds 60 of them; [0, 60000) only 59.
  EXPECT_FALSE(evaluate_harm(series(200), 60'100).harmed);
  EXPECT_THROW(evaluate_harm(series(200), 60'000), EvaluationError);
}

// End to end on the simulator: restarting a busy hub without draining it.
class HubHarm : public ::testing::Test {
 protected:
  static CallGraph hub(int callers) {
    std::vector<WeightedEdge> edges;
    for (int i = 0; i < callers; ++i) edges.push_back({ServiceRef("p", "c" + std::to_string(i)), S("p/hub"), 3});
    edges.push_back({S("p/hub"), S("p/db"), 1});
    return CallGraph::from_edges({}, edges);
  }
};

TEST_F(HubHarm, UndrainedRestartHarmsCallers) {
  SimCluster sim(hub(25));
  sim.advance(90'000);
  ASSERT_TRUE(sim.apply(actions::restart(S("p/hub")), "r").ok);
  sim.advance(60'000);
  const auto verdicts = evaluate_harm(sim.telemetry(), 90'000);
  EXPECT_TRUE(any_harm(verdicts));
  EXPECT_TRUE(verdicts.at(S("p/c0")).harmed);
  EXPECT_EQ(verdicts.at(S("p/c0")).longest_regression_ms, 46'000);
  EXPECT_FALSE(verdicts.at(S("p/db")).harmed);
}

TEST_F(HubHarm, DrainedRestartIsHarmless) {
  SimCluster sim(hub(25));
  sim.advance(90'000);
  ASSERT_TRUE(sim.apply(actions::drain(S("p/hub")), "d").ok);
  ASSERT_TRUE(sim.apply(actions::restart(S("p/hub")), "r").ok);
  ASSERT_TRUE(sim.apply(actions::restore_traffic(S("p/hub")), "u").ok);
  sim.advance(60'000);
  EXPECT_FALSE(any_harm(evaluate_harm(sim.telemetry(), 90'000)));
}

TEST_F(HubHarm, FaultDamageIsNotBlamedOnTheAgent) {
  SimCluster sim(hub(25));
  sim.advance(30'000);
  sim.inject_fault(FaultKind::PodFailure, S("p/db"));
  sim.advance(60'000);
  sim.advance(120'000);
  EXPECT_FALSE(any_harm(evaluate_harm(sim.telemetry(), 90'000)));
}
