#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "remedy/error.hpp"
#include "remedy/trace_model.hpp"

using namespace remedy;

namespace {

ServiceRef S(const char* text) { return ServiceRef::parse(text); }

std::string row(const std::string& trace, const std::string& span, const std::string& caller,
                const std::string& callee, std::int64_t start) {
  std::string out = R"({"trace_id":")" + trace + R"(","span_id":")" + span + "\"";
  if (!caller.empty()) out += R"(,"caller":")" + caller + "\"";
  if (!callee.empty()) out += R"(,"callee":")" + callee + "\"";
  return out + R"(,"start_us":)" + std::to_string(start) + R"(,"duration_us":10,"status":"ok"})";
}

IngestResult ingest(const std::string& text, TraceFormat f = TraceFormat::JsonLines) {
  std::istringstream in(text);
  return ingest_spans(in, f);
}

SpanRecord span(const char* caller, const char* callee, std::int64_t start, int id) {
  SpanRecord s;
  s.trace_id = "t";
  s.span_id = std::to_string(id);
  if (caller) s.caller = S(caller);
  s.callee = S(callee);
  s.start_us = start;
  return s;
}

}  // namespace

TEST(ServiceRef, RoundTripsCanonicalText) {
  for (const char* text : {"prod/cart", "a/b", "kube-system/core-dns"}) {
    EXPECT_EQ(ServiceRef::parse(text).str(), text);
  }
  EXPECT_EQ(S("prod/cart"), ServiceRef("prod", "cart"));
  EXPECT_NE(S("prod/Cart"), S("prod/cart"));
}

TEST(ServiceRef, RejectsMalformedText) {
  for (const char* text : {"", "cart", "/cart", "prod/", "/", "ns/name/with/slash"}) {
    EXPECT_THROW(ServiceRef::parse(text), ParseError) << text;
    EXPECT_FALSE(ServiceRef::try_parse(text)) << text;
  }
}

TEST(Ingest, EmptyStreamHasNoRows) {
  const auto r = ingest("");
  EXPECT_TRUE(r.spans.empty());
  EXPECT_EQ(r.report.rows_read, 0u);
}

TEST(Ingest, WellFormedRowFieldByField) {
  const auto r = ingest(
      R"({"trace_id":"t1","span_id":"s2","parent_span_id":"s1","caller":"prod/frontend","callee":"prod/cart",)"
      R"("start_us":1700000000000000,"duration_us":1234,"status":"error"})");
  ASSERT_EQ(r.spans.size(), 1u);
  const auto& s = r.spans[0];
  EXPECT_EQ(s.trace_id, "t1");
  EXPECT_EQ(s.span_id, "s2");
  EXPECT_EQ(s.parent_span_id, "s1");
  EXPECT_EQ(s.caller, S("prod/frontend"));
  EXPECT_EQ(s.callee, S("prod/cart"));
  EXPECT_EQ(s.start_us, 1700000000000000);
  EXPECT_EQ(s.duration_us, 1234);
  EXPECT_EQ(s.status, SpanStatus::Error);
  EXPECT_FALSE(s.is_root());
}

TEST(Ingest, TenRowsTwoMissingCallee) {
  std::string text;
  for (int i = 0; i < 10; ++i) {
    text += row("t", std::to_string(i), "prod/a", (i == 3 || i == 7) ? "" : "prod/b", i) + "\n";
  }
  const auto r = ingest(text);
  EXPECT_EQ(r.spans.size(), 8u);
  EXPECT_EQ(r.report.rows_read, 10u);
  EXPECT_EQ(r.report.rows_skipped, 2u);
  for (std::size_t i = 1; i < r.spans.size(); ++i) EXPECT_LT(r.spans[i - 1].start_us, r.spans[i].start_us);
}

TEST(Ingest, SelfCallsAndDuplicateSpanIdsAreCounted) {
  const auto r = ingest(row("t", "1", "prod/a", "prod/a", 0) + "\n" + row("t", "2", "prod/a", "prod/b", 0) + "\n" +
                        row("t", "2", "prod/a", "prod/c", 0) + "\n\n" + "not json\n");
  EXPECT_EQ(r.spans.size(), 1u);
  EXPECT_EQ(r.report.rows_read, 4u);
  EXPECT_EQ(r.report.self_calls_dropped, 1u);
  EXPECT_EQ(r.report.rows_skipped, 2u);
}

TEST(Ingest, AlibabaCsvMapsUmDmColumns) {
  const auto r = ingest(
      "timestamp,traceid,rpcid,um,dm,rt\n"
      "1000,T1,0.1,frontend,cart,2.5\n"
      "1001,T1,0.1.1,cart,UNKNOWN,1\n"
      "1002,T1,0.1.2,cart,db,-3\n",
      TraceFormat::AlibabaCsv);
  ASSERT_EQ(r.spans.size(), 2u);
  EXPECT_EQ(r.report.rows_skipped, 1u);
  EXPECT_EQ(r.spans[0].caller, S("default/frontend"));
  EXPECT_EQ(r.spans[0].start_us, 1'000'000);
  EXPECT_EQ(r.spans[0].duration_us, 2500);
  EXPECT_EQ(r.spans[1].parent_span_id, "0.1");
  EXPECT_EQ(r.spans[1].duration_us, 0);
}

TEST(Ingest, ErrorsAreFatal) {
  EXPECT_THROW(parse_trace_format("parquet"), ConfigError);
  EXPECT_THROW(ingest_file("/nonexistent/spans.jsonl", TraceFormat::JsonLines), IngestError);
  EXPECT_THROW(ingest("ts,foo\n1,2\n", TraceFormat::AlibabaCsv), IngestError);
}

TEST(TimeWindowTest, HalfOpen) {
  const TimeWindow w(10, 20);
  EXPECT_TRUE(w.contains(10));
  EXPECT_FALSE(w.contains(20));
  EXPECT_THROW(TimeWindow(5, 5), ConfigError);
  EXPECT_EQ(TimeWindow::parse("10:20"), w);
  EXPECT_THROW(TimeWindow::parse("x"), ConfigError);
}

TEST(CallGraphTest, EmptyInput) {
  const auto g = build_call_graph({}, TimeWindow::unbounded());
  EXPECT_EQ(g.service_count(), 0u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(CallGraphTest, CountsByHand) {
  const std::vector<SpanRecord> spans{span("x/A", "x/B", 1, 1), span("x/A", "x/B", 2, 2), span("x/B", "x/C", 3, 3)};
  const auto g = build_call_graph(spans, TimeWindow::unbounded());
  EXPECT_EQ(g.service_count(), 3u);
  const std::vector<WeightedEdge> expected{{S("x/A"), S("x/B"), 2}, {S("x/B"), S("x/C"), 1}};
  EXPECT_EQ(g.edges(), expected);
}

TEST(CallGraphTest, WindowBoundary) {
  const std::vector<SpanRecord> spans{span("x/A", "x/B", 9, 1), span("x/A", "x/C", 10, 2), span("x/A", "x/D", 20, 3)};
  const auto g = build_call_graph(spans, TimeWindow(10, 20));
  const std::vector<WeightedEdge> expected{{S("x/A"), S("x/C"), 1}};
  EXPECT_EQ(g.edges(), expected);
  EXPECT_FALSE(g.contains(S("x/B")));
}

TEST(CallGraphTest, RootSpanAddsNodeOnly) {
  const auto g = build_call_graph(std::vector<SpanRecord>{span(nullptr, "x/gw", 0, 1)}, TimeWindow::unbounded());
  EXPECT_EQ(g.service_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(BlastRadius, Examples) {
  const std::vector<SpanRecord> chain{span("x/A", "x/B", 0, 1), span("x/B", "x/C", 0, 2), span(nullptr, "x/Z", 0, 3)};
  const auto g = build_call_graph(chain, TimeWindow::unbounded());
  EXPECT_EQ(blast_radius(g, S("x/C")), 2u);
  EXPECT_EQ(blast_radius(g, S("x/A")), 0u);
  EXPECT_EQ(blast_radius(g, S("x/Z")), 0u);
  EXPECT_THROW(blast_radius(g, S("x/missing")), NotFoundError);
}

TEST(Connectivity, StarChainAndEmpty) {
  std::vector<SpanRecord> star;
  for (int i = 0; i < 5; ++i) star.push_back(span(("x/c" + std::to_string(i)).c_str(), "x/hub", 0, i));
  const auto sg = build_call_graph(star, TimeWindow::unbounded());
  const auto report = connectivity_stats(sg);
  ASSERT_TRUE(report.max_fan_in);
  EXPECT_EQ(report.max_fan_in->service, S("x/hub"));
  EXPECT_EQ(report.max_fan_in->fan_in, 5u);
  EXPECT_EQ(report.max_fan_in->fan_out, 0u);

  const auto cg = build_call_graph(std::vector<SpanRecord>{span("x/A", "x/B", 0, 1), span("x/B", "x/C", 0, 2)},
                                   TimeWindow::unbounded());
  const auto b = connectivity_stats(cg).services[1];
  EXPECT_EQ(b.service, S("x/B"));
  EXPECT_EQ(b.fan_in, 1u);
  EXPECT_EQ(b.fan_out, 1u);

  const auto empty = connectivity_stats(CallGraph{});
  EXPECT_TRUE(empty.services.empty());
  EXPECT_FALSE(empty.max_fan_in);
}

TEST(CallGraphProperty, OrderInsensitiveAndWeightSum) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    std::vector<SpanRecord> spans;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      auto caller = "x/s" + std::to_string(rng() % 6);
      auto callee = "x/s" + std::to_string(rng() % 6);
      if (caller == callee) continue;
      spans.push_back(span(rng() % 5 == 0 ? nullptr : caller.c_str(), callee.c_str(),
                           static_cast<std::int64_t>(rng() % 100), i));
    }
    const TimeWindow w(20, 80);
    const auto g1 = build_call_graph(spans, w);
    std::shuffle(spans.begin(), spans.end(), rng);
    EXPECT_EQ(build_call_graph(spans, w), g1);
    std::uint64_t in_window = 0;
    for (const auto& s : spans) in_window += (s.caller && w.contains(s.start_us)) ? 1 : 0;
    EXPECT_EQ(g1.total_weight(), in_window);
  }
}

TEST(BlastRadiusProperty, MatchesWarshallOracle) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 300; ++round) {
    const auto adj = remedy::testing::random_digraph(rng, 12);
    const auto g = remedy::testing::to_call_graph(adj);
    for (std::uint32_t v = 0; v < adj.size(); ++v) {
      ASSERT_EQ(blast_radius(g, v), remedy::testing::upstream_count(adj, v)) << "round " << round << " node " << v;
    }
  }
}
