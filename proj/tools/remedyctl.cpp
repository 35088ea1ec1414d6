// remedyctl: operator entry point.
//
// Exit codes: 0 success, 1 operational error, 2 usage error.

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "remedy/campaign.hpp"
#include "remedy/error.hpp"
#include "remedy/graph_gen.hpp"
#include "remedy/journal.hpp"
#include "remedy/kernel.hpp"
#include "remedy/recovery_groups.hpp"
#include "remedy/scenario.hpp"
#include "remedy/stats.hpp"
#include "remedy/trace_model.hpp"

namespace {

using remedy::ServiceRef;

struct Common {
  bool json = false;
};

struct TraceArgs {
  std::string traces;
  std::string format = "jsonl";
  std::string window;
};

void add_trace_args(CLI::App* cmd, TraceArgs& a) {
  cmd->add_option("--traces", a.traces, "Span file")->required();
  cmd->add_option("--format", a.format, "jsonl | alibaba-csv")->capture_default_str();
  cmd->add_option("--window", a.window, "start_us:end_us, half-open");
}

remedy::CallGraph load_graph(const TraceArgs& a, remedy::IngestReport* report = nullptr) {
  const auto format = remedy::parse_trace_format(a.format);
  const auto window = a.window.empty() ? remedy::TimeWindow::unbounded() : remedy::TimeWindow::parse(a.window);
  auto ingested = remedy::ingest_file(a.traces, format);
  if (report) *report = ingested.report;
  return remedy::build_call_graph(ingested.spans, window);
}

nlohmann::json summary_or_zero(const std::vector<double>& v) { return remedy::summarize(v).to_json(); }

int cmd_stats(const TraceArgs& a, std::size_t top_k, const Common& c) {
  remedy::IngestReport ingest;
  const auto graph = load_graph(a, &ingest);
  std::vector<double> radii;
  for (remedy::NodeId i = 0; i < graph.service_count(); ++i) {
    radii.push_back(static_cast<double>(remedy::blast_radius(graph, i)));
  }
  const auto conn = remedy::connectivity_stats(graph);
  auto top = [&](bool by_in) {
    auto items = conn.services;
    std::stable_sort(items.begin(), items.end(), [&](const auto& x, const auto& y) {
      return by_in ? x.fan_in > y.fan_in : x.fan_out > y.fan_out;
    });
    if (items.size() > top_k) items.resize(top_k);
    auto arr = nlohmann::json::array();
    for (const auto& s : items) arr.push_back({{"service", s.service.str()}, {"count", by_in ? s.fan_in : s.fan_out}});
    return arr;
  };
  const auto br = remedy::summarize(radii);
  nlohmann::json out = {{"services", graph.service_count()},
                        {"edges", graph.edge_count()},
                        {"rows_read", ingest.rows_read},
                        {"rows_skipped", ingest.rows_skipped},
                        {"self_calls_dropped", ingest.self_calls_dropped},
                        {"blast_radius",
                         {{"median", br.median}, {"p90", br.p90}, {"p99", br.p99}, {"max", br.max}}},
                        {"top_fan_in", top(true)},
                        {"top_fan_out", top(false)}};
  if (c.json) {
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << "services: " << graph.service_count() << "\nedges: " << graph.edge_count() << "\nrows read: "
            << ingest.rows_read << " (skipped " << ingest.rows_skipped << ", self-calls dropped "
            << ingest.self_calls_dropped << ")\nblast radius: median " << br.median << ", p90 " << br.p90 << ", p99 "
            << br.p99 << ", max " << br.max << '\n';
  for (const char* key : {"top_fan_in", "top_fan_out"}) {
    std::cout << key << ":\n";
    for (const auto& e : out[key]) std::cout << "  " << e["service"].get<std::string>() << "  " << e["count"] << '\n';
  }
  return 0;
}

struct InferArgs {
  TraceArgs traces;
  std::string service;
  std::string thresholds_file;
  std::optional<std::uint32_t> max_group_size, drain_threshold, max_batch_size;
};

int cmd_infer(const InferArgs& a, const Common& c) {
  remedy::InferenceThresholds t;
  if (!a.thresholds_file.empty()) {
    std::ifstream in(a.thresholds_file);
    if (!in) throw remedy::NotFoundError("cannot open thresholds file " + a.thresholds_file);
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw remedy::ConfigError("thresholds file is not valid JSON");
    t = remedy::InferenceThresholds::from_json(doc);
  }
  if (a.max_group_size) t.max_group_size = *a.max_group_size;
  if (a.drain_threshold) t.drain_threshold = *a.drain_threshold;
  if (a.max_batch_size) t.max_batch_size = *a.max_batch_size;
  const auto ref = ServiceRef::try_parse(a.service);
  if (!ref) throw remedy::ConfigError("--service must be ns/name, got \"" + a.service + "\"");
  const auto graph = load_graph(a.traces);
  const auto group = remedy::infer_recovery_group(graph, remedy::Symptom{*ref}, t);
  if (c.json) {
    std::cout << group.to_json().dump(2) << '\n';
    return 0;
  }
  std::cout << "recovery group for " << group.symptom_service << " (" << group.restart_set.size() << " services"
            << (group.truncated ? ", truncated" : "") << ")\n";
  for (std::size_t i = 0; i < group.batches.size(); ++i) {
    std::cout << "  batch " << i << ":";
    for (const auto& s : group.batches[i]) std::cout << ' ' << s;
    std::cout << '\n';
  }
  std::cout << "  drain:";
  for (const auto& s : group.drain_set) std::cout << ' ' << s;
  std::cout << "\n  blast radius estimate: " << group.blast_radius_estimate << '\n';
  return 0;
}

int cmd_bench(std::size_t nodes, std::size_t edges, std::size_t samples, std::uint64_t seed, const Common& c) {
  const auto graph = remedy::preferential_attachment_graph({nodes, edges, seed, "bench"});
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::vector<double> latency_ms, sizes;
  std::size_t truncated = 0;
  latency_ms.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto& symptom = graph.service(static_cast<remedy::NodeId>(rng() % graph.service_count()));
    const auto start = std::chrono::steady_clock::now();
    const auto group = remedy::infer_recovery_group(graph, remedy::Symptom{symptom});
    latency_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    sizes.push_back(static_cast<double>(group.restart_set.size()));
    if (group.truncated) ++truncated;
  }
  const auto lat = remedy::summarize(latency_ms);
  nlohmann::json out = {{"nodes", graph.service_count()},
                        {"edges", graph.edge_count()},
                        {"samples", samples},
                        {"seed", seed},
                        {"latency_ms", lat.to_json()},
                        {"group_size", summary_or_zero(sizes)},
                        {"truncated", truncated}};
  if (c.json) {
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << std::fixed << std::setprecision(3) << "graph: " << graph.service_count() << " services, " << graph.edge_count() << " edges\n"
            << "inference latency over " << samples << " symptoms: median " << lat.median << " ms, p90 " << lat.p90
            << " ms, p99 " << lat.p99 << " ms, max " << lat.max << " ms\n"
            << "truncated groups: " << truncated << '\n';
  return 0;
}

int cmd_simulate(const std::string& campaign, const std::string& incidents_out, const Common& c) {
  const auto config = remedy::CampaignConfig::load(campaign);
  const auto report = remedy::run_campaign(config);
  if (!incidents_out.empty()) {
    std::ofstream out(incidents_out);
    if (!out) throw remedy::Error("cannot write " + incidents_out);
    remedy::write_incidents_jsonl(out, report);
  }
  if (c.json) {
    std::cout << report.to_json().dump(2) << '\n';
    return 0;
  }
  std::cout << std::fixed << std::setprecision(1) << "policy " << remedy::to_string(report.policy) << ", seed " << report.seed << ", " << report.incidents
            << " incidents\n"
            << "harm: " << report.harmed << "/" << report.incidents << " = " << 100.0 * report.harm_rate
            << "% (95% CI " << 100.0 * report.harm_ci.lower << "-" << 100.0 * report.harm_ci.upper << "%)\n"
            << "committed transactions: " << report.committed << " (harmful " << report.harmful_commits << ")\n"
            << "recovered: " << report.recovered << "/" << report.incidents << ", median TTR "
            << report.ttr_ms.median / 1000.0 << " s\n";
  return 0;
}

int cmd_replay(const std::string& wal, const std::string& scenario_path, const std::string& wal_out, const Common& c) {
  const auto read = remedy::read_wal_file(wal);
  if (read.tail_truncated) std::cerr << "warning: " << read.diagnostic << '\n';
  const auto scenario = remedy::Scenario::load(scenario_path);
  auto sim = scenario.instantiate(remedy::ClockMode::Virtual);
  const auto before = sim->action_log().size();
  remedy::MemoryJournal journal(read.entries);
  remedy::Kernel::Options options;
  options.sleep = [](std::chrono::milliseconds) {};
  remedy::Kernel kernel(*sim, journal, std::move(options));
  const auto report = kernel.recover();
  if (!wal_out.empty()) {
    std::ofstream out(wal_out, std::ios::binary | std::ios::trunc);
    if (!out) throw remedy::Error("cannot write " + wal_out);
    for (const auto& e : journal.entries()) out << e.to_json().dump() << '\n';
  }

  nlohmann::json resolved = nlohmann::json::array();
  for (const auto& r : report.resolved) {
    resolved.push_back({{"txn_id", r.txn_id},
                        {"outcome", remedy::to_string(r.outcome)},
                        {"completed_before", r.completed_before},
                        {"resolution", r.resolution}});
  }
  nlohmann::json applied = nlohmann::json::array();
  const auto log = sim->action_log();
  for (std::size_t i = before; i < log.size(); ++i) {
    applied.push_back({{"token", log[i].token}, {"kind", log[i].kind}, {"target", log[i].target.str()},
                       {"ok", log[i].ok}});
  }
  if (c.json) {
    nlohmann::json out = {{"terminal", report.terminal},
                          {"resolved", std::move(resolved)},
                          {"applied", std::move(applied)},
                          {"tail_truncated", read.tail_truncated}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  if (report.resolved.empty()) {
    std::cout << "no in-flight transactions (" << report.terminal << " already resolved)\n";
    return 0;
  }
  for (const auto& r : resolved) {
    std::cout << r["txn_id"].get<std::string>() << ": " << r["resolution"].get<std::string>() << " -> "
              << r["outcome"].get<std::string>() << " (" << r["completed_before"] << " action(s) completed before)\n";
  }
  for (const auto& a : applied) {
    std::cout << "  applied " << a["kind"].get<std::string>() << " " << a["target"].get<std::string>() << " ["
              << a["token"].get<std::string>() << "]" << (a["ok"].get<bool>() ? "" : " FAILED") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"remedyctl: recovery-group inference and transactional remediation tooling"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");
  auto add_json = [&](CLI::App* cmd) { cmd->add_flag("--json", common.json, "Machine-readable output"); };

  TraceArgs stats_args;
  std::size_t top_k = 5;
  auto* stats = app.add_subcommand("stats", "Call-graph statistics from traces");
  add_trace_args(stats, stats_args);
  stats->add_option("--top", top_k, "Entries in the fan-in/fan-out rankings")->capture_default_str();
  add_json(stats);

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Recovery group for a symptom service");
  add_trace_args(infer, infer_args.traces);
  infer->add_option("--service", infer_args.service, "Symptom service ns/name")->required();
  infer->add_option("--thresholds", infer_args.thresholds_file, "JSON thresholds file");
  infer->add_option("--max-group-size", infer_args.max_group_size)->check(CLI::PositiveNumber);
  infer->add_option("--drain-threshold", infer_args.drain_threshold)->check(CLI::PositiveNumber);
  infer->add_option("--max-batch-size", infer_args.max_batch_size)->check(CLI::PositiveNumber);
  add_json(infer);

  std::size_t nodes = 0, edges = 0, samples = 0;
  std::uint64_t seed = 1;
  auto* bench = app.add_subcommand("bench", "Inference latency on a synthetic graph");
  bench->add_option("--nodes", nodes)->required()->check(CLI::PositiveNumber);
  bench->add_option("--edges", edges)->required()->check(CLI::NonNegativeNumber);
  bench->add_option("--samples", samples)->required()->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed)->capture_default_str();
  add_json(bench);

  std::string campaign, incidents_out;
  auto* simulate = app.add_subcommand("simulate", "Run a harm campaign");
  simulate->add_option("--campaign", campaign, "Campaign config JSON")->required();
  simulate->add_option("--incidents-out", incidents_out, "Write incident records as JSON Lines");
  add_json(simulate);

  std::string wal, scenario, wal_out;
  auto* replay = app.add_subcommand("replay-wal", "Recover in-flight transactions from a WAL");
  replay->add_option("--wal", wal, "Journal to recover from (left untouched)")->required();
  replay->add_option("--scenario", scenario, "Cluster the journaled actions ran against")->required();
  replay->add_option("--wal-out", wal_out, "Write the journal after recovery as JSON Lines");
  add_json(replay);

  try {
    app.parse(argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("remedyctl"));
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto parsed = app.get_subcommands();
    const CLI::App* scope = parsed.empty() ? &app : parsed.front();
    std::cerr << "error: " << e.what() << "\n\n" << scope->help();
    return 2;
  }

  try {
    if (*stats) return cmd_stats(stats_args, top_k, common);
    if (*infer) return cmd_infer(infer_args, common);
    if (*bench) return cmd_bench(nodes, edges, samples, seed, common);
    if (*simulate) return cmd_simulate(campaign, incidents_out, common);
    if (*replay) return cmd_replay(wal, scenario, wal_out, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
