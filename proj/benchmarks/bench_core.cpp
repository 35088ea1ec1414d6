#include <benchmark/benchmark.h>

#include <random>
#include <sstream>
#include <string>

#include "remedy/graph_gen.hpp"
#include "remedy/journal.hpp"
#include "remedy/kernel.hpp"
#include "remedy/recovery_groups.hpp"
#include "remedy/sim_cluster.hpp"

using namespace remedy;

namespace {

// Edge budget follows the production-sized graph (about 2.14 edges per node).
std::size_t edges_for(std::size_t nodes) { return nodes + nodes * 114 / 100; }

void BM_GenerateGraph(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(preferential_attachment_graph({n, edges_for(n), 1, "bench"}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GenerateGraph)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_BuildFromEdges(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto source = preferential_attachment_graph({n, edges_for(n), 1, "bench"});
  std::vector<WeightedEdge> edges;
  for (NodeId v = 0; v < source.service_count(); ++v) {
    for (const auto& e : source.callees(v)) edges.push_back({source.service(v), source.service(e.node), e.weight});
  }
  for (auto _ : state) benchmark::DoNotOptimize(CallGraph::from_edges({}, edges));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(edges.size()));
}
BENCHMARK(BM_BuildFromEdges)->RangeMultiplier(4)->Range(64, 4096);

void BM_InferRecoveryGroup(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto graph = preferential_attachment_graph({n, edges_for(n), 3, "bench"});
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    const Symptom symptom{graph.service(static_cast<NodeId>(rng() % graph.service_count()))};
    benchmark::DoNotOptimize(infer_recovery_group(graph, symptom));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_InferRecoveryGroup)->RangeMultiplier(4)->Range(64, 8192)->Arg(5459)->Complexity();

void BM_KernelSubmit(benchmark::State& state) {
  const auto width = static_cast<int>(state.range(0));
  std::vector<WeightedEdge> edges;
  for (int i = 0; i < 10; ++i) {
    edges.push_back({ServiceRef::parse("prod/gw"), ServiceRef::parse("prod/k" + std::to_string(i)), 1});
  }
  const auto graph = CallGraph::from_edges({}, edges);
  RecoveryGroup scope;
  scope.restart_set.assign(graph.services().begin(), graph.services().end());
  scope.symptom_service = scope.restart_set.front();
  scope.batches = {scope.restart_set};

  SimParams params;
  params.initial_replicas = 100;
  SimCluster sim(graph, params);
  MemoryJournal wal;
  Kernel::Options opts;
  opts.sleep = [](std::chrono::milliseconds) {};
  opts.policy.rate_limit = 1'000'000'000;
  Kernel kernel(sim, wal, opts);

  std::uint64_t n = 0;
  for (auto _ : state) {
    RemediationTransaction txn;
    txn.txn_id = "b" + std::to_string(n++);
    for (int k = 0; k < width; ++k) {
      const auto target = ServiceRef::parse("prod/k" + std::to_string((n + k) % 10));
      txn.conflict_keys.insert(ConflictKey::of_service(target));
      txn.actions.push_back(actions::rate_limit(target, 100.0));
    }
    txn.failure_policy = FailurePolicy::RollbackAll;
    const auto r = kernel.submit(txn, scope);
    if (!r.committed()) state.SkipWithError("transaction did not commit");
  }
}
BENCHMARK(BM_KernelSubmit)->Arg(1)->Arg(3)->Arg(8);

void BM_ReadWal(benchmark::State& state) {
  MemoryJournal journal;
  for (int t = 0; t < state.range(0); ++t) {
    const auto id = "t" + std::to_string(t);
    journal.append(WalEntry::txn_start(id, {{"txn_id", id}}));
    journal.append(WalEntry::action_complete(id, 0, id + "/a0.0"));
    journal.append(WalEntry::outcome_of(id, TxnOutcome::Committed));
  }
  std::string text;
  for (const auto& e : journal.entries()) text += e.to_json().dump() + "\n";
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(read_wal(in));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ReadWal)->Arg(100)->Arg(10'000);

}  // namespace

BENCHMARK_MAIN();
