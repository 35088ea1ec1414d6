#include "crash_sweep.hpp"

#include <map>
#include <set>

namespace remedy::testing {

namespace {

const ServiceRef kA{"prod", "a"}, kB{"prod", "b"}, kC{"prod", "c"}, kFront{"prod", "front"};

Kernel::Options quiet_options() {
  Kernel::Options o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

ClusterState committed_state() {
  SimCluster sim(crash_topology());
  MemoryJournal journal;
  Kernel kernel(sim, journal, quiet_options());
  kernel.submit(crash_transaction(), crash_scope());
  return sim.state();
}

}  // namespace

CallGraph crash_topology() {
  const std::vector<WeightedEdge> edges{{kFront, kA, 10}, {kFront, kB, 10}, {kFront, kC, 10}};
  return CallGraph::from_edges({}, edges);
}

RemediationTransaction crash_transaction(const std::string& txn_id) {
  RemediationTransaction t;
  t.txn_id = txn_id;
  t.actions = {actions::scale(kA, 2), actions::drain(kB), actions::rate_limit(kC, 50)};
  t.conflict_keys = {ConflictKey::of_service(kA), ConflictKey::of_service(kB), ConflictKey::of_service(kC)};
  t.preconditions = {ServiceExists{kA}, ServiceExists{kB}, ServiceExists{kC}};
  t.failure_policy = FailurePolicy::RollbackAll;
  return t;
}

RecoveryGroup crash_scope() {
  RecoveryGroup g;
  g.symptom_service = kA;
  g.restart_set = {kA, kB, kC};
  g.batches = {{kA, kB, kC}};
  return g;
}

std::string CrashPoint::label() const {
  auto when_str = [](CrashingJournal::When w) { return w == CrashingJournal::When::Before ? "before" : "after"; };
  std::string s = std::string(fail_last_action ? "rollback path, " : "commit path, ") + when_str(when) +
                  " append " + std::to_string(append);
  if (recovery_append) {
    s += ", then " + std::string(when_str(recovery_when)) + " recovery append " + std::to_string(*recovery_append);
  }
  return s;
}

CrashRun run_crash_point(const CrashPoint& point) {
  static const ClusterState committed = committed_state();
  CrashRun run;
  SimCluster sim(crash_topology());
  const auto initial = sim.state();
  if (point.fail_last_action) sim.force_failures(kC, ActionKind::RateLimit, 1);

  std::vector<WalEntry> wal;
  {
    CrashingJournal journal({}, point.append, point.when);
    Kernel kernel(sim, journal, quiet_options());
    kernel.recover();
    try {
      kernel.submit(crash_transaction(), crash_scope());
    } catch (const SimulatedCrash&) {
      run.crashed = true;
    }
    wal = journal.entries();
  }
  if (!run.crashed) return run;

  if (point.recovery_append) {
    CrashingJournal journal(wal, *point.recovery_append, point.recovery_when);
    Kernel kernel(sim, journal, quiet_options());
    try {
      kernel.recover();
    } catch (const SimulatedCrash&) {
      run.recovery_crashed = true;
    }
    wal = journal.entries();
    if (!run.recovery_crashed) return run;
  }

  MemoryJournal journal(wal);
  Kernel kernel(sim, journal, quiet_options());
  kernel.recover();
  run.wal = journal.entries();
  run.log = sim.action_log();

  const auto state = sim.state();
  if (state == committed) {
    run.final_state = "committed";
  } else if (state == initial) {
    run.final_state = "rolled_back";
  } else {
    run.final_state = "inconsistent";
    run.problems.push_back("state is neither fully committed nor fully rolled back");
  }
  if (point.fail_last_action && run.final_state == "committed") run.problems.push_back("failing action committed");

  try {
    check_wal_structure(run.wal);
  } catch (const std::exception& e) {
    run.problems.push_back(std::string("wal structure: ") + e.what());
  }
  std::size_t starts = 0, outcomes = 0;
  for (const auto& e : run.wal) {
    if (e.kind == WalEntry::Kind::TxnStart) ++starts;
    if (e.kind == WalEntry::Kind::Outcome) ++outcomes;
  }
  if (starts != outcomes) run.problems.push_back("transaction left without an outcome");

  std::set<std::string> tokens;
  std::map<std::string, int> effects;  // successful calls per action or undo slot
  for (const auto& e : run.log) {
    if (!tokens.insert(e.token).second) run.problems.push_back("token " + e.token + " appears twice");
    if (!e.ok) continue;
    const auto slot = e.token.substr(0, e.token.find('.'));
    if (++effects[slot] > 1) run.problems.push_back("effect " + slot + " applied more than once");
  }
  return run;
}

std::vector<std::pair<CrashPoint, CrashRun>> crash_sweep() {
  std::vector<std::pair<CrashPoint, CrashRun>> out;
  using W = CrashingJournal::When;
  for (bool fail : {false, true}) {
    for (std::size_t k = 1; k <= 12; ++k) {
      for (W w : {W::Before, W::After}) {
        CrashPoint p{k, w, std::nullopt, W::Before, fail};
        auto run = run_crash_point(p);
        if (!run.crashed) continue;
        out.emplace_back(p, std::move(run));
        for (std::size_t m = 1; m <= 12; ++m) {
          for (W w2 : {W::Before, W::After}) {
            CrashPoint q{k, w, m, w2, fail};
            auto again = run_crash_point(q);
            if (again.recovery_crashed) out.emplace_back(q, std::move(again));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace remedy::testing
