#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "crash_sweep.hpp"
#include "remedy/error.hpp"

using namespace remedy;
using remedy::testing::CrashingJournal;
using remedy::testing::CrashPoint;

namespace {

Kernel::Options fast() {
  Kernel::Options o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

ServiceRef S(const char* text) { return ServiceRef::parse(text); }

CrashPoint crash_at(std::size_t append, CrashingJournal::When when) {
  CrashPoint p;
  p.append = append;
  p.when = when;
  return p;
}

}  // namespace

TEST(Recovery, SweepIsAtomicAndIdempotent) {
  const auto sweep = remedy::testing::crash_sweep();
  std::size_t fired = 0;
  for (const auto& [point, run] : sweep) {
    if (run.crashed) ++fired;
    EXPECT_TRUE(run.problems.empty()) << point.label() << ": " << run.problems.front();
    EXPECT_NE(run.final_state, "inconsistent") << point.label();
    if (point.fail_last_action) {
      EXPECT_EQ(run.final_state, "rolled_back") << point.label();
    }
  }
  EXPECT_GE(fired, 7u);
}

TEST(Recovery, CrashBeforeFirstActionCompleteResumesWithoutReapplying) {
  // Append 2 is ActionComplete(0): the scale landed, the journal did not.
  const auto run = remedy::testing::run_crash_point(crash_at(2, CrashingJournal::When::Before));
  ASSERT_TRUE(run.crashed);
  EXPECT_EQ(run.final_state, "committed");
  std::size_t scale_calls = 0;
  for (const auto& e : run.log) scale_calls += e.kind == "scale";
  EXPECT_EQ(scale_calls, 1u);
}

TEST(Recovery, CrashAfterTxnStartRunsForward) {
  const auto run = remedy::testing::run_crash_point(crash_at(1, CrashingJournal::When::After));
  ASSERT_TRUE(run.crashed);
  EXPECT_EQ(run.final_state, "committed");
  EXPECT_EQ(run.wal.back().kind, WalEntry::Kind::Outcome);
}

TEST(Recovery, CrashBeforeTxnStartLeavesNothing) {
  const auto run = remedy::testing::run_crash_point(crash_at(1, CrashingJournal::When::Before));
  ASSERT_TRUE(run.crashed);
  EXPECT_EQ(run.final_state, "rolled_back");
  EXPECT_TRUE(run.log.empty());
  EXPECT_TRUE(run.wal.empty());
}

TEST(Recovery, CrashDuringRollbackFinishesRollback) {
  CrashPoint p;
  p.fail_last_action = true;
  p.append = 5;  // start, a0, a1, rollback_begin, undo(1)
  p.when = CrashingJournal::When::Before;
  const auto run = remedy::testing::run_crash_point(p);
  ASSERT_TRUE(run.crashed);
  EXPECT_EQ(run.final_state, "rolled_back");
  EXPECT_TRUE(run.problems.empty()) << run.problems.front();
}

TEST(Recovery, UnjournaledActionIsAdoptedFromBackendRecord) {
  SimCluster sim(remedy::testing::crash_topology());
  const auto initial = sim.state();
  auto txn = remedy::testing::crash_transaction("t-pre");
  std::vector<WalEntry> wal;
  {
    // Append 3 would journal action 1, which has already landed.
    CrashingJournal crashing({}, 3, CrashingJournal::When::Before);
    Kernel k(sim, crashing, fast());
    EXPECT_THROW(k.submit(txn, remedy::testing::crash_scope()), remedy::testing::SimulatedCrash);
    wal = crashing.entries();
  }
  MemoryJournal journal(wal);
  Kernel k(sim, journal, fast());
  const auto report = k.recover();
  ASSERT_EQ(report.resolved.size(), 1u);
  EXPECT_EQ(report.resolved[0].resolution, "resumed");
  EXPECT_EQ(report.resolved[0].completed_before, 2u);
  EXPECT_EQ(report.resolved[0].outcome, TxnOutcome::Committed);
  EXPECT_NE(sim.state(), initial);
  EXPECT_EQ(sim.duplicate_calls(), 0u);
}

TEST(Recovery, UnreachableBackendDuringRecoveryAppliesPolicy) {
  SimCluster sim(remedy::testing::crash_topology());
  auto txn = remedy::testing::crash_transaction("t-dark");
  txn.failure_policy = FailurePolicy::AbortOnly;
  std::vector<WalEntry> wal;
  {
    CrashingJournal crashing({}, 3, CrashingJournal::When::After);
    Kernel k(sim, crashing, fast());
    EXPECT_THROW(k.submit(txn, remedy::testing::crash_scope()), remedy::testing::SimulatedCrash);
    wal = crashing.entries();
  }
  sim.set_unreachable(true);
  MemoryJournal journal(wal);
  Kernel k(sim, journal, fast());
  const auto report = k.recover();
  ASSERT_EQ(report.resolved.size(), 1u);
  EXPECT_EQ(report.resolved[0].resolution, "policy_applied");
  EXPECT_EQ(report.resolved[0].outcome, TxnOutcome::Aborted);
}

TEST(Recovery, CompensationFailedKeepsLocksAfterRecovery) {
  SimCluster sim(remedy::testing::crash_topology());
  auto txn = remedy::testing::crash_transaction("t-stuck");
  std::vector<WalEntry> wal;
  {
    // Crash right after rollback_begin.
    sim.force_failures(S("prod/c"), std::nullopt, 1);
    CrashingJournal crashing({}, 4, CrashingJournal::When::After);
    Kernel k(sim, crashing, fast());
    EXPECT_THROW(k.submit(txn, remedy::testing::crash_scope()), remedy::testing::SimulatedCrash);
    wal = crashing.entries();
  }
  ASSERT_EQ(wal.back().kind, WalEntry::Kind::RollbackBegin);
  sim.force_failures(S("prod/b"), ActionKind::RestoreTraffic, 1);
  MemoryJournal journal(wal);
  Kernel k(sim, journal, fast());
  const auto report = k.recover();
  ASSERT_EQ(report.resolved.size(), 1u);
  EXPECT_EQ(report.resolved[0].outcome, TxnOutcome::CompensationFailed);
  EXPECT_EQ(k.alerts().size(), 1u);

  RemediationTransaction probe;
  probe.txn_id = "t-probe";
  probe.actions = {actions::restore_traffic(S("prod/b"))};
  probe.conflict_keys = {ConflictKey::of_service(S("prod/b"))};
  const auto r = k.submit(probe, remedy::testing::crash_scope());
  ASSERT_TRUE(r.rejection);
  EXPECT_EQ(r.rejection->code, RejectCode::Conflict);
  EXPECT_TRUE(k.operator_release("t-stuck"));
  probe.txn_id = "t-probe2";
  EXPECT_TRUE(k.submit(probe, remedy::testing::crash_scope()).committed());
}

TEST(Recovery, StructurallyBrokenWalIsFatal) {
  SimCluster sim(remedy::testing::crash_topology());
  std::vector<WalEntry> wal{WalEntry::action_complete("ghost", 0, "ghost/a0.0")};
  wal[0].seq = 1;
  MemoryJournal journal(wal);
  Kernel k(sim, journal, fast());
  EXPECT_THROW(k.recover(), WalCorruptionError);
}

TEST(Recovery, SkippedActionIndexIsFatal) {
  SimCluster sim(remedy::testing::crash_topology());
  MemoryJournal journal;
  journal.append(WalEntry::txn_start("t", to_json(remedy::testing::crash_transaction("t"))));
  journal.append(WalEntry::action_complete("t", 1, "t/a1.0"));
  Kernel k(sim, journal, fast());
  EXPECT_THROW(k.recover(), WalCorruptionError);
}

TEST(Recovery, FileJournalSurvivesTornTailAndResumes) {
  const auto path = std::filesystem::temp_directory_path() / ("remedy-recovery-" + std::to_string(::getpid()) + ".wal");
  std::filesystem::remove(path);
  SimCluster sim(remedy::testing::crash_topology());
  {
    FileJournal file(path, {false});
    CrashingJournal crashing(file.entries(), 3, CrashingJournal::When::Before);
    Kernel k(sim, crashing, fast());
    EXPECT_THROW(k.submit(remedy::testing::crash_transaction(), remedy::testing::crash_scope()),
                 remedy::testing::SimulatedCrash);
    for (auto e : crashing.entries()) file.append(e);
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"seq":3,"kind":"action_com)";
  }
  FileJournal file(path, {false});
  ASSERT_TRUE(file.recovery_diagnostic());
  Kernel k(sim, file, fast());
  const auto report = k.recover();
  ASSERT_EQ(report.resolved.size(), 1u);
  EXPECT_EQ(report.resolved[0].outcome, TxnOutcome::Committed);
  EXPECT_NO_THROW(check_wal_structure(file.entries()));
  EXPECT_EQ(sim.duplicate_calls(), 0u);
  std::filesystem::remove(path);
}
