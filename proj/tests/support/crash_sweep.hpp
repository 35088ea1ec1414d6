#pragma once

#include <optional>
#include <string>
#include <vector>

#include "journals.hpp"
#include "remedy/kernel.hpp"
#include "remedy/sim_cluster.hpp"

namespace remedy::testing {

/// Three services a, b, c in `prod` with a caller in front of them.
CallGraph crash_topology();
/// [Scale a +2, Drain b, RateLimit c 50], RollbackAll.
RemediationTransaction crash_transaction(const std::string& txn_id = "t-crash");
RecoveryGroup crash_scope();

struct CrashPoint {
  std::size_t append = 1;
  CrashingJournal::When when = CrashingJournal::When::Before;
  /// Second crash, this time inside recovery.
  std::optional<std::size_t> recovery_append;
  CrashingJournal::When recovery_when = CrashingJournal::When::Before;
  /// Make action 2 fail so the transaction rolls back.
  bool fail_last_action = false;

  [[nodiscard]] std::string label() const;
};

struct CrashRun {
  bool crashed = false;            // the first crash fired
  bool recovery_crashed = false;   // the second crash fired
  std::string final_state;         // "committed", "rolled_back" or "inconsistent"
  std::vector<std::string> problems;
  std::vector<WalEntry> wal;
  std::vector<ActionLogEntry> log;
};

/// Runs the transaction against a fresh simulator with the crash point,
/// recovers (possibly twice) and checks state, WAL and action log.
CrashRun run_crash_point(const CrashPoint& point);

/// Every single and double crash point; points that never fire are skipped.
std::vector<std::pair<CrashPoint, CrashRun>> crash_sweep();

}  // namespace remedy::testing
