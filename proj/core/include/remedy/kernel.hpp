#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "remedy/capability.hpp"
#include "remedy/cluster_view.hpp"
#include "remedy/feedback.hpp"
#include "remedy/isa.hpp"
#include "remedy/journal.hpp"
#include "remedy/lock_registry.hpp"
#include "remedy/recovery_groups.hpp"

namespace remedy {

struct ApplyResult {
  bool ok = true;
  std::string message;

  static ApplyResult success() { return {}; }
  static ApplyResult failure(std::string message) { return {false, std::move(message)}; }
};

/// What the kernel drives. Tokens are single-use: a backend must return the
/// recorded result, without re-executing, when it sees a token again.
/// Either call may throw BackendUnavailable.
class ActuatorBackend {
 public:
  virtual ~ActuatorBackend() = default;
  virtual ClusterSnapshot snapshot() = 0;
  virtual ApplyResult apply(const Action& action, const std::string& token) = 0;
  /// Result recorded for a token already used, if the backend keeps one.
  /// Recovery uses it to learn whether an unjournaled call took effect.
  virtual std::optional<ApplyResult> recorded(const std::string& token) {
    (void)token;
    return std::nullopt;
  }
};

using KernelClock = std::chrono::steady_clock;

struct KernelPolicy {
  /// Admissions per namespace per sliding window.
  unsigned rate_limit = 10;
  std::chrono::milliseconds rate_window{60'000};
  bool break_glass_enabled = false;
  /// Extra attempts for a failing Restartable action.
  unsigned restart_retries = 3;
  std::chrono::milliseconds retry_backoff{100};

  /// Throws ConfigError.
  void validate() const;
};

struct ActiveTransaction {
  std::string txn_id;
  std::set<ConflictKey> keys;
};

/// Admission timestamps per namespace for the sliding-window rate limit.
class AdmissionHistory {
 public:
  void record(const std::string& ns, KernelClock::time_point at);
  [[nodiscard]] std::size_t count(const std::string& ns, KernelClock::time_point now,
                                  std::chrono::milliseconds window) const;

 private:
  std::map<std::string, std::deque<KernelClock::time_point>, std::less<>> admissions_;
};

struct Verdict {
  std::optional<RejectionFeedback> rejection;
  [[nodiscard]] bool accepted() const noexcept { return !rejection; }
};

/// Checks, first failure wins: capability, scope, irreversible effect,
/// conflict with `active` (iterated in txn_id order), rate limit.
/// `txn` must already be well formed.
Verdict validate(const RemediationTransaction& txn, const RecoveryGroup& scope, const CapabilitySet& caps,
                 const KernelPolicy& policy, std::span<const ActiveTransaction> active,
                 const AdmissionHistory& history, KernelClock::time_point now);

/// `<txn>/a<i>.<attempt>` and `<txn>/u<i>`.
std::string action_token(std::string_view txn_id, std::size_t index, unsigned attempt);
std::string undo_token(std::string_view txn_id, std::size_t index);

struct OperatorAlert {
  std::string txn_id;
  std::size_t action_index = 0;
  std::string message;
};

struct KernelTiming {
  KernelClock::duration total{};
  KernelClock::duration backend{};
  KernelClock::duration backoff{};
  /// Time spent in the kernel itself.
  [[nodiscard]] KernelClock::duration kernel() const noexcept { return total - backend - backoff; }
};

struct SubmitResult {
  std::string txn_id;
  /// Set when validation refused the transaction or a precondition failed.
  std::optional<RejectionFeedback> rejection;
  /// Set once the transaction was journaled.
  std::optional<TxnOutcome> outcome;
  KernelTiming timing;

  [[nodiscard]] bool committed() const noexcept { return outcome == TxnOutcome::Committed; }
};

struct RecoveredTransaction {
  std::string txn_id;
  TxnOutcome outcome = TxnOutcome::Committed;
  std::size_t completed_before = 0;
  std::string resolution;  // resumed | policy_applied | rollback_resumed
};

struct RecoveryReport {
  std::vector<RecoveredTransaction> resolved;
  std::size_t terminal = 0;
  std::optional<std::string> diagnostic;
};

enum class ConflictMode {
  /// Overlap with an in-flight transaction is a validation failure.
  Reject,
  /// Admitted transactions queue on their locks instead.
  Wait,
};

class Kernel {
 public:
  struct Options {
    KernelPolicy policy;
    CapabilitySet capabilities = CapabilitySet::all_builtin();
    ConflictMode conflict_mode = ConflictMode::Reject;
    const ExtensionRegistry* extensions = nullptr;
    std::function<void(std::chrono::milliseconds)> sleep;
    std::function<KernelClock::time_point()> now;
  };

  Kernel(ActuatorBackend& backend, Journal& journal, Options options);
  Kernel(ActuatorBackend& backend, Journal& journal) : Kernel(backend, journal, Options{}) {}
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Resolves every journaled transaction that has no Outcome. Must run
  /// before the first submit when the journal is not empty.
  RecoveryReport recover();

  /// validate() against the current in-flight set, without admitting.
  [[nodiscard]] Verdict check(const RemediationTransaction& txn, const RecoveryGroup& scope) const;

  SubmitResult submit(const RemediationTransaction& txn, const RecoveryGroup& scope);
  /// Parses first; a schema problem comes back as a SchemaError rejection.
  SubmitResult submit_document(std::string_view document, const RecoveryGroup& scope);

  /// Releases the locks a CompensationFailed transaction kept. False if
  /// `txn_id` holds none.
  bool operator_release(const std::string& txn_id);

  [[nodiscard]] std::vector<OperatorAlert> alerts() const;
  [[nodiscard]] std::size_t in_flight() const;
  [[nodiscard]] const KernelPolicy& policy() const noexcept { return options_.policy; }

 private:
  struct Scratch;

  std::vector<ActiveTransaction> active_snapshot() const;
  ApplyResult call_backend(const Action& action, const std::string& token, Scratch& s);
  bool perform(const RemediationTransaction& txn, std::size_t index, Scratch& s);
  TxnOutcome run_forward(const RemediationTransaction& txn, std::size_t from, Scratch& s);
  TxnOutcome fail(const RemediationTransaction& txn, std::size_t completed, Scratch& s);
  TxnOutcome undo(const RemediationTransaction& txn, std::size_t completed, const std::set<std::size_t>& done,
                  Scratch& s);
  void finish(const std::string& txn_id, TxnOutcome outcome, LockHandle lock);

  ActuatorBackend& backend_;
  Journal& journal_;
  Options options_;
  LockRegistry locks_;

  std::mutex admission_mu_;
  mutable std::mutex state_mu_;
  AdmissionHistory history_;
  std::map<std::string, std::set<ConflictKey>> active_;
  std::map<std::string, LockHandle> held_;
  std::set<std::string> seen_ids_;
  std::vector<OperatorAlert> alerts_;
  bool recovered_ = false;
};

}  // namespace remedy
