#include "remedy/kernel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

#include "remedy/error.hpp"

namespace remedy {

void KernelPolicy::validate() const {
  if (rate_limit == 0) throw ConfigError("kernel rate_limit must be > 0");
  if (rate_window.count() <= 0) throw ConfigError("kernel rate window must be positive");
  if (retry_backoff.count() < 0) throw ConfigError("kernel retry backoff must be >= 0");
}

void AdmissionHistory::record(const std::string& ns, KernelClock::time_point at) { admissions_[ns].push_back(at); }

std::size_t AdmissionHistory::count(const std::string& ns, KernelClock::time_point now,
                                    std::chrono::milliseconds window) const {
  auto it = admissions_.find(ns);
  if (it == admissions_.end()) return 0;
  return static_cast<std::size_t>(
      std::count_if(it->second.begin(), it->second.end(), [&](auto t) { return t > now - window && t <= now; }));
}

namespace {

std::set<std::string> namespaces_of(const RemediationTransaction& txn) {
  std::set<std::string> out;
  for (const auto& a : txn.actions) out.insert(a.target().ns);
  return out;
}

}  // namespace

Verdict validate(const RemediationTransaction& txn, const RecoveryGroup& scope, const CapabilitySet& caps,
                 const KernelPolicy& policy, std::span<const ActiveTransaction> active,
                 const AdmissionHistory& history, KernelClock::time_point now) {
  for (const auto& a : txn.actions) {
    const auto verb = a.kind_name();
    if (!caps.permits(verb, a.target())) return {RejectionFeedback::missing_capability(verb, a.target().name)};
  }
  for (const auto& a : txn.actions) {
    if (!scope.in_scope(a.target())) return {RejectionFeedback::out_of_scope(a.target().name)};
  }
  if (!policy.break_glass_enabled) {
    for (const auto& a : txn.actions) {
      if (a.effect() == EffectType::Irreversible) return {RejectionFeedback::irreversible_effect(a.kind_name())};
    }
  }
  std::vector<const ActiveTransaction*> ordered;
  for (const auto& t : active) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->txn_id < b->txn_id; });
  for (const auto& key : txn.conflict_keys) {
    for (const auto* other : ordered) {
      for (const auto& held : other->keys) {
        if (key.overlaps(held)) return {RejectionFeedback::conflict(held.resource(), other->txn_id)};
      }
    }
  }
  for (const auto& ns : namespaces_of(txn)) {
    if (history.count(ns, now, policy.rate_window) >= policy.rate_limit) {
      return {RejectionFeedback::rate_limited(ns, policy.rate_limit)};
    }
  }
  return {};
}

std::string action_token(std::string_view txn_id, std::size_t index, unsigned attempt) {
  return std::string(txn_id) + "/a" + std::to_string(index) + "." + std::to_string(attempt);
}

std::string undo_token(std::string_view txn_id, std::size_t index) {
  return std::string(txn_id) + "/u" + std::to_string(index);
}

// ---------------------------------------------------------------------------

struct Kernel::Scratch {
  KernelTiming timing;
};

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(KernelClock::now()) {}
  [[nodiscard]] KernelClock::duration elapsed() const { return KernelClock::now() - start_; }

 private:
  KernelClock::time_point start_;
};

}  // namespace

Kernel::Kernel(ActuatorBackend& backend, Journal& journal, Options options)
    : backend_(backend), journal_(journal), options_(std::move(options)) {
  options_.policy.validate();
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!options_.now) options_.now = [] { return KernelClock::now(); };
  recovered_ = journal_.entries().empty();
}

std::vector<ActiveTransaction> Kernel::active_snapshot() const {
  std::lock_guard lock(state_mu_);
  std::vector<ActiveTransaction> out;
  for (const auto& [id, keys] : active_) out.push_back({id, keys});
  return out;
}

Verdict Kernel::check(const RemediationTransaction& txn, const RecoveryGroup& scope) const {
  try {
    check_well_formed(txn);
  } catch (const SchemaError& e) {
    return {RejectionFeedback::schema_error(e.what())};
  }
  const auto active = active_snapshot();
  std::lock_guard lock(state_mu_);
  return validate(txn, scope, options_.capabilities, options_.policy, active, history_, options_.now());
}

ApplyResult Kernel::call_backend(const Action& action, const std::string& token, Scratch& s) {
  Stopwatch sw;
  ApplyResult r;
  try {
    r = backend_.apply(action, token);
  } catch (const BackendUnavailable& e) {
    r = ApplyResult::failure(e.what());
  }
  s.timing.backend += sw.elapsed();
  return r;
}

bool Kernel::perform(const RemediationTransaction& txn, std::size_t index, Scratch& s) {
  const auto& action = txn.actions[index];
  const unsigned attempts = action.effect() == EffectType::Restartable ? 1 + options_.policy.restart_retries : 1;
  for (unsigned attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      Stopwatch sw;
      options_.sleep(options_.policy.retry_backoff);
      s.timing.backoff += sw.elapsed();
    }
    const auto token = action_token(txn.txn_id, index, attempt);
    const auto r = call_backend(action, token, s);
    if (r.ok) {
      journal_.append(WalEntry::action_complete(txn.txn_id, index, token));
      return true;
    }
    spdlog::debug("txn {} action {} attempt {} failed: {}", txn.txn_id, index, attempt, r.message);
  }
  return false;
}

TxnOutcome Kernel::run_forward(const RemediationTransaction& txn, std::size_t from, Scratch& s) {
  for (std::size_t i = from; i < txn.actions.size(); ++i) {
    if (!perform(txn, i, s)) return fail(txn, i, s);
  }
  journal_.append(WalEntry::outcome_of(txn.txn_id, TxnOutcome::Committed));
  return TxnOutcome::Committed;
}

TxnOutcome Kernel::fail(const RemediationTransaction& txn, std::size_t completed, Scratch& s) {
  if (txn.failure_policy == FailurePolicy::AbortOnly) {
    journal_.append(WalEntry::outcome_of(txn.txn_id, TxnOutcome::Aborted));
    return TxnOutcome::Aborted;
  }
  journal_.append(WalEntry::rollback_begin(txn.txn_id));
  return undo(txn, completed, {}, s);
}

TxnOutcome Kernel::undo(const RemediationTransaction& txn, std::size_t completed, const std::set<std::size_t>& done,
                        Scratch& s) {
  for (std::size_t j = completed; j-- > 0;) {
    if (done.count(j)) continue;
    const auto& action = txn.actions[j];
    std::optional<Action> step;
    if (txn.failure_policy == FailurePolicy::RollbackAll) {
      step = undo_step(action);
    } else if (action.effect() == EffectType::Compensatable && action.compensation()) {
      step = *action.compensation();
    }
    if (!step) continue;
    const auto token = undo_token(txn.txn_id, j);
    const auto r = call_backend(*step, token, s);
    if (!r.ok) {
      const auto message = "undo of action " + std::to_string(j) + " (" + step->kind_name() + " on " +
                            step->target().str() + ") failed: " + r.message + "; locks held until operator release";
      spdlog::error("txn {}: {}", txn.txn_id, message);
      {
        std::lock_guard lock(state_mu_);
        alerts_.push_back({txn.txn_id, j, message});
      }
      journal_.append(WalEntry::outcome_of(txn.txn_id, TxnOutcome::CompensationFailed));
      return TxnOutcome::CompensationFailed;
    }
    journal_.append(WalEntry::undo_complete(txn.txn_id, j, token));
  }
  journal_.append(WalEntry::outcome_of(txn.txn_id, TxnOutcome::RolledBack));
  return TxnOutcome::RolledBack;
}

void Kernel::finish(const std::string& txn_id, TxnOutcome outcome, LockHandle lock) {
  if (outcome == TxnOutcome::CompensationFailed) {
    std::lock_guard state(state_mu_);
    held_.emplace(txn_id, std::move(lock));
    return;
  }
  lock.release();
  std::lock_guard state(state_mu_);
  active_.erase(txn_id);
}

SubmitResult Kernel::submit(const RemediationTransaction& txn, const RecoveryGroup& scope) {
  Stopwatch total;
  Scratch s;
  SubmitResult result;
  result.txn_id = txn.txn_id;
  auto done = [&]() -> SubmitResult {
    s.timing.total = total.elapsed();
    result.timing = s.timing;
    return result;
  };

  if (!recovered_) throw ContractError("Kernel::recover() must run before new transactions are admitted");
  try {
    check_well_formed(txn);
  } catch (const SchemaError& e) {
    result.rejection = RejectionFeedback::schema_error(e.what());
    return done();
  }

  std::unique_lock admission(admission_mu_);
  const auto now = options_.now();
  std::vector<ActiveTransaction> active;
  {
    std::lock_guard state(state_mu_);
    if (seen_ids_.count(txn.txn_id)) {
      result.rejection = RejectionFeedback::schema_error("txn_id \"" + txn.txn_id + "\" was already submitted");
      return done();
    }
    for (const auto& [id, keys] : active_) {
      // Wait mode still refuses keys parked by a CompensationFailed outcome.
      if (options_.conflict_mode == ConflictMode::Reject || held_.count(id)) active.push_back({id, keys});
    }
  }
  Verdict verdict;
  {
    std::lock_guard state(state_mu_);
    verdict = validate(txn, scope, options_.capabilities, options_.policy, active, history_, now);
  }
  if (!verdict.accepted()) {
    result.rejection = std::move(verdict.rejection);
    return done();
  }
  {
    std::lock_guard state(state_mu_);
    for (const auto& ns : namespaces_of(txn)) history_.record(ns, now);
    seen_ids_.insert(txn.txn_id);
    active_[txn.txn_id] = txn.conflict_keys;
  }

  LockHandle lock = locks_.acquire(txn.conflict_keys);

  // Preconditions are evaluated at commit time, under the locks.
  std::optional<std::string> failed_pre;
  {
    Stopwatch sw;
    try {
      const auto snap = backend_.snapshot();
      for (const auto& pre : txn.preconditions) {
        if (!holds(pre, snap)) {
          failed_pre = describe(pre);
          break;
        }
      }
    } catch (const BackendUnavailable&) {
      failed_pre = "backend_reachable";
    }
    s.timing.backend += sw.elapsed();
  }
  const bool irreversible = std::any_of(txn.actions.begin(), txn.actions.end(),
                                        [](const Action& a) { return a.effect() == EffectType::Irreversible; });

  journal_.append(WalEntry::txn_start(txn.txn_id, to_json(txn)));
  if (failed_pre || irreversible) {
    if (failed_pre) {
      result.rejection = RejectionFeedback::precondition_failed(*failed_pre);
    } else {
      spdlog::warn("txn {}: irreversible action needs out-of-band break-glass approval; refusing to execute",
                   txn.txn_id);
    }
    journal_.append(WalEntry::outcome_of(txn.txn_id, TxnOutcome::Aborted));
    admission.unlock();
    result.outcome = TxnOutcome::Aborted;
    finish(txn.txn_id, TxnOutcome::Aborted, std::move(lock));
    return done();
  }
  admission.unlock();

  result.outcome = run_forward(txn, 0, s);
  finish(txn.txn_id, *result.outcome, std::move(lock));
  return done();
}

SubmitResult Kernel::submit_document(std::string_view document, const RecoveryGroup& scope) {
  RemediationTransaction txn;
  try {
    txn = parse_transaction(document, options_.extensions);
  } catch (const SchemaError& e) {
    SubmitResult r;
    r.rejection = RejectionFeedback::schema_error(e.what());
    return r;
  }
  return submit(txn, scope);
}

RecoveryReport Kernel::recover() {
  std::lock_guard admission(admission_mu_);
  RecoveryReport report;
  const auto entries = journal_.entries();
  check_wal_structure(entries);

  struct Progress {
    nlohmann::json document;
    std::size_t completed = 0;
    bool rolling_back = false;
    std::set<std::size_t> undone;
    bool terminal = false;
  };
  std::vector<std::string> order;
  std::map<std::string, Progress> progress;
  for (const auto& e : entries) {
    auto& p = progress[e.txn_id];
    switch (e.kind) {
      case WalEntry::Kind::TxnStart:
        order.push_back(e.txn_id);
        p.document = e.document;
        break;
      case WalEntry::Kind::ActionComplete:
        if (e.action_index != p.completed) {
          throw WalCorruptionError("txn " + e.txn_id + ": action_complete for index " +
                                   std::to_string(e.action_index) + " skips an action");
        }
        ++p.completed;
        break;
      case WalEntry::Kind::RollbackBegin: p.rolling_back = true; break;
      case WalEntry::Kind::UndoComplete: p.undone.insert(e.action_index); break;
      case WalEntry::Kind::Outcome: p.terminal = true; break;
    }
  }
  {
    std::lock_guard state(state_mu_);
    for (const auto& id : order) seen_ids_.insert(id);
  }

  for (const auto& id : order) {
    const auto& p = progress[id];
    if (p.terminal) {
      ++report.terminal;
      continue;
    }
    RemediationTransaction txn;
    try {
      txn = transaction_from_json(p.document, options_.extensions);
    } catch (const SchemaError& e) {
      throw WalCorruptionError("txn " + id + ": journaled document no longer parses: " + e.what());
    }
    if (p.completed > txn.actions.size()) throw WalCorruptionError("txn " + id + ": more completions than actions");

    Scratch s;
    RecoveredTransaction r{id, TxnOutcome::Committed, p.completed, {}};
    if (p.rolling_back) {
      r.outcome = undo(txn, p.completed, p.undone, s);
      r.resolution = "rollback_resumed";
    } else {
      // The next action may have taken effect without its ActionComplete.
      if (p.completed < txn.actions.size()) {
        const auto& next = txn.actions[p.completed];
        const unsigned attempts = next.effect() == EffectType::Restartable ? 1 + options_.policy.restart_retries : 1;
        for (unsigned attempt = 0; attempt < attempts; ++attempt) {
          const auto token = action_token(id, p.completed, attempt);
          std::optional<ApplyResult> seen;
          try {
            seen = backend_.recorded(token);
          } catch (const BackendUnavailable&) {
          }
          if (seen && seen->ok) {
            journal_.append(WalEntry::action_complete(id, p.completed, token));
            ++r.completed_before;
            break;
          }
        }
      }
      const std::size_t completed = r.completed_before;
      bool still_valid = true;
      try {
        const auto snap = backend_.snapshot();
        still_valid = std::all_of(txn.preconditions.begin(), txn.preconditions.end(),
                                  [&](const Precondition& pre) { return holds(pre, snap); });
      } catch (const BackendUnavailable&) {
        still_valid = false;
      }
      if (still_valid) {
        r.outcome = run_forward(txn, completed, s);
        r.resolution = "resumed";
      } else {
        r.outcome = fail(txn, completed, s);
        r.resolution = "policy_applied";
      }
    }
    if (r.outcome == TxnOutcome::CompensationFailed) {
      std::lock_guard state(state_mu_);
      active_[id] = txn.conflict_keys;
      auto lock = locks_.try_acquire(txn.conflict_keys);
      if (lock) held_.emplace(id, std::move(*lock));
    }
    spdlog::info("recovered txn {} from {} completed action(s): {}", id, r.completed_before, to_string(r.outcome));
    report.resolved.push_back(std::move(r));
  }
  recovered_ = true;
  return report;
}

bool Kernel::operator_release(const std::string& txn_id) {
  std::lock_guard state(state_mu_);
  auto it = held_.find(txn_id);
  if (it == held_.end()) return false;
  it->second.release();
  held_.erase(it);
  active_.erase(txn_id);
  return true;
}

std::vector<OperatorAlert> Kernel::alerts() const {
  std::lock_guard state(state_mu_);
  return alerts_;
}

std::size_t Kernel::in_flight() const {
  std::lock_guard state(state_mu_);
  return active_.size() - held_.size();
}

}  // namespace remedy
