#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "remedy/harm.hpp"
#include "remedy/isa.hpp"
#include "remedy/recovery_groups.hpp"
#include "remedy/scenario.hpp"

namespace remedy {

enum class Policy {
  /// Unrestricted mutations straight against the backend.
  RawTools,
  /// Proposals must pass kernel validation.
  IsaOnly,
  /// IsaOnly plus a verifier reviewing accepted proposals.
  IsaCritic,
};

std::string_view to_string(Policy policy) noexcept;
/// `raw_tools`, `isa_only`, `isa_critic`. Throws ConfigError.
Policy parse_policy(std::string_view text);

struct Misbehavior {
  double p_out_of_scope = 0.4;
  double p_skip_drain = 0.6;
  double p_wrong_target = 0.2;
};

/// Modeled agent latencies, counted in TTR only.
struct AgentDelays {
  std::int64_t diagnosis_ms = 5'200;
  std::int64_t planning_ms = 4'800;
  std::int64_t verification_ms = 3'100;
};

struct PolicyConfig {
  Policy policy = Policy::IsaCritic;
  Misbehavior misbehavior;
  std::uint64_t seed = 42;
  AgentDelays delays;

  /// Throws ConfigError unless every probability is in [0, 1].
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static PolicyConfig from_json(const nlohmann::json& doc);
};

struct Diagnosis {
  ServiceRef suspect;
  std::optional<FaultKind> suspected_kind;
};

/// Misbehaviors drawn for one incident. They stick across repairs.
struct Slips {
  bool out_of_scope = false;
  bool skip_drain = false;
  bool wrong_target = false;
};

struct TranscriptEntry {
  nlohmann::json proposal;
  std::string kernel_verdict;
  /// `APPROVE`, `REJECT: <rationale>`, or empty when no verifier ran.
  std::string verifier_verdict;
};

struct TtrBreakdown {
  std::int64_t diagnosis_ms = 0;
  std::int64_t planning_ms = 0;
  std::int64_t verification_ms = 0;
  double kernel_ms = 0;
  std::int64_t recovery_ms = 0;

  [[nodiscard]] double total_ms() const noexcept {
    return static_cast<double>(diagnosis_ms + planning_ms + verification_ms + recovery_ms) + kernel_ms;
  }
};

struct TxnHarm {
  std::string txn_id;
  bool harmed = false;
};

struct IncidentRecord {
  std::string scenario_id;
  FaultKind fault_kind = FaultKind::PodFailure;
  ServiceRef fault_target;
  RecoveryGroup recovery_group;
  Diagnosis diagnosis;
  Slips slips;
  std::vector<TranscriptEntry> transcript;
  /// committed | rolled_back | aborted | compensation_failed | abandoned |
  /// executed (raw tools)
  std::string outcome;
  bool harmed = false;
  std::vector<ServiceRef> harmed_services;
  std::vector<TxnHarm> committed_txns;
  bool recovered = false;
  TtrBreakdown ttr;
  /// Tokens of every backend mutation the incident issued.
  std::vector<std::string> issued_tokens;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Reads telemetry only: the most downstream degraded member of the group.
Diagnosis diagnose(const SimCluster& sim, const RecoveryGroup& group);

/// Planner output before any repair.
RemediationTransaction plan_remediation(const Diagnosis& diagnosis, const RecoveryGroup& group,
                                        const CallGraph& graph, const Slips& slips, std::mt19937_64& rng,
                                        std::string txn_id);

/// Verifier: nullopt approves, otherwise the rejection rationale.
std::optional<std::string> verify_plan(const RemediationTransaction& txn, const RecoveryGroup& group);

/// Planner repair from kernel feedback or verifier rationale. nullopt when
/// nothing is left to propose.
std::optional<RemediationTransaction> repair_plan(const RemediationTransaction& txn, const RecoveryGroup& group,
                                                  std::string_view feedback, std::string txn_id);

/// One incident end to end on a fresh simulator. Throws ConfigError if the
/// scenario injects no fault.
IncidentRecord run_incident(const Scenario& scenario, const PolicyConfig& config, std::uint64_t incident_seed);

}  // namespace remedy
