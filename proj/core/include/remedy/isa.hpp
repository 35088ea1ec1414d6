#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "remedy/cluster_view.hpp"
#include "remedy/service_ref.hpp"

namespace remedy {

// ---------------------------------------------------------------------------
// Effect types and action kinds

/// Rollback semantics of an action.
enum class EffectType {
  Restartable,    // safe to re-execute on transient failure
  Reversible,     // has a mechanically derived inverse
  Compensatable,  // needs explicit compensation carried in the transaction
  Irreversible,   // blocked unless break-glass is enabled
};

/// The seven built-in remediation primitives. `Extension` marks an action
/// defined through an ExtensionRegistry; the default parser never produces it.
enum class ActionKind { Restart, Drain, RestoreTraffic, CircuitBreak, RateLimit, Scale, RollbackConfig, Extension };

inline constexpr ActionKind kBuiltinKinds[] = {ActionKind::Restart,      ActionKind::Drain,     ActionKind::RestoreTraffic,
                                               ActionKind::CircuitBreak, ActionKind::RateLimit, ActionKind::Scale,
                                               ActionKind::RollbackConfig};

/// Snake-case wire name, e.g. `restore_traffic`.
std::string_view to_string(ActionKind kind) noexcept;
std::string_view to_string(EffectType effect) noexcept;
/// Exactly the seven built-in names; anything else is nullopt.
std::optional<ActionKind> parse_action_kind(std::string_view name) noexcept;

/// Built-in mapping. Throws ContractError for ActionKind::Extension, whose
/// effect type lives in the registry.
EffectType effect_type_of(ActionKind kind);

// ---------------------------------------------------------------------------
// Parameters

struct RestartParams {
  std::int64_t grace_period_ms = 0;
  friend bool operator==(const RestartParams&, const RestartParams&) = default;
};
struct DrainParams {
  friend bool operator==(const DrainParams&, const DrainParams&) = default;
};
struct RestoreTrafficParams {
  friend bool operator==(const RestoreTrafficParams&, const RestoreTrafficParams&) = default;
};
struct CircuitBreakParams {
  ServiceRef dependency;
  /// Set only on the kernel-derived inverse ("reset to default").
  bool reset = false;
  friend bool operator==(const CircuitBreakParams&, const CircuitBreakParams&) = default;
};
struct RateLimitParams {
  /// nullopt only on the kernel-derived inverse ("remove limit").
  std::optional<double> limit_rps;
  friend bool operator==(const RateLimitParams&, const RateLimitParams&) = default;
};
struct ScaleParams {
  std::int64_t delta = 0;
  friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};
struct RollbackConfigParams {
  std::string to_version;
  friend bool operator==(const RollbackConfigParams&, const RollbackConfigParams&) = default;
};

struct ExtensionSpec;
struct ExtensionParams {
  std::shared_ptr<const ExtensionSpec> spec;
  nlohmann::json args = nlohmann::json::object();
  friend bool operator==(const ExtensionParams& a, const ExtensionParams& b);
};

using ActionParams = std::variant<RestartParams, DrainParams, RestoreTrafficParams, CircuitBreakParams,
                                  RateLimitParams, ScaleParams, RollbackConfigParams, ExtensionParams>;

// ---------------------------------------------------------------------------
// Action

/// One typed remediation step. Immutable value type; the compensation (if
/// any) is shared between copies.
class Action {
 public:
  Action(ServiceRef target, ActionParams params, std::optional<Action> compensation = std::nullopt);

  [[nodiscard]] ActionKind kind() const noexcept;
  /// Wire name; for extensions the registered name.
  [[nodiscard]] std::string kind_name() const;
  [[nodiscard]] EffectType effect() const;
  [[nodiscard]] const ServiceRef& target() const noexcept { return target_; }
  [[nodiscard]] const ActionParams& params() const noexcept { return params_; }
  template <class P>
  [[nodiscard]] const P& params_as() const {
    return std::get<P>(params_);
  }
  [[nodiscard]] const Action* compensation() const noexcept { return compensation_.get(); }

  friend bool operator==(const Action& a, const Action& b);

 private:
  ServiceRef target_;
  ActionParams params_;
  std::shared_ptr<const Action> compensation_;
};

namespace actions {
Action restart(ServiceRef target, std::int64_t grace_period_ms = 0);
/// Drain paired with its RestoreTraffic compensation.
Action drain(ServiceRef target);
Action restore_traffic(ServiceRef target);
Action circuit_break(ServiceRef target, ServiceRef dependency);
Action rate_limit(ServiceRef target, double limit_rps);
Action scale(ServiceRef target, std::int64_t delta);
/// RollbackConfig to `to_version`, compensated by rolling back to
/// `previous_version`.
Action rollback_config(ServiceRef target, std::string to_version, std::string previous_version);
}  // namespace actions

/// Mechanical inverse of a Reversible action: Scale{d} -> Scale{-d},
/// RateLimit -> remove limit, CircuitBreak -> reset, RestoreTraffic -> Drain.
/// Throws ContractError for any other effect type.
Action inverse_of(const Action& action);

/// The step that undoes `action` during rollback: the inverse for
/// Reversible actions, the carried compensation for Compensatable ones,
/// nullopt for Restartable ones.
std::optional<Action> undo_step(const Action& action);

// ---------------------------------------------------------------------------
// Conflict keys

enum class Granularity { Cluster, Namespace, Service };
std::string_view to_string(Granularity g) noexcept;

/// Lock identifier. Total order: Cluster < Namespace < Service, then
/// lexicographic on the reference.
class ConflictKey {
 public:
  static ConflictKey cluster();
  static ConflictKey of_namespace(std::string ns);
  static ConflictKey of_service(ServiceRef ref);

  [[nodiscard]] Granularity granularity() const noexcept { return granularity_; }
  /// Namespace for Namespace and Service keys; empty for Cluster.
  [[nodiscard]] const std::string& ns() const noexcept { return ns_; }
  /// Service name for Service keys; empty otherwise.
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] ServiceRef service() const { return ServiceRef{ns_, name_}; }

  /// True if this key locks everything `other` locks.
  [[nodiscard]] bool subsumes(const ConflictKey& other) const noexcept;
  /// One subsumes the other.
  [[nodiscard]] bool overlaps(const ConflictKey& other) const noexcept {
    return subsumes(other) || other.subsumes(*this);
  }
  [[nodiscard]] bool covers(const ServiceRef& ref) const noexcept;

  /// `<granularity>/<ref>`: `cluster/`, `namespace/prod`, `service/prod/cart`.
  [[nodiscard]] std::string resource() const;

  friend bool operator==(const ConflictKey&, const ConflictKey&) = default;
  friend std::strong_ordering operator<=>(const ConflictKey& a, const ConflictKey& b) noexcept;

 private:
  Granularity granularity_ = Granularity::Cluster;
  std::string ns_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Preconditions

struct ServiceExists {
  ServiceRef service;
  friend bool operator==(const ServiceExists&, const ServiceExists&) = default;
};
struct ReplicaCountAtLeast {
  ServiceRef service;
  std::int64_t count = 1;
  friend bool operator==(const ReplicaCountAtLeast&, const ReplicaCountAtLeast&) = default;
};
struct ServiceHealthy {
  ServiceRef service;
  friend bool operator==(const ServiceHealthy&, const ServiceHealthy&) = default;
};
struct TrafficStateIs {
  ServiceRef service;
  TrafficState state = TrafficState::Serving;
  friend bool operator==(const TrafficStateIs&, const TrafficStateIs&) = default;
};

using Precondition = std::variant<ServiceExists, ReplicaCountAtLeast, ServiceHealthy, TrafficStateIs>;

[[nodiscard]] bool holds(const Precondition& pre, const ClusterSnapshot& snapshot);
/// e.g. `replica_count_at_least(prod/cart, 2)`.
[[nodiscard]] std::string describe(const Precondition& pre);

// ---------------------------------------------------------------------------
// Transactions

enum class FailurePolicy { RollbackAll, Compensate, AbortOnly };
std::string_view to_string(FailurePolicy policy) noexcept;

struct RemediationTransaction {
  std::string txn_id;
  std::vector<Action> actions;
  std::set<ConflictKey> conflict_keys;
  std::vector<Precondition> preconditions;
  FailurePolicy failure_policy = FailurePolicy::RollbackAll;

  friend bool operator==(const RemediationTransaction&, const RemediationTransaction&) = default;
};

// ---------------------------------------------------------------------------
// Extensions

/// A domain-specific action. Registration requires the three elements every
/// built-in carries: an effect type, undo logic, and the keys it locks.
struct ExtensionSpec {
  std::string kind_name;
  EffectType effect = EffectType::Irreversible;
  /// Inverse (Reversible) or compensation (Compensatable). Required for
  /// those two effect types.
  std::function<Action(const Action&)> undo;
  /// Resources the action locks. Required.
  std::function<std::vector<ConflictKey>(const Action&)> conflict_keys;
};

class ExtensionRegistry {
 public:
  /// Throws ConfigError for a missing element or a name clash.
  void add(ExtensionSpec spec);
  [[nodiscard]] std::shared_ptr<const ExtensionSpec> find(std::string_view kind_name) const;
  [[nodiscard]] std::size_t size() const noexcept { return specs_.size(); }

 private:
  std::map<std::string, std::shared_ptr<const ExtensionSpec>, std::less<>> specs_;
};

Action make_extension_action(std::shared_ptr<const ExtensionSpec> spec, ServiceRef target,
                             nlohmann::json args = nlohmann::json::object());

/// Keys an action needs: its declared keys for extensions, otherwise the
/// Service key of its target.
std::vector<ConflictKey> required_keys(const Action& action);

/// Throws SchemaError naming the first violated invariant.
void check_well_formed(const RemediationTransaction& txn);

nlohmann::json to_json(const Action& action);
nlohmann::json to_json(const Precondition& pre);
nlohmann::json to_json(const ConflictKey& key);
nlohmann::json to_json(const RemediationTransaction& txn);
std::string serialize(const RemediationTransaction& txn);

/// Parses and validates a transaction document. Unknown kinds are rejected
/// unless found in `extensions`. Throws SchemaError.
RemediationTransaction transaction_from_json(const nlohmann::json& doc, const ExtensionRegistry* extensions = nullptr);
RemediationTransaction parse_transaction(std::string_view document, const ExtensionRegistry* extensions = nullptr);

}  // namespace remedy
