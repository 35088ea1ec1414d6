#include "remedy/isa.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "remedy/error.hpp"

namespace remedy {

std::string_view to_string(TrafficState state) noexcept {
  return state == TrafficState::Serving ? "serving" : "drained";
}

TrafficState parse_traffic_state(std::string_view text) {
  if (text == "serving") return TrafficState::Serving;
  if (text == "drained") return TrafficState::Drained;
  throw ParseError("unknown traffic state \"" + std::string(text) + "\"");
}

// ---------------------------------------------------------------------------
// Kinds

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::Restart: return "restart";
    case ActionKind::Drain: return "drain";
    case ActionKind::RestoreTraffic: return "restore_traffic";
    case ActionKind::CircuitBreak: return "circuit_break";
    case ActionKind::RateLimit: return "rate_limit";
    case ActionKind::Scale: return "scale";
    case ActionKind::RollbackConfig: return "rollback_config";
    case ActionKind::Extension: return "extension";
  }
  return "unknown";
}

std::string_view to_string(EffectType effect) noexcept {
  switch (effect) {
    case EffectType::Restartable: return "restartable";
    case EffectType::Reversible: return "reversible";
    case EffectType::Compensatable: return "compensatable";
    case EffectType::Irreversible: return "irreversible";
  }
  return "unknown";
}

std::optional<ActionKind> parse_action_kind(std::string_view name) noexcept {
  for (const auto kind : kBuiltinKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

EffectType effect_type_of(ActionKind kind) {
  switch (kind) {
    case ActionKind::Restart: return EffectType::Restartable;
    case ActionKind::Drain: return EffectType::Compensatable;
    case ActionKind::RestoreTraffic: return EffectType::Reversible;
    case ActionKind::CircuitBreak: return EffectType::Reversible;
    case ActionKind::RateLimit: return EffectType::Reversible;
    case ActionKind::Scale: return EffectType::Reversible;
    case ActionKind::RollbackConfig: return EffectType::Compensatable;
    case ActionKind::Extension: break;
  }
  throw ContractError("extension actions carry their effect type in the registry");
}

// ---------------------------------------------------------------------------
// Action

bool operator==(const ExtensionParams& a, const ExtensionParams& b) {
  const bool same_spec = (a.spec == b.spec) || (a.spec && b.spec && a.spec->kind_name == b.spec->kind_name);
  return same_spec && a.args == b.args;
}

Action::Action(ServiceRef target, ActionParams params, std::optional<Action> compensation)
    : target_(std::move(target)), params_(std::move(params)) {
  if (compensation) compensation_ = std::make_shared<const Action>(*std::move(compensation));
}

ActionKind Action::kind() const noexcept {
  static_assert(std::variant_size_v<ActionParams> == 8);
  return static_cast<ActionKind>(params_.index());
}

std::string Action::kind_name() const {
  if (const auto* ext = std::get_if<ExtensionParams>(&params_)) return ext->spec ? ext->spec->kind_name : "extension";
  return std::string(to_string(kind()));
}

EffectType Action::effect() const {
  if (const auto* ext = std::get_if<ExtensionParams>(&params_)) {
    return ext->spec ? ext->spec->effect : EffectType::Irreversible;
  }
  return effect_type_of(kind());
}

bool operator==(const Action& a, const Action& b) {
  if (a.target_ != b.target_ || a.params_ != b.params_) return false;
  if (!a.compensation_ || !b.compensation_) return !a.compensation_ && !b.compensation_;
  return *a.compensation_ == *b.compensation_;
}

namespace actions {

Action restart(ServiceRef target, std::int64_t grace_period_ms) {
  return Action(std::move(target), RestartParams{grace_period_ms});
}

Action drain(ServiceRef target) {
  Action restore(target, RestoreTrafficParams{});
  return Action(std::move(target), DrainParams{}, std::move(restore));
}

Action restore_traffic(ServiceRef target) { return Action(std::move(target), RestoreTrafficParams{}); }

Action circuit_break(ServiceRef target, ServiceRef dependency) {
  return Action(std::move(target), CircuitBreakParams{std::move(dependency), false});
}

Action rate_limit(ServiceRef target, double limit_rps) { return Action(std::move(target), RateLimitParams{limit_rps}); }

Action scale(ServiceRef target, std::int64_t delta) { return Action(std::move(target), ScaleParams{delta}); }

Action rollback_config(ServiceRef target, std::string to_version, std::string previous_version) {
  Action back(target, RollbackConfigParams{std::move(previous_version)});
  return Action(std::move(target), RollbackConfigParams{std::move(to_version)}, std::move(back));
}

}  // namespace actions

Action inverse_of(const Action& action) {
  if (action.effect() != EffectType::Reversible) {
    throw ContractError("inverse_of requires a reversible action, got " + action.kind_name() + " (" +
                        std::string(to_string(action.effect())) + ")");
  }
  const auto& target = action.target();
  switch (action.kind()) {
    case ActionKind::Scale:
      return actions::scale(target, -action.params_as<ScaleParams>().delta);
    case ActionKind::RateLimit:
      if (!action.params_as<RateLimitParams>().limit_rps) {
        throw ContractError("removing a rate limit has no mechanical inverse");
      }
      return Action(target, RateLimitParams{std::nullopt});
    case ActionKind::CircuitBreak: {
      auto p = action.params_as<CircuitBreakParams>();
      p.reset = !p.reset;
      return Action(target, std::move(p));
    }
    case ActionKind::RestoreTraffic:
      return actions::drain(target);
    case ActionKind::Extension: {
      const auto& ext = action.params_as<ExtensionParams>();
      if (!ext.spec || !ext.spec->undo) throw ContractError("extension " + action.kind_name() + " has no inverse");
      return ext.spec->undo(action);
    }
    default:
      break;
  }
  throw ContractError("no inverse defined for " + action.kind_name());
}

std::optional<Action> undo_step(const Action& action) {
  switch (action.effect()) {
    case EffectType::Reversible:
      return inverse_of(action);
    case EffectType::Compensatable:
      if (action.compensation()) return *action.compensation();
      throw ContractError(action.kind_name() + " on " + action.target().str() + " carries no compensation");
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Conflict keys

std::string_view to_string(Granularity g) noexcept {
  switch (g) {
    case Granularity::Cluster: return "cluster";
    case Granularity::Namespace: return "namespace";
    case Granularity::Service: return "service";
  }
  return "unknown";
}

ConflictKey ConflictKey::cluster() { return ConflictKey{}; }

ConflictKey ConflictKey::of_namespace(std::string ns) {
  ConflictKey k;
  k.granularity_ = Granularity::Namespace;
  k.ns_ = std::move(ns);
  return k;
}

ConflictKey ConflictKey::of_service(ServiceRef ref) {
  ConflictKey k;
  k.granularity_ = Granularity::Service;
  k.ns_ = std::move(ref.ns);
  k.name_ = std::move(ref.name);
  return k;
}

bool ConflictKey::subsumes(const ConflictKey& other) const noexcept {
  switch (granularity_) {
    case Granularity::Cluster: return true;
    case Granularity::Namespace: return other.granularity_ != Granularity::Cluster && other.ns_ == ns_;
    case Granularity::Service: return other == *this;
  }
  return false;
}

bool ConflictKey::covers(const ServiceRef& ref) const noexcept {
  switch (granularity_) {
    case Granularity::Cluster: return true;
    case Granularity::Namespace: return ref.ns == ns_;
    case Granularity::Service: return ref.ns == ns_ && ref.name == name_;
  }
  return false;
}

std::string ConflictKey::resource() const {
  switch (granularity_) {
    case Granularity::Cluster: return "cluster/";
    case Granularity::Namespace: return "namespace/" + ns_;
    case Granularity::Service: return "service/" + ns_ + "/" + name_;
  }
  return {};
}

std::strong_ordering operator<=>(const ConflictKey& a, const ConflictKey& b) noexcept {
  if (auto c = a.granularity_ <=> b.granularity_; c != 0) return c;
  switch (a.granularity_) {
    case Granularity::Cluster: return std::strong_ordering::equal;
    case Granularity::Namespace: return a.ns_ <=> b.ns_;
    case Granularity::Service: return ServiceRef{a.ns_, a.name_} <=> ServiceRef{b.ns_, b.name_};
  }
  return std::strong_ordering::equal;
}

// ---------------------------------------------------------------------------
// Preconditions

bool holds(const Precondition& pre, const ClusterSnapshot& snapshot) {
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        auto it = snapshot.find(p.service);
        if (it == snapshot.end()) return false;
        if constexpr (std::is_same_v<T, ServiceExists>) {
          return true;
        } else if constexpr (std::is_same_v<T, ReplicaCountAtLeast>) {
          return it->second.replicas >= p.count;
        } else if constexpr (std::is_same_v<T, ServiceHealthy>) {
          return it->second.healthy;
        } else {
          return it->second.traffic == p.state;
        }
      },
      pre);
}

std::string describe(const Precondition& pre) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ServiceExists>) {
          return "service_exists(" + p.service.str() + ")";
        } else if constexpr (std::is_same_v<T, ReplicaCountAtLeast>) {
          return "replica_count_at_least(" + p.service.str() + ", " + std::to_string(p.count) + ")";
        } else if constexpr (std::is_same_v<T, ServiceHealthy>) {
          return "service_healthy(" + p.service.str() + ")";
        } else {
          return "traffic_state(" + p.service.str() + ", " + std::string(to_string(p.state)) + ")";
        }
      },
      pre);
}

std::string_view to_string(FailurePolicy policy) noexcept {
  switch (policy) {
    case FailurePolicy::RollbackAll: return "rollback_all";
    case FailurePolicy::Compensate: return "compensate";
    case FailurePolicy::AbortOnly: return "abort_only";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Extensions

void ExtensionRegistry::add(ExtensionSpec spec) {
  if (spec.kind_name.empty()) throw ConfigError("extension action needs a kind name");
  if (parse_action_kind(spec.kind_name)) {
    throw ConfigError("extension \"" + spec.kind_name + "\" clashes with a built-in action kind");
  }
  if (specs_.count(spec.kind_name)) throw ConfigError("extension \"" + spec.kind_name + "\" is already registered");
  if ((spec.effect == EffectType::Reversible || spec.effect == EffectType::Compensatable) && !spec.undo) {
    throw ConfigError("extension \"" + spec.kind_name + "\" is " + std::string(to_string(spec.effect)) +
                      " but provides no inverse/compensation logic");
  }
  if (!spec.conflict_keys) throw ConfigError("extension \"" + spec.kind_name + "\" declares no conflict keys");
  auto name = spec.kind_name;
  specs_.emplace(std::move(name), std::make_shared<const ExtensionSpec>(std::move(spec)));
}

std::shared_ptr<const ExtensionSpec> ExtensionRegistry::find(std::string_view kind_name) const {
  auto it = specs_.find(kind_name);
  return it == specs_.end() ? nullptr : it->second;
}

Action make_extension_action(std::shared_ptr<const ExtensionSpec> spec, ServiceRef target, nlohmann::json args) {
  const bool compensatable = spec && spec->effect == EffectType::Compensatable;
  Action bare(target, ExtensionParams{spec, args});
  if (!compensatable) return bare;
  Action comp = spec->undo(bare);
  return Action(std::move(target), ExtensionParams{std::move(spec), std::move(args)}, std::move(comp));
}

std::vector<ConflictKey> required_keys(const Action& action) {
  if (const auto* ext = std::get_if<ExtensionParams>(&action.params())) {
    if (ext->spec && ext->spec->conflict_keys) return ext->spec->conflict_keys(action);
  }
  return {ConflictKey::of_service(action.target())};
}

// ---------------------------------------------------------------------------
// Well-formedness

namespace {

void check_action(const Action& action, const std::string& where, bool is_compensation) {
  const auto effect = action.effect();
  switch (action.kind()) {
    case ActionKind::Restart:
      if (action.params_as<RestartParams>().grace_period_ms < 0) {
        throw SchemaError(where + ".params.grace_period_ms: must be >= 0");
      }
      break;
    case ActionKind::CircuitBreak:
      if (action.params_as<CircuitBreakParams>().reset) {
        throw SchemaError(where + ".params.reset: breaker reset is kernel-derived, not submittable");
      }
      break;
    case ActionKind::RateLimit: {
      const auto& limit = action.params_as<RateLimitParams>().limit_rps;
      if (!limit || !(*limit > 0) || !std::isfinite(*limit)) {
        throw SchemaError(where + ".params.limit_rps: must be a finite number > 0");
      }
      break;
    }
    case ActionKind::Scale:
      if (action.params_as<ScaleParams>().delta == 0) throw SchemaError(where + ".params.delta: must be nonzero");
      break;
    case ActionKind::RollbackConfig:
      if (action.params_as<RollbackConfigParams>().to_version.empty()) {
        throw SchemaError(where + ".params.to_version: must be a non-empty string");
      }
      break;
    case ActionKind::Extension:
      if (!action.params_as<ExtensionParams>().spec) throw SchemaError(where + ".kind: unregistered extension");
      break;
    default:
      break;
  }

  const Action* comp = action.compensation();
  if (is_compensation) {
    if (comp) throw SchemaError(where + ".compensation: nested compensation is not supported");
    return;
  }
  if (effect != EffectType::Compensatable) {
    if (comp) {
      throw SchemaError(where + ".compensation: only compensatable actions carry compensation (" + action.kind_name() +
                        " is " + std::string(to_string(effect)) + ")");
    }
    return;
  }
  if (!comp) throw SchemaError(where + ".compensation: required for compensatable action " + action.kind_name());
  if (comp->target() != action.target()) {
    throw SchemaError(where + ".compensation.target: must equal the action target " + action.target().str());
  }
  if (action.kind() == ActionKind::Drain && comp->kind() != ActionKind::RestoreTraffic) {
    throw SchemaError(where + ".compensation.kind: drain must be paired with restore_traffic");
  }
  if (action.kind() == ActionKind::RollbackConfig && comp->kind() != ActionKind::RollbackConfig) {
    throw SchemaError(where + ".compensation.kind: rollback_config must be compensated by rollback_config");
  }
  check_action(*comp, where + ".compensation", true);
}

}  // namespace

void check_well_formed(const RemediationTransaction& txn) {
  if (txn.txn_id.empty()) throw SchemaError("txn_id: must be a non-empty string");
  if (txn.actions.empty()) throw SchemaError("actions: must contain at least one action");
  if (txn.conflict_keys.empty()) throw SchemaError("conflict_keys: must contain at least one key");
  for (std::size_t i = 0; i < txn.actions.size(); ++i) {
    const auto where = "actions[" + std::to_string(i) + "]";
    check_action(txn.actions[i], where, false);
    for (const auto& needed : required_keys(txn.actions[i])) {
      const bool covered = std::any_of(txn.conflict_keys.begin(), txn.conflict_keys.end(),
                                       [&](const ConflictKey& k) { return k.subsumes(needed); });
      if (!covered) {
        throw SchemaError(where + ".target: not covered by conflict_keys (needs " + needed.resource() + ")");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Action& action) {
  nlohmann::json params = std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RestartParams>) {
          return {{"grace_period_ms", p.grace_period_ms}};
        } else if constexpr (std::is_same_v<T, CircuitBreakParams>) {
          nlohmann::json j = {{"dependency", p.dependency.str()}};
          if (p.reset) j["reset"] = true;
          return j;
        } else if constexpr (std::is_same_v<T, RateLimitParams>) {
          return {{"limit_rps", p.limit_rps ? nlohmann::json(*p.limit_rps) : nlohmann::json(nullptr)}};
        } else if constexpr (std::is_same_v<T, ScaleParams>) {
          return {{"delta", p.delta}};
        } else if constexpr (std::is_same_v<T, RollbackConfigParams>) {
          return {{"to_version", p.to_version}};
        } else if constexpr (std::is_same_v<T, ExtensionParams>) {
          return p.args;
        } else {
          return nlohmann::json::object();
        }
      },
      action.params());
  nlohmann::json j = {{"kind", action.kind_name()}, {"target", action.target().str()}, {"params", std::move(params)}};
  if (action.compensation() && action.kind() != ActionKind::Extension) j["compensation"] = to_json(*action.compensation());
  return j;
}

nlohmann::json to_json(const Precondition& pre) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ServiceExists>) {
          return {{"type", "service_exists"}, {"service", p.service.str()}};
        } else if constexpr (std::is_same_v<T, ReplicaCountAtLeast>) {
          return {{"type", "replica_count_at_least"}, {"service", p.service.str()}, {"count", p.count}};
        } else if constexpr (std::is_same_v<T, ServiceHealthy>) {
          return {{"type", "service_healthy"}, {"service", p.service.str()}};
        } else {
          return {{"type", "traffic_state"}, {"service", p.service.str()}, {"state", to_string(p.state)}};
        }
      },
      pre);
}

nlohmann::json to_json(const ConflictKey& key) {
  nlohmann::json j = {{"granularity", to_string(key.granularity())}};
  if (key.granularity() == Granularity::Namespace) j["ref"] = key.ns();
  if (key.granularity() == Granularity::Service) j["ref"] = key.service().str();
  return j;
}

nlohmann::json to_json(const RemediationTransaction& txn) {
  auto actions_json = nlohmann::json::array();
  for (const auto& a : txn.actions) actions_json.push_back(to_json(a));
  auto keys = nlohmann::json::array();
  for (const auto& k : txn.conflict_keys) keys.push_back(to_json(k));
  auto pres = nlohmann::json::array();
  for (const auto& p : txn.preconditions) pres.push_back(to_json(p));
  return {{"txn_id", txn.txn_id},
          {"actions", std::move(actions_json)},
          {"conflict_keys", std::move(keys)},
          {"preconditions", std::move(pres)},
          {"failure_policy", to_string(txn.failure_policy)}};
}

std::string serialize(const RemediationTransaction& txn) { return to_json(txn).dump(); }

namespace {

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key + ": missing");
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

ServiceRef require_ref(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto text = require_string(obj, key, where);
  auto ref = ServiceRef::try_parse(text);
  if (!ref) throw SchemaError(where + "." + key + ": invalid service ref \"" + text + "\" (expected ns/name)");
  return *std::move(ref);
}

std::int64_t require_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

Action action_from_json(const nlohmann::json& doc, const std::string& where, const ExtensionRegistry* extensions,
                        bool is_compensation) {
  if (!doc.is_object()) throw SchemaError(where + ": expected an object");
  const auto kind_name = require_string(doc, "kind", where);
  auto target = require_ref(doc, "target", where);
  nlohmann::json params = nlohmann::json::object();
  if (auto it = doc.find("params"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaError(where + ".params: expected an object");
    params = *it;
  }
  const auto pwhere = where + ".params";

  std::optional<Action> compensation;
  if (auto it = doc.find("compensation"); it != doc.end() && !it->is_null()) {
    compensation = action_from_json(*it, where + ".compensation", extensions, true);
  }

  const auto kind = parse_action_kind(kind_name);
  if (!kind) {
    auto spec = extensions ? extensions->find(kind_name) : nullptr;
    if (!spec) throw SchemaError(where + ".kind: unknown action kind \"" + kind_name + "\"");
    if (compensation) throw SchemaError(where + ".compensation: extension compensation comes from its registration");
    if (is_compensation) return Action(std::move(target), ExtensionParams{spec, params});
    return make_extension_action(std::move(spec), std::move(target), std::move(params));
  }

  ActionParams p;
  switch (*kind) {
    case ActionKind::Restart: {
      RestartParams rp;
      if (params.contains("grace_period_ms")) rp.grace_period_ms = require_int(params, "grace_period_ms", pwhere);
      p = rp;
      break;
    }
    case ActionKind::Drain: p = DrainParams{}; break;
    case ActionKind::RestoreTraffic: p = RestoreTrafficParams{}; break;
    case ActionKind::CircuitBreak: {
      CircuitBreakParams cp{require_ref(params, "dependency", pwhere), false};
      if (auto it = params.find("reset"); it != params.end()) {
        if (!it->is_boolean()) throw SchemaError(pwhere + ".reset: expected a boolean");
        cp.reset = it->get<bool>();
      }
      p = cp;
      break;
    }
    case ActionKind::RateLimit: {
      const auto& v = require_field(params, "limit_rps", pwhere);
      if (!v.is_null() && !v.is_number()) throw SchemaError(pwhere + ".limit_rps: expected a number");
      p = RateLimitParams{v.is_null() ? std::nullopt : std::optional<double>(v.get<double>())};
      break;
    }
    case ActionKind::Scale: p = ScaleParams{require_int(params, "delta", pwhere)}; break;
    case ActionKind::RollbackConfig: p = RollbackConfigParams{require_string(params, "to_version", pwhere)}; break;
    case ActionKind::Extension: break;
  }
  return Action(std::move(target), std::move(p), std::move(compensation));
}

Precondition precondition_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where + ": expected an object");
  const auto type = require_string(doc, "type", where);
  auto service = require_ref(doc, "service", where);
  if (type == "service_exists") return ServiceExists{std::move(service)};
  if (type == "service_healthy") return ServiceHealthy{std::move(service)};
  if (type == "replica_count_at_least") return ReplicaCountAtLeast{std::move(service), require_int(doc, "count", where)};
  if (type == "traffic_state") {
    const auto state = require_string(doc, "state", where);
    if (state != "serving" && state != "drained") {
      throw SchemaError(where + ".state: expected serving or drained");
    }
    return TrafficStateIs{std::move(service), parse_traffic_state(state)};
  }
  throw SchemaError(where + ".type: unknown precondition \"" + type + "\"");
}

ConflictKey key_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where + ": expected an object");
  const auto g = require_string(doc, "granularity", where);
  if (g == "cluster") return ConflictKey::cluster();
  if (g == "namespace") {
    auto ns = require_string(doc, "ref", where);
    if (ns.empty() || ns.find('/') != std::string::npos) throw SchemaError(where + ".ref: invalid namespace");
    return ConflictKey::of_namespace(std::move(ns));
  }
  if (g == "service") return ConflictKey::of_service(require_ref(doc, "ref", where));
  throw SchemaError(where + ".granularity: unknown granularity \"" + g + "\"");
}

FailurePolicy policy_from_string(const std::string& text) {
  if (text == "rollback_all") return FailurePolicy::RollbackAll;
  if (text == "compensate") return FailurePolicy::Compensate;
  if (text == "abort_only") return FailurePolicy::AbortOnly;
  throw SchemaError("failure_policy: unknown policy \"" + text + "\"");
}

}  // namespace

RemediationTransaction transaction_from_json(const nlohmann::json& doc, const ExtensionRegistry* extensions) {
  if (!doc.is_object()) throw SchemaError("transaction: expected a JSON object");
  RemediationTransaction txn;
  const std::string root = "transaction";
  const auto& id = require_field(doc, "txn_id", root);
  if (!id.is_string()) throw SchemaError("txn_id: expected a string");
  txn.txn_id = id.get<std::string>();

  const auto& acts = require_field(doc, "actions", root);
  if (!acts.is_array()) throw SchemaError("actions: expected an array");
  for (std::size_t i = 0; i < acts.size(); ++i) {
    txn.actions.push_back(action_from_json(acts[i], "actions[" + std::to_string(i) + "]", extensions, false));
  }

  const auto& keys = require_field(doc, "conflict_keys", root);
  if (!keys.is_array()) throw SchemaError("conflict_keys: expected an array");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    txn.conflict_keys.insert(key_from_json(keys[i], "conflict_keys[" + std::to_string(i) + "]"));
  }

  if (auto it = doc.find("preconditions"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("preconditions: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      txn.preconditions.push_back(precondition_from_json((*it)[i], "preconditions[" + std::to_string(i) + "]"));
    }
  }

  const auto& policy = require_field(doc, "failure_policy", root);
  if (!policy.is_string()) throw SchemaError("failure_policy: expected a string");
  txn.failure_policy = policy_from_string(policy.get<std::string>());

  check_well_formed(txn);
  return txn;
}

RemediationTransaction parse_transaction(std::string_view document, const ExtensionRegistry* extensions) {
  auto doc = nlohmann::json::parse(document, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw SchemaError("transaction: document is not valid JSON");
  return transaction_from_json(doc, extensions);
}

}  // namespace remedy
