#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "remedy/sim_cluster.hpp"

namespace remedy {

struct FaultSpec {
  FaultKind kind = FaultKind::PodFailure;
  ServiceRef target;
  std::int64_t at_ms = 30'000;
};

/// An action the backend already executed before a crash; replayed into a
/// fresh simulator so its token is known.
struct AppliedAction {
  std::string token;
  nlohmann::json action;
};

/// Topology, model parameters and fault schedule for one incident.
struct Scenario {
  std::string id;
  CallGraph topology;
  SimParams sim;
  std::vector<FaultSpec> faults;
  std::optional<ServiceRef> symptom;
  /// Virtual time at which remediation starts.
  std::int64_t action_at_ms = 90'000;
  /// Observation after the last action.
  std::int64_t observe_ms = 60'000;
  std::vector<AppliedAction> applied;

  /// Builds a simulator, injects the faults on schedule and, in virtual
  /// mode, runs the clock up to action_at_ms. Then replays `applied`.
  [[nodiscard]] std::unique_ptr<SimCluster> instantiate(ClockMode mode = ClockMode::Virtual) const;

  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws ConfigError.
  static Scenario from_json(const nlohmann::json& doc);
  static Scenario load(const std::filesystem::path& path);
};

nlohmann::json topology_to_json(const CallGraph& graph);
/// `{"services": [...], "edges": [{"caller", "callee", "weight"}]}`.
/// Throws ConfigError.
CallGraph topology_from_json(const nlohmann::json& doc);

/// Four hubs in namespace `prod`, each called by 24-26 frontends and
/// calling three backends that share two databases.
CallGraph hub_topology();

/// The default harm-campaign suite: fault kinds cycle through all five,
/// three scenarios in five fault a hub, the rest a service below one; the
/// symptom is always the hub. Deterministic in `seed`.
std::vector<Scenario> default_scenario_suite(std::uint64_t seed, std::size_t count = 50);

/// Same construction with a single fault kind.
std::vector<Scenario> fault_kind_suite(FaultKind kind, std::uint64_t seed, std::size_t count = 20);

}  // namespace remedy
