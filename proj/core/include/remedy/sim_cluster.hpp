#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "remedy/kernel.hpp"
#include "remedy/trace_model.hpp"

namespace remedy {

enum class FaultKind { PodFailure, NetworkPartition, CpuStress, MemoryStress, IoDelay };

inline constexpr FaultKind kAllFaultKinds[] = {FaultKind::PodFailure, FaultKind::NetworkPartition,
                                               FaultKind::CpuStress, FaultKind::MemoryStress, FaultKind::IoDelay};

std::string_view to_string(FaultKind kind) noexcept;
/// `pod_failure`, `network_partition`, `cpu_stress`, `memory_stress`,
/// `io_delay`. Throws ParseError.
FaultKind parse_fault_kind(std::string_view text);

enum class ClockMode {
  /// Latencies advance a simulated clock; telemetry is sampled every second.
  Virtual,
  /// Every action sleeps action_latency_ms of wall time. No telemetry.
  RealTime,
};

/// Propagation and latency model. All knobs are exposed so scenario files
/// can override them.
struct SimParams {
  double base_p99_ms = 25.0;
  double base_error_rate = 0.0005;
  /// Uniform multiplicative jitter on base values, +-noise.
  double noise = 0.02;
  /// Share of a degraded (but reachable) callee's excess error passed on.
  double damping = 0.9;
  double stress_error_rate = 0.02;
  double stress_latency_factor = 5.0;
  double io_delay_ms = 200.0;
  std::int64_t action_latency_ms = 100;
  std::int64_t restart_latency_ms = 30'000;
  /// Added when restarting a Serving service whose fan-in exceeds hub_fan_in.
  std::int64_t hub_restart_penalty_ms = 20'000;
  std::uint32_t hub_fan_in = 20;
  std::int64_t initial_replicas = 2;
  std::string initial_config_version = "v1";
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Missing keys keep defaults. Throws ConfigError.
  static SimParams from_json(const nlohmann::json& doc);
};

struct ServiceState {
  std::int64_t replicas = 2;
  TrafficState traffic = TrafficState::Serving;
  std::set<ServiceRef> breakers;
  std::optional<double> rate_limit_rps;
  std::string config_version;
  std::optional<FaultKind> fault;

  friend bool operator==(const ServiceState&, const ServiceState&) = default;
};

using ClusterState = std::map<ServiceRef, ServiceState>;

struct ActionLogEntry {
  /// Logical clock readings when the call began and when its effect landed.
  std::uint64_t seq_start = 0;
  std::uint64_t seq_end = 0;
  std::int64_t t_ms = 0;
  std::string kind;
  ServiceRef target;
  nlohmann::json action;
  std::string token;
  bool ok = true;
  std::string message;
};

struct TelemetrySample {
  std::int64_t t_ms = 0;
  double p99_ms = 0;
  double error_rate = 0;
  /// Portion of p99_ms / error_rate explained by injected faults alone.
  double fault_p99_ms = 0;
  double fault_error_rate = 0;
};

using Telemetry = std::map<ServiceRef, std::vector<TelemetrySample>>;

struct Metrics {
  double p99_ms = 0;
  double error_rate = 0;
};

/// Simulated cluster and actuator backend. All public calls are serialized
/// on one mutex, except the RealTime action sleep, which happens outside
/// it so actions on different services overlap.
class SimCluster final : public ActuatorBackend {
 public:
  explicit SimCluster(CallGraph topology, SimParams params = {}, ClockMode mode = ClockMode::Virtual);

  ClusterSnapshot snapshot() override;
  ApplyResult apply(const Action& action, const std::string& token) override;
  std::optional<ApplyResult> recorded(const std::string& token) override;

  /// Throws NotFoundError.
  void inject_fault(FaultKind kind, const ServiceRef& target);
  /// Virtual mode only: move the clock forward, sampling at each whole second.
  void advance(std::int64_t ms);
  [[nodiscard]] std::int64_t now_ms() const;

  [[nodiscard]] ClusterState state() const;
  [[nodiscard]] ServiceState service_state(const ServiceRef& ref) const;
  [[nodiscard]] std::vector<ActionLogEntry> action_log() const;
  /// Calls that re-sent an already used token.
  [[nodiscard]] std::size_t duplicate_calls() const;

  [[nodiscard]] Telemetry telemetry() const;
  [[nodiscard]] std::vector<TelemetrySample> telemetry(const ServiceRef& ref) const;
  /// Noise-free metrics for the current state.
  [[nodiscard]] Metrics current(const ServiceRef& ref) const;
  [[nodiscard]] std::map<ServiceRef, Metrics> current_all() const;
  /// CSV: timestamp,service,p99_ms,error_rate.
  void write_telemetry_csv(std::ostream& out) const;

  /// The next `count` calls on `target` (optionally only of `kind`) fail.
  void force_failures(const ServiceRef& target, std::optional<ActionKind> kind, unsigned count);
  /// While set, snapshot() and apply() throw BackendUnavailable.
  void set_unreachable(bool unreachable);

  /// Share a logical clock with other observers (e.g. a recording journal).
  void share_clock(std::shared_ptr<std::atomic<std::uint64_t>> clock);

  [[nodiscard]] const CallGraph& topology() const noexcept { return graph_; }
  [[nodiscard]] const SimParams& params() const noexcept { return params_; }
  [[nodiscard]] ClockMode mode() const noexcept { return mode_; }

 private:
  struct Node {
    ServiceState state;
    std::int64_t restarting_until = -1;
  };
  struct Forced {
    std::optional<ActionKind> kind;
    unsigned remaining = 0;
  };

  NodeId require(const ServiceRef& ref) const;
  void advance_locked(std::int64_t ms);
  void sample_locked(std::int64_t t_ms);
  std::vector<Metrics> compute(bool with_faults, const std::vector<double>* jitter_p99,
                               const std::vector<double>* jitter_err) const;
  std::optional<std::string> precheck(const Action& action, NodeId target) const;
  void mutate(const Action& action, NodeId target);
  std::uint64_t tick_clock() { return ++(*clock_); }

  CallGraph graph_;
  SimParams params_;
  ClockMode mode_;
  mutable std::mutex mu_;
  std::vector<Node> nodes_;
  std::int64_t now_ms_ = 0;
  std::mt19937_64 rng_;
  std::shared_ptr<std::atomic<std::uint64_t>> clock_;
  std::vector<ActionLogEntry> log_;
  std::unordered_map<std::string, ApplyResult> tokens_;
  std::size_t duplicates_ = 0;
  std::map<NodeId, std::vector<Forced>> forced_;
  bool unreachable_ = false;
  std::vector<std::vector<TelemetrySample>> series_;
};

}  // namespace remedy
