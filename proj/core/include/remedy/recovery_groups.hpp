#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "remedy/service_ref.hpp"
#include "remedy/trace_model.hpp"

namespace remedy {

/// A service exhibiting errors during a window.
struct Symptom {
  ServiceRef service;
  TimeWindow window = TimeWindow::unbounded();
};

struct InferenceThresholds {
  /// Services with strictly more distinct callers than this must be drained
  /// before restart.
  std::uint32_t drain_threshold = 20;
  std::uint32_t max_group_size = 30;
  std::uint32_t max_batch_size = 5;

  /// Throws ConfigError unless all are positive and
  /// max_batch_size <= max_group_size.
  void validate() const;

  /// Reads `drain_threshold`, `max_group_size`, `max_batch_size`; missing
  /// keys keep their defaults.
  static InferenceThresholds from_json(const nlohmann::json& doc);
  [[nodiscard]] nlohmann::json to_json() const;

  friend bool operator==(const InferenceThresholds&, const InferenceThresholds&) = default;
};

struct RecoveryGroup {
  ServiceRef symptom_service;
  /// Canonically sorted.
  std::vector<ServiceRef> restart_set;
  /// Restart order: batch i must finish before batch i + 1 starts.
  std::vector<std::vector<ServiceRef>> batches;
  /// Canonically sorted subset of restart_set.
  std::vector<ServiceRef> drain_set;
  std::size_t blast_radius_estimate = 0;
  bool truncated = false;

  [[nodiscard]] bool in_restart_set(const ServiceRef& ref) const;
  [[nodiscard]] bool in_drain_set(const ServiceRef& ref) const;
  /// restart_set or drain_set.
  [[nodiscard]] bool in_scope(const ServiceRef& ref) const { return in_restart_set(ref) || in_drain_set(ref); }

  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws SchemaError.
  static RecoveryGroup from_json(const nlohmann::json& doc);

  friend bool operator==(const RecoveryGroup&, const RecoveryGroup&) = default;
};

/// Restart-coupled set, downstream-first batches and drain set for a
/// symptom.
///
/// The affected subgraph is everything reachable downstream of the symptom.
/// Its SCCs are kept whole, nearest-first by breadth-first distance over the
/// condensation, until the next one would exceed `max_group_size`; the
/// symptom's own SCC is always kept. Batches follow the condensation's
/// height (sinks first), so an edge u -> v between different SCCs always
/// puts v in an earlier batch than u. Fan-in for the drain set is measured
/// on the full graph. Ties break on canonical service order.
///
/// Throws NotFoundError if the symptom service is not in `graph`.
RecoveryGroup infer_recovery_group(const CallGraph& graph, const Symptom& symptom,
                                   const InferenceThresholds& thresholds = {});

struct ParallelismProfile {
  std::size_t batch_count = 0;
  bool admits_parallelism = false;

  friend bool operator==(const ParallelismProfile&, const ParallelismProfile&) = default;
};

ParallelismProfile parallelism_profile(const RecoveryGroup& group);

}  // namespace remedy
