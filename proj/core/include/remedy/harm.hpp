#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "remedy/sim_cluster.hpp"

namespace remedy {

struct HarmOptions {
  std::int64_t baseline_ms = 60'000;
  std::int64_t grace_ms = 5'000;
  double regression_factor = 1.10;
  /// A regression must last strictly longer than this.
  std::int64_t min_duration_ms = 30'000;
  std::int64_t sample_period_ms = 1'000;
};

struct HarmVerdict {
  bool harmed = false;
  double baseline_p99_ms = 0;
  double baseline_error_rate = 0;
  /// Longest run of regressed samples after the grace period.
  std::int64_t longest_regression_ms = 0;
  std::int64_t regression_start_ms = -1;
};

/// Harm for one service's series relative to an action started at
/// `action_start_ms`. Fault-attributable excess is subtracted from every
/// sample first, so only action-induced regression counts. A sample
/// regresses when its p99 or error rate exceeds the baseline mean by the
/// regression factor. Throws EvaluationError if the series does not cover
/// the full baseline window.
HarmVerdict evaluate_harm(std::span<const TelemetrySample> series, std::int64_t action_start_ms,
                          const HarmOptions& options = {});

std::map<ServiceRef, HarmVerdict> evaluate_harm(const Telemetry& telemetry, std::int64_t action_start_ms,
                                                const HarmOptions& options = {});

[[nodiscard]] bool any_harm(const std::map<ServiceRef, HarmVerdict>& verdicts);

}  // namespace remedy
