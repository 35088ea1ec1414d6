#include "remedy/harm.hpp"

#include <algorithm>

#include "remedy/error.hpp"

namespace remedy {

HarmVerdict evaluate_harm(std::span<const TelemetrySample> series, std::int64_t action_start_ms,
                          const HarmOptions& options) {
  const std::int64_t from = action_start_ms - options.baseline_ms;
  double sum_p99 = 0;
  double sum_err = 0;
  std::size_t n = 0;
  for (const auto& s : series) {
    if (s.t_ms >= from && s.t_ms < action_start_ms) {
      sum_p99 += s.p99_ms - s.fault_p99_ms;
      sum_err += s.error_rate - s.fault_error_rate;
      ++n;
    }
  }
  const auto needed = static_cast<std::size_t>(options.baseline_ms / options.sample_period_ms);
  if (n < needed) {
    throw EvaluationError("insufficient baseline: " + std::to_string(n) + " samples in the " +
                          std::to_string(options.baseline_ms) + " ms before the action, need " +
                          std::to_string(needed));
  }

  HarmVerdict v;
  v.baseline_p99_ms = sum_p99 / static_cast<double>(n);
  v.baseline_error_rate = sum_err / static_cast<double>(n);
  const double p99_limit = v.baseline_p99_ms * options.regression_factor;
  const double err_limit = v.baseline_error_rate * options.regression_factor;

  std::int64_t run_start = -1;
  std::int64_t prev = -1;
  auto close_run = [&] {
    if (run_start < 0) return;
    const std::int64_t length = prev - run_start + options.sample_period_ms;
    if (length > v.longest_regression_ms) {
      v.longest_regression_ms = length;
      v.regression_start_ms = run_start;
    }
    run_start = -1;
  };
  for (const auto& s : series) {
    if (s.t_ms < action_start_ms + options.grace_ms) continue;
    const bool regressed =
        (s.p99_ms - s.fault_p99_ms) > p99_limit || (s.error_rate - s.fault_error_rate) > err_limit;
    if (regressed && run_start >= 0 && s.t_ms - prev != options.sample_period_ms) close_run();
    if (regressed) {
      if (run_start < 0) run_start = s.t_ms;
      prev = s.t_ms;
    } else {
      close_run();
    }
  }
  close_run();
  v.harmed = v.longest_regression_ms > options.min_duration_ms;
  return v;
}

std::map<ServiceRef, HarmVerdict> evaluate_harm(const Telemetry& telemetry, std::int64_t action_start_ms,
                                                const HarmOptions& options) {
  std::map<ServiceRef, HarmVerdict> out;
  for (const auto& [ref, series] : telemetry) out.emplace(ref, evaluate_harm(series, action_start_ms, options));
  return out;
}

bool any_harm(const std::map<ServiceRef, HarmVerdict>& verdicts) {
  return std::any_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second.harmed; });
}

}  // namespace remedy
