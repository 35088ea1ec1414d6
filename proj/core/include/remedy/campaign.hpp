#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <vector>

#include "remedy/agent.hpp"
#include "remedy/stats.hpp"

namespace remedy {

struct CampaignConfig {
  PolicyConfig policy;
  std::vector<Scenario> scenarios;
  /// Worker threads; 0 picks hardware concurrency.
  unsigned parallelism = 0;

  /// Keys: policy, seed, misbehavior, delays, parallelism, and either
  /// `suite` ({"kind": "default"|"fault", "count", "fault"}) or `scenarios`
  /// (inline objects or paths relative to `base_dir`). Throws ConfigError.
  static CampaignConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  static CampaignConfig load(const std::filesystem::path& path);
};

struct CampaignReport {
  Policy policy = Policy::IsaCritic;
  std::uint64_t seed = 0;
  std::size_t incidents = 0;
  std::size_t harmed = 0;
  double harm_rate = 0;
  ConfidenceInterval harm_ci;
  std::size_t committed = 0;
  std::size_t harmful_commits = 0;
  std::size_t recovered = 0;
  Summary ttr_ms;
  std::vector<IncidentRecord> records;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Seed of incident `index` in a campaign seeded with `seed`.
std::uint64_t incident_seed(std::uint64_t seed, std::size_t index) noexcept;

/// Runs every scenario on its own simulator, possibly in parallel; the
/// result does not depend on scheduling. Throws ConfigError for an empty
/// scenario list.
CampaignReport run_campaign(const CampaignConfig& config);

/// One IncidentRecord per line.
void write_incidents_jsonl(std::ostream& out, const CampaignReport& report);

}  // namespace remedy
