#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "remedy/service_ref.hpp"

namespace remedy {

enum class TrafficState { Serving, Drained };

std::string_view to_string(TrafficState state) noexcept;
/// `serving` / `drained`. Throws ParseError.
TrafficState parse_traffic_state(std::string_view text);

/// What the kernel may observe about one service at commit time.
struct ServiceStatus {
  std::int64_t replicas = 1;
  TrafficState traffic = TrafficState::Serving;
  std::set<ServiceRef> breakers;
  std::optional<double> rate_limit_rps;
  std::string config_version;
  bool healthy = true;

  friend bool operator==(const ServiceStatus&, const ServiceStatus&) = default;
};

/// Point-in-time view of the infrastructure handed to precondition checks.
using ClusterSnapshot = std::map<ServiceRef, ServiceStatus>;

}  // namespace remedy
