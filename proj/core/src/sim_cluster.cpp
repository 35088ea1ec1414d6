#include "remedy/sim_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "remedy/error.hpp"

namespace remedy {

std::string_view to_string(FaultKind kind) noexcept {
  switch (kind) {
    case FaultKind::PodFailure: return "pod_failure";
    case FaultKind::NetworkPartition: return "network_partition";
    case FaultKind::CpuStress: return "cpu_stress";
    case FaultKind::MemoryStress: return "memory_stress";
    case FaultKind::IoDelay: return "io_delay";
  }
  return "unknown";
}

FaultKind parse_fault_kind(std::string_view text) {
  for (const auto k : kAllFaultKinds) {
    if (to_string(k) == text) return k;
  }
  throw ParseError("unknown fault kind \"" + std::string(text) + "\"");
}

void SimParams::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("sim params: " + m); };
  if (!(base_p99_ms > 0)) fail("base_p99_ms must be > 0");
  if (!(base_error_rate >= 0 && base_error_rate < 1)) fail("base_error_rate must be in [0, 1)");
  if (!(noise >= 0 && noise < 1)) fail("noise must be in [0, 1)");
  if (!(damping >= 0 && damping <= 1)) fail("damping must be in [0, 1]");
  if (!(stress_error_rate >= 0 && stress_error_rate <= 1)) fail("stress_error_rate must be in [0, 1]");
  if (!(stress_latency_factor >= 1)) fail("stress_latency_factor must be >= 1");
  if (!(io_delay_ms >= 0)) fail("io_delay_ms must be >= 0");
  if (action_latency_ms < 0 || restart_latency_ms < 0 || hub_restart_penalty_ms < 0) fail("latencies must be >= 0");
  if (initial_replicas < 0) fail("initial_replicas must be >= 0");
}

nlohmann::json SimParams::to_json() const {
  return {{"base_p99_ms", base_p99_ms},
          {"base_error_rate", base_error_rate},
          {"noise", noise},
          {"damping", damping},
          {"stress_error_rate", stress_error_rate},
          {"stress_latency_factor", stress_latency_factor},
          {"io_delay_ms", io_delay_ms},
          {"action_latency_ms", action_latency_ms},
          {"restart_latency_ms", restart_latency_ms},
          {"hub_restart_penalty_ms", hub_restart_penalty_ms},
          {"hub_fan_in", hub_fan_in},
          {"initial_replicas", initial_replicas},
          {"initial_config_version", initial_config_version},
          {"seed", seed}};
}

SimParams SimParams::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("sim params must be a JSON object");
  SimParams p;
  try {
    auto read = [&](const char* key, auto& field) {
      if (auto it = doc.find(key); it != doc.end()) it->get_to(field);
    };
    read("base_p99_ms", p.base_p99_ms);
    read("base_error_rate", p.base_error_rate);
    read("noise", p.noise);
    read("damping", p.damping);
    read("stress_error_rate", p.stress_error_rate);
    read("stress_latency_factor", p.stress_latency_factor);
    read("io_delay_ms", p.io_delay_ms);
    read("action_latency_ms", p.action_latency_ms);
    read("restart_latency_ms", p.restart_latency_ms);
    read("hub_restart_penalty_ms", p.hub_restart_penalty_ms);
    read("hub_fan_in", p.hub_fan_in);
    read("initial_replicas", p.initial_replicas);
    read("initial_config_version", p.initial_config_version);
    read("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sim params: ") + e.what());
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

SimCluster::SimCluster(CallGraph topology, SimParams params, ClockMode mode)
    : graph_(std::move(topology)),
      params_(std::move(params)),
      mode_(mode),
      rng_(params_.seed),
      clock_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  params_.validate();
  nodes_.resize(graph_.service_count());
  for (auto& n : nodes_) {
    n.state.replicas = params_.initial_replicas;
    n.state.config_version = params_.initial_config_version;
  }
  series_.resize(graph_.service_count());
}

NodeId SimCluster::require(const ServiceRef& ref) const { return graph_.require(ref); }

void SimCluster::share_clock(std::shared_ptr<std::atomic<std::uint64_t>> clock) {
  std::lock_guard lock(mu_);
  clock_ = std::move(clock);
}

ClusterSnapshot SimCluster::snapshot() {
  std::lock_guard lock(mu_);
  if (unreachable_) throw BackendUnavailable("sim cluster unreachable");
  ClusterSnapshot snap;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& s = nodes_[i].state;
    ServiceStatus st;
    st.replicas = s.replicas;
    st.traffic = s.traffic;
    st.breakers = s.breakers;
    st.rate_limit_rps = s.rate_limit_rps;
    st.config_version = s.config_version;
    st.healthy = !s.fault && nodes_[i].restarting_until < 0 && s.replicas > 0;
    snap.emplace(graph_.service(i), std::move(st));
  }
  return snap;
}

std::optional<std::string> SimCluster::precheck(const Action& action, NodeId target) const {
  if (auto it = forced_.find(target); it != forced_.end()) {
    for (const auto& f : it->second) {
      if (f.remaining > 0 && (!f.kind || *f.kind == action.kind())) return "injected failure";
    }
  }
  if (action.kind() == ActionKind::Scale) {
    const auto delta = action.params_as<ScaleParams>().delta;
    if (nodes_[target].state.replicas + delta < 0) {
      return "scale by " + std::to_string(delta) + " would leave " +
             std::to_string(nodes_[target].state.replicas + delta) + " replicas";
    }
  }
  if (action.kind() == ActionKind::Extension) return "extension actions are not executable on the simulator";
  return std::nullopt;
}

void SimCluster::mutate(const Action& action, NodeId target) {
  auto& s = nodes_[target].state;
  switch (action.kind()) {
    case ActionKind::Restart: s.fault.reset(); break;
    case ActionKind::Drain: s.traffic = TrafficState::Drained; break;
    case ActionKind::RestoreTraffic: s.traffic = TrafficState::Serving; break;
    case ActionKind::CircuitBreak: {
      const auto& p = action.params_as<CircuitBreakParams>();
      if (p.reset) {
        s.breakers.erase(p.dependency);
      } else {
        s.breakers.insert(p.dependency);
      }
      break;
    }
    case ActionKind::RateLimit: s.rate_limit_rps = action.params_as<RateLimitParams>().limit_rps; break;
    case ActionKind::Scale: s.replicas += action.params_as<ScaleParams>().delta; break;
    case ActionKind::RollbackConfig: s.config_version = action.params_as<RollbackConfigParams>().to_version; break;
    case ActionKind::Extension: break;
  }
}

std::optional<ApplyResult> SimCluster::recorded(const std::string& token) {
  std::lock_guard lock(mu_);
  if (unreachable_) throw BackendUnavailable("sim cluster unreachable");
  if (auto it = tokens_.find(token); it != tokens_.end()) return it->second;
  return std::nullopt;
}

ApplyResult SimCluster::apply(const Action& action, const std::string& token) {
  std::unique_lock lock(mu_);
  if (unreachable_) throw BackendUnavailable("sim cluster unreachable");
  if (auto it = tokens_.find(token); it != tokens_.end()) {
    ++duplicates_;
    return it->second;
  }

  ActionLogEntry entry;
  entry.kind = action.kind_name();
  entry.target = action.target();
  entry.action = to_json(action);
  entry.token = token;
  entry.t_ms = now_ms_;
  entry.seq_start = tick_clock();

  const auto target = graph_.find(action.target());
  std::optional<std::string> problem;
  if (!target) {
    problem = "unknown target " + action.target().str();
  } else {
    problem = precheck(action, *target);
  }
  if (problem) {
    if (target && *problem == "injected failure") {
      for (auto& f : forced_[*target]) {
        if (f.remaining > 0 && (!f.kind || *f.kind == action.kind())) {
          --f.remaining;
          break;
        }
      }
    }
    entry.ok = false;
    entry.message = *problem;
    entry.seq_end = entry.seq_start;
    auto result = ApplyResult::failure(*problem);
    tokens_.emplace(token, result);
    log_.push_back(std::move(entry));
    return result;
  }
  // Reserve the token before any sleep so a concurrent resend is a duplicate.
  tokens_.emplace(token, ApplyResult::success());

  const NodeId id = *target;
  if (mode_ == ClockMode::RealTime) {
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::milliseconds(params_.action_latency_ms));
    lock.lock();
    mutate(action, id);
  } else if (action.kind() == ActionKind::Restart) {
    std::int64_t duration = params_.restart_latency_ms;
    if (nodes_[id].state.traffic == TrafficState::Serving && graph_.fan_in(id) > params_.hub_fan_in) {
      duration += params_.hub_restart_penalty_ms;
    }
    nodes_[id].state.fault.reset();
    nodes_[id].restarting_until = now_ms_ + duration;
    advance_locked(duration);
    nodes_[id].restarting_until = -1;
    mutate(action, id);
  } else {
    advance_locked(params_.action_latency_ms);
    mutate(action, id);
  }
  entry.seq_end = tick_clock();
  log_.push_back(std::move(entry));
  return ApplyResult::success();
}

void SimCluster::inject_fault(FaultKind kind, const ServiceRef& target) {
  std::lock_guard lock(mu_);
  nodes_[require(target)].state.fault = kind;
}

void SimCluster::advance(std::int64_t ms) {
  if (ms < 0) throw ContractError("cannot move the simulated clock backwards");
  std::lock_guard lock(mu_);
  if (mode_ != ClockMode::Virtual) throw ContractError("advance() is only available in virtual-clock mode");
  advance_locked(ms);
}

void SimCluster::advance_locked(std::int64_t ms) {
  const std::int64_t target = now_ms_ + ms;
  std::int64_t next = (now_ms_ / 1000 + 1) * 1000;
  while (next <= target) {
    now_ms_ = next;
    sample_locked(next);
    next += 1000;
  }
  now_ms_ = target;
}

std::int64_t SimCluster::now_ms() const {
  std::lock_guard lock(mu_);
  return now_ms_;
}

namespace {

bool is_down(const ServiceState& s, std::int64_t restarting_until, bool with_faults) {
  if (restarting_until >= 0 || s.replicas <= 0) return true;
  return with_faults && s.fault && (*s.fault == FaultKind::PodFailure || *s.fault == FaultKind::NetworkPartition);
}

}  // namespace

std::vector<Metrics> SimCluster::compute(bool with_faults, const std::vector<double>* jitter_p99,
                                         const std::vector<double>* jitter_err) const {
  const std::size_t n = nodes_.size();
  std::vector<double> base_p99(n), base_err(n), own_err(n), own_lat(n, 0.0);
  std::vector<char> down(n), drained(n);
  for (NodeId i = 0; i < n; ++i) {
    const auto& s = nodes_[i].state;
    base_p99[i] = params_.base_p99_ms * (jitter_p99 ? (*jitter_p99)[i] : 1.0);
    base_err[i] = params_.base_error_rate * (jitter_err ? (*jitter_err)[i] : 1.0);
    down[i] = is_down(s, nodes_[i].restarting_until, with_faults);
    drained[i] = s.traffic == TrafficState::Drained;
    own_err[i] = base_err[i];
    if (with_faults && s.fault) {
      switch (*s.fault) {
        case FaultKind::CpuStress:
        case FaultKind::MemoryStress:
          own_err[i] += params_.stress_error_rate;
          own_lat[i] = base_p99[i] * (params_.stress_latency_factor - 1.0);
          break;
        case FaultKind::IoDelay: own_lat[i] = params_.io_delay_ms; break;
        default: break;
      }
    }
    if (down[i]) own_err[i] = 1.0;
  }

  auto eligible = [&](NodeId caller, NodeId callee) {
    if (drained[callee]) return false;
    const auto& breakers = nodes_[caller].state.breakers;
    return breakers.empty() || !breakers.count(graph_.service(callee));
  };

  // Error: weighted-share propagation, Jacobi iteration to a fixed point.
  std::vector<double> err = own_err;
  for (int iter = 0; iter < 200; ++iter) {
    double delta = 0;
    std::vector<double> next(n);
    for (NodeId i = 0; i < n; ++i) {
      if (down[i]) {
        next[i] = 1.0;
        continue;
      }
      const double total = static_cast<double>(graph_.out_weight(i));
      double e = own_err[i];
      if (total > 0) {
        for (const auto& a : graph_.callees(i)) {
          if (!eligible(i, a.node)) continue;
          const double contribution =
              down[a.node] ? 1.0 : params_.damping * std::max(0.0, err[a.node] - base_err[a.node]);
          e += static_cast<double>(a.weight) / total * contribution;
        }
      }
      next[i] = std::clamp(e, 0.0, 1.0);
      delta = std::max(delta, std::abs(next[i] - err[i]));
    }
    err = std::move(next);
    if (delta < 1e-12) break;
  }

  // Latency: additive along the heaviest reachable callee, cycle-safe.
  std::vector<double> lat(n, -1.0);
  std::vector<char> on_stack(n, 0);
  auto excess = [&](auto&& self, NodeId i) -> double {
    if (lat[i] >= 0) return lat[i];
    if (on_stack[i]) return 0.0;
    on_stack[i] = 1;
    double best_w = -1;
    std::optional<NodeId> heaviest;
    for (const auto& a : graph_.callees(i)) {
      if (!eligible(i, a.node) || down[a.node]) continue;
      if (static_cast<double>(a.weight) > best_w) {
        best_w = static_cast<double>(a.weight);
        heaviest = a.node;
      }
    }
    const double value = own_lat[i] + (heaviest ? self(self, *heaviest) : 0.0);
    on_stack[i] = 0;
    lat[i] = value;
    return value;
  };

  std::vector<Metrics> out(n);
  for (NodeId i = 0; i < n; ++i) {
    if (drained[i]) {
      out[i] = {base_p99[i], base_err[i]};
      continue;
    }
    out[i].error_rate = err[i];
    out[i].p99_ms = base_p99[i] + (down[i] ? 0.0 : excess(excess, i));
  }
  return out;
}

void SimCluster::sample_locked(std::int64_t t_ms) {
  const std::size_t n = nodes_.size();
  std::vector<double> jp(n), je(n);
  std::uniform_real_distribution<double> u(-params_.noise, params_.noise);
  for (std::size_t i = 0; i < n; ++i) {
    jp[i] = 1.0 + u(rng_);
    je[i] = 1.0 + u(rng_);
  }
  const auto observed = compute(true, &jp, &je);
  const auto clean = compute(false, &jp, &je);
  for (std::size_t i = 0; i < n; ++i) {
    series_[i].push_back({t_ms, observed[i].p99_ms, observed[i].error_rate, observed[i].p99_ms - clean[i].p99_ms,
                          observed[i].error_rate - clean[i].error_rate});
  }
}

ClusterState SimCluster::state() const {
  std::lock_guard lock(mu_);
  ClusterState out;
  for (NodeId i = 0; i < nodes_.size(); ++i) out.emplace(graph_.service(i), nodes_[i].state);
  return out;
}

ServiceState SimCluster::service_state(const ServiceRef& ref) const {
  std::lock_guard lock(mu_);
  return nodes_[require(ref)].state;
}

std::vector<ActionLogEntry> SimCluster::action_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t SimCluster::duplicate_calls() const {
  std::lock_guard lock(mu_);
  return duplicates_;
}

Telemetry SimCluster::telemetry() const {
  std::lock_guard lock(mu_);
  Telemetry out;
  for (NodeId i = 0; i < nodes_.size(); ++i) out.emplace(graph_.service(i), series_[i]);
  return out;
}

std::vector<TelemetrySample> SimCluster::telemetry(const ServiceRef& ref) const {
  std::lock_guard lock(mu_);
  return series_[require(ref)];
}

Metrics SimCluster::current(const ServiceRef& ref) const {
  std::lock_guard lock(mu_);
  const auto id = require(ref);
  return compute(true, nullptr, nullptr)[id];
}

std::map<ServiceRef, Metrics> SimCluster::current_all() const {
  std::lock_guard lock(mu_);
  const auto m = compute(true, nullptr, nullptr);
  std::map<ServiceRef, Metrics> out;
  for (NodeId i = 0; i < nodes_.size(); ++i) out.emplace(graph_.service(i), m[i]);
  return out;
}

void SimCluster::write_telemetry_csv(std::ostream& out) const {
  std::lock_guard lock(mu_);
  out << "timestamp,service,p99_ms,error_rate\n";
  if (series_.empty()) return;
  const std::size_t ticks = series_.front().size();
  for (std::size_t t = 0; t < ticks; ++t) {
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      const auto& s = series_[i][t];
      out << s.t_ms << ',' << graph_.service(i).str() << ',' << s.p99_ms << ',' << s.error_rate << '\n';
    }
  }
}

void SimCluster::force_failures(const ServiceRef& target, std::optional<ActionKind> kind, unsigned count) {
  std::lock_guard lock(mu_);
  forced_[require(target)].push_back({kind, count});
}

void SimCluster::set_unreachable(bool unreachable) {
  std::lock_guard lock(mu_);
  unreachable_ = unreachable;
}

}  // namespace remedy
