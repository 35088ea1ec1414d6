#include "remedy/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "remedy/error.hpp"

namespace remedy {

nlohmann::json topology_to_json(const CallGraph& graph) {
  auto services = nlohmann::json::array();
  for (const auto& s : graph.services()) services.push_back(s.str());
  auto edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"caller", e.caller.str()}, {"callee", e.callee.str()}, {"weight", e.count}});
  }
  return {{"services", std::move(services)}, {"edges", std::move(edges)}};
}

namespace {

ServiceRef ref_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw ConfigError(where + ": \"" + key + "\" must be a service ref string");
  auto ref = ServiceRef::try_parse(it->get<std::string>());
  if (!ref) throw ConfigError(where + ": invalid service ref \"" + it->get<std::string>() + "\"");
  return *ref;
}

}  // namespace

CallGraph topology_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("topology must be a JSON object");
  std::vector<ServiceRef> services;
  if (auto it = doc.find("services"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("topology.services must be an array");
    for (const auto& s : *it) {
      auto ref = s.is_string() ? ServiceRef::try_parse(s.get<std::string>()) : std::nullopt;
      if (!ref) throw ConfigError("topology.services: invalid service ref " + s.dump());
      services.push_back(*ref);
    }
  }
  std::vector<WeightedEdge> edges;
  if (auto it = doc.find("edges"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("topology.edges must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& e = (*it)[i];
      const auto where = "topology.edges[" + std::to_string(i) + "]";
      if (!e.is_object()) throw ConfigError(where + " must be an object");
      std::uint64_t weight = 1;
      if (auto w = e.find("weight"); w != e.end()) {
        if (!w->is_number_unsigned()) throw ConfigError(where + ".weight must be a non-negative integer");
        weight = w->get<std::uint64_t>();
      }
      edges.push_back({ref_field(e, "caller", where), ref_field(e, "callee", where), weight});
    }
  }
  return CallGraph::from_edges(std::move(services), edges);
}

std::unique_ptr<SimCluster> Scenario::instantiate(ClockMode mode) const {
  auto cluster = std::make_unique<SimCluster>(topology, sim, mode);
  auto ordered = faults;
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.at_ms < b.at_ms; });
  for (const auto& f : ordered) {
    if (mode == ClockMode::Virtual && f.at_ms > cluster->now_ms()) cluster->advance(f.at_ms - cluster->now_ms());
    cluster->inject_fault(f.kind, f.target);
  }
  if (mode == ClockMode::Virtual && action_at_ms > cluster->now_ms()) cluster->advance(action_at_ms - cluster->now_ms());
  for (const auto& a : applied) {
    RemediationTransaction probe;
    // Reuse the transaction parser for a single action document.
    nlohmann::json doc = {{"txn_id", "replay"},
                          {"actions", nlohmann::json::array({a.action})},
                          {"conflict_keys", nlohmann::json::array({{{"granularity", "cluster"}}})},
                          {"failure_policy", "abort_only"}};
    try {
      probe = transaction_from_json(doc);
    } catch (const SchemaError& e) {
      throw ConfigError("scenario " + id + ": applied action for token " + a.token + " is invalid: " + e.what());
    }
    cluster->apply(probe.actions.front(), a.token);
  }
  return cluster;
}

nlohmann::json Scenario::to_json() const {
  auto fault_list = nlohmann::json::array();
  for (const auto& f : faults) {
    fault_list.push_back({{"kind", to_string(f.kind)}, {"target", f.target.str()}, {"at_ms", f.at_ms}});
  }
  nlohmann::json j = {{"id", id},
                      {"topology", topology_to_json(topology)},
                      {"sim", sim.to_json()},
                      {"faults", std::move(fault_list)},
                      {"action_at_ms", action_at_ms},
                      {"observe_ms", observe_ms}};
  if (symptom) j["symptom"] = symptom->str();
  if (!applied.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& a : applied) arr.push_back({{"token", a.token}, {"action", a.action}});
    j["applied"] = std::move(arr);
  }
  return j;
}

Scenario Scenario::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario s;
  try {
    s.id = doc.value("id", std::string("scenario"));
    auto topo = doc.find("topology");
    if (topo == doc.end()) throw ConfigError("scenario " + s.id + ": missing topology");
    s.topology = topology_from_json(*topo);
    if (auto it = doc.find("sim"); it != doc.end()) s.sim = SimParams::from_json(*it);
    if (auto it = doc.find("faults"); it != doc.end()) {
      if (!it->is_array()) throw ConfigError("scenario " + s.id + ": faults must be an array");
      for (const auto& f : *it) {
        FaultSpec spec;
        spec.kind = parse_fault_kind(f.at("kind").get<std::string>());
        spec.target = ref_field(f, "target", "scenario " + s.id + " fault");
        spec.at_ms = f.value("at_ms", spec.at_ms);
        if (!s.topology.contains(spec.target)) {
          throw ConfigError("scenario " + s.id + ": fault target " + spec.target.str() + " not in topology");
        }
        s.faults.push_back(spec);
      }
    }
    if (doc.contains("symptom")) s.symptom = ref_field(doc, "symptom", "scenario " + s.id);
    s.action_at_ms = doc.value("action_at_ms", s.action_at_ms);
    s.observe_ms = doc.value("observe_ms", s.observe_ms);
    if (auto it = doc.find("applied"); it != doc.end()) {
      if (!it->is_array()) throw ConfigError("scenario " + s.id + ": applied must be an array");
      for (const auto& a : *it) s.applied.push_back({a.at("token").get<std::string>(), a.at("action")});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario: " + std::string(e.what()));
  } catch (const ParseError& e) {
    throw ConfigError("scenario: " + std::string(e.what()));
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scenario file " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("scenario file " + path.string() + " is not valid JSON");
  return from_json(doc);
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kHubs = 4;
constexpr int kFrontends = 50;

ServiceRef prod(std::string name) { return ServiceRef{"prod", std::move(name)}; }
std::string hub_name(int h) { return "hub-" + std::to_string(h); }
std::string backend_name(int h, int j) { return "h" + std::to_string(h) + "-svc-" + std::to_string(j); }
std::string db_name(int h, int j) { return "h" + std::to_string(h) + "-db-" + std::to_string(j); }

std::vector<Scenario> build_suite(std::uint64_t seed, std::size_t count, std::optional<FaultKind> only) {
  const CallGraph topo = hub_topology();
  std::mt19937_64 rng(seed);
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int hub = static_cast<int>(rng() % kHubs);
    const FaultKind kind = only ? *only : kAllFaultKinds[i % 5];
    const bool on_hub = (i / 5) % 5 < 3;
    ServiceRef target = prod(hub_name(hub));
    if (!on_hub) {
      const auto pick = rng() % 5;
      target = pick < 3 ? prod(backend_name(hub, static_cast<int>(pick))) : prod(db_name(hub, static_cast<int>(pick - 3)));
    }
    Scenario s;
    char id[32];
    std::snprintf(id, sizeof id, "s-%03zu", i + 1);
    s.id = id;
    s.topology = topo;
    s.sim.seed = seed * 1000003ULL + i;
    s.faults.push_back({kind, target, 30'000});
    s.symptom = prod(hub_name(hub));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

CallGraph hub_topology() {
  std::vector<WeightedEdge> edges;
  for (int f = 0; f < kFrontends; ++f) {
    char name[16];
    std::snprintf(name, sizeof name, "fe-%02d", f);
    edges.push_back({prod(name), prod(hub_name(f % kHubs)), 30});
    edges.push_back({prod(name), prod(hub_name((f + 1) % kHubs)), 10});
  }
  for (int h = 0; h < kHubs; ++h) {
    for (int j = 0; j < 3; ++j) {
      edges.push_back({prod(hub_name(h)), prod(backend_name(h, j)), j == 0 ? 20u : 10u});
      edges.push_back({prod(backend_name(h, j)), prod(db_name(h, j % 2)), 10});
    }
  }
  return CallGraph::from_edges({}, edges);
}

std::vector<Scenario> default_scenario_suite(std::uint64_t seed, std::size_t count) {
  return build_suite(seed, count, std::nullopt);
}

std::vector<Scenario> fault_kind_suite(FaultKind kind, std::uint64_t seed, std::size_t count) {
  return build_suite(seed, count, kind);
}

}  // namespace remedy
