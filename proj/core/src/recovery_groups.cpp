#include "remedy/recovery_groups.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>

#include "remedy/error.hpp"
#include "remedy/scc.hpp"

namespace remedy {

void InferenceThresholds::validate() const {
  if (drain_threshold == 0 || max_group_size == 0 || max_batch_size == 0) {
    throw ConfigError("inference thresholds must be strictly positive");
  }
  if (max_batch_size > max_group_size) {
    throw ConfigError("max_batch_size (" + std::to_string(max_batch_size) + ") exceeds max_group_size (" +
                      std::to_string(max_group_size) + ")");
  }
}

InferenceThresholds InferenceThresholds::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("thresholds document must be a JSON object");
  InferenceThresholds t;
  auto read = [&](const char* key, std::uint32_t& field) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_number_integer() || it->get<std::int64_t>() <= 0 ||
        it->get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError(std::string("threshold \"") + key + "\" must be a positive integer");
    }
    field = it->get<std::uint32_t>();
  };
  read("drain_threshold", t.drain_threshold);
  read("max_group_size", t.max_group_size);
  read("max_batch_size", t.max_batch_size);
  t.validate();
  return t;
}

nlohmann::json InferenceThresholds::to_json() const {
  return {{"drain_threshold", drain_threshold}, {"max_group_size", max_group_size}, {"max_batch_size", max_batch_size}};
}

bool RecoveryGroup::in_restart_set(const ServiceRef& ref) const {
  return std::binary_search(restart_set.begin(), restart_set.end(), ref);
}

bool RecoveryGroup::in_drain_set(const ServiceRef& ref) const {
  return std::binary_search(drain_set.begin(), drain_set.end(), ref);
}

namespace {

nlohmann::json refs_to_json(const std::vector<ServiceRef>& refs) {
  auto arr = nlohmann::json::array();
  for (const auto& r : refs) arr.push_back(r.str());
  return arr;
}

std::vector<ServiceRef> refs_from_json(const nlohmann::json& doc, const char* field) {
  if (!doc.is_array()) throw SchemaError(std::string(field) + ": expected an array of service refs");
  std::vector<ServiceRef> out;
  for (const auto& item : doc) {
    if (!item.is_string()) throw SchemaError(std::string(field) + ": expected service ref strings");
    auto ref = ServiceRef::try_parse(item.get<std::string>());
    if (!ref) throw SchemaError(std::string(field) + ": invalid service ref \"" + item.get<std::string>() + "\"");
    out.push_back(*std::move(ref));
  }
  return out;
}

}  // namespace

nlohmann::json RecoveryGroup::to_json() const {
  auto batches_json = nlohmann::json::array();
  for (const auto& b : batches) batches_json.push_back(refs_to_json(b));
  return {{"symptom_service", symptom_service.str()},
          {"restart_set", refs_to_json(restart_set)},
          {"batches", std::move(batches_json)},
          {"drain_set", refs_to_json(drain_set)},
          {"blast_radius_estimate", blast_radius_estimate},
          {"truncated", truncated}};
}

RecoveryGroup RecoveryGroup::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("recovery group: expected a JSON object");
  auto field = [&](const char* key) -> const nlohmann::json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw SchemaError(std::string(key) + ": missing");
    return *it;
  };
  RecoveryGroup g;
  const auto& symptom = field("symptom_service");
  if (!symptom.is_string() || !ServiceRef::try_parse(symptom.get<std::string>())) {
    throw SchemaError("symptom_service: expected a service ref string");
  }
  g.symptom_service = ServiceRef::parse(symptom.get<std::string>());
  g.restart_set = refs_from_json(field("restart_set"), "restart_set");
  const auto& batches = field("batches");
  if (!batches.is_array()) throw SchemaError("batches: expected an array of arrays");
  for (const auto& b : batches) g.batches.push_back(refs_from_json(b, "batches"));
  g.drain_set = refs_from_json(field("drain_set"), "drain_set");
  const auto& radius = field("blast_radius_estimate");
  if (!radius.is_number_unsigned() && !(radius.is_number_integer() && radius.get<std::int64_t>() >= 0)) {
    throw SchemaError("blast_radius_estimate: expected a non-negative integer");
  }
  g.blast_radius_estimate = radius.get<std::size_t>();
  const auto& truncated = field("truncated");
  if (!truncated.is_boolean()) throw SchemaError("truncated: expected a boolean");
  g.truncated = truncated.get<bool>();
  std::sort(g.restart_set.begin(), g.restart_set.end());
  std::sort(g.drain_set.begin(), g.drain_set.end());
  return g;
}

RecoveryGroup infer_recovery_group(const CallGraph& graph, const Symptom& symptom,
                                   const InferenceThresholds& thresholds) {
  thresholds.validate();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  const NodeId origin = graph.require(symptom.service);

  // Downstream closure of the symptom.
  std::vector<std::uint32_t> local(graph.service_count(), kNone);
  std::vector<NodeId> affected{origin};
  local[origin] = 0;
  for (std::size_t head = 0; head < affected.size(); ++head) {
    for (const auto& a : graph.callees(affected[head])) {
      if (local[a.node] != kNone) continue;
      local[a.node] = 0;
      affected.push_back(a.node);
    }
  }
  // Local ids follow global (canonical) order so every later tie-break is
  // canonical.
  std::sort(affected.begin(), affected.end());
  for (std::uint32_t i = 0; i < affected.size(); ++i) local[affected[i]] = i;

  std::vector<std::vector<std::uint32_t>> adjacency(affected.size());
  for (std::uint32_t i = 0; i < affected.size(); ++i) {
    for (const auto& a : graph.callees(affected[i])) adjacency[i].push_back(local[a.node]);
  }
  const Condensation cond = scc_condensation(adjacency);
  const std::size_t ncomp = cond.components.size();
  const std::uint32_t origin_comp = cond.component_of[local[origin]];

  RecoveryGroup group;
  group.symptom_service = symptom.service;
  group.truncated = affected.size() > thresholds.max_group_size;

  // Keep whole SCCs nearest-first, level by level over the condensation.
  std::vector<char> kept(ncomp, 0);
  std::vector<char> visited(ncomp, 0);
  std::vector<std::uint32_t> level{origin_comp};
  visited[origin_comp] = 1;
  std::size_t kept_size = 0;
  bool full = false;
  auto min_member = [&](std::uint32_t c) { return cond.components[c].front(); };
  while (!level.empty() && !full) {
    std::sort(level.begin(), level.end(), [&](auto a, auto b) { return min_member(a) < min_member(b); });
    std::vector<std::uint32_t> next;
    for (const auto c : level) {
      const std::size_t size = cond.components[c].size();
      if (c != origin_comp && kept_size + size > thresholds.max_group_size) {
        full = true;
        break;
      }
      kept[c] = 1;
      kept_size += size;
      for (const auto d : cond.successors[c]) {
        if (!visited[d]) {
          visited[d] = 1;
          next.push_back(d);
        }
      }
    }
    level = std::move(next);
  }

  // Height over the kept sub-DAG; components are already sinks-first.
  std::vector<std::uint32_t> height(ncomp, 0);
  std::uint32_t max_height = 0;
  for (std::uint32_t c = 0; c < ncomp; ++c) {
    if (!kept[c]) continue;
    for (const auto d : cond.successors[c]) {
      if (kept[d]) height[c] = std::max(height[c], height[d] + 1);
    }
    max_height = std::max(max_height, height[c]);
  }
  std::vector<std::vector<std::uint32_t>> by_height(kept_size ? max_height + 1 : 0);
  for (std::uint32_t c = 0; c < ncomp; ++c) {
    if (kept[c]) by_height[height[c]].push_back(c);
  }

  const std::size_t batch_cap = thresholds.max_batch_size;
  for (auto& comps : by_height) {
    std::sort(comps.begin(), comps.end(), [&](auto a, auto b) { return min_member(a) < min_member(b); });
    std::vector<ServiceRef> current;
    auto flush = [&] {
      if (!current.empty()) group.batches.push_back(std::move(current));
      current.clear();
    };
    for (const auto c : comps) {
      const auto& members = cond.components[c];
      if (members.size() > batch_cap) {
        // Oversized SCC: consecutive batches of its own.
        flush();
        for (std::size_t i = 0; i < members.size(); i += batch_cap) {
          std::vector<ServiceRef> chunk;
          for (std::size_t j = i; j < std::min(members.size(), i + batch_cap); ++j) {
            chunk.push_back(graph.service(affected[members[j]]));
          }
          group.batches.push_back(std::move(chunk));
        }
        continue;
      }
      if (current.size() + members.size() > batch_cap) flush();
      for (const auto m : members) current.push_back(graph.service(affected[m]));
    }
    flush();
  }

  for (const auto& batch : group.batches) {
    group.restart_set.insert(group.restart_set.end(), batch.begin(), batch.end());
  }
  std::sort(group.restart_set.begin(), group.restart_set.end());
  for (const auto& ref : group.restart_set) {
    if (graph.fan_in(*graph.find(ref)) > thresholds.drain_threshold) group.drain_set.push_back(ref);
  }
  group.blast_radius_estimate = blast_radius(graph, origin);
  return group;
}

ParallelismProfile parallelism_profile(const RecoveryGroup& group) {
  return ParallelismProfile{group.batches.size(), group.batches.size() >= 2};
}

}  // namespace remedy
