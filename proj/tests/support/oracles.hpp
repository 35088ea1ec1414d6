#pragma once

// Brute-force reference implementations used as test oracles.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "remedy/recovery_groups.hpp"
#include "remedy/trace_model.hpp"

namespace remedy::testing {

using Adjacency = std::vector<std::vector<std::uint32_t>>;
using Matrix = std::vector<std::vector<bool>>;

/// Reflexive-transitive closure by Warshall's algorithm.
Matrix reachability(const Adjacency& adj);

/// Component label per node: smallest node id mutually reachable with it.
std::vector<std::uint32_t> scc_labels(const Adjacency& adj);

/// Condensation edges as (label of source SCC, label of target SCC).
std::set<std::pair<std::uint32_t, std::uint32_t>> condensation_edges(const Adjacency& adj);

/// Number of nodes with a path to `target`, excluding itself.
std::size_t upstream_count(const Adjacency& adj, std::uint32_t target);

/// Random digraph on 1..max_nodes nodes; density is drawn per graph.
Adjacency random_digraph(std::mt19937_64& rng, std::size_t max_nodes);

/// Services `<ns>/n00`, `<ns>/n01`, ... so NodeId equals index.
ServiceRef node_ref(std::uint32_t i, const std::string& ns = "g");
CallGraph to_call_graph(const Adjacency& adj, const std::string& ns = "g");
Adjacency to_adjacency(const CallGraph& graph);

/// Every RecoveryGroup invariant checked against brute force. Returns the
/// first violation, empty if none.
std::string check_group_invariants(const CallGraph& graph, const Symptom& symptom,
                                   const InferenceThresholds& thresholds, const RecoveryGroup& group);

}  // namespace remedy::testing
