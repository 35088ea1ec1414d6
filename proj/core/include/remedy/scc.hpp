#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "remedy/trace_model.hpp"

namespace remedy {

/// Strongly connected components of a digraph plus the condensation DAG.
///
/// Components are listed in reverse topological order of the condensation:
/// every component appears after all components it has edges to (sinks
/// first). Members of each component are sorted ascending.
struct Condensation {
  std::vector<std::vector<std::uint32_t>> components;
  std::vector<std::uint32_t> component_of;
  /// Distinct (from, to) component pairs with at least one crossing edge,
  /// sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  /// successors[c] = components reachable from c by a single edge, sorted.
  std::vector<std::vector<std::uint32_t>> successors;
};

/// Iterative Tarjan over an adjacency list; O(V + E).
Condensation scc_condensation(std::span<const std::vector<std::uint32_t>> adjacency);

/// Same over a call graph's caller -> callee edges.
Condensation scc_condensation(const CallGraph& graph);

}  // namespace remedy
