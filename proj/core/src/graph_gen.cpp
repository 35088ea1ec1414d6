#include "remedy/graph_gen.hpp"

#include <cstdio>
#include <random>
#include <unordered_set>
#include <vector>

#include "remedy/error.hpp"

namespace remedy {

CallGraph preferential_attachment_graph(const SyntheticGraphOptions& o) {
  const std::size_t n = o.nodes;
  if (n == 0) throw ConfigError("synthetic graph needs at least one node");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (o.edges < n - 1 || o.edges > max_edges) {
    throw ConfigError("synthetic graph with " + std::to_string(n) + " nodes needs between " + std::to_string(n - 1) +
                      " and " + std::to_string(max_edges) + " edges, got " + std::to_string(o.edges));
  }

  std::vector<ServiceRef> services;
  services.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "svc-%05zu", i);
    services.push_back({o.ns, name});
  }

  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<std::uint64_t> weight(1, 10);
  // Urn of node ids: one ball per node plus one per incoming edge.
  std::vector<std::uint32_t> urn;
  urn.reserve(n + o.edges);
  std::unordered_set<std::uint64_t> seen;
  std::vector<WeightedEdge> edges;
  edges.reserve(o.edges);
  auto add = [&](std::size_t caller, std::size_t callee) {
    edges.push_back({services[caller], services[callee], weight(rng)});
    seen.insert(static_cast<std::uint64_t>(caller) * n + callee);
    urn.push_back(static_cast<std::uint32_t>(callee));
  };

  urn.push_back(0);
  for (std::size_t i = 1; i < n; ++i) {
    const auto callee = urn[rng() % urn.size()];
    add(i, callee);
    urn.push_back(static_cast<std::uint32_t>(i));
  }

  std::size_t attempts = 0;
  const std::size_t budget = 64 * o.edges + 1024;
  while (edges.size() < o.edges && attempts++ < budget) {
    const std::size_t caller = 1 + rng() % (n - 1);
    const std::size_t callee = urn[rng() % urn.size()];
    if (callee >= caller || seen.count(static_cast<std::uint64_t>(caller) * n + callee)) continue;
    add(caller, callee);
  }
  // Dense requests can exhaust the random budget; fill deterministically.
  for (std::size_t caller = 1; caller < n && edges.size() < o.edges; ++caller) {
    for (std::size_t callee = 0; callee < caller && edges.size() < o.edges; ++callee) {
      if (!seen.count(static_cast<std::uint64_t>(caller) * n + callee)) add(caller, callee);
    }
  }
  return CallGraph::from_edges(std::move(services), edges);
}

}  // namespace remedy
