#include "remedy/scc.hpp"

#include <algorithm>
#include <limits>

namespace remedy {

Condensation scc_condensation(std::span<const std::vector<std::uint32_t>> adjacency) {
  constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  const auto n = static_cast<std::uint32_t>(adjacency.size());

  Condensation out;
  out.component_of.assign(n, kUnvisited);

  std::vector<std::uint32_t> index(n, kUnvisited);
  std::vector<std::uint32_t> lowlink(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  // Explicit DFS frames: (node, next edge position).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> frames;
  std::uint32_t next_index = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;

    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto& succ = adjacency[v];
      if (pos < succ.size()) {
        const std::uint32_t w = succ[pos++];
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          lowlink[v] = std::min(lowlink[v], index[w]);
        }
        continue;
      }

      const std::uint32_t done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const std::uint32_t parent = frames.back().first;
        lowlink[parent] = std::min(lowlink[parent], lowlink[done]);
      }
      if (lowlink[done] == index[done]) {
        const auto cid = static_cast<std::uint32_t>(out.components.size());
        std::vector<std::uint32_t> members;
        std::uint32_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.component_of[w] = cid;
          members.push_back(w);
        } while (w != done);
        std::sort(members.begin(), members.end());
        out.components.push_back(std::move(members));
      }
    }
  }

  out.successors.resize(out.components.size());
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto cv = out.component_of[v];
    for (const auto w : adjacency[v]) {
      const auto cw = out.component_of[w];
      if (cv != cw) out.edges.emplace_back(cv, cw);
    }
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  for (const auto& [from, to] : out.edges) out.successors[from].push_back(to);
  return out;
}

Condensation scc_condensation(const CallGraph& graph) {
  std::vector<std::vector<std::uint32_t>> adjacency(graph.service_count());
  for (NodeId v = 0; v < graph.service_count(); ++v) {
    for (const auto& a : graph.callees(v)) adjacency[v].push_back(a.node);
  }
  return scc_condensation(adjacency);
}

}  // namespace remedy
