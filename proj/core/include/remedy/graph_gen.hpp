#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "remedy/trace_model.hpp"

namespace remedy {

struct SyntheticGraphOptions {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::uint64_t seed = 1;
  std::string ns = "bench";
};

/// Seeded preferential-attachment call graph with exactly `nodes` services
/// (`<ns>/svc-00000` ...) and `edges` distinct edges. Each new service calls
/// one earlier service chosen with probability proportional to in-degree + 1;
/// the remaining edges pick a uniform caller and a preferential callee with a
/// smaller index, so the result is acyclic and hub-heavy. Weights are 1..10.
/// Throws ConfigError unless nodes - 1 <= edges <= nodes * (nodes - 1) / 2.
CallGraph preferential_attachment_graph(const SyntheticGraphOptions& options);

}  // namespace remedy
