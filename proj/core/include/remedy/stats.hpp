#pragma once

#include <cstddef>
#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace remedy {

struct ConfidenceInterval {
  double lower = 0;
  double upper = 1;
};

/// Exact two-sided binomial interval for k successes in n trials, as
/// proportions. Throws ContractError if n == 0 or k > n.
ConfidenceInterval clopper_pearson(std::size_t k, std::size_t n, double confidence = 0.95);

/// Nearest-rank percentile, p in (0, 100]. Throws ContractError on empty
/// input or p out of range.
double percentile(std::vector<double> values, double p);

struct Summary {
  std::size_t count = 0;
  double min = 0;
  double median = 0;
  double p90 = 0;
  double p99 = 0;
  double max = 0;
  double mean = 0;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// All-zero for empty input.
Summary summarize(const std::vector<double>& values);

}  // namespace remedy
