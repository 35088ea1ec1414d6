#include "remedy/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "remedy/error.hpp"

namespace remedy {

ConfidenceInterval clopper_pearson(std::size_t k, std::size_t n, double confidence) {
  if (n == 0) throw ContractError("clopper_pearson needs at least one trial");
  if (k > n) throw ContractError("clopper_pearson: more successes than trials");
  if (!(confidence > 0 && confidence < 1)) throw ContractError("confidence must be in (0, 1)");
  const double alpha = 1.0 - confidence;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  ConfidenceInterval ci;
  ci.lower = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
  ci.upper = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
  return ci;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  if (!(p > 0 && p <= 100)) throw ContractError("percentile rank must be in (0, 100]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.count = values.size();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  s.median = percentile(values, 50);
  s.p90 = percentile(values, 90);
  s.p99 = percentile(values, 99);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

nlohmann::json Summary::to_json() const {
  return {{"count", count}, {"min", min}, {"median", median}, {"p90", p90},
          {"p99", p99},     {"max", max}, {"mean", mean}};
}

}  // namespace remedy
