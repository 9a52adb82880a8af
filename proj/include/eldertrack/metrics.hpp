#pragma once

#include <map>
#include <utility>
#include <vector>

#include "eldertrack/error.hpp"

namespace eldertrack {

/// Adjusted Rand index between two labelings of the same items.
/// Two single-cluster (or all-singleton identical) partitions score 1.
inline double adjusted_rand_index(const std::vector<int>& truth, const std::vector<int>& predicted) {
  require(truth.size() == predicted.size(), "ARI needs equally sized labelings");
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    joint[{truth[i], predicted[i]}] += 1.0;
    rows[truth[i]] += 1.0;
    cols[predicted[i]] += 1.0;
  }
  double index = 0.0, a = 0.0, b = 0.0;
  for (const auto& [key, c] : joint) index += choose2(c);
  for (const auto& [key, c] : rows) a += choose2(c);
  for (const auto& [key, c] : cols) b += choose2(c);
  const double total = choose2(static_cast<double>(truth.size()));
  const double expected = total > 0.0 ? a * b / total : 0.0;
  const double max_index = 0.5 * (a + b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace eldertrack
