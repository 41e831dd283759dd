#pragma once

#include "psmkit/common.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace psmkit {

/// Euclidean projection onto the probability simplex {u >= 0, sum u = 1}
/// by the sort-and-threshold method.
inline Vector project_to_simplex(const Vector& v) {
  require(v.size() >= 1, "cannot project an empty vector onto the simplex");
  if (v.size() == 1) return Vector::Ones(1);
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) threshold = t;
  }
  return (v.array() - threshold).cwiseMax(0.0).matrix();
}

}  // namespace psmkit
