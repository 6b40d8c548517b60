#pragma once

#include <algorithm>
#include <vector>

#include "osmc/dataset.hpp"

namespace osmc {

// Two-sided trimmed mean: drop floor(alpha * S) values from each end.
inline double trimmed_mean(std::vector<double> values, double alpha) {
  if (values.empty()) throw EmptyInput("trimmed mean of empty list");
  if (!(alpha >= 0.0) || alpha >= 0.5) {
    throw Error(ErrorCategory::Data, "trim fraction must lie in [0, 0.5)");
  }
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(alpha * static_cast<double>(values.size()));
  double acc = 0.0;
  for (std::size_t i = k; i < values.size() - k; ++i) acc += values[i];
  return acc / static_cast<double>(values.size() - 2 * k);
}

// Mean Euclidean distance of the estimates from the reference (the norm, not
// its square), optionally trimmed.
inline double emse(const std::vector<Vector>& estimates, const Vector& beta_ref,
                   double trim_alpha = 0.0) {
  if (estimates.empty()) throw EmptyInput("emse over empty estimate list");
  std::vector<double> distances;
  distances.reserve(estimates.size());
  for (const auto& beta : estimates) {
    if (beta.size() != beta_ref.size()) throw ShapeMismatch("estimate/reference length mismatch");
    distances.push_back((beta - beta_ref).norm());
  }
  return trimmed_mean(std::move(distances), trim_alpha);
}

inline double relative_efficiency(double emse_weighted, double emse_unweighted) {
  if (emse_unweighted == 0.0) throw DivisionByZero("relative efficiency with zero denominator");
  return emse_weighted / emse_unweighted;
}

}  // namespace osmc
