#pragma once

#include <optional>

#include "osmc/dataset.hpp"
#include "osmc/family.hpp"

namespace osmc {

namespace detail {

inline void check_weights(const std::optional<Vector>& weights, Index n) {
  if (!weights.has_value()) return;
  if (weights->size() != n) {
    throw ShapeMismatch("estimation weight vector length does not match dataset");
  }
  for (Index i = 0; i < n; ++i) {
    if (!((*weights)[i] >= 0.0)) {
      throw Error(ErrorCategory::Data, "estimation weights must be non-negative");
    }
  }
}

inline void require_responses(const Dataset& data) {
  if (!data.has_all_responses()) {
    throw MissingResponses("operation requires responses for every row used");
  }
}

}  // namespace detail

// Score function (1/n) sum_i w_i {b'(X_i'beta) - Y_i} X_i. This is the
// gradient of the negative average log-likelihood.
inline Vector score(GlmFamily family, const Dataset& data, const Vector& beta,
                    const std::optional<Vector>& estimation_weights = std::nullopt) {
  const Index n = data.n();
  if (beta.size() != data.dim()) throw ShapeMismatch("beta length != covariate dimension");
  detail::check_weights(estimation_weights, n);
  detail::require_responses(data);

  const Vector t = data.x * beta;
  Vector resid(n);
  for (Index i = 0; i < n; ++i) {
    double r = b_prime(family, t[i]) - (*data.y)[i];
    if (estimation_weights) r *= (*estimation_weights)[i];
    resid[i] = r;
  }
  return (data.x.transpose() * resid) / static_cast<double>(n);
}

// Fisher information kernel (1/n) sum_i w_i b''(X_i'beta) X_i X_i'. Responses
// are not needed.
inline Matrix fisher_info(GlmFamily family, const Dataset& data, const Vector& beta,
                          const std::optional<Vector>& estimation_weights = std::nullopt) {
  const Index n = data.n();
  if (beta.size() != data.dim()) throw ShapeMismatch("beta length != covariate dimension");
  detail::check_weights(estimation_weights, n);

  const Vector t = data.x * beta;
  Vector s(n);
  for (Index i = 0; i < n; ++i) {
    double v = b_double_prime(family, t[i]);
    if (estimation_weights) v *= (*estimation_weights)[i];
    s[i] = v;
  }
  Matrix scaled = s.asDiagonal() * data.x;
  Matrix h = (data.x.transpose() * scaled) / static_cast<double>(n);
  return ((h + h.transpose()) * 0.5).eval();
}

// Negative average log-likelihood (1/n) sum_i w_i {b(X_i'beta) - Y_i X_i'beta},
// the objective minimized by the solver.
inline double negative_log_likelihood(GlmFamily family, const Dataset& data, const Vector& beta,
                                      const std::optional<Vector>& estimation_weights = std::nullopt) {
  const Index n = data.n();
  if (beta.size() != data.dim()) throw ShapeMismatch("beta length != covariate dimension");
  detail::check_weights(estimation_weights, n);
  detail::require_responses(data);

  const Vector t = data.x * beta;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double v = b_value(family, t[i]) - (*data.y)[i] * t[i];
    if (estimation_weights) v *= (*estimation_weights)[i];
    acc += v;
  }
  return acc / static_cast<double>(n);
}

}  // namespace osmc
