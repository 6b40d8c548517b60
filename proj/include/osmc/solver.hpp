#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "osmc/glm.hpp"
#include "osmc/linalg.hpp"

namespace osmc {

struct FitOptions {
  double tol_grad = 1e-8;
  double tol_step = 1e-10;     // relative change in beta
  int max_iter = 100;
  double ridge_jitter = 1e-8;  // scaled by trace/p inside the solver
  double l2_penalty = 0.0;     // adds l2/2 ||beta||^2 to the mean objective
  std::optional<Vector> init;  // defaults to the zero vector
};

struct FitResult {
  Vector beta;
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

namespace detail {

inline double guarded_nll(GlmFamily family, const Dataset& data, const Vector& beta,
                          const std::optional<Vector>& weights, double l2_penalty) {
  try {
    double f = negative_log_likelihood(family, data, beta, weights);
    if (l2_penalty > 0.0) f += 0.5 * l2_penalty * beta.squaredNorm();
    return f;
  } catch (const NonFiniteLinearPredictor&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline void check_fit_preconditions(GlmFamily family, const Dataset& data,
                                    const std::optional<Vector>& weights) {
  if (data.n() < data.dim()) {
    throw Error(ErrorCategory::Data, "fit requires at least dim(beta) rows");
  }
  require_responses(data);
  check_weights(weights, data.n());
  if (weights.has_value() && weights->sum() <= 0.0) {
    throw Error(ErrorCategory::Data, "estimation weights must not be all zero");
  }
  for (Index i = 0; i < data.n(); ++i) {
    check_response_support(family, (*data.y)[i]);
  }
  if (family == GlmFamily::Logistic) {
    // With only one class among the (positively weighted) rows the
    // likelihood has no finite maximizer.
    bool seen0 = false, seen1 = false;
    for (Index i = 0; i < data.n(); ++i) {
      if (weights.has_value() && (*weights)[i] == 0.0) continue;
      ((*data.y)[i] == 1.0 ? seen1 : seen0) = true;
      if (seen0 && seen1) break;
    }
    if (!(seen0 && seen1)) {
      throw SeparationSuspected("logistic fit with a single response class");
    }
  }
}

// Exact weighted least squares for the linear family.
inline FitResult linear_exact_fit(const Dataset& data, const std::optional<Vector>& weights,
                                  const FitOptions& options) {
  const Index n = data.n();
  const double dn = static_cast<double>(n);
  Matrix h;
  Vector rhs;
  if (weights.has_value()) {
    Matrix xw = weights->asDiagonal() * data.x;
    h = (data.x.transpose() * xw) / dn;
    rhs = (xw.transpose() * (*data.y)) / dn;
  } else {
    h = (data.x.transpose() * data.x) / dn;
    rhs = (data.x.transpose() * (*data.y)) / dn;
  }
  if (options.l2_penalty > 0.0) h.diagonal().array() += options.l2_penalty;
  h = ((h + h.transpose()) * 0.5).eval();
  FitResult result;
  try {
    SpdSolver solver(h, options.ridge_jitter);
    result.beta = solver.solve(rhs);
  } catch (const SingularMatrix&) {
    throw SingularHessian("singular normal equations in least-squares fit");
  }
  result.iterations = 1;
  result.converged = true;
  Vector grad = score(GlmFamily::Linear, data, result.beta, weights);
  if (options.l2_penalty > 0.0) grad += options.l2_penalty * result.beta;
  result.final_grad_norm = grad.norm();
  return result;
}

}  // namespace detail

// Newton maximizer of the (optionally weighted) log-likelihood, i.e. Newton
// descent on the negative average log-likelihood with step halving. The
// linear family is solved in closed form. Estimation weights are normalized
// to mean one internally, so the result is invariant to their scale and the
// convergence tolerances keep their meaning.
inline FitResult fit_mle(GlmFamily family, const Dataset& data,
                         const std::optional<Vector>& raw_weights = std::nullopt,
                         const FitOptions& options = FitOptions{}) {
  const auto t_start = std::chrono::steady_clock::now();
  detail::check_fit_preconditions(family, data, raw_weights);
  std::optional<Vector> estimation_weights;
  if (raw_weights.has_value()) {
    estimation_weights = *raw_weights * (static_cast<double>(data.n()) / raw_weights->sum());
  }

  FitResult result;
  if (family == GlmFamily::Linear) {
    result = detail::linear_exact_fit(data, estimation_weights, options);
    result.wall_time = std::chrono::steady_clock::now() - t_start;
    return result;
  }

  Vector beta = options.init.value_or(Vector::Zero(data.dim()));
  if (beta.size() != data.dim()) throw ShapeMismatch("init length != covariate dimension");
  const double l2 = options.l2_penalty;
  double objective = detail::guarded_nll(family, data, beta, estimation_weights, l2);
  if (!std::isfinite(objective)) {
    throw NonFiniteLinearPredictor("initial point has non-finite objective");
  }
  const auto gradient = [&](const Vector& b) -> Vector {
    Vector g = score(family, data, b, estimation_weights);
    if (l2 > 0.0) g += l2 * b;
    return g;
  };

  int iterations = 0;
  bool converged = false;
  while (true) {
    const Vector grad = gradient(beta);
    const double grad_norm = grad.norm();
    if (grad_norm < options.tol_grad) {
      converged = true;
      break;
    }
    if (family == GlmFamily::Logistic && beta.norm() > 1e3) {
      // The iterate has wandered far out while the gradient is still above
      // tolerance; on a separable sample the likelihood has no maximizer.
      throw SeparationSuspected("diverging logistic coefficients (norm > 1e3)");
    }
    if (iterations >= options.max_iter) break;

    Matrix hess = fisher_info(family, data, beta, estimation_weights);
    if (l2 > 0.0) hess.diagonal().array() += l2;
    Vector direction;
    try {
      SpdSolver solver(hess, options.ridge_jitter);
      direction = solver.solve(grad);
    } catch (const SingularMatrix&) {
      throw SingularHessian("singular Hessian in Newton step");
    }

    // Step halving: shrink until the objective does not increase.
    double step = 1.0;
    Vector candidate;
    double candidate_objective = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      candidate = beta - step * direction;
      candidate_objective = detail::guarded_nll(family, data, candidate, estimation_weights, l2);
      if (candidate_objective <= objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iterations;
    if (!accepted) break;  // flat to machine precision along the Newton direction

    const double step_norm = (candidate - beta).norm();
    beta = candidate;
    objective = candidate_objective;
    if (step_norm <= options.tol_step * (beta.norm() + options.tol_step)) {
      converged = true;
      break;
    }
  }

  result.beta = beta;
  result.iterations = iterations;
  result.converged = converged;
  result.final_grad_norm = gradient(beta).norm();
  result.wall_time = std::chrono::steady_clock::now() - t_start;
  return result;
}

inline double average_iterations(const std::vector<FitResult>& results) {
  if (results.empty()) throw EmptyInput("average_iterations over empty list");
  double total = 0.0;
  for (const auto& r : results) total += static_cast<double>(r.iterations);
  return total / static_cast<double>(results.size());
}

}  // namespace osmc
