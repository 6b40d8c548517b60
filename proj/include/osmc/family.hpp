#pragma once

#include <cmath>
#include <string>

#include "osmc/errors.hpp"

namespace osmc {

// Canonical-link exponential families with unit dispersion. Each member is
// identified by its cumulant function b(.); the mean is b'(x'beta) and the
// conditional variance is b''(x'beta).
enum class GlmFamily { Linear, Logistic, Poisson };

// Poisson predictors beyond this magnitude are treated as divergence rather
// than silently saturating exp().
inline constexpr double kPoissonPredictorLimit = 500.0;

inline const char* family_name(GlmFamily family) {
  switch (family) {
    case GlmFamily::Linear: return "linear";
    case GlmFamily::Logistic: return "logistic";
    case GlmFamily::Poisson: return "poisson";
  }
  return "?";
}

inline GlmFamily parse_family(const std::string& name) {
  if (name == "linear") return GlmFamily::Linear;
  if (name == "logistic") return GlmFamily::Logistic;
  if (name == "poisson") return GlmFamily::Poisson;
  throw ParseError("unknown family '" + name + "' (expected linear|logistic|poisson)");
}

inline void check_linear_predictor(GlmFamily family, double t) {
  if (!std::isfinite(t)) {
    throw NonFiniteLinearPredictor("non-finite linear predictor");
  }
  if (family == GlmFamily::Poisson && std::abs(t) > kPoissonPredictorLimit) {
    throw NonFiniteLinearPredictor("poisson linear predictor out of range: " + std::to_string(t));
  }
}

// b(t). The logistic branch uses max(t,0) + log1p(exp(-|t|)), which stays
// finite for |t| up to the double range.
inline double b_value(GlmFamily family, double t) {
  check_linear_predictor(family, t);
  switch (family) {
    case GlmFamily::Linear: return 0.5 * t * t;
    case GlmFamily::Logistic: return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
    case GlmFamily::Poisson: return std::exp(t);
  }
  return 0.0;
}

// b'(t): identity, sigmoid, exp.
inline double b_prime(GlmFamily family, double t) {
  check_linear_predictor(family, t);
  switch (family) {
    case GlmFamily::Linear: return t;
    case GlmFamily::Logistic: return 1.0 / (1.0 + std::exp(-t));
    case GlmFamily::Poisson: return std::exp(t);
  }
  return 0.0;
}

// b''(t) > 0 for all finite t. The logistic branch evaluates p(1-p) as
// q/(1+q)^2 with q = exp(-|t|); the naive product cancels to exactly zero
// once p rounds to 1 (|t| beyond ~37).
inline double b_double_prime(GlmFamily family, double t) {
  check_linear_predictor(family, t);
  switch (family) {
    case GlmFamily::Linear: return 1.0;
    case GlmFamily::Logistic: {
      const double q = std::exp(-std::abs(t));
      return q / ((1.0 + q) * (1.0 + q));
    }
    case GlmFamily::Poisson: return std::exp(t);
  }
  return 0.0;
}

// Responses are stored as doubles for every family; this validates they lie
// in the family's support.
inline void check_response_support(GlmFamily family, double y) {
  if (!std::isfinite(y)) {
    throw InvalidResponse("non-finite response");
  }
  switch (family) {
    case GlmFamily::Linear:
      return;
    case GlmFamily::Logistic:
      if (y != 0.0 && y != 1.0) {
        throw InvalidResponse("logistic response must be 0 or 1, got " + std::to_string(y));
      }
      return;
    case GlmFamily::Poisson:
      if (y < 0.0 || y != std::floor(y)) {
        throw InvalidResponse("poisson response must be a non-negative integer, got " +
                              std::to_string(y));
      }
      return;
  }
}

}  // namespace osmc
