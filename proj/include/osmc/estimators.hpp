#pragma once

#include <optional>
#include <set>
#include <utility>

#include "osmc/sampling.hpp"

namespace osmc {

// Estimation weights used on the drawn subsample: Unweighted fits the plain
// likelihood, Weighted reweights each drawn row by 1/(n pi*).
enum class Method { Unweighted, Weighted };

inline const char* method_name(Method method) {
  return method == Method::Unweighted ? "unweighted" : "weighted";
}

struct SubsampleEstimate {
  Vector beta;
  Method method = Method::Unweighted;
  double m_hat = 0.0;
  SubsampleDraw draw;
  std::optional<Matrix> variance;   // filled by variance_estimate
  FitResult fit;
  Index measured_responses = 0;     // pilot size + distinct second-stage rows
};

struct VarianceEstimate {
  Matrix v_hat;
  Matrix gamma_hat;
  Matrix omega_hat;
  double trace_v = 0.0;
};

namespace detail {

inline Index count_distinct(const std::vector<Index>& indices) {
  std::set<Index> s(indices.begin(), indices.end());
  return static_cast<Index>(s.size());
}

}  // namespace detail

// Fits the requested estimator on an already-drawn subsample. Both methods
// see exactly the same rows; they differ only in the estimation weights.
inline SubsampleEstimate fit_on_draw(GlmFamily family, const Dataset& data,
                                     const SamplingPlan& plan, const SubsampleDraw& draw,
                                     Method method, const FitOptions& options = FitOptions{}) {
  Dataset sub = gather_rows(data, draw.indices);
  if (!sub.has_all_responses()) {
    throw MissingResponses("drawn subsample rows must have measured responses");
  }
  std::optional<Vector> weights;
  if (method == Method::Weighted) {
    const double n = static_cast<double>(data.n());
    Vector w(draw.r());
    for (Index k = 0; k < draw.r(); ++k) {
      const double pi = draw.probabilities_at_draw[k];
      if (!(pi > 0.0)) throw ZeroProbability("drawn row has zero sampling probability");
      w[k] = 1.0 / (n * pi);
    }
    weights = std::move(w);
  }
  SubsampleEstimate est;
  est.fit = fit_mle(family, sub, weights, options);
  est.beta = est.fit.beta;
  est.method = method;
  est.m_hat = plan.m_hat;
  est.draw = draw;
  est.measured_responses = detail::count_distinct(draw.indices);
  return est;
}

namespace detail {

struct TwoStage {
  PilotEstimate pilot;
  SamplingPlan plan;
  SubsampleDraw draw;
};

// Steps 1-3 of the two-stage procedure: pilot, plan, with-replacement draw.
// When pilot_probabilities is given the pilot is drawn with replacement from
// it (e.g. case-control balancing) instead of simple random sampling.
inline TwoStage run_two_stage(GlmFamily family, const Dataset& data, Index r_p, Index r,
                              const Criterion& criterion, Rng& rng, const FitOptions& options,
                              const std::optional<Vector>& pilot_probabilities) {
  TwoStage stage;
  std::vector<Index> pilot_indices;
  if (pilot_probabilities.has_value()) {
    if (pilot_probabilities->size() != data.n()) {
      throw ShapeMismatch("pilot probability vector length does not match dataset");
    }
    const AliasTable table(*pilot_probabilities);
    pilot_indices.resize(static_cast<std::size_t>(r_p));
    for (Index k = 0; k < r_p; ++k) pilot_indices[static_cast<std::size_t>(k)] = table.draw(rng);
  } else {
    pilot_indices = simple_random_pilot(data.n(), r_p, rng);
  }
  stage.pilot = pilot_estimate(family, data, std::move(pilot_indices), options);
  stage.plan = os_probabilities(family, data, stage.pilot, criterion);
  stage.draw = sample_with_replacement(stage.plan, r, rng);
  return stage;
}

inline SubsampleEstimate two_stage_estimate(GlmFamily family, const Dataset& data, Index r_p,
                                            Index r, const Criterion& criterion, Rng& rng,
                                            Method method, const FitOptions& options,
                                            const std::optional<Vector>& pilot_probabilities) {
  const TwoStage stage = run_two_stage(family, data, r_p, r, criterion, rng, options,
                                       pilot_probabilities);
  SubsampleEstimate est = fit_on_draw(family, data, stage.plan, stage.draw, method, options);
  est.measured_responses += stage.pilot.r_p;
  return est;
}

}  // namespace detail

// Full two-stage pipeline with a plain (unit-weight) subsample fit.
inline SubsampleEstimate unweighted_estimate(GlmFamily family, const Dataset& data, Index r_p,
                                             Index r, const Criterion& criterion, Rng& rng,
                                             const FitOptions& options = FitOptions{},
                                             const std::optional<Vector>& pilot_probabilities =
                                                 std::nullopt) {
  return detail::two_stage_estimate(family, data, r_p, r, criterion, rng, Method::Unweighted,
                                    options, pilot_probabilities);
}

// Same pipeline with inverse-probability estimation weights 1/(n pi*).
inline SubsampleEstimate weighted_estimate(GlmFamily family, const Dataset& data, Index r_p,
                                           Index r, const Criterion& criterion, Rng& rng,
                                           const FitOptions& options = FitOptions{},
                                           const std::optional<Vector>& pilot_probabilities =
                                               std::nullopt) {
  return detail::two_stage_estimate(family, data, r_p, r, criterion, rng, Method::Weighted,
                                    options, pilot_probabilities);
}

// Linear-model shortcut: the probabilities are response- and coefficient-free
// so no pilot is needed, and the subsample is solved by exact least squares.
inline SubsampleEstimate linear_unweighted_estimate(const Dataset& data, Index r,
                                                    const Criterion& criterion, Rng& rng,
                                                    const FitOptions& options = FitOptions{}) {
  const SamplingPlan plan = linear_plan(data.x, criterion);
  const SubsampleDraw draw = sample_with_replacement(plan, r, rng);
  return fit_on_draw(GlmFamily::Linear, data, plan, draw, Method::Unweighted, options);
}

// Plug-in estimator of the asymptotic variance of the unweighted estimator,
// built from the drawn subsample only:
//   Gamma_hat = (m/r) sum b''(x*'beta) x* x*'
//   Omega_hat = (n m^2/r) sum pi* b''(x*'beta) x* x*'
//   V_hat     = (1/r) m Gamma_hat^{-1} + (1/n) Gamma_hat^{-1} Omega_hat Gamma_hat^{-1}
inline VarianceEstimate variance_estimate(GlmFamily family, const Dataset& data,
                                          const SubsampleEstimate& estimate) {
  const Index r = estimate.draw.r();
  const Index p = data.dim();
  const double n = static_cast<double>(data.n());
  const double m = estimate.m_hat;
  if (r == 0) throw EmptyInput("variance estimate requires a non-empty draw");

  Matrix gamma = Matrix::Zero(p, p);
  Matrix omega = Matrix::Zero(p, p);
  for (Index k = 0; k < r; ++k) {
    const Index i = estimate.draw.indices[static_cast<std::size_t>(k)];
    const auto xi = data.x.row(i).transpose();
    const double bpp = b_double_prime(family, xi.dot(estimate.beta));
    const Matrix outer = bpp * (xi * xi.transpose());
    gamma += outer;
    omega += estimate.draw.probabilities_at_draw[k] * outer;
  }
  gamma *= m / static_cast<double>(r);
  omega *= n * m * m / static_cast<double>(r);
  gamma = ((gamma + gamma.transpose()) * 0.5).eval();
  omega = ((omega + omega.transpose()) * 0.5).eval();

  if (effectively_singular(gamma)) {
    throw SingularGammaHat("subsample information matrix is singular (r too small?)");
  }
  Matrix gamma_inv;
  try {
    gamma_inv = spd_inverse(gamma);
  } catch (const SingularMatrix&) {
    throw SingularGammaHat("subsample information matrix is singular (r too small?)");
  }

  VarianceEstimate out;
  out.gamma_hat = gamma;
  out.omega_hat = omega;
  out.v_hat = (m / static_cast<double>(r)) * gamma_inv +
              (1.0 / n) * (gamma_inv * omega * gamma_inv);
  out.v_hat = ((out.v_hat + out.v_hat.transpose()) * 0.5).eval();
  out.trace_v = out.v_hat.trace();
  return out;
}

// Full-data MLE with estimation weights n * m_hat * pi_i, the target the
// unweighted subsample estimator tracks conditionally on the full data.
inline Vector full_data_weighted_mle(GlmFamily family, const Dataset& data,
                                     const SamplingPlan& plan,
                                     const FitOptions& options = FitOptions{}) {
  if (plan.n() != data.n()) throw ShapeMismatch("plan length does not match dataset");
  Vector weights(data.n());
  for (Index i = 0; i < data.n(); ++i) weights[i] = plan.weight(i);
  return fit_mle(family, data, weights, options).beta;
}

}  // namespace osmc
