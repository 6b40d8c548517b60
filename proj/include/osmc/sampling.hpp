#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "osmc/glm.hpp"
#include "osmc/linalg.hpp"
#include "osmc/rng.hpp"
#include "osmc/solver.hpp"

namespace osmc {

// Subsampling criterion. AOpt uses the unit matrix, LOpt the information
// matrix itself (which cancels the per-row inverse), and GeneralL an
// arbitrary fixed transform L applied to Phi^{-1} X_i.
struct Criterion {
  enum class Kind { AOpt, LOpt, GeneralL };
  Kind kind = Kind::AOpt;
  Matrix l;  // only used for GeneralL

  static Criterion a_opt() { return Criterion{Kind::AOpt, {}}; }
  static Criterion l_opt() { return Criterion{Kind::LOpt, {}}; }
  static Criterion general_l(Matrix l) { return Criterion{Kind::GeneralL, std::move(l)}; }
};

inline const char* criterion_name(Criterion::Kind kind) {
  switch (kind) {
    case Criterion::Kind::AOpt: return "A-OS";
    case Criterion::Kind::LOpt: return "L-OS";
    case Criterion::Kind::GeneralL: return "general-L";
  }
  return "?";
}

struct PilotEstimate {
  Vector beta_p;
  Matrix phi_p;                      // (1/r_p) sum b''(x'beta_p) x x', jittered to PD if needed
  std::vector<Index> pilot_indices;
  Index r_p = 0;
};

// Full-data probability vector. The unnormalized weights are recoverable as
// w_i = n * m_hat * probabilities[i]; m_hat is their mean.
struct SamplingPlan {
  Vector probabilities;
  Criterion criterion;
  double m_hat = 0.0;

  Index n() const { return probabilities.size(); }
  double weight(Index i) const {
    return static_cast<double>(n()) * m_hat * probabilities[i];
  }
};

struct SubsampleDraw {
  std::vector<Index> indices;       // length r, repeats allowed
  Vector probabilities_at_draw;     // plan probability of each drawn row

  Index r() const { return static_cast<Index>(indices.size()); }
};

// Walker/Vose alias table: O(n) build, O(1) per draw.
class AliasTable {
 public:
  explicit AliasTable(const Vector& probabilities) {
    const Index n = probabilities.size();
    if (n == 0) throw EmptyInput("alias table over empty distribution");
    const double total = probabilities.sum();
    if (!(total > 0.0)) throw ZeroWeights("alias table requires positive total mass");
    accept_.assign(static_cast<std::size_t>(n), 1.0);
    alias_.resize(static_cast<std::size_t>(n));
    std::vector<double> scaled(static_cast<std::size_t>(n));
    std::vector<Index> small, large;
    small.reserve(static_cast<std::size_t>(n));
    large.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      if (!(probabilities[i] >= 0.0)) throw ZeroWeights("negative probability in distribution");
      scaled[static_cast<std::size_t>(i)] = probabilities[i] * static_cast<double>(n) / total;
      alias_[static_cast<std::size_t>(i)] = i;
      (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const Index s = small.back();
      const Index l = large.back();
      small.pop_back();
      large.pop_back();
      accept_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
      alias_[static_cast<std::size_t>(s)] = l;
      scaled[static_cast<std::size_t>(l)] += scaled[static_cast<std::size_t>(s)] - 1.0;
      (scaled[static_cast<std::size_t>(l)] < 1.0 ? small : large).push_back(l);
    }
    // Entries left over by rounding keep accept = 1.
  }

  Index size() const { return static_cast<Index>(alias_.size()); }

  Index draw(Rng& rng) const {
    std::uniform_int_distribution<Index> pick(0, size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Index j = pick(rng);
    return unit(rng) < accept_[static_cast<std::size_t>(j)] ? j : alias_[static_cast<std::size_t>(j)];
  }

 private:
  std::vector<double> accept_;
  std::vector<Index> alias_;
};

// Inversion sampling against the cumulative distribution; the slow-path
// cross-check for the alias table.
inline Index categorical_draw_by_inversion(const Vector& probabilities, double u) {
  double cum = 0.0;
  for (Index i = 0; i < probabilities.size(); ++i) {
    cum += probabilities[i];
    if (u < cum) return i;
  }
  return probabilities.size() - 1;
}

// r_p distinct indices, uniform without replacement (selection sampling, so
// the result comes out in increasing order).
inline std::vector<Index> simple_random_pilot(Index n, Index r_p, Rng& rng) {
  if (r_p > n) throw PilotTooLarge("pilot size exceeds dataset size");
  if (r_p < 1) throw EmptyInput("pilot size must be at least 1");
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(r_p));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Index needed = r_p;
  for (Index i = 0; i < n && needed > 0; ++i) {
    if (unit(rng) * static_cast<double>(n - i) < static_cast<double>(needed)) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

// Class-balancing pilot probabilities for binary responses, renormalized to
// sum to one: raw weights {c0(1-y) + c1 y}/n with c0 = 1/{2(1-p_m)} and
// c1 = 1/(2 p_m).
inline Vector case_control_pilot_probabilities(const Vector& y, double p_m) {
  if (!(p_m > 0.0) || !(p_m < 1.0)) {
    throw DegenerateMarginal("marginal probability must lie strictly between 0 and 1");
  }
  const Index n = y.size();
  if (n == 0) throw EmptyInput("empty response vector");
  const double c0 = 1.0 / (2.0 * (1.0 - p_m));
  const double c1 = 1.0 / (2.0 * p_m);
  Vector probs(n);
  for (Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw InvalidResponse("case-control pilot requires binary responses");
    }
    probs[i] = (y[i] == 1.0 ? c1 : c0) / static_cast<double>(n);
  }
  probs /= probs.sum();
  return probs;
}

namespace detail {

// Normalizes unnormalized weights into a plan. Weights are floored at the
// smallest positive double so every row stays reachable.
inline SamplingPlan make_plan(Vector weights, Criterion criterion) {
  const Index n = weights.size();
  if (!(weights.maxCoeff() > 0.0)) throw ZeroWeights("sampling weights sum to zero");
  long double total = 0.0L;
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(weights[i])) throw ZeroWeights("non-finite sampling weight");
    weights[i] = std::max(weights[i], std::numeric_limits<double>::denorm_min());
    total += weights[i];
  }
  const double sum = static_cast<double>(total);
  SamplingPlan plan;
  plan.probabilities = weights / sum;
  plan.criterion = std::move(criterion);
  plan.m_hat = sum / static_cast<double>(n);
  return plan;
}

// ||L Phi^{-1} x_i|| per row, solved in column blocks to bound memory.
inline Vector transformed_row_norms(const Matrix& x, const SpdSolver& phi_solver,
                                    const Matrix* l) {
  const Index n = x.rows();
  Vector norms(n);
  constexpr Index kBlock = 8192;
  for (Index start = 0; start < n; start += kBlock) {
    const Index len = std::min(kBlock, n - start);
    Matrix solved = phi_solver.solve(Matrix(x.middleRows(start, len).transpose()));
    if (l != nullptr) {
      norms.segment(start, len) = (*l * solved).colwise().norm();
    } else {
      norms.segment(start, len) = solved.colwise().norm();
    }
  }
  return norms;
}

}  // namespace detail

// Optimal subsampling probabilities pi_i proportional to
// sqrt(b''(x_i'beta_p)) * ||L Phi_p^{-1} x_i||. Only covariates are read, so
// the plan can be computed before any response outside the pilot has been
// measured. The LOpt branch skips the matrix inverse entirely (O(np)).
inline SamplingPlan os_probabilities(GlmFamily family, const Dataset& data,
                                     const PilotEstimate& pilot, const Criterion& criterion) {
  const Index n = data.n();
  if (pilot.beta_p.size() != data.dim()) {
    throw ShapeMismatch("pilot coefficients do not match covariate dimension");
  }
  const Vector t = data.x * pilot.beta_p;

  Vector norms;
  switch (criterion.kind) {
    case Criterion::Kind::LOpt:
      norms = data.x.rowwise().norm();
      break;
    case Criterion::Kind::AOpt:
    case Criterion::Kind::GeneralL: {
      const Matrix* l = nullptr;
      if (criterion.kind == Criterion::Kind::GeneralL) {
        if (criterion.l.cols() != data.dim()) {
          throw ShapeMismatch("L matrix columns must match covariate dimension");
        }
        l = &criterion.l;
      }
      if (effectively_singular(pilot.phi_p)) {
        throw SingularPhi("pilot information matrix is singular");
      }
      try {
        SpdSolver phi_solver(pilot.phi_p);
        norms = detail::transformed_row_norms(data.x, phi_solver, l);
      } catch (const SingularMatrix&) {
        throw SingularPhi("pilot information matrix is singular");
      }
      break;
    }
  }

  Vector weights(n);
  for (Index i = 0; i < n; ++i) {
    weights[i] = std::sqrt(b_double_prime(family, t[i])) * norms[i];
  }
  return detail::make_plan(std::move(weights), criterion);
}

// Pilot fit on the pilot rows plus the plug-in information matrix
// (1/r_p) sum b''(x'beta_p) x x'. By default the pilot objective carries a
// small ridge penalty of 1/r_p: a pilot subsample can be separable even when
// the full data is not, and an unbounded plug-in coefficient collapses the
// sampling plan onto a handful of rows. Pass 0 to fit the plain MLE.
inline PilotEstimate pilot_estimate(GlmFamily family, const Dataset& data,
                                    std::vector<Index> pilot_indices,
                                    const FitOptions& options = FitOptions{},
                                    std::optional<double> stabilizing_ridge = std::nullopt) {
  if (pilot_indices.empty()) throw EmptyInput("empty pilot index list");
  Dataset pilot_data = gather_rows(data, pilot_indices);
  if (!pilot_data.has_all_responses()) {
    throw MissingResponses("pilot rows must have measured responses");
  }
  FitOptions pilot_options = options;
  pilot_options.l2_penalty =
      stabilizing_ridge.value_or(1.0 / static_cast<double>(pilot_indices.size()));
  const FitResult fit = fit_mle(family, pilot_data, std::nullopt, pilot_options);
  Matrix phi = fisher_info(family, pilot_data, fit.beta);
  try {
    SpdSolver probe(phi, options.ridge_jitter);
    if (probe.jittered()) {
      double scale = phi.trace() / static_cast<double>(phi.rows());
      if (!(scale > 0.0)) scale = 1.0;
      phi.diagonal().array() += options.ridge_jitter * scale;
    }
  } catch (const SingularMatrix&) {
    throw PilotSingular("pilot information matrix not positive-definite after jitter");
  }
  PilotEstimate pilot;
  pilot.beta_p = fit.beta;
  pilot.phi_p = std::move(phi);
  pilot.r_p = static_cast<Index>(pilot_indices.size());
  pilot.pilot_indices = std::move(pilot_indices);
  return pilot;
}

// Pilot-free plan for the linear family: b'' = 1 and the information matrix
// is the scaled Gram matrix, so probabilities depend on covariates only.
inline SamplingPlan linear_plan(const Matrix& x, const Criterion& criterion) {
  const Index n = x.rows();
  if (n == 0) throw EmptyInput("empty design matrix");
  Vector weights;
  switch (criterion.kind) {
    case Criterion::Kind::LOpt:
      weights = x.rowwise().norm();
      break;
    case Criterion::Kind::AOpt:
    case Criterion::Kind::GeneralL: {
      Matrix gram = (x.transpose() * x) / static_cast<double>(n);
      gram = ((gram + gram.transpose()) * 0.5).eval();
      if (effectively_singular(gram)) throw SingularGram("Gram matrix is singular");
      const Matrix* l = nullptr;
      if (criterion.kind == Criterion::Kind::GeneralL) {
        if (criterion.l.cols() != x.cols()) {
          throw ShapeMismatch("L matrix columns must match covariate dimension");
        }
        l = &criterion.l;
      }
      try {
        SpdSolver gram_solver(gram);
        weights = detail::transformed_row_norms(x, gram_solver, l);
      } catch (const SingularMatrix&) {
        throw SingularGram("Gram matrix is singular");
      }
      break;
    }
  }
  return detail::make_plan(std::move(weights), criterion);
}

// r i.i.d. categorical draws from the plan, with the plan probability of
// each drawn row recorded alongside it.
inline SubsampleDraw sample_with_replacement(const SamplingPlan& plan, Index r, Rng& rng) {
  if (r < 1) throw EmptyInput("subsample size must be at least 1");
  const AliasTable table(plan.probabilities);
  SubsampleDraw draw;
  draw.indices.resize(static_cast<std::size_t>(r));
  draw.probabilities_at_draw.resize(r);
  for (Index k = 0; k < r; ++k) {
    const Index i = table.draw(rng);
    draw.indices[static_cast<std::size_t>(k)] = i;
    draw.probabilities_at_draw[k] = plan.probabilities[i];
  }
  return draw;
}

}  // namespace osmc
