#pragma once

#include <cmath>
#include <utility>

#include "osmc/designs.hpp"
#include "osmc/glm.hpp"
#include "osmc/linalg.hpp"
#include "osmc/sampling.hpp"

namespace osmc {

// Population-level objects of the subsampling asymptotics, with
// h(X) = sqrt(b''(X'beta0)) ||L Phi^{-1} X||:
//   phi    = E[b'' X X']
//   m      = E[h]
//   gamma  = E[b'' h X X']
//   omega  = E[b'' h^2 X X']
//   lambda = E[b'' X X' / h]
struct AsymptoticMatrices {
  Matrix phi;
  Matrix gamma;
  Matrix omega;
  Matrix lambda;
  double m = 0.0;
  Index sample_count = 0;
};

namespace detail {

struct MatrixAccumulator {
  Matrix phi, gamma, omega, lambda;
  long double m = 0.0L;
  Index count = 0;

  explicit MatrixAccumulator(Index p)
      : phi(Matrix::Zero(p, p)),
        gamma(Matrix::Zero(p, p)),
        omega(Matrix::Zero(p, p)),
        lambda(Matrix::Zero(p, p)) {}
};

// Accumulates the Phi pass over a block of rows.
inline void accumulate_phi(GlmFamily family, const Matrix& x, const Vector& beta0, Matrix& phi) {
  const Vector t = x * beta0;
  for (Index i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i).transpose();
    phi += b_double_prime(family, t[i]) * (xi * xi.transpose());
  }
}

// Accumulates the second pass given Phi (through its solver).
inline void accumulate_rest(GlmFamily family, const Matrix& x, const Vector& beta0,
                            const SpdSolver& phi_solver, const Criterion& criterion,
                            MatrixAccumulator& acc) {
  const Vector t = x * beta0;
  Vector norms;
  switch (criterion.kind) {
    case Criterion::Kind::LOpt:
      norms = x.rowwise().norm();
      break;
    case Criterion::Kind::AOpt:
      norms = transformed_row_norms(x, phi_solver, nullptr);
      break;
    case Criterion::Kind::GeneralL:
      norms = transformed_row_norms(x, phi_solver, &criterion.l);
      break;
  }
  for (Index i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i).transpose();
    const double bpp = b_double_prime(family, t[i]);
    const double h = std::sqrt(bpp) * norms[i];
    if (!(h > 0.0)) throw ZeroWeights("zero optimal weight encountered (x = 0 row?)");
    const Matrix outer = bpp * (xi * xi.transpose());
    acc.gamma += h * outer;
    acc.omega += h * h * outer;
    acc.lambda += outer / h;
    acc.m += h;
  }
  acc.count += x.rows();
}

inline AsymptoticMatrices finalize(MatrixAccumulator&& acc, Matrix phi) {
  const double n = static_cast<double>(acc.count);
  AsymptoticMatrices out;
  out.phi = std::move(phi);
  out.gamma = acc.gamma / n;
  out.omega = acc.omega / n;
  out.lambda = acc.lambda / n;
  out.m = static_cast<double>(acc.m / n);
  out.sample_count = acc.count;
  const auto sym = [](Matrix& a) { a = ((a + a.transpose()) * 0.5).eval(); };
  sym(out.phi);
  sym(out.gamma);
  sym(out.omega);
  sym(out.lambda);
  return out;
}

}  // namespace detail

// Exact plug-in over an explicit sample: rows of x are treated as
// equally-likely support points. Two passes, Phi first.
inline AsymptoticMatrices population_matrices_from_sample(GlmFamily family, const Matrix& x,
                                                          const Vector& beta0,
                                                          const Criterion& criterion) {
  if (x.rows() == 0) throw EmptyInput("empty support sample");
  if (beta0.size() != x.cols()) throw ShapeMismatch("beta0 length != sample columns");
  Matrix phi = Matrix::Zero(x.cols(), x.cols());
  detail::accumulate_phi(family, x, beta0, phi);
  phi /= static_cast<double>(x.rows());
  phi = ((phi + phi.transpose()) * 0.5).eval();

  detail::MatrixAccumulator acc(x.cols());
  try {
    SpdSolver phi_solver(phi);
    detail::accumulate_rest(family, x, beta0, phi_solver, criterion, acc);
  } catch (const SingularMatrix&) {
    throw SingularPhi("estimated Phi is singular");
  }
  return detail::finalize(std::move(acc), std::move(phi));
}

// Monte Carlo version: a fresh sample of sample_count draws from the design
// at the true beta0, processed in blocks. Both passes regenerate the same
// stream from the seed.
inline AsymptoticMatrices monte_carlo_matrices(GlmFamily family, const DesignSpec& spec,
                                               const Vector& beta0, const Criterion& criterion,
                                               Index sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw EmptyInput("sample_count must be positive");
  constexpr Index kBlock = 65536;
  const Index p = beta0.size();

  Matrix phi = Matrix::Zero(p, p);
  {
    Rng rng = make_rng(seed);
    for (Index done = 0; done < sample_count; done += kBlock) {
      const Index len = std::min(kBlock, sample_count - done);
      const Matrix x = generate_design(spec, len, rng);
      detail::accumulate_phi(family, x, beta0, phi);
    }
    phi /= static_cast<double>(sample_count);
    phi = ((phi + phi.transpose()) * 0.5).eval();
  }

  detail::MatrixAccumulator acc(p);
  try {
    SpdSolver phi_solver(phi);
    Rng rng = make_rng(seed);
    for (Index done = 0; done < sample_count; done += kBlock) {
      const Index len = std::min(kBlock, sample_count - done);
      const Matrix x = generate_design(spec, len, rng);
      detail::accumulate_rest(family, x, beta0, phi_solver, criterion, acc);
    }
  } catch (const SingularMatrix&) {
    throw SingularPhi("estimated Phi is singular");
  }
  return detail::finalize(std::move(acc), std::move(phi));
}

// Asymptotic variances of sqrt(r) (beta_hat - beta0) at sampling fraction
// rho: the unweighted estimator has m Gamma^{-1} + rho Gamma^{-1} Omega
// Gamma^{-1}; the weighted one m Phi^{-1} Lambda Phi^{-1} + rho Phi^{-1}.
inline std::pair<Matrix, Matrix> theoretical_variances(const AsymptoticMatrices& mats,
                                                       double rho) {
  if (!(rho >= 0.0) || rho >= 1.0) {
    throw Error(ErrorCategory::Data, "rho must lie in [0, 1)");
  }
  Matrix gamma_inv, phi_inv;
  try {
    gamma_inv = spd_inverse(mats.gamma);
    phi_inv = spd_inverse(mats.phi);
  } catch (const SingularMatrix&) {
    throw SingularPhi("Gamma or Phi is singular");
  }
  Matrix sigma_uw = mats.m * gamma_inv + rho * (gamma_inv * mats.omega * gamma_inv);
  Matrix sigma_w = mats.m * (phi_inv * mats.lambda * phi_inv) + rho * phi_inv;
  sigma_uw = ((sigma_uw + sigma_uw.transpose()) * 0.5).eval();
  sigma_w = ((sigma_w + sigma_w.transpose()) * 0.5).eval();
  return {sigma_uw, sigma_w};
}

// Conditional variance identity of the weighted score under an optimal plan:
//   (1/n^2) sum b'' X X' {1/(r pi) - 1/r + 1}
//     == (m_hat/r) Lambda_n + (1 - 1/r) (1/n) Phi_n
// with Lambda_n, Phi_n the full-data empirical analogues. Returns the
// largest entrywise deviation between the two evaluations; it is zero up to
// rounding for every dataset.
inline double weighted_variance_identity_check(GlmFamily family, const Dataset& data,
                                               const SamplingPlan& plan, const Vector& beta0,
                                               Index r) {
  const Index n = data.n();
  const Index p = data.dim();
  if (plan.n() != n) throw ShapeMismatch("plan length does not match dataset");
  if (r < 1) throw EmptyInput("r must be at least 1");
  const double dn = static_cast<double>(n);
  const double dr = static_cast<double>(r);

  const Vector t = data.x * beta0;
  Matrix lhs = Matrix::Zero(p, p);
  Matrix phi_n = Matrix::Zero(p, p);
  Matrix lambda_n = Matrix::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    const double pi = plan.probabilities[i];
    if (!(pi > 1e-300)) throw ZeroProbability("plan contains a (near-)zero probability");
    const auto xi = data.x.row(i).transpose();
    const Matrix outer = b_double_prime(family, t[i]) * (xi * xi.transpose());
    lhs += outer * (1.0 / (dr * pi) - 1.0 / dr + 1.0);
    phi_n += outer;
    lambda_n += outer / plan.weight(i);
  }
  lhs /= dn * dn;
  phi_n /= dn;
  lambda_n /= dn;

  const Matrix rhs = (plan.m_hat / dr) * lambda_n + (1.0 - 1.0 / dr) * phi_n / dn;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace osmc
