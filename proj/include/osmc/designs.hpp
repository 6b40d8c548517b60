#pragma once

#include <cmath>
#include <string>

#include "osmc/dataset.hpp"
#include "osmc/family.hpp"
#include "osmc/linalg.hpp"
#include "osmc/rng.hpp"

namespace osmc {

// Synthetic covariate designs. The four normal variants drive logistic
// experiments, the two uniform cases drive Poisson experiments, and
// GA/T3/T1/EXP drive linear experiments. T1 and T3 are heavy-tailed; T1 in
// particular has no finite covariate moments.
enum class DesignKind {
  MzNormal,
  NzNormal,
  UnNormal,
  MixNormal,
  PoissonCase1,
  PoissonCase2,
  GA,
  T3,
  T1,
  EXP,
};

struct DesignSpec {
  DesignKind kind = DesignKind::MzNormal;
  Index dim = 20;
};

inline const char* design_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::MzNormal: return "mzNormal";
    case DesignKind::NzNormal: return "nzNormal";
    case DesignKind::UnNormal: return "unNormal";
    case DesignKind::MixNormal: return "mixNormal";
    case DesignKind::PoissonCase1: return "poisson-case1";
    case DesignKind::PoissonCase2: return "poisson-case2";
    case DesignKind::GA: return "GA";
    case DesignKind::T3: return "T3";
    case DesignKind::T1: return "T1";
    case DesignKind::EXP: return "EXP";
  }
  return "?";
}

inline DesignKind parse_design(const std::string& name) {
  if (name == "mznormal") return DesignKind::MzNormal;
  if (name == "nznormal") return DesignKind::NzNormal;
  if (name == "unnormal") return DesignKind::UnNormal;
  if (name == "mixnormal") return DesignKind::MixNormal;
  if (name == "poisson-case1") return DesignKind::PoissonCase1;
  if (name == "poisson-case2") return DesignKind::PoissonCase2;
  if (name == "ga") return DesignKind::GA;
  if (name == "t3") return DesignKind::T3;
  if (name == "t1") return DesignKind::T1;
  if (name == "exp") return DesignKind::EXP;
  throw ParseError("unknown design '" + name + "'");
}

inline Index default_dim(DesignKind kind) {
  switch (kind) {
    case DesignKind::PoissonCase1:
    case DesignKind::PoissonCase2:
      return 100;
    case DesignKind::GA:
    case DesignKind::T3:
    case DesignKind::T1:
    case DesignKind::EXP:
      return 30;
    default:
      return 20;
  }
}

inline GlmFamily default_family(DesignKind kind) {
  switch (kind) {
    case DesignKind::PoissonCase1:
    case DesignKind::PoissonCase2:
      return GlmFamily::Poisson;
    case DesignKind::GA:
    case DesignKind::T3:
    case DesignKind::T1:
    case DesignKind::EXP:
      return GlmFamily::Linear;
    default:
      return GlmFamily::Logistic;
  }
}

inline bool is_heavy_tailed(DesignKind kind) {
  return kind == DesignKind::T1 || kind == DesignKind::T3;
}

// T1 estimates are summarized with a 5% two-sided trimmed mean.
inline double default_trim_alpha(DesignKind kind) {
  return kind == DesignKind::T1 ? 0.05 : 0.0;
}

// Coefficient vector used by the linear designs: five 0.1s, twenty 10s, five
// 0.1s.
inline Vector linear30_beta0() {
  Vector beta(30);
  beta.segment(0, 5).setConstant(0.1);
  beta.segment(5, 20).setConstant(10.0);
  beta.segment(25, 5).setConstant(0.1);
  return beta;
}

namespace detail {

// Equicorrelated covariance: 1 on the diagonal, 0.5 off it.
inline Matrix equicorrelation(Index d) {
  Matrix sigma = Matrix::Constant(d, d, 0.5);
  sigma.diagonal().setOnes();
  return sigma;
}

inline Matrix scaled_equicorrelation(Index d, double numerator) {
  // U Sigma U with U = diag(numerator/1, numerator/2, ...).
  Matrix sigma = equicorrelation(d);
  Vector u(d);
  for (Index j = 0; j < d; ++j) u[j] = numerator / static_cast<double>(j + 1);
  return u.asDiagonal() * sigma * u.asDiagonal();
}

inline Matrix cholesky_lower(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("design covariance is not positive-definite");
  }
  return llt.matrixL();
}

// Rows are mean + L z, with z drawn row-major so the stream layout is
// independent of the linear algebra.
inline Matrix gaussian_rows(Index n, const Vector& mean, const Matrix& chol_lower, Rng& rng) {
  const Index d = mean.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z[j] = normal(rng);
    x.row(i) = (mean + chol_lower * z).transpose();
  }
  return x;
}

inline Matrix student_t_rows(Index n, Index d, double dof, const Matrix& chol_lower, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chisq(dof);
  Matrix x(n, d);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z[j] = normal(rng);
    const double w = chisq(rng);
    x.row(i) = (chol_lower * z).transpose() / std::sqrt(w / dof);
  }
  return x;
}

}  // namespace detail

// Raw covariates (no intercept column) for the requested design.
inline Matrix generate_design(const DesignSpec& spec, Index n, Rng& rng) {
  const Index d = spec.dim;
  switch (spec.kind) {
    case DesignKind::MzNormal: {
      const Matrix l = detail::cholesky_lower(detail::equicorrelation(d));
      return detail::gaussian_rows(n, Vector::Zero(d), l, rng);
    }
    case DesignKind::NzNormal: {
      const Matrix l = detail::cholesky_lower(detail::equicorrelation(d));
      return detail::gaussian_rows(n, Vector::Constant(d, 0.5), l, rng);
    }
    case DesignKind::UnNormal: {
      const Matrix l = detail::cholesky_lower(detail::scaled_equicorrelation(d, 1.0));
      return detail::gaussian_rows(n, Vector::Zero(d), l, rng);
    }
    case DesignKind::MixNormal: {
      const Matrix l = detail::cholesky_lower(detail::equicorrelation(d));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::bernoulli_distribution coin(0.5);
      Matrix x(n, d);
      Vector z(d);
      for (Index i = 0; i < n; ++i) {
        const double mu = coin(rng) ? 0.5 : -0.5;
        for (Index j = 0; j < d; ++j) z[j] = normal(rng);
        x.row(i) = (Vector::Constant(d, mu) + l * z).transpose();
      }
      return x;
    }
    case DesignKind::PoissonCase1: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      Matrix x(n, d);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) x(i, j) = u(rng);
      return x;
    }
    case DesignKind::PoissonCase2: {
      std::uniform_real_distribution<double> narrow(-0.5, 0.5);
      std::uniform_real_distribution<double> wide(-1.0, 1.0);
      const Index half = d / 2;
      Matrix x(n, d);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) x(i, j) = j < half ? narrow(rng) : wide(rng);
      return x;
    }
    case DesignKind::GA: {
      const Matrix l = detail::cholesky_lower(detail::scaled_equicorrelation(d, 5.0));
      return detail::gaussian_rows(n, Vector::Ones(d), l, rng);
    }
    case DesignKind::T3: {
      const Matrix l = detail::cholesky_lower(detail::scaled_equicorrelation(d, 5.0));
      return detail::student_t_rows(n, d, 3.0, l, rng);
    }
    case DesignKind::T1: {
      const Matrix l = detail::cholesky_lower(detail::scaled_equicorrelation(d, 5.0));
      return detail::student_t_rows(n, d, 1.0, l, rng);
    }
    case DesignKind::EXP: {
      std::exponential_distribution<double> eexp(2.0);
      Matrix x(n, d);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) x(i, j) = eexp(rng);
      return x;
    }
  }
  throw Error(ErrorCategory::Data, "unreachable design kind");
}

// Responses from the family's conditional law given x and beta0. noise_sd is
// only used by the linear family.
inline Vector generate_response(GlmFamily family, const Matrix& x, const Vector& beta0, Rng& rng,
                                double noise_sd = 3.0) {
  if (beta0.size() != x.cols()) throw ShapeMismatch("beta0 length != design columns");
  const Vector t = x * beta0;
  const Index n = x.rows();
  Vector y(n);
  switch (family) {
    case GlmFamily::Linear: {
      std::normal_distribution<double> noise(0.0, noise_sd);
      for (Index i = 0; i < n; ++i) y[i] = t[i] + noise(rng);
      return y;
    }
    case GlmFamily::Logistic: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Index i = 0; i < n; ++i) y[i] = u(rng) < b_prime(GlmFamily::Logistic, t[i]) ? 1.0 : 0.0;
      return y;
    }
    case GlmFamily::Poisson: {
      std::poisson_distribution<long long> pois;
      for (Index i = 0; i < n; ++i) {
        check_linear_predictor(GlmFamily::Poisson, t[i]);
        y[i] = static_cast<double>(
            pois(rng, std::poisson_distribution<long long>::param_type(std::exp(t[i]))));
      }
      return y;
    }
  }
  throw Error(ErrorCategory::Data, "unreachable family");
}

}  // namespace osmc
