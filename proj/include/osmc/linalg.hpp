#pragma once

#include <Eigen/Dense>

#include "osmc/dataset.hpp"
#include "osmc/errors.hpp"

namespace osmc {

// Cholesky solver for symmetric positive-definite systems with a single
// retry: if the factorization fails, jitter*(trace/p) is added to the
// diagonal once before giving up.
class SpdSolver {
 public:
  explicit SpdSolver(const Matrix& a, double jitter = 1e-8) {
    if (a.rows() != a.cols()) throw ShapeMismatch("SpdSolver requires a square matrix");
    llt_.compute(a);
    if (llt_.info() == Eigen::Success && a.diagonal().minCoeff() > 0.0) return;
    const double p = static_cast<double>(a.rows());
    double scale = a.trace() / p;
    if (!(scale > 0.0)) scale = 1.0;
    Matrix jittered = a;
    jittered.diagonal().array() += jitter * scale;
    llt_.compute(jittered);
    if (llt_.info() != Eigen::Success) {
      throw SingularMatrix("matrix not positive-definite after jitter");
    }
    jittered_ = true;
  }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  bool jittered() const { return jittered_; }

 private:
  Eigen::LLT<Matrix> llt_;
  bool jittered_ = false;
};

inline Matrix spd_inverse(const Matrix& a, double jitter = 1e-8) {
  SpdSolver solver(a, jitter);
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  return solver.solve(eye);
}

// Effective singularity test for structurally PSD matrices: smallest
// eigenvalue at or below rel_tol times the largest.
inline bool effectively_singular(const Matrix& a, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(((a + a.transpose()) * 0.5).eval(),
                                           Eigen::EigenvaluesOnly);
  const double max_eig = es.eigenvalues().maxCoeff();
  if (!(max_eig > 0.0)) return true;
  return es.eigenvalues().minCoeff() <= rel_tol * max_eig;
}

inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(((a + a.transpose()) * 0.5).eval(),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double spectral_norm(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(((a + a.transpose()) * 0.5).eval(),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Loewner ordering check: a <= b iff b - a is positive semi-definite, up to
// an eigenvalue tolerance.
inline bool loewner_leq(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch("loewner_leq requires matrices of identical shape");
  }
  return min_eigenvalue(b - a) >= -tol;
}

}  // namespace osmc
