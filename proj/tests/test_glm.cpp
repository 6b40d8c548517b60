#include <catch2/catch_amalgamated.hpp>

#include "osmc/glm.hpp"
#include "osmc/rng.hpp"

using namespace osmc;

namespace {

Dataset small_logistic_instance() {
  Matrix x(5, 2);
  x << 1.0, 0.3,
       1.0, -1.2,
       1.0, 0.8,
       1.0, 2.1,
       1.0, -0.4;
  Vector y(5);
  y << 1, 0, 1, 1, 0;
  return Dataset{x, y};
}

}  // namespace

TEST_CASE("score vanishes at the least-squares solution") {
  Matrix x(3, 2);
  x << 1.0, 0.5,
       1.0, -1.0,
       1.0, 2.0;
  Vector y(3);
  y << 0.7, -0.3, 2.5;
  // Normal equations solved directly.
  const Vector beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const Dataset data{x, y};
  CHECK(score(GlmFamily::Linear, data, beta).norm() < 1e-12);
}

TEST_CASE("logistic score on a single row") {
  Matrix x(1, 1);
  x << 1.0;
  Vector y(1);
  y << 1.0;
  const Dataset data{x, y};
  const Vector s = score(GlmFamily::Logistic, data, Vector::Zero(1));
  CHECK(s[0] == Catch::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("score matches finite differences of the negative log-likelihood") {
  const Dataset data = small_logistic_instance();
  Vector beta(2);
  beta << 0.4, -0.7;
  const Vector s = score(GlmFamily::Logistic, data, beta);
  const double h = 1e-6;
  for (Index j = 0; j < 2; ++j) {
    Vector up = beta, down = beta;
    up[j] += h;
    down[j] -= h;
    const double fd = (negative_log_likelihood(GlmFamily::Logistic, data, up) -
                       negative_log_likelihood(GlmFamily::Logistic, data, down)) /
                      (2.0 * h);
    CHECK(s[j] == Catch::Approx(fd).epsilon(1e-6).margin(1e-10));
  }
}

TEST_CASE("fisher information for the linear family is the scaled Gram matrix") {
  Rng rng = make_rng(7);
  std::normal_distribution<double> normal;
  Matrix x(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
  const Dataset data{x, std::nullopt};
  const Matrix h = fisher_info(GlmFamily::Linear, data, Vector::Zero(3));
  const Matrix expected = (x.transpose() * x) / 6.0;
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fisher information single logistic row at zero") {
  Matrix x(1, 1);
  x << 1.0;
  const Dataset data{x, std::nullopt};
  const Matrix h = fisher_info(GlmFamily::Logistic, data, Vector::Zero(1));
  CHECK(h(0, 0) == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("fisher information matches a naive summation oracle") {
  Rng rng = make_rng(11);
  std::normal_distribution<double> normal;
  Matrix x(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
  Vector beta(3);
  beta << 0.2, -0.5, 1.1;
  const Dataset data{x, std::nullopt};
  const Matrix h = fisher_info(GlmFamily::Logistic, data, beta);

  // Oracle: explicit row-by-row accumulation with its own sigmoid variance.
  Matrix expected = Matrix::Zero(3, 3);
  for (Index i = 0; i < 6; ++i) {
    const double t = x.row(i).dot(beta);
    const double p = 1.0 / (1.0 + std::exp(-t));
    expected += p * (1.0 - p) * (x.row(i).transpose() * x.row(i));
  }
  expected /= 6.0;
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-12);

  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("estimation weights scale score and information") {
  const Dataset data = small_logistic_instance();
  Vector beta(2);
  beta << 0.1, 0.2;
  Vector w(5);
  w << 2, 0, 1, 3, 0.5;
  const Vector s = score(GlmFamily::Logistic, data, beta, w);
  Vector expected = Vector::Zero(2);
  for (Index i = 0; i < 5; ++i) {
    const double t = data.x.row(i).dot(beta);
    expected += w[i] * (1.0 / (1.0 + std::exp(-t)) - (*data.y)[i]) * data.x.row(i).transpose();
  }
  expected /= 5.0;
  CHECK((s - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(score(GlmFamily::Logistic, data, beta, Vector::Ones(3)), ShapeMismatch);
}

TEST_CASE("missing responses are rejected") {
  Dataset data = small_logistic_instance();
  (*data.y)[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(score(GlmFamily::Logistic, data, Vector::Zero(2)), MissingResponses);
  Dataset no_y{data.x, std::nullopt};
  CHECK_THROWS_AS(negative_log_likelihood(GlmFamily::Logistic, no_y, Vector::Zero(2)),
                  MissingResponses);
  // Information needs no responses at all.
  CHECK_NOTHROW(fisher_info(GlmFamily::Logistic, no_y, Vector::Zero(2)));
}

TEST_CASE("intercept handling in make_dataset") {
  Matrix f(3, 2);
  f << 1, 2, 3, 4, 5, 6;
  const Dataset with = make_dataset(f, std::nullopt, Intercept::Prepend);
  CHECK(with.dim() == 3);
  CHECK(with.x.col(0).isOnes());
  for (Index i = 0; i < 3; ++i) CHECK(with.x.row(i).norm() >= 1.0);
  const Dataset without = make_dataset(f, std::nullopt, Intercept::None);
  CHECK(without.dim() == 2);
}
