#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "osmc/asymptotics.hpp"
#include "osmc/designs.hpp"
#include "osmc/sampling.hpp"

using namespace osmc;

TEST_CASE("simple random pilot basic contracts") {
  Rng rng = make_rng(3);
  const auto all = simple_random_pilot(5, 5, rng);
  std::vector<Index> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<Index>{0, 1, 2, 3, 4});

  const auto three = simple_random_pilot(10, 3, rng);
  CHECK(three.size() == 3);
  CHECK(std::set<Index>(three.begin(), three.end()).size() == 3);
  for (const Index i : three) CHECK((i >= 0 && i < 10));

  CHECK_THROWS_AS(simple_random_pilot(4, 5, rng), PilotTooLarge);
}

TEST_CASE("simple random pilot is uniform (binomial check)") {
  Rng rng = make_rng(99);
  const int draws = 100000;
  int count0 = 0;
  for (int k = 0; k < draws; ++k) {
    if (simple_random_pilot(2, 1, rng)[0] == 0) ++count0;
  }
  const double sigma = std::sqrt(draws * 0.25);
  CHECK(std::abs(count0 - draws / 2.0) <= 3.0 * sigma);
}

TEST_CASE("case-control pilot probabilities") {
  SECTION("balanced marginal gives the uniform distribution") {
    Vector y(4);
    y << 1, 0, 1, 0;
    const Vector p = case_control_pilot_probabilities(y, 0.5);
    for (Index i = 0; i < 4; ++i) CHECK(p[i] == Catch::Approx(0.25).epsilon(1e-14));
  }
  SECTION("hand-computed example") {
    Vector y(4);
    y << 1, 0, 0, 0;
    const Vector p = case_control_pilot_probabilities(y, 0.25);
    CHECK(p[0] == Catch::Approx(0.5).epsilon(1e-12));
    for (Index i = 1; i < 4; ++i) CHECK(p[i] == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(p.sum() == Catch::Approx(1.0).margin(1e-14));
    CHECK(p.minCoeff() > 0.0);
  }
  SECTION("degenerate marginal and bad responses") {
    Vector y(2);
    y << 1, 0;
    CHECK_THROWS_AS(case_control_pilot_probabilities(y, 0.0), DegenerateMarginal);
    CHECK_THROWS_AS(case_control_pilot_probabilities(y, 1.0), DegenerateMarginal);
    Vector bad(2);
    bad << 0.5, 1.0;
    CHECK_THROWS_AS(case_control_pilot_probabilities(bad, 0.3), InvalidResponse);
  }
}

TEST_CASE("pilot estimate for the linear family uses the exact Gram kernel") {
  Rng rng = make_rng(12);
  std::normal_distribution<double> normal;
  Matrix x(30, 2);
  for (Index i = 0; i < 30; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = normal(rng);
  }
  const Vector y = generate_response(GlmFamily::Linear, x, (Vector(2) << 1.0, 2.0).finished(),
                                     rng, 1.0);
  const Dataset data{x, y};
  std::vector<Index> idx{0, 2, 4, 6, 8, 10};
  const PilotEstimate pilot = pilot_estimate(GlmFamily::Linear, data, idx);
  Matrix expected = Matrix::Zero(2, 2);
  for (const Index i : idx) expected += x.row(i).transpose() * x.row(i);
  expected /= static_cast<double>(idx.size());
  CHECK((pilot.phi_p - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pilot.r_p == 6);
}

TEST_CASE("single-class pilot raises SeparationSuspected") {
  Matrix x(20, 2);
  x.col(0).setOnes();
  x.col(1).setZero();
  Vector y = Vector::Ones(20);
  const Dataset data{x, y};
  std::vector<Index> idx(10);
  for (Index i = 0; i < 10; ++i) idx[static_cast<std::size_t>(i)] = i;
  CHECK_THROWS_AS(pilot_estimate(GlmFamily::Logistic, data, idx), SeparationSuspected);
}

TEST_CASE("pilot rows must be measured") {
  Matrix x(4, 1);
  x << 1, 1, 1, 1;
  Vector y(4);
  y << 1, 0, std::numeric_limits<double>::quiet_NaN(), 1;
  const Dataset data{x, y};
  CHECK_THROWS_AS(pilot_estimate(GlmFamily::Logistic, data, std::vector<Index>{0, 1, 2}),
                  MissingResponses);
}

TEST_CASE("optimal probabilities: identical rows get identical mass") {
  Matrix x(2, 2);
  x << 1.0, 2.0,
       1.0, 2.0;
  PilotEstimate pilot;
  pilot.beta_p = Vector::Zero(2);
  pilot.phi_p = Matrix::Identity(2, 2);
  pilot.r_p = 2;
  const Dataset data{x, std::nullopt};  // covariate-only: no responses read
  const SamplingPlan plan = os_probabilities(GlmFamily::Linear, data, pilot, Criterion::a_opt());
  CHECK(plan.probabilities[0] == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(plan.probabilities[1] == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("optimal probabilities: scalar design evaluates by hand") {
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  PilotEstimate pilot;
  pilot.beta_p = Vector::Zero(1);
  pilot.phi_p = Matrix::Constant(1, 1, 4.2);  // any positive scalar cancels
  pilot.r_p = 3;
  const Dataset data{x, std::nullopt};
  const SamplingPlan plan = os_probabilities(GlmFamily::Linear, data, pilot, Criterion::a_opt());
  CHECK(plan.probabilities[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(plan.probabilities[1] == Catch::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(plan.probabilities[2] == Catch::Approx(3.0 / 6.0).epsilon(1e-12));
}

namespace {

std::pair<Dataset, PilotEstimate> random_logistic_instance(std::uint64_t seed, Index n = 60,
                                                           Index p = 3) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Index j = 1; j < p; ++j) x(i, j) = normal(rng);
  }
  Vector beta0 = Vector::Constant(p, 0.4);
  const Vector y = generate_response(GlmFamily::Logistic, x, beta0, rng);
  Dataset data{x, y};
  std::vector<Index> idx;
  for (Index i = 0; i < n; i += 2) idx.push_back(i);
  PilotEstimate pilot = pilot_estimate(GlmFamily::Logistic, data, idx);
  return {std::move(data), std::move(pilot)};
}

}  // namespace

TEST_CASE("general-L reductions and scale invariance") {
  auto [data, pilot] = random_logistic_instance(21);
  const Index p = data.dim();
  const SamplingPlan a = os_probabilities(GlmFamily::Logistic, data, pilot, Criterion::a_opt());
  const SamplingPlan l = os_probabilities(GlmFamily::Logistic, data, pilot, Criterion::l_opt());
  const SamplingPlan ga = os_probabilities(GlmFamily::Logistic, data, pilot,
                                           Criterion::general_l(Matrix::Identity(p, p)));
  const SamplingPlan gl =
      os_probabilities(GlmFamily::Logistic, data, pilot, Criterion::general_l(pilot.phi_p));
  CHECK((a.probabilities - ga.probabilities).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((l.probabilities - gl.probabilities).cwiseAbs().maxCoeff() < 1e-10);

  const SamplingPlan scaled = os_probabilities(
      GlmFamily::Logistic, data, pilot, Criterion::general_l((3.7 * pilot.phi_p).eval()));
  CHECK((scaled.probabilities - gl.probabilities).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(scaled.m_hat == Catch::Approx(3.7 * gl.m_hat).epsilon(1e-12));

  CHECK(a.probabilities.sum() == Catch::Approx(1.0).margin(1e-12));
  CHECK(l.probabilities.sum() == Catch::Approx(1.0).margin(1e-12));
  CHECK(a.probabilities.minCoeff() > 0.0);
}

TEST_CASE("plan bookkeeping: n * m_hat * pi recovers the raw weights") {
  auto [data, pilot] = random_logistic_instance(22);
  const SamplingPlan plan = os_probabilities(GlmFamily::Logistic, data, pilot, Criterion::a_opt());
  const SpdSolver phi_solver(pilot.phi_p);
  const Vector t = data.x * pilot.beta_p;
  for (Index i = 0; i < data.n(); ++i) {
    const Vector u = phi_solver.solve(Vector(data.x.row(i).transpose()));
    const double w = std::sqrt(b_double_prime(GlmFamily::Logistic, t[i])) * u.norm();
    CHECK(plan.weight(i) == Catch::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("row permutation permutes A-OS probabilities") {
  auto [data, pilot] = random_logistic_instance(23, 20, 2);
  const SamplingPlan plan = os_probabilities(GlmFamily::Logistic, data, pilot, Criterion::a_opt());
  Dataset reversed = data;
  for (Index i = 0; i < data.n(); ++i) reversed.x.row(i) = data.x.row(data.n() - 1 - i);
  const SamplingPlan rplan =
      os_probabilities(GlmFamily::Logistic, reversed, pilot, Criterion::a_opt());
  for (Index i = 0; i < data.n(); ++i) {
    CHECK(rplan.probabilities[data.n() - 1 - i] ==
          Catch::Approx(plan.probabilities[i]).epsilon(1e-12));
  }
}

TEST_CASE("linear plan: beta-free A-OS and L-OS") {
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  const SamplingPlan a = linear_plan(x, Criterion::a_opt());
  const SamplingPlan l = linear_plan(x, Criterion::l_opt());
  for (const auto* plan : {&a, &l}) {
    CHECK(plan->probabilities[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(plan->probabilities[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(plan->probabilities[2] == Catch::Approx(1.0 / 2.0).epsilon(1e-12));
  }
  // Identity design: all rows equivalent.
  const SamplingPlan id = linear_plan(Matrix::Identity(4, 4), Criterion::a_opt());
  for (Index i = 0; i < 4; ++i) CHECK(id.probabilities[i] == Catch::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(linear_plan(Matrix::Zero(3, 2), Criterion::a_opt()), SingularGram);
}

TEST_CASE("with-replacement sampling contracts") {
  SECTION("point mass") {
    SamplingPlan plan;
    plan.probabilities = Vector::Ones(1);
    plan.m_hat = 1.0;
    Rng rng = make_rng(1);
    const SubsampleDraw draw = sample_with_replacement(plan, 12, rng);
    for (const Index i : draw.indices) CHECK(i == 0);
    CHECK(draw.r() == 12);
  }
  SECTION("fair coin within four sigma") {
    SamplingPlan plan;
    plan.probabilities = Vector::Constant(2, 0.5);
    plan.m_hat = 1.0;
    Rng rng = make_rng(31);
    const Index r = 100000;
    const SubsampleDraw draw = sample_with_replacement(plan, r, rng);
    Index count0 = 0;
    for (const Index i : draw.indices) count0 += i == 0 ? 1 : 0;
    const double sigma = std::sqrt(r * 0.25);
    CHECK(std::abs(static_cast<double>(count0) - r / 2.0) <= 4.0 * sigma);
    for (Index k = 0; k < draw.r(); ++k) {
      CHECK(draw.probabilities_at_draw[k] ==
            plan.probabilities[draw.indices[static_cast<std::size_t>(k)]]);
    }
  }
}

TEST_CASE("alias table agrees with inversion sampling in distribution") {
  Vector probs(5);
  probs << 0.05, 0.3, 0.02, 0.43, 0.2;
  const AliasTable table(probs);
  Rng rng = make_rng(77);
  const int draws = 200000;
  Eigen::VectorXd alias_freq = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd inv_freq = Eigen::VectorXd::Zero(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < draws; ++k) {
    alias_freq[table.draw(rng)] += 1.0;
    inv_freq[categorical_draw_by_inversion(probs, unit(rng))] += 1.0;
  }
  alias_freq /= draws;
  inv_freq /= draws;
  for (Index i = 0; i < 5; ++i) {
    const double sigma = std::sqrt(probs[i] * (1 - probs[i]) / draws);
    CHECK(std::abs(alias_freq[i] - probs[i]) <= 5.0 * sigma);
    CHECK(std::abs(inv_freq[i] - probs[i]) <= 5.0 * sigma);
  }
}

TEST_CASE("pilot information approaches the Monte Carlo information matrix") {
  const Index d = 5, n = 10000;
  const Vector beta0 = Vector::Ones(d);
  const DesignSpec spec{DesignKind::MzNormal, d};
  const AsymptoticMatrices mats =
      monte_carlo_matrices(GlmFamily::Logistic, spec, beta0, Criterion::a_opt(), 1000000, 2718);
  Rng rng = make_rng(1);
  Dataset data;
  data.x = generate_design(spec, n, rng);
  data.y = generate_response(GlmFamily::Logistic, data.x, beta0, rng);

  const auto rel_error = [&](Index rp) {
    Rng pilot_rng = make_rng(100 + static_cast<std::uint64_t>(rp));
    const PilotEstimate pilot =
        pilot_estimate(GlmFamily::Logistic, data, simple_random_pilot(n, rp, pilot_rng));
    return (pilot.phi_p - mats.phi).norm() / mats.phi.norm();
  };
  const double small = rel_error(200);
  const double mid = rel_error(500);
  const double large = rel_error(5000);
  CHECK(mid < 0.2);
  CHECK(large < mid);
  CHECK(large < small);
  CHECK(large < 0.07);
}
