#include "doctest.h"

#include <cmath>
#include <random>

#include "opclosure/error.hpp"
#include "opclosure/gaussian_measure.hpp"
#include "test_support.hpp"

using namespace opclosure;
using testing_support::max_abs;

namespace {

// Minimizer over x_F of the quadratic form (x - m)^T A^{-1} (x - m) at fixed
// x_C, for a single unresolved coordinate: fit the exact parabola through
// three samples and take its vertex.
double brute_force_conditional(const MatrixXd& A, const VectorXd& m, double xc) {
  const MatrixXd P = A.inverse();
  auto q = [&](double xf) {
    Eigen::Vector2d d(xc - m(0), xf - m(1));
    return d.dot(P * d);
  };
  const double q0 = q(-1.0), q1 = q(0.0), q2 = q(1.0);
  return 0.5 * (q0 - q2) / (q0 - 2.0 * q1 + q2);
}

}  // namespace

TEST_CASE("identity covariance leaves unresolved entries at zero") {
  for (Index n = 2; n <= 5; ++n) {
    for (Index k = 1; k < n; ++k) {
      const auto g = GaussianMeasure::centered(MatrixXd::Identity(n, n), k);
      const VectorXd xc = VectorXd::LinSpaced(k, 1.0, 2.0);
      const VectorXd x = condition(g, xc);
      CHECK(x.head(k) == xc);
      CHECK(max_abs(x.tail(n - k)) == 0.0);
    }
  }
}

TEST_CASE("correlated pair is centered around beta times u1") {
  MatrixXd A(2, 2);
  A << 1.0, 0.5, 0.5, 1.0;
  const auto g = GaussianMeasure::centered(A, 1);
  const VectorXd x = condition(g, VectorXd::Constant(1, 1.0));
  CHECK(x(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("affine conditioning agrees with the quadratic-form minimizer") {
  MatrixXd A(2, 2);
  A << 2.0, 1.0, 1.0, 2.0;
  const VectorXd m = VectorXd::Ones(2);
  const GaussianMeasure g(A, m, 1);
  const double oracle = brute_force_conditional(A, m, 3.0);
  CHECK(oracle == doctest::Approx(2.0).epsilon(1e-12));
  const VectorXd x = condition(g, VectorXd::Constant(1, 3.0));
  CHECK(x(0) == 3.0);
  CHECK(x(1) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("projection pair of a diagonal covariance") {
  const auto g = GaussianMeasure::centered(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal(), 2);
  const auto p = projection_pair(g);
  MatrixXd expected = MatrixXd::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0;
  CHECK(max_abs(p.E - expected) == 0.0);
  CHECK(max_abs(p.E + p.F - MatrixXd::Identity(3, 3)) == 0.0);
}

TEST_CASE("projection pair of the model-problem measure") {
  const double beta = 0.3, gamma = 2.0;
  MatrixXd A(2, 2);
  A << 1.0, beta, beta, gamma;
  const auto p = projection_pair(GaussianMeasure::centered(A, 1));
  MatrixXd E(2, 2);
  E << 1.0, 0.0, beta, 0.0;
  CHECK(max_abs(p.E - E) < 1e-15);
}

TEST_CASE("projection identities on random SPD measures") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd A = testing_support::random_spd(rng, 4);
    const auto p = projection_pair(GaussianMeasure::centered(A, 2));
    const double scale = std::max(1.0, max_abs(p.E));
    CHECK(max_abs(p.E * p.E - p.E) <= 1e-12 * scale);
    CHECK(max_abs(p.F * p.F - p.F) <= 1e-12 * scale);
    CHECK(max_abs(p.E * p.F) <= 1e-12 * scale);
    CHECK(max_abs(p.F * p.E) <= 1e-12 * scale);
    // A generic solve reproduces the regression block.
    const MatrixXd G = A.bottomLeftCorner(2, 2) * A.topLeftCorner(2, 2).fullPivLu().inverse();
    CHECK(max_abs(p.E.bottomLeftCorner(2, 2) - G) <= 1e-12 * scale);
  }
}

TEST_CASE("project_matrix") {
  SUBCASE("identity against a correlated measure") {
    MatrixXd A(2, 2);
    A << 2.0, 1.0, 1.0, 2.0;
    const MatrixXd P = project_matrix(MatrixXd(MatrixXd::Identity(2, 2)), GaussianMeasure::centered(A, 1));
    MatrixXd expected(2, 2);
    expected << 1.0, 0.0, 0.5, 0.0;
    CHECK(max_abs(P - expected) < 1e-15);
  }
  SUBCASE("diagonal measure keeps the left block column") {
    std::mt19937_64 rng(3);
    const MatrixXd B = testing_support::random_matrix(rng, 4, 4);
    const MatrixXd P = project_matrix(B, GaussianMeasure::centered(Eigen::Vector4d(1, 2, 3, 4).asDiagonal(), 2));
    CHECK(max_abs(P.leftCols(2) - B.leftCols(2)) == 0.0);
    CHECK(max_abs(P.rightCols(2)) == 0.0);
  }
  SUBCASE("complex model-problem symbol") {
    const double beta = 0.5, xi = 3.0;
    MatrixXd A(2, 2);
    A << 1.0, beta, beta, 1.0;
    MatrixXcd R(2, 2);
    R << -1.0, std::complex<double>(0, xi), std::complex<double>(0, xi), -1.0;
    const MatrixXcd P = project_matrix(R, GaussianMeasure::centered(A, 1));
    CHECK(std::abs(P(0, 0) - std::complex<double>(-1.0, beta * xi)) < 1e-15);
    CHECK(std::abs(P(0, 1)) == 0.0);
    CHECK(std::abs(P(1, 1)) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(project_matrix(MatrixXd(MatrixXd::Identity(3, 3)), GaussianMeasure::centered(MatrixXd::Identity(2, 2), 1)),
                    Error);
  }
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(GaussianMeasure::centered(MatrixXd::Identity(3, 3), 0), Error);
  CHECK_THROWS_AS(GaussianMeasure::centered(MatrixXd::Identity(3, 3), 3), Error);
  MatrixXd asym = MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_WITH_AS(GaussianMeasure::centered(asym, 1), doctest::Contains("A_CF"), Error);
  MatrixXd singular_cc = MatrixXd::Identity(3, 3);
  singular_cc(0, 0) = 0.0;
  CHECK_THROWS_WITH_AS(GaussianMeasure::centered(singular_cc, 1), doctest::Contains("A_CC"), Error);
  MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianMeasure::centered(indefinite, 1), Error);
}

TEST_CASE("conditioning is idempotent and linear") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd A = testing_support::random_spd(rng, 5);
    const VectorXd m = testing_support::random_matrix(rng, 5, 1);
    const GaussianMeasure g(A, m, 2);
    const VectorXd xc = testing_support::random_matrix(rng, 2, 1);
    const VectorXd once = condition(g, xc);
    const VectorXd twice = condition(g, once.head(2));
    CHECK(max_abs(once - twice) <= 1e-12 * std::max(1.0, max_abs(once)));

    const auto c = GaussianMeasure::centered(A, 2);
    const VectorXd yc = testing_support::random_matrix(rng, 2, 1);
    const double a = 0.7, b = -1.3;
    const VectorXd lhs = condition(c, a * xc + b * yc);
    const VectorXd rhs = a * condition(c, xc) + b * condition(c, yc);
    CHECK(max_abs(lhs - rhs) <= 1e-12 * std::max(1.0, max_abs(lhs)));
  }
}

TEST_CASE("Monte-Carlo conditional mean") {
  std::mt19937_64 rng(2024);
  MatrixXd A(3, 3);
  A << 1.0, 0.6, 0.3, 0.6, 1.5, 0.2, 0.3, 0.2, 0.8;
  const VectorXd m = Eigen::Vector3d(0.5, -1.0, 2.0);
  const GaussianMeasure g(A, m, 1);
  const MatrixXd L = A.llt().matrixL();
  std::normal_distribution<double> normal;

  const double target = 1.0, halfwidth = 0.02;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sumsq = Eigen::Vector2d::Zero();
  double xc_sum = 0.0;
  int hits = 0;
  for (int i = 0; i < 2'000'000; ++i) {
    const Eigen::Vector3d z(normal(rng), normal(rng), normal(rng));
    const Eigen::Vector3d x = m + L * z;
    if (std::abs(x(0) - target) > halfwidth) continue;
    ++hits;
    xc_sum += x(0);
    sum += x.tail(2);
    sumsq += x.tail(2).cwiseAbs2();
  }
  REQUIRE(hits > 1000);
  // Condition on the mean x_C inside the bin so the bin width does not bias.
  const VectorXd expected = condition(g, VectorXd::Constant(1, xc_sum / hits));
  for (int j = 0; j < 2; ++j) {
    const double mean = sum(j) / hits;
    const double var = sumsq(j) / hits - mean * mean;
    const double se = std::sqrt(var / hits);
    CHECK(std::abs(mean - expected(1 + j)) < 3.0 * se);
  }
}
