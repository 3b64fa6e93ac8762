#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "../src/tridiagonal.hpp"
#include "opclosure/error.hpp"
#include "opclosure/model_problem.hpp"
#include "opclosure/solver1d.hpp"
#include "test_support.hpp"

using namespace opclosure;
using testing_support::max_abs;

namespace {

const double kPi = std::numbers::pi;

double pulse(double x) { return std::exp(-500.0 * (x - 0.5) * (x - 0.5)); }

ClosureSpec spec(ClosureFamily family, int order) { return {family, order, std::nullopt}; }

// L-infinity error of u1 for the two-component system u' + B u_x = -u with
// B = [[0,-1],[-1,0]], against the closed-form solution.
double model_error(Index cells, double t_end) {
  MomentField1D field(1, Medium1D::uniform(0.0, 1.0, cells, 1.0, 0.0));
  auto f = [](double x) { return std::sin(2 * kPi * x) + 0.5 * std::cos(4 * kPi * x); };
  auto g = [](double x) { return 0.3 * std::cos(2 * kPi * x); };
  field.set_moment(0, f);
  field.set_moment(1, g);
  MatrixXd B(2, 2);
  B << 0.0, -1.0, -1.0, 0.0;
  const SlabOperator op(field, spec(ClosureFamily::PN, 1), B);
  const std::vector<double> times{t_end};
  const Snapshot snap = run(field, op, 0.8 * field.spacing(), times).front();

  const double dx = field.spacing();
  const PeriodicGrid centers{0.5 * dx, 1.0 + 0.5 * dx, cells};
  ModelState initial{centers, VectorXd(cells), VectorXd(cells), 0.0, 1.0};
  for (Index i = 0; i < cells; ++i) {
    initial.u1(i) = f(centers.x(i));
    initial.u2(i) = g(centers.x(i));
  }
  const ModelState exact = exact_solution(initial, t_end);
  return max_abs(snap.moments[0] - exact.u1);
}

// Standalone Crank-Nicolson for u_t = theta u_xx - kappa u on a periodic
// grid, dense LU, with the decay applied exactly.
VectorXd heat_oracle(VectorXd u, double theta, double kappa, double dx, double dt, int steps) {
  const Index n = u.size();
  MatrixXd L = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    L(i, i) = -2.0 * theta / (dx * dx);
    L(i, (i + 1) % n) += theta / (dx * dx);
    L(i, (i + n - 1) % n) += theta / (dx * dx);
  }
  const MatrixXd I = MatrixXd::Identity(n, n);
  const auto lu = (I - 0.25 * dt * L).partialPivLu();
  const MatrixXd explicit_part = I + 0.25 * dt * L;
  for (int s = 0; s < 2 * steps; ++s) u = lu.solve(explicit_part * u);
  return u * std::exp(-kappa * dt * steps);
}

}  // namespace

TEST_CASE("cyclic tridiagonal solve against dense LU") {
  const int n = 9;
  std::vector<double> a(n), b(n), c(n), d(n);
  MatrixXd M = MatrixXd::Zero(n, n);
  VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    a[i] = -0.3 - 0.01 * i;
    c[i] = 0.2 + 0.02 * i;
    b[i] = 2.0 + 0.1 * i;
    d[i] = std::sin(i + 1.0);
    M(i, i) = b[i];
    M(i, (i + n - 1) % n) += a[i];
    M(i, (i + 1) % n) += c[i];
    rhs(i) = d[i];
  }
  const std::vector<double> x = detail::solve_cyclic_tridiagonal(a, b, c, d);
  const VectorXd expected = M.partialPivLu().solve(rhs);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(expected(i)).epsilon(1e-13));
}

TEST_CASE("pulse scenario initialisation") {
  auto s = init_pulse_scenario(spec(ClosureFamily::PN, 1));
  CHECK(s.field.cells() == 1000);
  CHECK(s.dt == doctest::Approx(0.8e-3));
  CHECK(s.field.energy() == doctest::Approx(std::sqrt(kPi / 500.0)).epsilon(1e-6));
  CHECK(max_abs(s.field.moment(1)) == 0.0);
  auto big = init_pulse_scenario(spec(ClosureFamily::PN, 51));
  CHECK(big.field.moment_count() == 52);
}

TEST_CASE("conservation without absorption for every family") {
  for (auto family : {ClosureFamily::PN, ClosureFamily::Diffusion, ClosureFamily::DiffusionCorrection,
                      ClosureFamily::CrescendoDiffusion, ClosureFamily::CrescendoCorrection,
                      ClosureFamily::TrapezoidalCorrection}) {
    for (int order : {0, 1, 2}) {
      if (family == ClosureFamily::PN && order == 0) continue;  // nothing moves
      // Diffusion families need a finite tau, so scatter without absorbing.
      const double sigma = has_diffusion(family) ? 2.0 : 0.0;
      MomentField1D field(order, Medium1D::uniform(0.0, 1.0, 200, 0.0, sigma));
      field.set_moment(0, pulse);
      const SlabOperator op(field, spec(family, order));
      const double e0 = field.energy();
      double worst = 0.0;
      for (int i = 0; i < 100; ++i) {
        const double before = field.energy();
        step(field, op, 0.8 * field.spacing());
        worst = std::max(worst, std::abs(field.energy() - before) / e0);
      }
      CHECK(worst <= 1e-12);
    }
  }
  // General linear closure with a correlated measure, u_0 self-coupling included.
  MatrixXd A = MatrixXd::Identity(3, 3);
  A(0, 1) = A(1, 0) = 0.3;
  A(0, 2) = A(2, 0) = 0.2;
  MomentField1D field(0, Medium1D::uniform(0.0, 1.0, 200, 0.0, 0.0));
  field.set_moment(0, pulse);
  const SlabOperator op(field, {ClosureFamily::GeneralLinear, 0, GaussianMeasure::centered(A, 1)});
  const double e0 = field.energy();
  for (int i = 0; i < 100; ++i) step(field, op, 0.8 * field.spacing() / op.max_speed());
  CHECK(std::abs(field.energy() - e0) / e0 <= 1e-12 * 100);
}

TEST_CASE("absorption makes the energy decrease") {
  auto s = init_pulse_scenario(spec(ClosureFamily::DiffusionCorrection, 1), 200);
  double previous = s.field.energy();
  for (int i = 0; i < 50; ++i) {
    step(s.field, s.op, s.dt);
    CHECK(s.field.energy() < previous);
    previous = s.field.energy();
  }
}

TEST_CASE("symmetric data stays symmetric") {
  for (auto family : {ClosureFamily::PN, ClosureFamily::Diffusion, ClosureFamily::CrescendoCorrection}) {
    for (int order : {1, 2, 3}) {
      if (family == ClosureFamily::Diffusion && order != 1) continue;
      auto s = init_pulse_scenario(spec(family, order), 400);
      for (int i = 0; i < 200; ++i) step(s.field, s.op, s.dt);
      const VectorXd& u = s.field.moment(0);
      CHECK(max_abs(u - VectorXd(u.reverse())) <= 1e-12 * max_abs(u));
    }
  }
}

TEST_CASE("second-order convergence on the two-component system") {
  const double e4 = model_error(250, 0.5);
  const double e2 = model_error(500, 0.5);
  const double e1 = model_error(1000, 0.5);
  const double p1 = std::log2(e4 / e2), p2 = std::log2(e2 / e1);
  INFO("errors " << e4 << " " << e2 << " " << e1);
  CHECK(p1 >= 1.9);
  CHECK(p2 >= 1.9);
}

TEST_CASE("diffusion with zero advection matches a standalone Crank-Nicolson oracle") {
  const Index n = 100;
  const double kappa = 0.4, sigma = 2.6;
  MomentField1D field(0, Medium1D::uniform(0.0, 1.0, n, kappa, sigma));
  field.set_moment(0, [](double x) { return std::exp(-50.0 * (x - 0.5) * (x - 0.5)); });
  const VectorXd initial = field.moment(0);
  const SlabOperator op(field, spec(ClosureFamily::Diffusion, 0), MatrixXd::Zero(1, 1));
  const double dt = 0.8 * field.spacing();
  for (int i = 0; i < 60; ++i) step(field, op, dt);
  const VectorXd oracle = heat_oracle(initial, 1.0 / (3.0 * (kappa + sigma)), kappa, field.spacing(), dt, 60);
  CHECK(max_abs(field.moment(0) - oracle) <= 1e-12 * max_abs(oracle));
}

TEST_CASE("crescendo diffuses less than constant diffusion early on") {
  const Medium1D medium = Medium1D::uniform(0.0, 1.0, 10, 1.5, 1.5);
  const auto cres = closure_coefficients(spec(ClosureFamily::CrescendoDiffusion, 0), medium);
  const auto diff = closure_coefficients(spec(ClosureFamily::Diffusion, 0), medium);
  for (double t : {0.01, 0.1, 0.3}) CHECK(cres.theta(t, 0.5) < diff.theta(t, 0.5));
  CHECK(cres.theta(0.5, 0.5) == doctest::Approx(diff.theta(0.5, 0.5)));
}

TEST_CASE("run bookkeeping") {
  auto s = init_pulse_scenario(spec(ClosureFamily::PN, 1), 100);
  CHECK(run(s.field, s.op, s.dt, std::span<const double>{}).empty());

  const std::vector<double> times{0.0, 0.0123, 0.1};
  auto a = init_pulse_scenario(spec(ClosureFamily::CrescendoDiffusion, 0), 100);
  auto b = init_pulse_scenario(spec(ClosureFamily::CrescendoDiffusion, 0), 100);
  const auto sa = run(a.field, a.op, a.dt, times);
  const auto sb = run(b.field, b.op, b.dt, times);
  REQUIRE(sa.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sa[i].time == times[i]);
    CHECK(max_abs(sa[i].moments[0] - sb[i].moments[0]) == 0.0);
  }
  CHECK(a.field.time() == 0.1);
  for (Index i = 1; i < sa[0].x.size(); ++i) CHECK(sa[0].x(i) > sa[0].x(i - 1));

  const std::vector<double> unsorted{0.2, 0.1};
  CHECK_THROWS_AS(run(a.field, a.op, a.dt, unsorted), Error);
  CHECK_THROWS_AS(step(s.field, s.op, 2.0 * s.field.spacing()), Error);

  std::ostringstream csv;
  write_snapshot_csv(csv, sa[1]);
  std::istringstream lines(csv.str());
  std::string first, header, row;
  std::getline(lines, first);
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(first == "# t=0.0123");
  CHECK(header == "x,u0");
  CHECK(std::count(row.begin(), row.end(), ',') == 1);
}

TEST_CASE("layout and matrix validation") {
  MomentField1D field(1, Medium1D::uniform(0.0, 1.0, 20, 1.0, 1.0));
  MatrixXd bad = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(SlabOperator(field, spec(ClosureFamily::PN, 1), bad), Error);
  CHECK_THROWS_AS(SlabOperator(field, spec(ClosureFamily::PN, 2)), Error);
  MomentField1D other(1, Medium1D::uniform(0.0, 1.0, 30, 1.0, 1.0));
  const SlabOperator op(other, spec(ClosureFamily::PN, 1));
  CHECK_THROWS_AS(step(field, op, 1e-3), Error);
}
