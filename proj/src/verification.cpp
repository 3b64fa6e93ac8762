#include "opclosure/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "opclosure/gaussian_measure.hpp"
#include "opclosure/model_problem.hpp"
#include "opclosure/spatial_moments.hpp"

namespace opclosure {

namespace {

MatrixXd normal_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Index pick(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

void record(SuiteResult& r, bool pass, double deviation, const std::string& what) {
  ++r.total;
  r.worst = std::max(r.worst, deviation);
  if (pass) {
    ++r.passed;
  } else if (r.detail.empty()) {
    r.detail = what;
  }
}

double full_op_error(const LinearSystem& sys, const GaussianMeasure& g, double dt) {
  const Trajectory traj = solve_full_op(sys, g, 1.0, dt);
  const VectorXcd exact = mean_solution(sys, g, 1.0).head(g.split());
  return (traj.states.back() - exact).cwiseAbs().maxCoeff();
}

}  // namespace

LinearSystem random_linear_system(std::mt19937_64& rng, Index size, double scale) {
  const MatrixXd R = normal_matrix(rng, size, size, scale) - MatrixXd::Identity(size, size);
  return LinearSystem(R, VectorXd(normal_matrix(rng, size, 1, 1.0)));
}

MatrixXd random_spd(std::mt19937_64& rng, Index size) {
  const MatrixXd m = normal_matrix(rng, size, size, 1.0);
  return m.transpose() * m + MatrixXd::Identity(size, size);
}

SuiteResult projection_suite(std::uint64_t seed, int count, Index max_size, double tolerance) {
  std::mt19937_64 rng(seed);
  SuiteResult r{"projection", 0, 0, 0.0, {}};
  for (int trial = 0; trial < count; ++trial) {
    const Index n = pick(rng, 2, max_size);
    const Index k = pick(rng, 1, n - 1);
    const auto g = GaussianMeasure::centered(random_spd(rng, n), k);
    const ProjectionPair p = projection_pair(g);
    const MatrixXd I = MatrixXd::Identity(n, n);
    const double dev = std::max({(p.E * p.E - p.E).cwiseAbs().maxCoeff(), (p.F * p.F - p.F).cwiseAbs().maxCoeff(),
                                 (p.E * p.F).cwiseAbs().maxCoeff(), (p.F * p.E).cwiseAbs().maxCoeff(),
                                 (p.E + p.F - I).cwiseAbs().maxCoeff()});
    std::ostringstream what;
    what << "trial " << trial << " (n=" << n << ", k=" << k << "): deviation " << dev;
    record(r, dev <= tolerance, dev, what.str());
  }
  return r;
}

SuiteResult dyson_suite(std::uint64_t seed, int count, Index max_size, double max_time, double dt,
                        double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, max_time);
  SuiteResult r{"dyson", 0, 0, 0.0, {}};
  for (int trial = 0; trial < count; ++trial) {
    const Index n = pick(rng, 2, max_size);
    const Index k = pick(rng, 1, n - 1);
    const LinearSystem sys = random_linear_system(rng, n);
    const auto g = GaussianMeasure::centered(random_spd(rng, n), k);
    const double t = max_time - time(rng);  // in (0, max_time]
    const double res = dyson_residual(sys, g, t, dt);
    std::ostringstream what;
    what << "trial " << trial << " (n=" << n << ", t=" << t << "): residual " << res;
    record(r, res <= tolerance, res, what.str());
  }
  return r;
}

SuiteResult full_op_suite(std::uint64_t seed, int count, double low, double high) {
  std::mt19937_64 rng(seed);
  SuiteResult r{"full_op", 0, 0, 0.0, {}};
  auto check = [&](double coarse, double fine, const std::string& label) {
    const double order = std::log2(coarse / fine);
    const double gap = order < low ? low - order : (order > high ? order - high : 0.0);
    std::ostringstream what;
    what << label << ": order " << order << " (errors " << coarse << ", " << fine << ")";
    record(r, std::isfinite(order) && gap == 0.0, std::isfinite(order) ? gap : 1e300, what.str());
  };
  for (int trial = 0; trial < count; ++trial) {
    const Index n = pick(rng, 2, 5);
    const Index k = pick(rng, 1, n - 1);
    const LinearSystem sys = random_linear_system(rng, n, 0.7);
    const auto g = GaussianMeasure::centered(random_spd(rng, n), k);
    check(full_op_error(sys, g, 0.02), full_op_error(sys, g, 0.01), "random system " + std::to_string(trial));
  }
  for (double xi : {std::numbers::pi, 2.0 * std::numbers::pi}) {
    std::ostringstream label;
    label << "model mode xi=" << xi;
    check(verify_full_op_identity(0.5, xi, 1.0, 0.02), verify_full_op_identity(0.5, xi, 1.0, 0.01), label.str());
  }
  return r;
}

SuiteResult moment_suite(const std::vector<int>& orders, double tolerance) {
  SuiteResult r{"moments", 0, 0, 0.0, {}};
  for (int N : orders) {
    for (const MomentDeviation& d : verify_theorem({{ClosureFamily::PN, N, std::nullopt}})) {
      std::ostringstream what;
      what << "N=" << N << " l=" << d.power << ": solver " << d.solver << ", oracle " << d.oracle
           << ", relative " << d.relative();
      record(r, d.relative() <= tolerance, d.relative(), what.str());
    }
  }
  return r;
}

}  // namespace opclosure
