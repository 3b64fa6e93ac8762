#include "opclosure/spatial_moments.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <ostream>
#include <sstream>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

void check_power(int max_power) {
  if (max_power < 0) throw Error("spatial moments: max power must be >= 0");
}

}  // namespace

SpatialMomentTable measure_moments(const MomentField1D& field, int max_power, double center) {
  check_power(max_power);
  SpatialMomentTable table;
  table.time = field.time();
  table.center = center;
  table.values = MatrixXd::Zero(max_power + 1, field.moment_count());
  const double dx = field.spacing();
  for (int k = 0; k < field.moment_count(); ++k) {
    const VectorXd& u = field.moment(k);
    for (Index i = 0; i < field.cells(); ++i) {
      const double d = field.position(k, i) - center;
      double power = 1.0;
      for (int l = 0; l <= max_power; ++l) {
        table.values(l, k) += power * u(i) * dx;
        power *= d;
      }
    }
  }
  return table;
}

SpatialMomentTable measure_moments(const Snapshot& snap, int max_power, double center) {
  check_power(max_power);
  const Index n = snap.x.size();
  if (n < 2) throw Error("measure_moments: snapshot needs at least two points");
  const double dx = snap.x(1) - snap.x(0);
  SpatialMomentTable table;
  table.time = snap.time;
  table.center = center;
  table.values = MatrixXd::Zero(max_power + 1, static_cast<Index>(snap.moments.size()));
  for (std::size_t k = 0; k < snap.moments.size(); ++k) {
    for (Index i = 0; i < n; ++i) {
      const double d = snap.x(i) - center;
      double power = 1.0;
      for (int l = 0; l <= max_power; ++l) {
        table.values(l, static_cast<Index>(k)) += power * snap.moments[k](i) * dx;
        power *= d;
      }
    }
  }
  return table;
}

VectorXd absolute_moments(const MomentField1D& field, int max_power, double center) {
  check_power(max_power);
  VectorXd out = VectorXd::Zero(max_power + 1);
  const VectorXd& u = field.moment(0);
  for (Index i = 0; i < field.cells(); ++i) {
    const double d = std::abs(field.center(i) - center);
    double power = 1.0;
    for (int l = 0; l <= max_power; ++l) {
      out(l) += power * std::abs(u(i)) * field.spacing();
      power *= d;
    }
  }
  return out;
}

SpatialMomentTable evolve_moments_oracle(const MatrixXd& advection, const VectorXd& decay,
                                         const SpatialMomentTable& initial, double t) {
  const Index K = advection.rows();
  if (advection.cols() != K || decay.size() != K) throw Error("evolve_moments_oracle: B and C sizes disagree");
  if (initial.values.cols() > K) throw Error("evolve_moments_oracle: initial table has more moments than B");
  if (!(t >= 0.0)) throw Error("evolve_moments_oracle: t must be >= 0");
  const int L = initial.max_power();

  MatrixXd start = MatrixXd::Zero(L + 1, K);
  start.leftCols(initial.values.cols()) = initial.values;
  const VectorXd m0 = start.row(0).transpose();

  SpatialMomentTable out;
  out.time = initial.time + t;
  out.center = initial.center;
  if (t == 0.0) {
    out.values = start;
    return out;
  }
  out.values = MatrixXd::Zero(L + 1, K);
  out.values.row(0) = (m0.array() * (-t * decay.array()).exp()).transpose();
  if (L == 0) return out;

  using State = std::vector<double>;
  // Row-major stack of m^1..m^L.
  State state(static_cast<std::size_t>(L * K));
  for (int l = 1; l <= L; ++l)
    for (Index k = 0; k < K; ++k) state[(l - 1) * K + k] = start(l, k);

  auto rhs = [&](const State& x, State& dxdt, double s) {
    const VectorXd zeroth = m0.array() * (-s * decay.array()).exp();
    for (int l = 1; l <= L; ++l) {
      Eigen::Map<const VectorXd> ml(x.data() + (l - 1) * K, K);
      Eigen::Map<VectorXd> dl(dxdt.data() + (l - 1) * K, K);
      const VectorXd previous = l == 1 ? zeroth : VectorXd(Eigen::Map<const VectorXd>(x.data() + (l - 2) * K, K));
      dl = static_cast<double>(l) * (advection * previous) - decay.cwiseProduct(ml);
    }
  };
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-15, 1e-12), rhs, state, 0.0, t,
                          std::min(t, 1e-3));
  for (int l = 1; l <= L; ++l)
    for (Index k = 0; k < K; ++k) out.values(l, k) = state[(l - 1) * K + k];
  return out;
}

std::vector<MomentDeviation> verify_theorem(const TheoremCheck& check) {
  if (check.discarded_integral != 0.0) {
    std::ostringstream os;
    os << "verify_theorem: hypothesis violated, int u_{N+1}(x,0) dx = " << check.discarded_integral
       << " must be zero for the moment statement to hold";
    throw Error(os.str());
  }
  const int N = check.closure.order;
  const int L = N + 1;
  SlabScenario s = init_pulse_scenario(check.closure, check.cells);
  const SpatialMomentTable initial = measure_moments(s.field, L, check.center);
  const std::vector<double> times{check.t};
  run(s.field, s.op, s.dt, times);
  const SpatialMomentTable measured = measure_moments(s.field, L, check.center);
  const VectorXd scale = absolute_moments(s.field, L, check.center);

  const int K = N + 8;
  const MomentMatrices big = build_matrices(K, 1.5, 1.5, 0.0);
  const SpatialMomentTable oracle = evolve_moments_oracle(big.advection, big.decay, initial, check.t);

  std::vector<MomentDeviation> out;
  for (int l = 0; l <= L; ++l) out.push_back({l, measured(l, 0), oracle(l, 0), scale(l)});
  return out;
}

void write_moment_table_csv(std::ostream& out, const SpatialMomentTable& table) {
  const auto old = out.precision(17);
  out << "# t=" << table.time << "\n";
  out << "l,k,value\n";
  for (int l = 0; l <= table.max_power(); ++l)
    for (int k = 0; k <= table.max_moment(); ++k) out << l << "," << k << "," << table(l, k) << "\n";
  out.precision(old);
}

}  // namespace opclosure
