#include "opclosure/model_problem.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

using cplx = std::complex<double>;

void check_grid(const PeriodicGrid& grid, Index size) {
  if (grid.points <= 0 || !(grid.upper > grid.lower)) throw Error("PeriodicGrid: need points > 0 and lower < upper");
  if (size != grid.points) {
    std::ostringstream os;
    os << "model_problem: grid has " << grid.points << " points, profile has " << size;
    throw Error(os.str());
  }
}

// Applies the Fourier multiplier symbol(xi) to a real periodic profile.
template <typename Symbol>
VectorXd apply_multiplier(const PeriodicGrid& grid, const VectorXd& f, Symbol symbol) {
  check_grid(grid, f.size());
  const Index n = grid.points;
  std::vector<double> in(f.data(), f.data() + n);
  std::vector<cplx> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, in);
  for (Index j = 0; j < n; ++j) {
    cplx s = symbol(grid.wavenumber(j));
    // The Nyquist bin of an even grid has no conjugate partner; keep it real.
    if (n % 2 == 0 && j == n / 2) s = cplx(s.real(), 0.0);
    spectrum[j] *= s;
  }
  std::vector<double> out;
  fft.inv(out, spectrum);
  return Eigen::Map<const VectorXd>(out.data(), n);
}

double crescendo_integral(double tau, double t) {
  // int_0^t min(s, tau) ds
  return t <= tau ? 0.5 * t * t : 0.5 * tau * tau + tau * (t - tau);
}

}  // namespace

double PeriodicGrid::wavenumber(Index j) const {
  const Index signed_j = (j <= points / 2) ? j : j - points;
  return 2.0 * std::numbers::pi * static_cast<double>(signed_j) / length();
}

void ModelState::validate() const {
  check_grid(grid, u1.size());
  check_grid(grid, u2.size());
  if (!(gamma > 0.0) || !(beta * beta < gamma)) {
    std::ostringstream os;
    os << "ModelState: measure [[1, beta], [beta, gamma]] is not SPD for beta=" << beta << ", gamma=" << gamma;
    throw Error(os.str());
  }
}

VectorXd shift(const PeriodicGrid& grid, const VectorXd& f, double a) {
  check_grid(grid, f.size());
  const double cells = a / grid.spacing();
  const double nearest = std::round(cells);
  if (std::abs(cells - nearest) < 1e-9 * std::max(1.0, std::abs(cells))) {
    const Index n = grid.points;
    const Index m = ((static_cast<Index>(nearest) % n) + n) % n;
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) out(i) = f((i - m + n) % n);
    return out;
  }
  return apply_multiplier(grid, f, [a](double xi) { return std::exp(cplx(0.0, -xi * a)); });
}

ModelState exact_solution(const ModelState& initial, double t) {
  initial.validate();
  const double decay = std::exp(-t);
  const VectorXd plus = initial.u1 + initial.u2;
  const VectorXd minus = initial.u1 - initial.u2;
  // u1 + u2 travels with Delta_{-t}, u1 - u2 with Delta_t.
  const VectorXd left = shift(initial.grid, plus, -t);
  const VectorXd right = shift(initial.grid, minus, t);
  ModelState out = initial;
  out.u1 = 0.5 * decay * (left + right);
  out.u2 = 0.5 * decay * (left - right);
  return out;
}

ModelState mean_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double t) {
  const double decay = std::exp(-t);
  const VectorXd left = shift(grid, u1, -t);
  const VectorXd right = shift(grid, u1, t);
  ModelState out;
  out.grid = grid;
  out.beta = beta;
  out.u1 = decay * (0.5 * (1.0 + beta) * left + 0.5 * (1.0 - beta) * right);
  out.u2 = decay * (0.5 * (1.0 + beta) * left - 0.5 * (1.0 - beta) * right);
  return out;
}

VectorXd foop_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double t) {
  return std::exp(-t) * shift(grid, u1, -beta * t);
}

VectorXd soop_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double tau, double t,
                       MemoryQuadrature policy) {
  memory_coefficient(policy, tau, t);  // validates tau and t
  double weight = 0.0;                 // int_0^t c(s) ds
  switch (policy) {
    case MemoryQuadrature::Constant:
      weight = tau * t;
      break;
    case MemoryQuadrature::Crescendo:
      weight = crescendo_integral(tau, t);
      break;
    case MemoryQuadrature::Trapezoidal:
      weight = 0.5 * tau * t;
      break;
  }
  const double diffusion = (1.0 - beta * beta) * weight;
  return apply_multiplier(grid, u1, [&](double xi) {
    return std::exp(cplx(-t - diffusion * xi * xi, beta * xi * t));
  });
}

MatrixXcd model_mode_generator(double xi) {
  MatrixXcd R(2, 2);
  R << -1.0, cplx(0.0, xi), cplx(0.0, xi), -1.0;
  return R;
}

GaussianMeasure model_measure(double beta, double gamma) {
  MatrixXd A(2, 2);
  A << 1.0, beta, beta, gamma;
  return GaussianMeasure::centered(A, 1);
}

MatrixXcd model_memory_kernel(double beta, double t, double xi) {
  const cplx factor = (1.0 - beta * beta) * std::exp(cplx(-t, -beta * xi * t));
  MatrixXcd K = MatrixXcd::Zero(2, 2);
  K(0, 0) = -xi * xi;
  K(1, 0) = cplx(0.0, -xi);
  return factor * K;
}

cplx mean_solution_mode(double beta, double t, double xi) {
  return std::exp(-t) * (0.5 * (1.0 + beta) * std::exp(cplx(0.0, xi * t)) +
                         0.5 * (1.0 - beta) * std::exp(cplx(0.0, -xi * t)));
}

double verify_full_op_identity(double beta, double xi, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw Error("verify_full_op_identity: need dt > 0 and t_end >= 0");
  const auto steps = std::max<Index>(1, static_cast<Index>(std::ceil(t_end / dt - 1e-9)));
  const double h = t_end / static_cast<double>(steps);
  std::vector<MatrixXcd> kernel(steps + 1);
  for (Index j = 0; j <= steps; ++j) kernel[j] = model_memory_kernel(beta, j * h, xi).topLeftCorner(1, 1);
  MatrixXcd local(1, 1);
  local(0, 0) = cplx(-1.0, beta * xi);
  VectorXcd u0(1);
  u0(0) = 1.0;
  const Trajectory traj = integrate_volterra(local, kernel, u0, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    worst = std::max(worst, std::abs(traj.states[i](0) - mean_solution_mode(beta, traj.times[i], xi)));
  return worst;
}

}  // namespace opclosure
