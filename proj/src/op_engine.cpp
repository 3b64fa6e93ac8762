#include "opclosure/op_engine.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

constexpr double kGrowthLimit = 1e6;

void check_dimensions(const LinearSystem& system, const GaussianMeasure& measure) {
  if (system.size() != measure.size()) {
    std::ostringstream os;
    os << "op_engine: system dimension " << system.size() << " does not match measure dimension "
       << measure.size();
    throw Error(os.str());
  }
}

void check_time(double t, const char* who) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    std::ostringstream os;
    os << who << ": time must be finite and nonnegative, got " << t;
    throw Error(os.str());
  }
}

MatrixXcd complex_of(const MatrixXd& m) { return m.cast<std::complex<double>>(); }

MatrixXcd orthogonal_generator(const LinearSystem& system, const GaussianMeasure& measure) {
  return system.generator() * complex_of(projection_pair(measure).F);
}

MatrixXcd rfre(const LinearSystem& system, const GaussianMeasure& measure) {
  const auto p = projection_pair(measure);
  const MatrixXcd& R = system.generator();
  return R * complex_of(p.F) * R * complex_of(p.E);
}

double max_abs(const MatrixXcd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Trapezoidal convolution dt * sum' K_{n-j} u_j over j = 0..n, excluding the
// j = n endpoint (which the caller handles implicitly).
VectorXcd convolution_history(std::span<const MatrixXcd> kernel, const std::vector<VectorXcd>& states, Index n,
                              Index rows, double dt) {
  VectorXcd acc = VectorXcd::Zero(rows);
  if (n == 0) return acc;
  acc += 0.5 * kernel[n] * states[0];
  for (Index j = 1; j < n; ++j) acc += kernel[n - j] * states[j];
  return dt * acc;
}

// Grid t_i = i*h over [0, t]; h <= dt, with an even number of intervals.
Index simpson_intervals(double t, double dt) {
  auto n = static_cast<Index>(std::ceil(t / dt - 1e-9));
  n = std::max<Index>(n, 2);
  if (n % 2 != 0) ++n;
  return n;
}

// int_0^t e^{(t-s)RF} M(s) ds with M(s) = middle * e^{sR}, by composite Simpson.
MatrixXcd convolution_integral(const MatrixXcd& orth_gen, const MatrixXcd& middle, const MatrixXcd& gen, double t,
                               double dt) {
  const Index n = gen.rows();
  if (t == 0.0) return MatrixXcd::Zero(n, n);
  const Index intervals = simpson_intervals(t, dt);
  const double h = t / static_cast<double>(intervals);
  const MatrixXcd step_full = propagator(gen, h);
  const MatrixXcd step_orth = propagator(orth_gen, h);

  std::vector<MatrixXcd> orth_pow(intervals + 1);
  orth_pow[0] = MatrixXcd::Identity(n, n);
  for (Index i = 1; i <= intervals; ++i) orth_pow[i] = orth_pow[i - 1] * step_orth;

  MatrixXcd acc = MatrixXcd::Zero(n, n);
  MatrixXcd full = MatrixXcd::Identity(n, n);
  for (Index j = 0; j <= intervals; ++j) {
    const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    acc += w * orth_pow[intervals - j] * middle * full;
    full = full * step_full;
  }
  return acc * (h / 3.0);
}

}  // namespace

LinearSystem::LinearSystem(MatrixXcd generator, VectorXcd initial)
    : generator_(std::move(generator)), initial_(std::move(initial)) {
  if (generator_.rows() != generator_.cols()) throw Error("LinearSystem: generator must be square");
  if (generator_.rows() < 2) throw Error("LinearSystem: dimension must be at least 2");
  if (initial_.size() != generator_.rows()) throw Error("LinearSystem: initial state length does not match generator");
  if (!generator_.allFinite() || !initial_.allFinite()) throw Error("LinearSystem: non-finite entries");
}

LinearSystem::LinearSystem(const MatrixXd& generator, const VectorXd& initial)
    : LinearSystem(MatrixXcd(complex_of(generator)), VectorXcd(initial.cast<std::complex<double>>())) {}

MatrixXcd propagator(const MatrixXcd& generator, double t) {
  check_time(t, "propagator");
  MatrixXcd out = (generator * t).exp();
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "propagator: matrix exponential overflowed at t=" << t << " (|R|max=" << max_abs(generator) << ")";
    throw Error(os.str());
  }
  return out;
}

VectorXcd propagate(const LinearSystem& system, double t) { return propagator(system.generator(), t) * system.initial(); }

VectorXcd mean_solution(const LinearSystem& system, const GaussianMeasure& measure, double t) {
  check_dimensions(system, measure);
  return propagator(system.generator(), t) * (complex_of(projection_pair(measure).E) * system.initial());
}

MatrixXcd orthogonal_propagate(const LinearSystem& system, const GaussianMeasure& measure, double t) {
  check_dimensions(system, measure);
  return propagator(orthogonal_generator(system, measure), t);
}

KernelTrace memory_kernel(const LinearSystem& system, const GaussianMeasure& measure, std::span<const double> times) {
  check_dimensions(system, measure);
  for (std::size_t i = 0; i < times.size(); ++i) {
    check_time(times[i], "memory_kernel");
    if (i > 0 && !(times[i] > times[i - 1])) throw Error("memory_kernel: times must be strictly increasing");
  }
  const MatrixXcd orth = orthogonal_generator(system, measure);
  const MatrixXcd k0 = rfre(system, measure);
  KernelTrace trace;
  trace.times.assign(times.begin(), times.end());
  trace.values.reserve(times.size());
  for (double t : times) {
    MatrixXcd K = propagator(orth, t) * k0;
    // E has a zero right block column, so K does as well; remove roundoff.
    K.rightCols(measure.unresolved()).setZero();
    trace.values.push_back(std::move(K));
  }
  return trace;
}

MatrixXcd projected_generator(const LinearSystem& system, const GaussianMeasure& measure) {
  check_dimensions(system, measure);
  return project_matrix(system.generator(), measure);
}

MatrixXcd foop_generator(const LinearSystem& system, const GaussianMeasure& measure) {
  const Index k = measure.split();
  return projected_generator(system, measure).topLeftCorner(k, k);
}

MatrixXcd memory_operator_cc(const LinearSystem& system, const GaussianMeasure& measure) {
  check_dimensions(system, measure);
  const Index k = measure.split();
  const Index f = measure.unresolved();
  const MatrixXcd& R = system.generator();
  const MatrixXcd Rcc = R.topLeftCorner(k, k);
  const MatrixXcd Rcf = R.topRightCorner(k, f);
  const MatrixXcd Rfc = R.bottomLeftCorner(f, k);
  const MatrixXcd Rff = R.bottomRightCorner(f, f);
  const MatrixXcd G = complex_of(measure.regression());
  return Rcf * Rfc + Rcf * Rff * G - Rcf * G * Rcc - Rcf * G * Rcf * G;
}

double memory_coefficient(MemoryQuadrature policy, double tau, double t) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    std::ostringstream os;
    os << "memory_coefficient: tau must be positive and finite, got " << tau;
    throw Error(os.str());
  }
  check_time(t, "memory_coefficient");
  switch (policy) {
    case MemoryQuadrature::Constant:
      return tau;
    case MemoryQuadrature::Crescendo:
      return std::min(t, tau);
    case MemoryQuadrature::Trapezoidal:
      return 0.5 * tau;
  }
  throw Error("memory_coefficient: unknown policy");
}

MatrixXcd soop_generator(const LinearSystem& system, const GaussianMeasure& measure, double tau, double t,
                         MemoryQuadrature policy) {
  const double c = memory_coefficient(policy, tau, t);
  return foop_generator(system, measure) + c * memory_operator_cc(system, measure);
}

Trajectory integrate_volterra(const MatrixXcd& local, std::span<const MatrixXcd> kernel, const VectorXcd& initial,
                              double dt) {
  if (!(dt > 0.0)) throw Error("integrate_volterra: dt must be positive");
  if (kernel.empty()) throw Error("integrate_volterra: kernel needs at least the K(0) sample");
  const Index k = local.rows();
  if (local.cols() != k || initial.size() != k) throw Error("integrate_volterra: dimension mismatch");
  for (const auto& K : kernel)
    if (K.rows() != k || K.cols() != k) throw Error("integrate_volterra: kernel sample has wrong shape");

  const auto steps = static_cast<Index>(kernel.size()) - 1;
  const MatrixXcd P = propagator(local, dt);
  const MatrixXcd I = MatrixXcd::Identity(k, k);
  const Eigen::PartialPivLU<MatrixXcd> implicit(I - (0.25 * dt * dt) * kernel[0]);
  const double bound = kGrowthLimit * std::max(initial.cwiseAbs().maxCoeff(), 1e-300);

  Trajectory out;
  out.dt = dt;
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.times.push_back(0.0);
  out.states.push_back(initial);

  VectorXcd memory = VectorXcd::Zero(k);  // trapezoidal memory integral at t_n
  for (Index n = 0; n < steps; ++n) {
    const VectorXcd history = convolution_history(kernel, out.states, n + 1, k, dt);
    const VectorXcd rhs = P * (out.states[n] + 0.5 * dt * memory) + 0.5 * dt * history;
    VectorXcd next = implicit.solve(rhs);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > bound) {
      std::ostringstream os;
      os << "integrate_volterra: unstable growth at t=" << (n + 1) * dt << " (|u| exceeds " << kGrowthLimit
         << " x |u0|)";
      throw Error(os.str());
    }
    memory = history + (0.5 * dt) * (kernel[0] * next);
    out.states.push_back(std::move(next));
    out.times.push_back(static_cast<double>(n + 1) * dt);
  }
  return out;
}

namespace {

Index step_count(double t_end, double dt) {
  if (!(dt > 0.0)) throw Error("solve_full_op: dt must be positive");
  check_time(t_end, "solve_full_op");
  return std::max<Index>(1, static_cast<Index>(std::ceil(t_end / dt - 1e-9)));
}

std::vector<MatrixXcd> kernel_samples(const LinearSystem& system, const GaussianMeasure& measure, Index steps,
                                      double dt) {
  const MatrixXcd step = propagator(orthogonal_generator(system, measure), dt);
  std::vector<MatrixXcd> samples(steps + 1);
  samples[0] = rfre(system, measure);
  samples[0].rightCols(measure.unresolved()).setZero();
  for (Index i = 1; i <= steps; ++i) samples[i] = step * samples[i - 1];
  return samples;
}

}  // namespace

Trajectory solve_full_op(const LinearSystem& system, const GaussianMeasure& measure, double t_end, double dt) {
  check_dimensions(system, measure);
  const Index steps = step_count(t_end, dt);
  const double h = t_end / static_cast<double>(steps);
  const Index k = measure.split();
  const auto full = kernel_samples(system, measure, steps, h);
  std::vector<MatrixXcd> kcc;
  kcc.reserve(full.size());
  for (const auto& K : full) kcc.push_back(K.topLeftCorner(k, k));
  return integrate_volterra(foop_generator(system, measure), kcc, system.initial().head(k), h);
}

Trajectory reconstruct_unresolved(const LinearSystem& system, const GaussianMeasure& measure,
                                  const Trajectory& resolved) {
  check_dimensions(system, measure);
  const Index k = measure.split();
  const Index f = measure.unresolved();
  if (resolved.states.empty()) throw Error("reconstruct_unresolved: empty resolved trajectory");
  for (const auto& s : resolved.states)
    if (s.size() != k) throw Error("reconstruct_unresolved: resolved state has wrong length");
  const auto steps = static_cast<Index>(resolved.states.size()) - 1;
  const double dt = resolved.dt;
  const auto full = kernel_samples(system, measure, steps, dt);
  std::vector<MatrixXcd> kfc;
  kfc.reserve(full.size());
  for (const auto& K : full) kfc.push_back(K.bottomLeftCorner(f, k));
  const MatrixXcd rfc = projected_generator(system, measure).bottomLeftCorner(f, k);

  auto rhs = [&](Index n) {
    VectorXcd memory = convolution_history(kfc, resolved.states, n, f, dt);
    if (n > 0) memory += (0.5 * dt) * (kfc[0] * resolved.states[n]);
    return VectorXcd(rfc * resolved.states[n] + memory);
  };

  Trajectory out;
  out.dt = dt;
  out.times = resolved.times;
  out.states.reserve(steps + 1);
  out.states.push_back(complex_of(measure.regression()) * resolved.states[0]);
  VectorXcd previous = rhs(0);
  for (Index n = 0; n < steps; ++n) {
    VectorXcd current = rhs(n + 1);
    out.states.push_back(out.states[n] + 0.5 * dt * (previous + current));
    previous = std::move(current);
  }
  return out;
}

double dyson_residual(const LinearSystem& system, const GaussianMeasure& measure, double t, double dt) {
  check_dimensions(system, measure);
  check_time(t, "dyson_residual");
  const MatrixXcd& R = system.generator();
  const MatrixXcd orth = orthogonal_generator(system, measure);
  const MatrixXcd re = R * complex_of(projection_pair(measure).E);
  const MatrixXcd integral = convolution_integral(orth, re, R, t, dt);
  return max_abs(propagator(R, t) - propagator(orth, t) - integral);
}

double solution_identity_residual(const LinearSystem& system, const GaussianMeasure& measure, double t, double h,
                                  double quad_dt) {
  check_dimensions(system, measure);
  if (!(h > 0.0) || t - h < 0.0) throw Error("solution_identity_residual: need 0 < h <= t");
  const MatrixXcd& R = system.generator();
  const MatrixXcd orth = orthogonal_generator(system, measure);
  const MatrixXcd derivative = (propagator(R, t + h) - propagator(R, t - h)) / (2.0 * h);
  // int_0^t K(t-s) e^{sR} ds = int_0^t e^{(t-s)RF} (RFRE) e^{sR} ds
  const MatrixXcd memory = convolution_integral(orth, rfre(system, measure), R, t, quad_dt);
  const MatrixXcd rhs = projected_generator(system, measure) * propagator(R, t) + propagator(orth, t) * orth + memory;
  return max_abs(derivative - rhs);
}

}  // namespace opclosure
