#pragma once

#include <span>
#include <vector>

#include "opclosure/gaussian_measure.hpp"

// Finite-matrix linear optimal prediction: exact propagators, the mean
// solution e^{tR}E u0, orthogonal dynamics e^{tRF}, the memory kernel
// K(t) = e^{tRF} RFRE, the full integro-differential evolution of the
// resolved block and its first/second-order reductions.
//
// All routines assume a centered measure (m = 0). Affine measures are
// handled by shifting coordinates before entry.

namespace opclosure {

/// du/dt = R u, u(0) = u0. Complex entries are allowed so that a PDE with
/// constant coefficients can be checked one Fourier mode at a time.
class LinearSystem {
 public:
  LinearSystem(MatrixXcd generator, VectorXcd initial);
  LinearSystem(const MatrixXd& generator, const VectorXd& initial);

  Index size() const { return generator_.rows(); }
  const MatrixXcd& generator() const { return generator_; }
  const VectorXcd& initial() const { return initial_; }

 private:
  MatrixXcd generator_;
  VectorXcd initial_;
};

struct KernelTrace {
  std::vector<double> times;
  std::vector<MatrixXcd> values;
};

/// States on the uniform grid t_i = i*dt, i = 0..steps.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<VectorXcd> states;
};

/// How the memory integral over [0, t] is collapsed onto the current state.
enum class MemoryQuadrature {
  Constant,     // tau
  Crescendo,    // min(t, tau)
  Trapezoidal,  // tau / 2
};

/// Matrix exponential e^{tR}; Pade scaling-and-squaring.
MatrixXcd propagator(const MatrixXcd& generator, double t);

VectorXcd propagate(const LinearSystem& system, double t);

/// e^{tR} E u0.
VectorXcd mean_solution(const LinearSystem& system, const GaussianMeasure& measure, double t);

/// e^{tRF}.
MatrixXcd orthogonal_propagate(const LinearSystem& system, const GaussianMeasure& measure, double t);

/// K(t_i) = e^{t_i RF} R F R E for each requested time (sorted, nonnegative).
KernelTrace memory_kernel(const LinearSystem& system, const GaussianMeasure& measure, std::span<const double> times);

/// Projected generator R E (zero right block column).
MatrixXcd projected_generator(const LinearSystem& system, const GaussianMeasure& measure);

/// First-order optimal prediction generator (R E)_CC.
MatrixXcd foop_generator(const LinearSystem& system, const GaussianMeasure& measure);

/// (R F R E)_CC from the four-term block expansion
///   R_CF R_FC + R_CF R_FF G - R_CF G R_CC - R_CF G R_CF G,  G = A_FC A_CC^{-1}.
MatrixXcd memory_operator_cc(const LinearSystem& system, const GaussianMeasure& measure);

/// Multiplier c in front of (RFRE)_CC for the given quadrature policy.
double memory_coefficient(MemoryQuadrature policy, double tau, double t);

/// Second-order generator (RE)_CC + c (RFRE)_CC.
MatrixXcd soop_generator(const LinearSystem& system, const GaussianMeasure& measure, double tau, double t,
                         MemoryQuadrature policy);

/// Solves du/dt = L u + int_0^t K(t-s) u(s) ds on t_i = i*dt with kernel
/// samples K(i*dt), i = 0..steps. The local part is integrated exactly
/// (exponential trapezoid) and the convolution by the trapezoidal rule, so
/// the scheme is second order and exact when K = 0.
Trajectory integrate_volterra(const MatrixXcd& local, std::span<const MatrixXcd> kernel, const VectorXcd& initial,
                              double dt);

/// Full optimal prediction for the resolved block:
///   du_C/dt = (RE)_CC u_C + K_CC * u_C,  u_C(0) = u0_C.
/// The step is shrunk so that t_end is hit exactly.
Trajectory solve_full_op(const LinearSystem& system, const GaussianMeasure& measure, double t_end, double dt);

/// Unresolved block of the mean solution from a resolved trajectory:
///   du_F/dt = (RE)_FC u_C + K_FC * u_C,  u_F(0) = A_FC A_CC^{-1} u0_C.
Trajectory reconstruct_unresolved(const LinearSystem& system, const GaussianMeasure& measure,
                                  const Trajectory& resolved);

/// max-norm of e^{tR} - e^{tRF} - int_0^t e^{(t-s)RF} R E e^{sR} ds, with
/// composite Simpson quadrature of step <= dt.
double dyson_residual(const LinearSystem& system, const GaussianMeasure& measure, double t, double dt);

/// max-norm of d/dt e^{tR} - [ RE e^{tR} + e^{tRF} RF + int_0^t K(t-s) e^{sR} ds ],
/// with the derivative taken by central differences of width h.
double solution_identity_residual(const LinearSystem& system, const GaussianMeasure& measure, double t, double h,
                                  double quad_dt);

}  // namespace opclosure
