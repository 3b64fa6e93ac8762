#pragma once

#include "opclosure/gaussian_measure.hpp"
#include "opclosure/op_engine.hpp"

// Two-component model system d/dt u = R u with R = [[-1, d_x], [d_x, -1]] on
// a periodic interval, and its optimal-prediction reductions for the measure
// A = [[1, beta], [beta, gamma]] with u1 resolved and u2 averaged out.
//
// Shift convention: Delta_a f(x) = f(x - a). Delta_{-t} therefore moves a
// profile toward negative x. In Fourier space (mode exp(i xi x)) Delta_a has
// symbol exp(-i xi a) and d_x has symbol i xi.

namespace opclosure {

struct PeriodicGrid {
  double lower = 0.0;
  double upper = 1.0;
  Index points = 0;

  double length() const { return upper - lower; }
  double spacing() const { return length() / static_cast<double>(points); }
  double x(Index i) const { return lower + static_cast<double>(i) * spacing(); }
  /// Angular wavenumber of FFT bin j (symmetric ordering).
  double wavenumber(Index j) const;
};

struct ModelState {
  PeriodicGrid grid;
  VectorXd u1;
  VectorXd u2;
  double beta = 0.0;
  double gamma = 1.0;

  /// |beta| < sqrt(gamma) and consistent grid sizes.
  void validate() const;
};

/// Delta_a f: exact circular index shift when a is a multiple of the grid
/// spacing, Fourier phase shift otherwise.
VectorXd shift(const PeriodicGrid& grid, const VectorXd& f, double a);

/// e^{tR} applied to the state.
ModelState exact_solution(const ModelState& initial, double t);

/// e^{tR} E applied to (u1, *): component 1 is
/// e^{-t}[(1+beta)/2 Delta_{-t} + (1-beta)/2 Delta_t] u1.
ModelState mean_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double t);

/// First-order reduction e^{-t} Delta_{-beta t} u1.
VectorXd foop_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double t);

/// Second-order reduction d/dt u = (-1 + beta d_x) u + c(t) (1 - beta^2) d_xx u,
/// solved exactly per Fourier mode.
VectorXd soop_solution(const PeriodicGrid& grid, const VectorXd& u1, double beta, double tau, double t,
                       MemoryQuadrature policy);

/// Symbol of R for the mode exp(i xi x): [[-1, i xi], [i xi, -1]].
MatrixXcd model_mode_generator(double xi);

GaussianMeasure model_measure(double beta, double gamma = 1.0);

/// Closed-form kernel symbol (1-beta^2) e^{-t} e^{-i beta xi t} [[-xi^2, 0], [-i xi, 0]],
/// i.e. the symbol of (1-beta^2) e^{-t} Delta_{beta t} [[d_xx, 0], [-d_x, 0]].
MatrixXcd model_memory_kernel(double beta, double t, double xi);

/// Resolved component of the mean solution for one mode with unit amplitude:
/// e^{-t}[(1+beta)/2 e^{i xi t} + (1-beta)/2 e^{-i xi t}].
std::complex<double> mean_solution_mode(double beta, double t, double xi);

/// Integrates the full optimal prediction equation for one mode using the
/// closed-form kernel and returns max_t |u(t) - mean_solution_mode(t)|.
double verify_full_op_identity(double beta, double xi, double t_end, double dt);

}  // namespace opclosure
