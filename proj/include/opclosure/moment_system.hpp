#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opclosure/gaussian_measure.hpp"
#include "opclosure/op_engine.hpp"

namespace opclosure {

/// Truncated slab-geometry Legendre moment system
///   d/dt u + B d/dx u = -C u + q,   u = (u_0, ..., u_N),
/// with b_{k,k+1} = (k+1)/(2k+1), b_{k,k-1} = k/(2k+1),
/// C = diag(kappa, kappa+sigma, ...), q = (2 kappa qhat, 0, ...).
struct MomentMatrices {
  int order = 0;
  MatrixXd advection;  // B
  VectorXd decay;      // diagonal of C
  VectorXd source;     // q

  Index size() const { return advection.rows(); }
  MatrixXd decay_matrix() const { return decay.asDiagonal(); }
};

/// Legendre coupling b_{k,l}; zero unless |k-l| = 1.
double legendre_coupling(int k, int l);

MatrixXd advection_matrix(int order);

MomentMatrices build_matrices(int order, double kappa, double sigma, double source_density);

/// Generator of one Fourier mode exp(i xi x) of the source-free system,
/// -i xi B - C, for use with the op_engine routines.
MatrixXcd mode_generator(const MomentMatrices& m, double wavenumber);

enum class ClosureFamily {
  PN,
  Diffusion,
  DiffusionCorrection,
  CrescendoDiffusion,
  CrescendoCorrection,
  TrapezoidalCorrection,
  GeneralLinear,
};

std::string_view to_string(ClosureFamily family);
/// Accepts the names produced by to_string (pn, diffusion, ...).
ClosureFamily parse_closure_family(std::string_view name);

/// True for every family that adds a theta d_xx u_N term.
bool has_diffusion(ClosureFamily family);
MemoryQuadrature quadrature_of(ClosureFamily family);

struct ClosureSpec {
  ClosureFamily family = ClosureFamily::PN;
  int order = 0;
  /// Measure over moments 0..M, required for GeneralLinear (split = order+1).
  std::optional<GaussianMeasure> measure;

  void validate() const;
};

/// Per-cell material coefficients on a periodic 1D mesh over [a, b).
class Medium1D {
 public:
  Medium1D(double a, double b, std::vector<double> kappa, std::vector<double> sigma);
  static Medium1D uniform(double a, double b, Index cells, double kappa, double sigma);

  Index cells() const { return static_cast<Index>(kappa_.size()); }
  double lower() const { return a_; }
  double upper() const { return b_; }
  double spacing() const { return (b_ - a_) / static_cast<double>(cells()); }
  const std::vector<double>& kappa() const { return kappa_; }
  const std::vector<double>& sigma() const { return sigma_; }
  bool uniform_coefficients() const;

  /// 1/(kappa+sigma) of the cell containing x; on a cell face, the harmonic
  /// mean of the two neighbouring cells. Infinite where kappa+sigma = 0.
  double tau_at(double x) const;

 private:
  double a_;
  double b_;
  std::vector<double> kappa_;
  std::vector<double> sigma_;
};

/// (N+1)^2 / ((2N+1)(2N+3)) = b_{N,N+1} b_{N+1,N}.
double correction_prefactor(int order);

/// theta for constant coefficients: prefactor * c(tau, t) with tau = 1/(kappa+sigma)
/// and c from the family's memory quadrature. Zero for PN and GeneralLinear.
double diffusion_theta(const ClosureSpec& spec, double kappa, double sigma, double t);

struct ClosureCoefficients {
  /// Added to the last row of B (length N+1).
  VectorXd advection_row;
  /// theta(t, x) >= 0 in the extra d_x(theta d_x u_N) term; empty for hyperbolic families.
  std::function<double(double, double)> diffusion;

  bool has_diffusion() const { return static_cast<bool>(diffusion); }
  double theta(double t, double x) const { return diffusion ? diffusion(t, x) : 0.0; }
};

/// Closure terms for the given medium. Diffusion families reject media with
/// kappa+sigma = 0 in any cell.
ClosureCoefficients closure_coefficients(const ClosureSpec& spec, const Medium1D& medium);

/// (N+1)/(2N+1) times the first row of A_FC A_CC^{-1}: the only nonzero row
/// of B_CF A_FC A_CC^{-1}. Measures with more than N+4 moments are truncated
/// to N+4 (the row only depends on A_CC and the first row of A_FC).
VectorXd general_linear_closure(const GaussianMeasure& measure, int order);

/// Legendre polynomial P_l(mu) by the three-term recurrence.
double legendre(int l, double mu);

/// I(mu) = sum_l (2l+1)/2 u_l P_l(mu).
double reconstruct_intensity(std::span<const double> moments, double mu);

}  // namespace opclosure
