#pragma once

#include <iosfwd>
#include <vector>

#include "opclosure/solver1d.hpp"

namespace opclosure {

/// values(l, k) = int (x - x0)^l u_k(x) dx for l <= L, k <= K.
struct SpatialMomentTable {
  double time = 0.0;
  double center = 0.0;
  MatrixXd values;

  int max_power() const { return static_cast<int>(values.rows()) - 1; }
  int max_moment() const { return static_cast<int>(values.cols()) - 1; }
  double operator()(int l, int k) const { return values(l, k); }
};

/// Midpoint quadrature at the native grid locations (centers for even k,
/// faces for odd k).
SpatialMomentTable measure_moments(const MomentField1D& field, int max_power, double center);

/// Midpoint quadrature on the (uniform, increasing) snapshot abscissae.
SpatialMomentTable measure_moments(const Snapshot& snap, int max_power, double center);

/// sum_i |x_i - x0|^l u_0[i] dx: the scale against which moment deviations
/// are judged (odd moments of symmetric data vanish).
VectorXd absolute_moments(const MomentField1D& field, int max_power, double center);

/// Solves dm^l/dt = l B m^{l-1} - C m^l from the initial table: m^0 by the
/// exact exponential, l >= 1 by adaptive Dormand-Prince (tolerance 1e-12).
/// B is (K+1)x(K+1), decay holds the diagonal of C. Rows of the initial table
/// beyond its column count are treated as zero moments.
SpatialMomentTable evolve_moments_oracle(const MatrixXd& advection, const VectorXd& decay,
                                         const SpatialMomentTable& initial, double t);

struct MomentDeviation {
  int power = 0;
  double solver = 0.0;
  double oracle = 0.0;
  double scale = 0.0;  // absolute moment of u_0 at the final time
  double relative() const { return std::abs(solver - oracle) / scale; }
};

struct TheoremCheck {
  ClosureSpec closure;
  double t = 0.4;
  Index cells = 1000;
  double center = 0.5;
  /// int u_{N+1}(x, 0) dx of the data the truncation discards; the check
  /// refuses to run unless it is zero.
  double discarded_integral = 0.0;
};

/// Runs the pulse benchmark with the given closure and compares
/// int (x-x0)^l u_0 dx, l = 0..N+1, with the oracle on an untruncated
/// (K = N + 8) moment system.
std::vector<MomentDeviation> verify_theorem(const TheoremCheck& check);

/// `# t=<time>` then `l,k,value` rows.
void write_moment_table_csv(std::ostream& out, const SpatialMomentTable& table);

}  // namespace opclosure
