#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "opclosure/error.hpp"

namespace opclosure::detail {

// Thomas algorithm for a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i]
// (a[0] and c[n-1] ignored).
inline std::vector<double> solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                                             const std::vector<double>& c, const std::vector<double>& d) {
  const std::size_t n = b.size();
  std::vector<double> cp(n), x(n);
  double pivot = b[0];
  if (std::abs(pivot) < std::numeric_limits<double>::min()) throw Error("tridiagonal solve: singular pivot in row 0");
  cp[0] = c[0] / pivot;
  x[0] = d[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = b[i] - a[i] * cp[i - 1];
    if (std::abs(pivot) < std::numeric_limits<double>::min())
      throw Error("tridiagonal solve: singular pivot in row " + std::to_string(i));
    cp[i] = c[i] / pivot;
    x[i] = (d[i] - a[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
  return x;
}

// Periodic variant: a[0] couples to x[n-1] and c[n-1] to x[0]. Sherman-Morrison
// correction of the open tridiagonal system; needs n >= 3.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                                                    const std::vector<double>& c, const std::vector<double>& d) {
  const std::size_t n = b.size();
  if (n < 3) throw Error("cyclic tridiagonal solve needs at least 3 unknowns");
  const double alpha = c[n - 1];
  const double beta = a[0];
  const double gamma = -b[0];
  std::vector<double> bb = b;
  bb[0] = b[0] - gamma;
  bb[n - 1] = b[n - 1] - alpha * beta / gamma;
  std::vector<double> x = solve_tridiagonal(a, bb, c, d);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const std::vector<double> z = solve_tridiagonal(a, bb, c, u);
  const double denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
  if (std::abs(denom) < std::numeric_limits<double>::epsilon()) throw Error("cyclic tridiagonal solve: singular system");
  const double fact = (x[0] + beta * x[n - 1] / gamma) / denom;
  for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
  return x;
}

}  // namespace opclosure::detail
