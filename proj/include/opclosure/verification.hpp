#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "opclosure/op_engine.hpp"

// Randomized self-checks shared by the `verify` scenario and the acceptance
// runner. Every suite is deterministic for a given seed.

namespace opclosure {

struct SuiteResult {
  std::string name;
  int passed = 0;
  int total = 0;
  double worst = 0.0;      // largest observed deviation (or order gap)
  std::string detail;      // first failure, if any

  bool ok() const { return total > 0 && passed == total; }
};

/// E^2 = E, F^2 = F, EF = FE = 0, E + F = I for `count` random SPD measures
/// of size 2..max_size.
SuiteResult projection_suite(std::uint64_t seed, int count = 100, Index max_size = 6, double tolerance = 1e-12);

/// Dyson identity residual for `count` random systems of size 2..max_size at
/// random t in (0, max_time].
SuiteResult dyson_suite(std::uint64_t seed, int count = 20, Index max_size = 5, double max_time = 2.0,
                        double dt = 1e-3, double tolerance = 1e-6);

/// Convergence order of solve_full_op towards e^{tR} E u0 (halving dt from
/// 0.02) on `count` random systems and on model-problem Fourier modes;
/// passes when the order lies in [low, high].
SuiteResult full_op_suite(std::uint64_t seed, int count = 10, double low = 1.8, double high = 2.2);

/// Spatial-moment preservation of P_N on the pulse benchmark for each order.
SuiteResult moment_suite(const std::vector<int>& orders = {0, 1, 3}, double tolerance = 1e-4);

/// Generator with N(0, scale^2) entries shifted by -I, standard normal u0.
LinearSystem random_linear_system(std::mt19937_64& rng, Index size, double scale = 1.0);

/// M^T M + I with standard normal M.
MatrixXd random_spd(std::mt19937_64& rng, Index size);

}  // namespace opclosure
