#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace opclosure {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Gaussian measure on R^n with covariance A and mean m, split into the
/// first k "resolved" coordinates (C) and the remaining n-k "unresolved"
/// coordinates (F).
///
/// Construction validates that A is symmetric (1e-12 relative) and positive
/// definite (smallest eigenvalue > 1e-12 times the largest), and that
/// 0 < k < n. A_CC is factorized once and reused for every projection.
class GaussianMeasure {
 public:
  GaussianMeasure(MatrixXd covariance, VectorXd mean, Index split);

  /// Centered measure (m = 0).
  static GaussianMeasure centered(MatrixXd covariance, Index split);

  Index size() const { return covariance_.rows(); }
  Index split() const { return split_; }
  Index unresolved() const { return size() - split_; }

  const MatrixXd& covariance() const { return covariance_; }
  const VectorXd& mean() const { return mean_; }
  bool is_centered() const { return mean_.isZero(0.0); }

  auto cc() const { return covariance_.topLeftCorner(split_, split_); }
  auto cf() const { return covariance_.topRightCorner(split_, unresolved()); }
  auto fc() const { return covariance_.bottomLeftCorner(unresolved(), split_); }
  auto ff() const { return covariance_.bottomRightCorner(unresolved(), unresolved()); }
  auto mean_c() const { return mean_.head(split_); }
  auto mean_f() const { return mean_.tail(unresolved()); }

  /// Regression matrix A_FC * A_CC^{-1}, (n-k) x k.
  const MatrixXd& regression() const { return regression_; }

 private:
  MatrixXd covariance_;
  VectorXd mean_;
  Index split_;
  MatrixXd regression_;
};

struct ProjectionPair {
  MatrixXd E;
  MatrixXd F;
};

/// Conditional expectation E[x | x_C] = [x_C ; m_F + A_FC A_CC^{-1} (x_C - m_C)].
VectorXd condition(const GaussianMeasure& measure, const VectorXd& resolved);

/// E = [[I,0],[A_FC A_CC^{-1},0]], F = I - E.
ProjectionPair projection_pair(const GaussianMeasure& measure);

/// Projected matrix B*E. Its right block column is exactly zero.
MatrixXd project_matrix(const MatrixXd& B, const GaussianMeasure& measure);
MatrixXcd project_matrix(const MatrixXcd& B, const GaussianMeasure& measure);

}  // namespace opclosure
