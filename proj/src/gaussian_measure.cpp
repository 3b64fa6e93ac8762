#include "opclosure/gaussian_measure.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <sstream>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kDefiniteTol = 1e-12;

double asymmetry(const MatrixXd& upper, const MatrixXd& lower_t, double scale) {
  if (upper.size() == 0) return 0.0;
  return (upper - lower_t).cwiseAbs().maxCoeff() / scale;
}

// Smallest eigenvalue relative to `scale`; the matrix is assumed symmetric.
double relative_min_eigenvalue(const MatrixXd& m, double scale) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() / scale;
}

void validate(const MatrixXd& A, const VectorXd& m, Index k) {
  const Index n = A.rows();
  if (A.cols() != n) {
    std::ostringstream os;
    os << "GaussianMeasure: covariance must be square, got " << A.rows() << "x" << A.cols();
    throw Error(os.str());
  }
  if (m.size() != n) {
    std::ostringstream os;
    os << "GaussianMeasure: mean has length " << m.size() << ", expected " << n;
    throw Error(os.str());
  }
  if (k <= 0 || k >= n) {
    std::ostringstream os;
    os << "GaussianMeasure: split index k=" << k << " must satisfy 0 < k < n=" << n;
    throw Error(os.str());
  }
  if (!A.allFinite() || !m.allFinite()) throw Error("GaussianMeasure: non-finite entries in A or m");

  const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const Index f = n - k;
  if (asymmetry(A.topRightCorner(k, f), A.bottomLeftCorner(f, k).transpose(), scale) > kSymmetryTol)
    throw Error("GaussianMeasure: block A_CF is not the transpose of A_FC");
  if (asymmetry(A.topLeftCorner(k, k), A.topLeftCorner(k, k).transpose(), scale) > kSymmetryTol)
    throw Error("GaussianMeasure: block A_CC is not symmetric");
  if (asymmetry(A.bottomRightCorner(f, f), A.bottomRightCorner(f, f).transpose(), scale) > kSymmetryTol)
    throw Error("GaussianMeasure: block A_FF is not symmetric");

  const MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw Error("GaussianMeasure: covariance A is not positive definite (largest eigenvalue <= 0)");
  if (relative_min_eigenvalue(sym.topLeftCorner(k, k), lmax) <= kDefiniteTol)
    throw Error("GaussianMeasure: block A_CC is singular or not positive definite");
  if (relative_min_eigenvalue(sym.bottomRightCorner(f, f), lmax) <= kDefiniteTol)
    throw Error("GaussianMeasure: block A_FF is singular or not positive definite");
  if (eig.eigenvalues().minCoeff() / lmax <= kDefiniteTol)
    throw Error(
        "GaussianMeasure: covariance A is not positive definite "
        "(Schur complement A_FF - A_FC A_CC^-1 A_CF is not positive)");
}

template <typename Matrix>
Matrix project_impl(const Matrix& B, const GaussianMeasure& measure) {
  const Index n = measure.size();
  const Index k = measure.split();
  if (B.rows() != n || B.cols() != n) {
    std::ostringstream os;
    os << "project_matrix: B is " << B.rows() << "x" << B.cols() << ", measure has dimension " << n;
    throw Error(os.str());
  }
  using Scalar = typename Matrix::Scalar;
  const auto G = measure.regression().template cast<Scalar>();
  Matrix out = Matrix::Zero(n, n);
  out.leftCols(k) = B.leftCols(k) + B.rightCols(n - k) * G;
  return out;
}

}  // namespace

GaussianMeasure::GaussianMeasure(MatrixXd covariance, VectorXd mean, Index split)
    : covariance_(std::move(covariance)), mean_(std::move(mean)), split_(split) {
  validate(covariance_, mean_, split_);
  const Eigen::LLT<MatrixXd> llt(cc());
  if (llt.info() != Eigen::Success) throw Error("GaussianMeasure: Cholesky factorization of A_CC failed");
  // A_FC A_CC^{-1} = (A_CC^{-1} A_CF)^T since A_CC is symmetric.
  regression_ = llt.solve(MatrixXd(cf())).transpose();
}

GaussianMeasure GaussianMeasure::centered(MatrixXd covariance, Index split) {
  const Index n = covariance.rows();
  return GaussianMeasure(std::move(covariance), VectorXd::Zero(n), split);
}

VectorXd condition(const GaussianMeasure& measure, const VectorXd& resolved) {
  const Index k = measure.split();
  if (resolved.size() != k) {
    std::ostringstream os;
    os << "condition: resolved values have length " << resolved.size() << ", expected k=" << k;
    throw Error(os.str());
  }
  VectorXd out(measure.size());
  out.head(k) = resolved;
  out.tail(measure.unresolved()) = measure.mean_f() + measure.regression() * (resolved - measure.mean_c());
  return out;
}

ProjectionPair projection_pair(const GaussianMeasure& measure) {
  const Index n = measure.size();
  const Index k = measure.split();
  ProjectionPair p{MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  p.E.topLeftCorner(k, k).setIdentity();
  p.E.bottomLeftCorner(n - k, k) = measure.regression();
  p.F = MatrixXd::Identity(n, n) - p.E;
  return p;
}

MatrixXd project_matrix(const MatrixXd& B, const GaussianMeasure& measure) { return project_impl(B, measure); }

MatrixXcd project_matrix(const MatrixXcd& B, const GaussianMeasure& measure) { return project_impl(B, measure); }

}  // namespace opclosure
