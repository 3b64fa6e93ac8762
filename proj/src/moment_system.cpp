#include "opclosure/moment_system.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

constexpr Index kMaxUnresolved = 3;

void check_order(int order, const char* who) {
  if (order < 0) {
    std::ostringstream os;
    os << who << ": moment order N must be >= 0, got " << order;
    throw Error(os.str());
  }
}

}  // namespace

double legendre_coupling(int k, int l) {
  if (k < 0 || l < 0) return 0.0;
  const double denom = 2.0 * k + 1.0;
  if (l == k + 1) return (k + 1.0) / denom;
  if (l == k - 1) return k / denom;
  return 0.0;
}

MatrixXd advection_matrix(int order) {
  check_order(order, "advection_matrix");
  const Index n = order + 1;
  MatrixXd B = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (k + 1 < n) B(k, k + 1) = legendre_coupling(k, k + 1);
    if (k > 0) B(k, k - 1) = legendre_coupling(k, k - 1);
  }
  return B;
}

MomentMatrices build_matrices(int order, double kappa, double sigma, double source_density) {
  check_order(order, "build_matrices");
  if (!(kappa >= 0.0) || !(sigma >= 0.0)) {
    std::ostringstream os;
    os << "build_matrices: kappa and sigma must be nonnegative, got kappa=" << kappa << " sigma=" << sigma;
    throw Error(os.str());
  }
  MomentMatrices m;
  m.order = order;
  m.advection = advection_matrix(order);
  m.decay = VectorXd::Constant(order + 1, kappa + sigma);
  m.decay(0) = kappa;
  m.source = VectorXd::Zero(order + 1);
  m.source(0) = 2.0 * kappa * source_density;
  return m;
}

MatrixXcd mode_generator(const MomentMatrices& m, double wavenumber) {
  const std::complex<double> i_xi(0.0, wavenumber);
  return -i_xi * m.advection.cast<std::complex<double>>() - m.decay_matrix().cast<std::complex<double>>();
}

std::string_view to_string(ClosureFamily family) {
  switch (family) {
    case ClosureFamily::PN:
      return "pn";
    case ClosureFamily::Diffusion:
      return "diffusion";
    case ClosureFamily::DiffusionCorrection:
      return "diffusion_correction";
    case ClosureFamily::CrescendoDiffusion:
      return "crescendo";
    case ClosureFamily::CrescendoCorrection:
      return "crescendo_correction";
    case ClosureFamily::TrapezoidalCorrection:
      return "trapezoidal_correction";
    case ClosureFamily::GeneralLinear:
      return "general_linear";
  }
  return "unknown";
}

ClosureFamily parse_closure_family(std::string_view name) {
  for (auto f : {ClosureFamily::PN, ClosureFamily::Diffusion, ClosureFamily::DiffusionCorrection,
                 ClosureFamily::CrescendoDiffusion, ClosureFamily::CrescendoCorrection,
                 ClosureFamily::TrapezoidalCorrection, ClosureFamily::GeneralLinear}) {
    if (to_string(f) == name) return f;
  }
  throw Error("unknown closure family '" + std::string(name) +
              "' (expected pn, diffusion, diffusion_correction, crescendo, crescendo_correction, "
              "trapezoidal_correction or general_linear)");
}

bool has_diffusion(ClosureFamily family) {
  return family != ClosureFamily::PN && family != ClosureFamily::GeneralLinear;
}

MemoryQuadrature quadrature_of(ClosureFamily family) {
  switch (family) {
    case ClosureFamily::CrescendoDiffusion:
    case ClosureFamily::CrescendoCorrection:
      return MemoryQuadrature::Crescendo;
    case ClosureFamily::TrapezoidalCorrection:
      return MemoryQuadrature::Trapezoidal;
    default:
      return MemoryQuadrature::Constant;
  }
}

void ClosureSpec::validate() const {
  check_order(order, "ClosureSpec");
  if (family == ClosureFamily::GeneralLinear) {
    if (!measure) throw Error("ClosureSpec: general_linear closure requires a measure");
    if (measure->split() != order + 1) {
      std::ostringstream os;
      os << "ClosureSpec: general_linear measure split is " << measure->split() << ", expected N+1=" << order + 1;
      throw Error(os.str());
    }
  }
}

Medium1D::Medium1D(double a, double b, std::vector<double> kappa, std::vector<double> sigma)
    : a_(a), b_(b), kappa_(std::move(kappa)), sigma_(std::move(sigma)) {
  if (!(b_ > a_)) throw Error("Medium1D: domain must satisfy a < b");
  if (kappa_.empty() || kappa_.size() != sigma_.size()) throw Error("Medium1D: kappa and sigma need equal, nonzero length");
  for (std::size_t i = 0; i < kappa_.size(); ++i) {
    if (!(kappa_[i] >= 0.0) || !(sigma_[i] >= 0.0) || !std::isfinite(kappa_[i]) || !std::isfinite(sigma_[i])) {
      std::ostringstream os;
      os << "Medium1D: negative or non-finite coefficient in cell " << i;
      throw Error(os.str());
    }
  }
}

Medium1D Medium1D::uniform(double a, double b, Index cells, double kappa, double sigma) {
  if (cells <= 0) throw Error("Medium1D: need at least one cell");
  return Medium1D(a, b, std::vector<double>(cells, kappa), std::vector<double>(cells, sigma));
}

bool Medium1D::uniform_coefficients() const {
  return std::all_of(kappa_.begin(), kappa_.end(), [&](double k) { return k == kappa_.front(); }) &&
         std::all_of(sigma_.begin(), sigma_.end(), [&](double s) { return s == sigma_.front(); });
}

double Medium1D::tau_at(double x) const {
  const Index n = cells();
  const double length = b_ - a_;
  double s = std::fmod(x - a_, length);
  if (s < 0.0) s += length;
  s /= spacing();
  const double nearest = std::round(s);
  auto total = [&](Index i) {
    i = ((i % n) + n) % n;
    return kappa_[i] + sigma_[i];
  };
  auto inverse = [](double c) { return c > 0.0 ? 1.0 / c : std::numeric_limits<double>::infinity(); };
  if (std::abs(s - nearest) < 1e-9) {
    const auto right = static_cast<Index>(nearest);
    // Harmonic mean of the neighbouring tau values.
    return inverse(0.5 * (total(right - 1) + total(right)));
  }
  return inverse(total(static_cast<Index>(std::floor(s))));
}

double correction_prefactor(int order) {
  check_order(order, "correction_prefactor");
  const double n1 = order + 1.0;
  return n1 * n1 / ((2.0 * order + 1.0) * (2.0 * order + 3.0));
}

double diffusion_theta(const ClosureSpec& spec, double kappa, double sigma, double t) {
  if (!has_diffusion(spec.family)) return 0.0;
  if (!(kappa + sigma > 0.0)) {
    std::ostringstream os;
    os << "diffusion_theta: kappa+sigma must be positive for " << to_string(spec.family)
       << " (time scale tau = 1/(kappa+sigma) is undefined)";
    throw Error(os.str());
  }
  return correction_prefactor(spec.order) * memory_coefficient(quadrature_of(spec.family), 1.0 / (kappa + sigma), t);
}

ClosureCoefficients closure_coefficients(const ClosureSpec& spec, const Medium1D& medium) {
  spec.validate();
  ClosureCoefficients out;
  out.advection_row = VectorXd::Zero(spec.order + 1);
  if (spec.family == ClosureFamily::GeneralLinear) {
    out.advection_row = general_linear_closure(*spec.measure, spec.order);
    return out;
  }
  if (!has_diffusion(spec.family)) return out;

  for (Index i = 0; i < medium.cells(); ++i) {
    if (!(medium.kappa()[i] + medium.sigma()[i] > 0.0)) {
      std::ostringstream os;
      os << "closure_coefficients: kappa+sigma = 0 in cell " << i << "; " << to_string(spec.family)
         << " needs a finite time scale tau";
      throw Error(os.str());
    }
  }
  const double prefactor = correction_prefactor(spec.order);
  const MemoryQuadrature policy = quadrature_of(spec.family);
  out.diffusion = [prefactor, policy, medium](double t, double x) {
    return prefactor * memory_coefficient(policy, medium.tau_at(x), t);
  };
  return out;
}

VectorXd general_linear_closure(const GaussianMeasure& measure, int order) {
  check_order(order, "general_linear_closure");
  const Index k = order + 1;
  if (measure.split() != k) {
    std::ostringstream os;
    os << "general_linear_closure: measure split is " << measure.split() << ", expected N+1=" << k;
    throw Error(os.str());
  }
  const double weight = legendre_coupling(order, order + 1);
  if (measure.unresolved() > kMaxUnresolved) {
    std::clog << "warning: general_linear_closure: measure over " << measure.size() << " moments truncated to "
              << k + kMaxUnresolved << "\n";
    const Index m = k + kMaxUnresolved;
    const GaussianMeasure truncated(measure.covariance().topLeftCorner(m, m), measure.mean().head(m), k);
    return weight * truncated.regression().row(0).transpose();
  }
  return weight * measure.regression().row(0).transpose();
}

double legendre(int l, double mu) {
  if (l < 0) throw Error("legendre: degree must be nonnegative");
  if (l == 0) return 1.0;
  double p_prev = 1.0;
  double p = mu;
  for (int n = 1; n < l; ++n) {
    const double next = ((2.0 * n + 1.0) * mu * p - n * p_prev) / (n + 1.0);
    p_prev = p;
    p = next;
  }
  return p;
}

double reconstruct_intensity(std::span<const double> moments, double mu) {
  if (!(mu >= -1.0 && mu <= 1.0)) throw Error("reconstruct_intensity: mu must lie in [-1, 1]");
  double sum = 0.0;
  double p_prev = 0.0;
  double p = 1.0;
  for (std::size_t l = 0; l < moments.size(); ++l) {
    sum += 0.5 * (2.0 * l + 1.0) * moments[l] * p;
    const double next = ((2.0 * l + 1.0) * mu * p - static_cast<double>(l) * p_prev) / (l + 1.0);
    p_prev = p;
    p = next;
  }
  return sum;
}

}  // namespace opclosure
