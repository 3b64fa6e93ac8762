#include "opclosure/solver1d.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "opclosure/error.hpp"
#include "tridiagonal.hpp"

namespace opclosure {

namespace {

constexpr double kCflSlack = 1e-8;

bool same_parity(int a, int b) { return (a - b) % 2 == 0; }

Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

// exp(-c h) u + s (1 - exp(-c h)) / c, the exact solution of u' = -c u + s.
double relax(double u, double c, double s, double h) {
  if (c == 0.0) return u + s * h;
  const double decay = std::exp(-c * h);
  return decay * u - s * std::expm1(-c * h) / c;
}

void decay_half(MomentField1D& field, const std::vector<VectorXd>& decay, const VectorXd& source, double h) {
  for (int k = 0; k < field.moment_count(); ++k) {
    VectorXd& u = field.moment(k);
    const VectorXd& c = decay[k];
    if (k == 0) {
      for (Index i = 0; i < u.size(); ++i) u(i) = relax(u(i), c(i), source(i), h);
    } else {
      for (Index i = 0; i < u.size(); ++i) u(i) *= std::exp(-c(i) * h);
    }
  }
}

// d_x(theta d_x v) over h by Crank-Nicolson; edge e joins nodes e and e+1.
void diffuse(VectorXd& v, const std::vector<double>& theta, double dx, double h) {
  const Index n = v.size();
  const double r = 0.5 * h / (dx * dx);
  std::vector<double> a(n), b(n), c(n), d(n);
  for (Index i = 0; i < n; ++i) {
    const double right = theta[i];
    const double left = theta[wrap(i - 1, n)];
    a[i] = -r * left;
    c[i] = -r * right;
    b[i] = 1.0 + r * (left + right);
    d[i] = v(i) + r * (right * (v(wrap(i + 1, n)) - v(i)) - left * (v(i) - v(wrap(i - 1, n))));
  }
  const std::vector<double> x = detail::solve_cyclic_tridiagonal(a, b, c, d);
  for (Index i = 0; i < n; ++i) v(i) = x[i];
}

VectorXd centered_difference(const VectorXd& u, double dx) {
  const Index n = u.size();
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) out(i) = (u(wrap(i + 1, n)) - u(wrap(i - 1, n))) / (2.0 * dx);
  return out;
}

}  // namespace

MomentField1D::MomentField1D(int order, Medium1D medium, std::vector<double> source_density)
    : order_(order), medium_(std::move(medium)), source_(std::move(source_density)) {
  if (order_ < 0) throw Error("MomentField1D: order must be >= 0");
  if (medium_.cells() < 3) throw Error("MomentField1D: need at least 3 cells");
  if (source_.empty()) source_.assign(medium_.cells(), 0.0);
  if (static_cast<Index>(source_.size()) != medium_.cells())
    throw Error("MomentField1D: source density needs one value per cell");
  for (double q : source_)
    if (!(q >= 0.0) || !std::isfinite(q)) throw Error("MomentField1D: source density must be finite and >= 0");
  moments_.assign(order_ + 1, VectorXd::Zero(medium_.cells()));
}

void MomentField1D::set_moment(int k, const std::function<double(double)>& f) {
  VectorXd& u = moment(k);
  for (Index i = 0; i < cells(); ++i) u(i) = f(position(k, i));
}

double MomentField1D::energy() const { return moments_[0].sum() * spacing(); }

void MomentField1D::check_finite() const {
  for (int k = 0; k < moment_count(); ++k) {
    if (!moments_[k].allFinite()) {
      std::ostringstream os;
      os << "MomentField1D: moment u" << k << " became non-finite at t=" << time_;
      throw Error(os.str());
    }
  }
}

SlabOperator::SlabOperator(const MomentField1D& layout, const ClosureSpec& closure) {
  build(layout, closure, advection_matrix(layout.order()));
}

SlabOperator::SlabOperator(const MomentField1D& layout, const ClosureSpec& closure, const MatrixXd& advection) {
  build(layout, closure, advection);
}

void SlabOperator::build(const MomentField1D& layout, const ClosureSpec& closure, const MatrixXd& base) {
  order_ = layout.order();
  cells_ = layout.cells();
  spacing_ = layout.spacing();
  const Index n = order_ + 1;
  if (closure.order != order_) {
    std::ostringstream os;
    os << "SlabOperator: closure order " << closure.order << " does not match field order " << order_;
    throw Error(os.str());
  }
  if (base.rows() != n || base.cols() != n) throw Error("SlabOperator: advection matrix must be (N+1)x(N+1)");
  if (!base.allFinite()) throw Error("SlabOperator: advection matrix has non-finite entries");

  closure_ = closure_coefficients(closure, layout.medium());
  advection_ = base;
  advection_.row(order_) += closure_.advection_row.transpose();

  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      const double w = advection_(k, j);
      if (w == 0.0) continue;
      if (!same_parity(k, j)) {
        (k % 2 == 0 ? even_from_odd_ : odd_from_even_).push_back({k, j, w});
      } else if (k == order_) {
        same_parity_.push_back({k, j, w});
      } else {
        std::ostringstream os;
        os << "SlabOperator: entry B(" << k << "," << j << ") couples equal parities outside the last row";
        throw Error(os.str());
      }
    }
  }
  max_speed_ = n == 1 ? std::abs(advection_(0, 0)) : advection_.eigenvalues().cwiseAbs().maxCoeff();

  const Medium1D& medium = layout.medium();
  decay_.assign(n, VectorXd::Zero(cells_));
  source_ = VectorXd::Zero(cells_);
  for (Index i = 0; i < cells_; ++i) {
    const double kappa = medium.kappa()[i];
    const double total = kappa + medium.sigma()[i];
    const Index left = wrap(i - 1, cells_);
    const double face_total = 0.5 * (total + medium.kappa()[left] + medium.sigma()[left]);
    source_(i) = 2.0 * kappa * layout.source_density()[i];
    for (int k = 0; k < n; ++k) decay_[k](i) = k == 0 ? kappa : (k % 2 == 0 ? total : face_total);
  }
}

double SlabOperator::max_time_step() const {
  return max_speed_ > 0.0 ? spacing_ / max_speed_ : std::numeric_limits<double>::infinity();
}

void step(MomentField1D& field, const SlabOperator& op, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("step: dt must be positive and finite");
  if (field.cells() != op.cells_ || field.order() != op.order_ || field.spacing() != op.spacing_)
    throw Error("step: field layout does not match the operator");
  if (dt * op.max_speed_ > field.spacing() * (1.0 + kCflSlack)) {
    std::ostringstream os;
    os << "step: CFL violated, dt * rho(B) = " << dt * op.max_speed_ << " exceeds dx = " << field.spacing();
    throw Error(os.str());
  }
  const int N = field.order();
  const Index n = field.cells();
  const double dx = field.spacing();
  const double t0 = field.time();

  std::vector<double> theta;
  if (op.closure_.has_diffusion()) {
    // Edge e joins nodes e and e+1 of u_N: a face for even N, a center for odd N.
    const double t_mid = t0 + 0.5 * dt;
    theta.resize(n);
    for (Index e = 0; e < n; ++e)
      theta[e] = op.closure_.theta(t_mid, N % 2 == 0 ? field.face(e + 1) : field.center(e));
  }

  auto same_parity_half = [&](double h) {
    if (op.same_parity_.empty()) return;
    double self = 0.0;
    VectorXd rhs = field.moment(N);
    for (const auto& c : op.same_parity_) {
      if (c.column == N) {
        self = c.weight;
        rhs -= 0.5 * h * c.weight * centered_difference(field.moment(N), dx);
      } else {
        rhs -= h * c.weight * centered_difference(field.moment(c.column), dx);
      }
    }
    const double s = 0.25 * h * self / dx;
    std::vector<double> a(n, -s), b(n, 1.0), cu(n, s), d(rhs.data(), rhs.data() + n);
    const std::vector<double> x = detail::solve_cyclic_tridiagonal(a, b, cu, d);
    for (Index i = 0; i < n; ++i) field.moment(N)(i) = x[i];
  };

  auto kick_odd = [&](double h) {
    // Odd moment at face i: difference of even moments in cells i-1 and i.
    for (const auto& c : op.odd_from_even_) {
      VectorXd& u = field.moment(c.row);
      const VectorXd& v = field.moment(c.column);
      const double w = h * c.weight / dx;
      const double wrap_term = v(0) - v(n - 1);
      u(0) -= w * wrap_term;
      for (Index i = 1; i < n; ++i) u(i) -= w * (v(i) - v(i - 1));
    }
  };
  auto kick_even = [&](double h) {
    // Even moment in cell i: difference of odd moments on faces i+1 and i.
    for (const auto& c : op.even_from_odd_) {
      VectorXd& u = field.moment(c.row);
      const VectorXd& v = field.moment(c.column);
      const double w = h * c.weight / dx;
      for (Index i = 0; i + 1 < n; ++i) u(i) -= w * (v(i + 1) - v(i));
      u(n - 1) -= w * (v(0) - v(n - 1));
    }
  };

  if (!theta.empty()) diffuse(field.moment(N), theta, dx, 0.5 * dt);
  decay_half(field, op.decay_, op.source_, 0.5 * dt);
  same_parity_half(0.5 * dt);
  // The odd-from-even kick reads even moments and writes odd ones (and vice
  // versa), so the in-place loops above never read what they write.
  kick_odd(0.5 * dt);
  kick_even(dt);
  kick_odd(0.5 * dt);
  same_parity_half(0.5 * dt);
  decay_half(field, op.decay_, op.source_, 0.5 * dt);
  if (!theta.empty()) diffuse(field.moment(N), theta, dx, 0.5 * dt);

  field.set_time(t0 + dt);
  field.check_finite();
}

Snapshot snapshot(const MomentField1D& field) {
  Snapshot s;
  s.time = field.time();
  const Index n = field.cells();
  s.x.resize(n);
  for (Index i = 0; i < n; ++i) s.x(i) = field.center(i);
  for (int k = 0; k < field.moment_count(); ++k) {
    const VectorXd& u = field.moment(k);
    if (k % 2 == 0) {
      s.moments.push_back(u);
    } else {
      VectorXd c(n);
      for (Index i = 0; i < n; ++i) c(i) = 0.5 * (u(i) + u(wrap(i + 1, n)));
      s.moments.push_back(c);
    }
  }
  return s;
}

std::vector<Snapshot> run(MomentField1D& field, const SlabOperator& op, double dt, std::span<const double> times) {
  if (!(dt > 0.0)) throw Error("run: dt must be positive");
  std::vector<Snapshot> out;
  double previous = field.time();
  for (double target : times) {
    if (!(target >= previous)) {
      std::ostringstream os;
      os << "run: snapshot times must be sorted and >= the current time " << field.time() << ", got " << target;
      throw Error(os.str());
    }
    previous = target;
    while (true) {
      const double remaining = target - field.time();
      if (remaining <= 1e-9 * dt) break;
      if (remaining <= dt * (1.0 + 1e-9)) {
        step(field, op, remaining);
        field.set_time(target);
        break;
      }
      step(field, op, dt);
    }
    out.push_back(snapshot(field));
    out.back().time = target;
  }
  return out;
}

void write_snapshot_csv(std::ostream& out, const Snapshot& snap) {
  const auto old_precision = out.precision(17);
  out << "# t=" << snap.time << "\n";
  out << "x";
  for (std::size_t k = 0; k < snap.moments.size(); ++k) out << ",u" << k;
  out << "\n";
  for (Index i = 0; i < snap.x.size(); ++i) {
    out << snap.x(i);
    for (const auto& m : snap.moments) out << "," << m(i);
    out << "\n";
  }
  out.precision(old_precision);
}

SlabScenario init_pulse_scenario(const ClosureSpec& closure, Index cells) {
  MomentField1D field(closure.order, Medium1D::uniform(0.0, 1.0, cells, 1.5, 1.5));
  field.set_moment(0, [](double x) { return std::exp(-500.0 * (x - 0.5) * (x - 0.5)); });
  SlabOperator op(field, closure);
  const double dt = 0.8 * field.spacing();
  return {std::move(field), std::move(op), dt};
}

}  // namespace opclosure
