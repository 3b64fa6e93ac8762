#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "opclosure/moment_system.hpp"

// Staggered finite differences for the periodic slab moment system
//   d/dt u + B d/dx u = -C u + q  (+ closure terms on u_N).
// Even moments live at cell centers x_i = a + (i+1/2) dx, odd moments at the
// left faces x_i = a + i dx. Time stepping is a Strang composition
//   CN(dt/2) . decay(dt/2) . advection(dt) . decay(dt/2) . CN(dt/2),
// where advection is a velocity-Verlet (Yee) update that alternates between
// the two parities and the CN half steps treat d_x(theta d_x u_N).

namespace opclosure {

class MomentField1D {
 public:
  MomentField1D(int order, Medium1D medium, std::vector<double> source_density = {});

  int order() const { return order_; }
  int moment_count() const { return order_ + 1; }
  Index cells() const { return medium_.cells(); }
  double spacing() const { return medium_.spacing(); }
  double center(Index i) const { return medium_.lower() + (static_cast<double>(i) + 0.5) * spacing(); }
  double face(Index i) const { return medium_.lower() + static_cast<double>(i) * spacing(); }
  /// Grid location of entry i of moment k.
  double position(int k, Index i) const { return k % 2 == 0 ? center(i) : face(i); }

  const Medium1D& medium() const { return medium_; }
  /// qhat per cell (all zero when no source was given).
  const std::vector<double>& source_density() const { return source_; }

  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  VectorXd& moment(int k) { return moments_.at(k); }
  const VectorXd& moment(int k) const { return moments_.at(k); }
  /// Samples f at the grid locations of moment k.
  void set_moment(int k, const std::function<double(double)>& f);

  /// sum_i u_0[i] dx.
  double energy() const;
  void check_finite() const;

 private:
  int order_;
  Medium1D medium_;
  std::vector<double> source_;
  std::vector<VectorXd> moments_;
  double time_ = 0.0;
};

/// Advection, decay and closure data for one field layout.
class SlabOperator {
 public:
  /// Legendre moment matrix B of the field's order.
  SlabOperator(const MomentField1D& layout, const ClosureSpec& closure);
  /// Custom advection matrix (e.g. the two-component model system). Entries
  /// coupling moments of equal parity are only allowed in the last row.
  SlabOperator(const MomentField1D& layout, const ClosureSpec& closure, const MatrixXd& advection);

  /// B with the closure row added to the last row.
  const MatrixXd& advection() const { return advection_; }
  const ClosureCoefficients& closure() const { return closure_; }
  /// Spectral radius of advection().
  double max_speed() const { return max_speed_; }
  /// Largest dt passing the CFL check dt * max_speed <= dx.
  double max_time_step() const;

  Index cells() const { return cells_; }
  int order() const { return order_; }

 private:
  friend void step(MomentField1D& field, const SlabOperator& op, double dt);

  struct Coupling {
    int row;
    int column;
    double weight;
  };

  void build(const MomentField1D& layout, const ClosureSpec& closure, const MatrixXd& base);

  int order_ = 0;
  Index cells_ = 0;
  double spacing_ = 0.0;
  MatrixXd advection_;
  ClosureCoefficients closure_;
  double max_speed_ = 0.0;
  std::vector<Coupling> odd_from_even_;
  std::vector<Coupling> even_from_odd_;
  std::vector<Coupling> same_parity_;  // last row only
  std::vector<VectorXd> decay_;        // c_k at the locations of moment k
  VectorXd source_;                    // 2 kappa qhat at cell centers
};

/// One time step. Throws on CFL violation or layout mismatch.
void step(MomentField1D& field, const SlabOperator& op, double dt);

struct Snapshot {
  double time = 0.0;
  VectorXd x;                      // cell centers
  std::vector<VectorXd> moments;   // u_0..u_N at the centers
};

/// Odd moments are averaged from the two adjacent faces.
Snapshot snapshot(const MomentField1D& field);

/// Advances to each requested time (sorted, >= field.time()) and records a
/// snapshot there; the last step before a snapshot is shortened to land on it.
std::vector<Snapshot> run(MomentField1D& field, const SlabOperator& op, double dt, std::span<const double> times);

/// `# t=<time>`, a header `x,u0,...,uN`, then one row per cell.
void write_snapshot_csv(std::ostream& out, const Snapshot& snap);

struct SlabScenario {
  MomentField1D field;
  SlabOperator op;
  double dt;
};

/// Pulse benchmark on [0,1): kappa = sigma = 1.5, no source,
/// u_0 = exp(-500 (x-1/2)^2), higher moments zero, dt = 0.8 dx.
SlabScenario init_pulse_scenario(const ClosureSpec& closure, Index cells = 1000);

}  // namespace opclosure
