#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "opclosure/moment_system.hpp"

// Cell-centered diffusion solver on a rectangle:
//   d/dt u = div(D grad u) - kappa u + qhat,
// backward Euler in time, five-point stencil with harmonic-mean face
// diffusivities, conjugate-gradient linear solves.

namespace opclosure {

enum class RegionTag { Scattering, Absorbing, Source };

std::string_view to_string(RegionTag tag);
RegionTag parse_region_tag(std::string_view name);

struct Material {
  double kappa = 0.0;
  double sigma = 0.0;
  double qhat = 0.0;
  RegionTag tag = RegionTag::Scattering;
};

/// Axis-aligned rectangle [x0, x1) x [y0, y1) of one material.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  Material material;
};

/// Text description of a layout:
///   domain <width> <height>
///   background <kappa> <sigma> <qhat>
///   rect <x0> <y0> <x1> <y1> <kappa> <sigma> <qhat> [scattering|absorbing|source]
/// '#' starts a comment. Later rectangles override earlier ones.
struct Geometry {
  double width = 0.0;
  double height = 0.0;
  Material background;
  std::vector<Rect> rects;
};

Geometry parse_geometry(std::istream& in, const std::string& origin = "<geometry>");
void write_geometry(std::ostream& out, const Geometry& geometry);

/// 7x7 cm lattice: scattering background (kappa 0, sigma 0.2), eleven unit
/// absorbers (kappa 10, sigma 0) and a unit source square (qhat 1) in the
/// middle. Cell (col, row) with col = floor(x), row = floor(y) absorbs when
/// row = 1 and col is odd, row in {2,4} and col in {2,4}, or row in {3,5}
/// and col in {1,5}.
Geometry lattice_geometry();

class MaterialMap2D {
 public:
  /// Cells take the material of the last rectangle containing their center.
  MaterialMap2D(const Geometry& geometry, Index nx, Index ny);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index size() const { return nx_ * ny_; }
  double width() const { return width_; }
  double height() const { return height_; }
  double dx() const { return width_ / static_cast<double>(nx_); }
  double dy() const { return height_ / static_cast<double>(ny_); }
  double cell_area() const { return dx() * dy(); }
  Index index(Index i, Index j) const { return j * nx_ + i; }
  double x(Index i) const { return (static_cast<double>(i) + 0.5) * dx(); }
  double y(Index j) const { return (static_cast<double>(j) + 0.5) * dy(); }

  const Material& at(Index i, Index j) const { return cells_[index(i, j)]; }
  const std::vector<Material>& cells() const { return cells_; }
  /// Cells tagged `tag`.
  std::vector<Index> cells_with(RegionTag tag) const;

 private:
  Index nx_, ny_;
  double width_, height_;
  std::vector<Material> cells_;
};

MaterialMap2D build_lattice(Index nx, Index ny);

enum class BoundaryCondition { Dirichlet, Robin, Neumann };

std::string_view to_string(BoundaryCondition bc);
BoundaryCondition parse_boundary_condition(std::string_view name);

struct Field2D {
  VectorXd u;  // index j*nx + i
  double time = 0.0;
};

Field2D zero_field(const MaterialMap2D& map);

/// Cell diffusivity: 1/(3(kappa+sigma)) for Diffusion, min(t, tau)/3 for
/// CrescendoDiffusion. Other families are rejected.
VectorXd cell_diffusivity(const MaterialMap2D& map, ClosureFamily closure, double t);

/// Energy bookkeeping of one step; every quantity is integrated over the
/// domain and the source, absorption and boundary terms are evaluated at the
/// new time level as backward Euler does.
struct StepBalance {
  double dt = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double source = 0.0;        // S
  double absorption = 0.0;    // A = sum kappa u area
  double boundary_flux = 0.0; // Phi, outward
  int cg_iterations = 0;
  double cg_error = 0.0;

  /// |dE - dt (S - A - Phi)| / max(E, S dt).
  double residual() const;
};

struct Step2DOptions {
  BoundaryCondition boundary = BoundaryCondition::Dirichlet;
  double cg_tolerance = 1e-13;
};

/// One backward-Euler step. Throws if CG does not converge within 10 n
/// iterations.
StepBalance step_2d(Field2D& field, const MaterialMap2D& map, ClosureFamily closure, double dt,
                    const Step2DOptions& options = {});

/// Largest residual over a step history.
double energy_balance(const std::vector<StepBalance>& history);

/// Largest u over the source-tagged cells.
double source_peak(const Field2D& field, const MaterialMap2D& map);

/// `# t=<time>`, header `x,y,u0`, then one row per cell (x fastest).
void write_field_csv(std::ostream& out, const Field2D& field, const MaterialMap2D& map);

}  // namespace opclosure
