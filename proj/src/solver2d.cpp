#include "opclosure/solver2d.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "opclosure/error.hpp"

namespace opclosure {

namespace {

[[noreturn]] void geometry_error(const std::string& origin, int line, const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << what;
  throw Error(os.str());
}

void check_material(const Material& m, const std::string& origin, int line) {
  if (!(m.kappa >= 0.0) || !(m.sigma >= 0.0) || !(m.qhat >= 0.0) || !std::isfinite(m.kappa) ||
      !std::isfinite(m.sigma) || !std::isfinite(m.qhat))
    geometry_error(origin, line, "kappa, sigma and qhat must be finite and >= 0");
}

RegionTag default_tag(const Material& m) {
  if (m.qhat > 0.0) return RegionTag::Source;
  return m.kappa > m.sigma ? RegionTag::Absorbing : RegionTag::Scattering;
}

// Outward boundary conductance per unit face length for a cell of
// diffusivity d whose center lies h/2 from the boundary.
double boundary_conductance(BoundaryCondition bc, double d, double h) {
  switch (bc) {
    case BoundaryCondition::Dirichlet:
      return 2.0 * d / h;
    case BoundaryCondition::Robin:
      // Half-cell resistance in series with the Marshak condition u + 2 D du/dn = 0.
      return 1.0 / (0.5 * h / d + 2.0);
    case BoundaryCondition::Neumann:
      return 0.0;
  }
  return 0.0;
}

double harmonic(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

}  // namespace

std::string_view to_string(RegionTag tag) {
  switch (tag) {
    case RegionTag::Scattering:
      return "scattering";
    case RegionTag::Absorbing:
      return "absorbing";
    case RegionTag::Source:
      return "source";
  }
  return "unknown";
}

RegionTag parse_region_tag(std::string_view name) {
  for (auto t : {RegionTag::Scattering, RegionTag::Absorbing, RegionTag::Source})
    if (to_string(t) == name) return t;
  throw Error("unknown region tag '" + std::string(name) + "' (expected scattering, absorbing or source)");
}

std::string_view to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::Dirichlet:
      return "dirichlet";
    case BoundaryCondition::Robin:
      return "robin";
    case BoundaryCondition::Neumann:
      return "neumann";
  }
  return "unknown";
}

BoundaryCondition parse_boundary_condition(std::string_view name) {
  for (auto b : {BoundaryCondition::Dirichlet, BoundaryCondition::Robin, BoundaryCondition::Neumann})
    if (to_string(b) == name) return b;
  throw Error("unknown boundary condition '" + std::string(name) + "' (expected dirichlet, robin or neumann)");
}

Geometry parse_geometry(std::istream& in, const std::string& origin) {
  Geometry g;
  bool have_domain = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::string keyword;
    if (!(words >> keyword)) continue;
    std::vector<std::string> args;
    for (std::string w; words >> w;) args.push_back(w);
    auto number = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(args.at(i), &used);
        if (used != args[i].size()) throw std::invalid_argument(args[i]);
        return v;
      } catch (const std::exception&) {
        geometry_error(origin, line, "malformed number '" + (i < args.size() ? args[i] : std::string()) + "'");
      }
    };
    if (keyword == "domain") {
      if (args.size() != 2) geometry_error(origin, line, "expected: domain <width> <height>");
      g.width = number(0);
      g.height = number(1);
      if (!(g.width > 0.0) || !(g.height > 0.0)) geometry_error(origin, line, "domain size must be positive");
      have_domain = true;
    } else if (keyword == "background") {
      if (args.size() != 3) geometry_error(origin, line, "expected: background <kappa> <sigma> <qhat>");
      g.background = {number(0), number(1), number(2), RegionTag::Scattering};
      check_material(g.background, origin, line);
      g.background.tag = default_tag(g.background);
    } else if (keyword == "rect") {
      if (args.size() != 7 && args.size() != 8)
        geometry_error(origin, line, "expected: rect <x0> <y0> <x1> <y1> <kappa> <sigma> <qhat> [tag]");
      Rect r{number(0), number(1), number(2), number(3), {number(4), number(5), number(6), RegionTag::Scattering}};
      if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) geometry_error(origin, line, "rectangle needs x0 < x1 and y0 < y1");
      check_material(r.material, origin, line);
      try {
        r.material.tag = args.size() == 8 ? parse_region_tag(args[7]) : default_tag(r.material);
      } catch (const Error& e) {
        geometry_error(origin, line, e.what());
      }
      g.rects.push_back(r);
    } else {
      geometry_error(origin, line, "unknown keyword '" + keyword + "'");
    }
  }
  if (!have_domain) geometry_error(origin, line, "missing 'domain' line");
  return g;
}

void write_geometry(std::ostream& out, const Geometry& g) {
  const auto old = out.precision(17);
  out << "domain " << g.width << " " << g.height << "\n";
  out << "background " << g.background.kappa << " " << g.background.sigma << " " << g.background.qhat << "\n";
  for (const auto& r : g.rects)
    out << "rect " << r.x0 << " " << r.y0 << " " << r.x1 << " " << r.y1 << " " << r.material.kappa << " "
        << r.material.sigma << " " << r.material.qhat << " " << to_string(r.material.tag) << "\n";
  out.precision(old);
}

Geometry lattice_geometry() {
  Geometry g;
  g.width = g.height = 7.0;
  g.background = {0.0, 0.2, 0.0, RegionTag::Scattering};
  const Material absorber{10.0, 0.0, 0.0, RegionTag::Absorbing};
  auto absorbing = [](int row, int col) {
    return (row == 1 && col % 2 == 1) || ((row == 2 || row == 4) && (col == 2 || col == 4)) ||
           ((row == 3 || row == 5) && (col == 1 || col == 5));
  };
  for (int row = 0; row < 7; ++row)
    for (int col = 0; col < 7; ++col)
      if (absorbing(row, col)) g.rects.push_back({double(col), double(row), col + 1.0, row + 1.0, absorber});
  g.rects.push_back({3.0, 3.0, 4.0, 4.0, {0.0, 0.2, 1.0, RegionTag::Source}});
  return g;
}

MaterialMap2D::MaterialMap2D(const Geometry& geometry, Index nx, Index ny)
    : nx_(nx), ny_(ny), width_(geometry.width), height_(geometry.height) {
  if (nx_ < 3 || ny_ < 3) throw Error("MaterialMap2D: need at least 3 cells per direction");
  if (!(width_ > 0.0) || !(height_ > 0.0)) throw Error("MaterialMap2D: domain size must be positive");
  cells_.assign(nx_ * ny_, geometry.background);
  for (Index j = 0; j < ny_; ++j) {
    for (Index i = 0; i < nx_; ++i) {
      const double xc = x(i), yc = y(j);
      for (const auto& r : geometry.rects)
        if (xc >= r.x0 && xc < r.x1 && yc >= r.y0 && yc < r.y1) cells_[index(i, j)] = r.material;
    }
  }
}

std::vector<Index> MaterialMap2D::cells_with(RegionTag tag) const {
  std::vector<Index> out;
  for (Index c = 0; c < size(); ++c)
    if (cells_[c].tag == tag) out.push_back(c);
  return out;
}

MaterialMap2D build_lattice(Index nx, Index ny) { return MaterialMap2D(lattice_geometry(), nx, ny); }

Field2D zero_field(const MaterialMap2D& map) { return {VectorXd::Zero(map.size()), 0.0}; }

VectorXd cell_diffusivity(const MaterialMap2D& map, ClosureFamily closure, double t) {
  if (closure != ClosureFamily::Diffusion && closure != ClosureFamily::CrescendoDiffusion)
    throw Error("cell_diffusivity: 2D runs support the diffusion and crescendo closures only, got " +
                std::string(to_string(closure)));
  if (!(t >= 0.0)) throw Error("cell_diffusivity: t must be >= 0");
  VectorXd d(map.size());
  for (Index c = 0; c < map.size(); ++c) {
    const Material& m = map.cells()[c];
    const double total = m.kappa + m.sigma;
    if (!(total > 0.0)) {
      std::ostringstream os;
      os << "cell_diffusivity: kappa+sigma = 0 in cell " << c << ", the diffusion time scale is undefined";
      throw Error(os.str());
    }
    const double tau = 1.0 / total;
    d(c) = (closure == ClosureFamily::Diffusion ? tau : std::min(t, tau)) / 3.0;
  }
  return d;
}

double StepBalance::residual() const {
  const double expected = dt * (source - absorption - boundary_flux);
  const double scale = std::max(energy_after, source * dt);
  const double gap = std::abs((energy_after - energy_before) - expected);
  return scale > 0.0 ? gap / scale : gap;
}

StepBalance step_2d(Field2D& field, const MaterialMap2D& map, ClosureFamily closure, double dt,
                    const Step2DOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("step_2d: dt must be positive and finite");
  if (field.u.size() != map.size()) throw Error("step_2d: field size does not match the material map");
  const Index nx = map.nx(), ny = map.ny(), n = map.size();
  const double dx = map.dx(), dy = map.dy(), area = map.cell_area();
  const VectorXd d = cell_diffusivity(map, closure, field.time + 0.5 * dt);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * n);
  VectorXd rhs(n);
  VectorXd boundary(n);  // outward conductance times face length
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index c = map.index(i, j);
      const Material& m = map.cells()[c];
      double diag = area / dt + m.kappa * area;
      double out = 0.0;
      auto link = [&](Index ni, Index nj, double length, double spacing) {
        const Index nb = map.index(ni, nj);
        const double t = harmonic(d(c), d(nb)) * length / spacing;
        diag += t;
        entries.emplace_back(c, nb, -t);
      };
      if (i > 0) link(i - 1, j, dy, dx); else out += boundary_conductance(options.boundary, d(c), dx) * dy;
      if (i + 1 < nx) link(i + 1, j, dy, dx); else out += boundary_conductance(options.boundary, d(c), dx) * dy;
      if (j > 0) link(i, j - 1, dx, dy); else out += boundary_conductance(options.boundary, d(c), dy) * dx;
      if (j + 1 < ny) link(i, j + 1, dx, dy); else out += boundary_conductance(options.boundary, d(c), dy) * dx;
      entries.emplace_back(c, c, diag + out);
      boundary(c) = out;
      rhs(c) = area * field.u(c) / dt + m.qhat * area;
    }
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(entries.begin(), entries.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(options.cg_tolerance);
  cg.setMaxIterations(10 * n);
  cg.compute(M);
  const VectorXd next = cg.solveWithGuess(rhs, field.u);
  if (cg.info() != Eigen::Success || !next.allFinite()) {
    std::ostringstream os;
    os << "step_2d: conjugate gradient did not converge at t=" << field.time << " after " << cg.iterations()
       << " iterations (relative residual " << cg.error() << ", target " << options.cg_tolerance << ")";
    throw Error(os.str());
  }

  StepBalance b;
  b.dt = dt;
  b.energy_before = field.u.sum() * area;
  b.energy_after = next.sum() * area;
  for (Index c = 0; c < n; ++c) {
    const Material& m = map.cells()[c];
    b.source += m.qhat * area;
    b.absorption += m.kappa * next(c) * area;
    b.boundary_flux += boundary(c) * next(c);
  }
  b.cg_iterations = static_cast<int>(cg.iterations());
  b.cg_error = cg.error();

  field.u = next;
  field.time += dt;
  return b;
}

double energy_balance(const std::vector<StepBalance>& history) {
  double worst = 0.0;
  for (const auto& b : history) worst = std::max(worst, b.residual());
  return worst;
}

double source_peak(const Field2D& field, const MaterialMap2D& map) {
  const auto cells = map.cells_with(RegionTag::Source);
  if (cells.empty()) throw Error("source_peak: the material map has no source cells");
  double peak = -std::numeric_limits<double>::infinity();
  for (Index c : cells) peak = std::max(peak, field.u(c));
  return peak;
}

void write_field_csv(std::ostream& out, const Field2D& field, const MaterialMap2D& map) {
  const auto old = out.precision(17);
  out << "# t=" << field.time << "\n";
  out << "x,y,u0\n";
  for (Index j = 0; j < map.ny(); ++j)
    for (Index i = 0; i < map.nx(); ++i) out << map.x(i) << "," << map.y(j) << "," << field.u(map.index(i, j)) << "\n";
  out.precision(old);
}

}  // namespace opclosure
