#include "opclosure/scenario_cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "opclosure/error.hpp"
#include "opclosure/model_problem.hpp"
#include "opclosure/spatial_moments.hpp"
#include "opclosure/verification.hpp"

namespace opclosure {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kAllKeys[] = {
    "scenario", "closure",     "N",    "kappa",    "sigma",    "qhat",    "cells",      "cfl",
    "x0",       "reference_N", "measure_correlation",          "nx",      "ny",         "dt",
    "geometry", "boundary",    "beta", "gamma",    "tau",      "lower",   "upper",      "seed",
    "t_final",  "snapshot_times",      "output_dir"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join_times(const std::vector<double>& times) {
  std::string out;
  for (std::size_t i = 0; i < times.size(); ++i) out += (i ? "," : "") + format_double(times[i]);
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class ConfigParser {
 public:
  ConfigParser(std::string origin, std::map<std::string, Entry> entries)
      : origin_(std::move(origin)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << origin_;
    if (auto it = entries_.find(key); it != entries_.end()) os << ":" << it->second.line;
    os << ": " << what;
    throw Error(os.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& value(const std::string& key) const { return entries_.at(key).value; }

  double number(const std::string& key) const {
    const std::string& v = value(key);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
      fail(key, "malformed number '" + v + "' for '" + key + "'");
    return out;
  }

  long long integer(const std::string& key) const {
    const std::string& v = value(key);
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail(key, "malformed integer '" + v + "' for '" + key + "'");
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split_list(value(key))) {
      double x = 0.0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
      if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || !std::isfinite(x))
        fail(key, "malformed number '" + item + "' in '" + key + "'");
      out.push_back(x);
    }
    return out;
  }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

void validate(const ScenarioConfig& c, const ConfigParser& p) {
  auto require = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) p.fail(key, what);
  };
  const ScenarioKind k = c.scenario;
  if (k == ScenarioKind::Verify) return;

  require(c.t_final > 0.0, "t_final", "t_final must be positive");
  require(!c.snapshot_times.empty(), "snapshot_times", "snapshot_times must list at least one time");
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) {
    const double t = c.snapshot_times[i];
    require(t >= 0.0 && t <= c.t_final, "snapshot_times",
            "snapshot time " + format_double(t) + " lies outside [0, t_final=" + format_double(c.t_final) + "]");
    require(i == 0 || t > c.snapshot_times[i - 1], "snapshot_times", "snapshot_times must be strictly increasing");
  }

  if (k == ScenarioKind::Slab1D || k == ScenarioKind::Lattice2D)
    require(!c.closures.empty(), "closure", "closure must name at least one closure family");

  if (k == ScenarioKind::Slab1D) {
    require(c.order >= 0, "N", "N must be >= 0");
    require(c.reference_order >= 1 && c.reference_order >= c.order, "reference_N", "reference_N must be >= max(1, N)");
    require(c.kappa >= 0.0, "kappa", "kappa must be >= 0");
    require(c.sigma >= 0.0, "sigma", "sigma must be >= 0");
    require(c.qhat >= 0.0, "qhat", "qhat must be >= 0");
    require(c.cells >= 8, "cells", "cells must be >= 8");
    require(c.cfl > 0.0 && c.cfl <= 1.0, "cfl", "cfl must lie in (0, 1]");
    require(std::abs(c.measure_correlation) < 1.0, "measure_correlation", "measure_correlation must lie in (-1, 1)");
    for (ClosureFamily f : c.closures)
      require(!has_diffusion(f) || c.kappa + c.sigma > 0.0, "closure",
              std::string(to_string(f)) + " needs kappa + sigma > 0");
  }
  if (k == ScenarioKind::Lattice2D) {
    require(c.nx >= 8, "nx", "nx must be >= 8");
    require(c.ny >= 8, "ny", "ny must be >= 8");
    require(c.dt > 0.0, "dt", "dt must be positive");
    for (ClosureFamily f : c.closures)
      require(f == ClosureFamily::Diffusion || f == ClosureFamily::CrescendoDiffusion, "closure",
              "lattice2d supports the diffusion and crescendo closures, got " + std::string(to_string(f)));
  }
  if (k == ScenarioKind::Model) {
    require(c.cells >= 8, "cells", "cells must be >= 8");
    require(c.gamma > 0.0, "gamma", "gamma must be positive");
    require(c.beta * c.beta < c.gamma, "beta", "beta^2 < gamma is required for a positive definite measure");
    require(c.tau > 0.0, "tau", "tau must be positive");
    require(c.upper > c.lower, "upper", "upper must exceed lower");
  }
}

// ---------------------------------------------------------------------------
// Output helpers

std::string time_label(double t) { return format_double(t); }

template <typename Writer>
fs::path write_file(ScenarioReport& report, const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  writer(out);
  if (!out) throw Error("write failed for " + path.string());
  report.files.push_back(path);
  return path;
}

void write_snapshot_file(const fs::path& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_snapshot_csv(out, snap);
}

// strtod keeps subnormal values that from_chars and stod reject as out of range.
double read_cell(const std::string& item, const fs::path& path) {
  char* end = nullptr;
  const double v = std::strtod(item.c_str(), &end);
  if (item.empty() || end != item.c_str() + item.size()) throw Error(path.string() + ": malformed value '" + item + "'");
  return v;
}

Snapshot read_snapshot_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  Snapshot snap;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# t=", 0) != 0) throw Error(path.string() + ": missing time line");
  snap.time = read_cell(line.substr(4), path);
  std::getline(in, line);
  const std::size_t columns = split_list(line).size();
  if (columns < 2) throw Error(path.string() + ": bad header");
  std::vector<std::vector<double>> cols(columns);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto items = split_list(line);
    if (items.size() != columns) throw Error(path.string() + ": ragged row");
    for (std::size_t c = 0; c < columns; ++c) cols[c].push_back(read_cell(items[c], path));
  }
  snap.x = Eigen::Map<VectorXd>(cols[0].data(), static_cast<Index>(cols[0].size()));
  for (std::size_t c = 1; c < columns; ++c)
    snap.moments.push_back(Eigen::Map<VectorXd>(cols[c].data(), static_cast<Index>(cols[c].size())));
  return snap;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::vector<double> run_times(const ScenarioConfig& c) {
  std::vector<double> times = c.snapshot_times;
  if (times.empty() || times.back() < c.t_final) times.push_back(c.t_final);
  return times;
}

// ---------------------------------------------------------------------------
// slab1d

ClosureSpec slab_closure(const ScenarioConfig& c, ClosureFamily family, int order) {
  ClosureSpec spec{family, order, std::nullopt};
  if (family == ClosureFamily::GeneralLinear) {
    const Index n = order + 2;
    MatrixXd A(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) A(i, j) = std::pow(c.measure_correlation, std::abs(double(i - j)));
    spec.measure = GaussianMeasure::centered(A, order + 1);
  }
  return spec;
}

SlabScenario make_slab(const ScenarioConfig& c, const ClosureSpec& closure) {
  MomentField1D field(closure.order, Medium1D::uniform(0.0, 1.0, c.cells, c.kappa, c.sigma),
                      std::vector<double>(static_cast<std::size_t>(c.cells), c.qhat));
  field.set_moment(0, [](double x) { return std::exp(-500.0 * (x - 0.5) * (x - 0.5)); });
  SlabOperator op(field, closure);
  const double dt = c.cfl * field.spacing() / std::max(1.0, op.max_speed());
  return {std::move(field), std::move(op), dt};
}

std::string reference_key(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "slab1d-reference v1\nN=" << c.reference_order << "\nkappa=" << format_double(c.kappa)
     << "\nsigma=" << format_double(c.sigma) << "\nqhat=" << format_double(c.qhat) << "\ncells=" << c.cells
     << "\ncfl=" << format_double(c.cfl) << "\ntimes=" << join_times(run_times(c)) << "\n";
  return os.str();
}

std::vector<Snapshot> reference_snapshots(const ScenarioConfig& c, const fs::path& root, ScenarioReport& report) {
  const std::string key = reference_key(c);
  const fs::path dir = root / "cache" / ("reference_" + hex64(fnv1a64(key)));
  const std::vector<double> times = run_times(c);
  auto file_for = [&](std::size_t i) { return dir / ("t" + std::to_string(i) + ".csv"); };

  if (fs::exists(dir / "key.txt")) {
    std::ifstream in(dir / "key.txt", std::ios::binary);
    const std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (stored == key) {
      std::vector<Snapshot> out;
      for (std::size_t i = 0; i < times.size(); ++i) out.push_back(read_snapshot_file(file_for(i)));
      report.notes.push_back("reference P_" + std::to_string(c.reference_order) + " loaded from " + dir.string());
      return out;
    }
  }
  SlabScenario s = make_slab(c, {ClosureFamily::PN, c.reference_order, std::nullopt});
  std::vector<Snapshot> out = run(s.field, s.op, s.dt, times);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < times.size(); ++i) write_snapshot_file(file_for(i), out[i]);
  std::ofstream(dir / "key.txt", std::ios::binary) << key;
  report.notes.push_back("reference P_" + std::to_string(c.reference_order) + " computed and cached in " + dir.string());
  // Round-trip through the cache format so cached and fresh runs agree bitwise.
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = read_snapshot_file(file_for(i));
  return out;
}

void run_slab(const ScenarioConfig& c, const fs::path& root, ScenarioReport& report) {
  const fs::path& dir = report.output_dir;
  const std::vector<double> times = run_times(c);
  const std::vector<Snapshot> reference = reference_snapshots(c, root, report);
  const std::string ref_name = "reference_N" + std::to_string(c.reference_order);
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i)
    write_file(report, dir / (ref_name + "_t" + time_label(times[i]) + ".csv"),
               [&](std::ostream& out) { write_snapshot_csv(out, reference[i]); });

  for (ClosureFamily family : c.closures) {
    const std::string label = std::string(to_string(family)) + "_N" + std::to_string(c.order);
    SlabScenario s = make_slab(c, slab_closure(c, family, c.order));
    const int L = c.order + 1;
    const SpatialMomentTable initial = measure_moments(s.field, L, c.x0);
    const std::vector<Snapshot> snaps = run(s.field, s.op, s.dt, times);
    const double dx = s.field.spacing();

    for (std::size_t i = 0; i < times.size(); ++i) {
      const VectorXd diff = snaps[i].moments[0] - reference[i].moments[0];
      const std::string at = label + ".t=" + time_label(times[i]);
      report.metrics.push_back({"l2_error." + at, std::sqrt(diff.squaredNorm() * dx)});
      report.metrics.push_back({"linf_error." + at, diff.cwiseAbs().maxCoeff()});
      report.metrics.push_back({"energy." + at, snaps[i].moments[0].sum() * dx});
      if (i >= c.snapshot_times.size()) continue;
      write_file(report, dir / (label + "_t" + time_label(times[i]) + ".csv"),
                 [&](std::ostream& out) { write_snapshot_csv(out, snaps[i]); });
      write_file(report, dir / (label + "_moments_t" + time_label(times[i]) + ".csv"),
                 [&](std::ostream& out) { write_moment_table_csv(out, measure_moments(snaps[i], L, c.x0)); });
    }

    if (c.qhat == 0.0) {
      const MomentMatrices big = build_matrices(c.order + 8, c.kappa, c.sigma, 0.0);
      const SpatialMomentTable oracle = evolve_moments_oracle(big.advection, big.decay, initial, c.t_final);
      const SpatialMomentTable measured = measure_moments(s.field, L, c.x0);
      const VectorXd scale = absolute_moments(s.field, L, c.x0);
      for (int l = 0; l <= L; ++l)
        report.metrics.push_back({"moment_rel_dev." + label + ".l" + std::to_string(l),
                                  std::abs(measured(l, 0) - oracle(l, 0)) / scale(l)});
    }
  }
}

// ---------------------------------------------------------------------------
// lattice2d

void run_lattice(const ScenarioConfig& c, ScenarioReport& report) {
  Geometry geometry = lattice_geometry();
  if (!c.geometry.empty()) {
    std::ifstream in(c.geometry);
    if (!in) throw Error("cannot open geometry file " + c.geometry);
    geometry = parse_geometry(in, c.geometry);
  }
  const MaterialMap2D map(geometry, c.nx, c.ny);
  Step2DOptions options;
  options.boundary = c.boundary;
  const std::vector<double> times = run_times(c);

  std::map<ClosureFamily, std::vector<double>> peaks;
  for (ClosureFamily family : c.closures) {
    const std::string label(to_string(family));
    Field2D f = zero_field(map);
    std::vector<StepBalance> history;
    std::vector<double>& peak = peaks[family];
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double target = times[i];
      while (target - f.time > 1e-9 * c.dt) {
        const double h = target - f.time <= c.dt * (1.0 + 1e-9) ? target - f.time : c.dt;
        history.push_back(step_2d(f, map, family, h, options));
        peak.push_back(source_peak(f, map));
      }
      f.time = target;
      const std::string at = label + ".t=" + time_label(target);
      report.metrics.push_back({"energy." + at, f.u.sum() * map.cell_area()});
      report.metrics.push_back({"source_peak." + at, source_peak(f, map)});
      if (i < c.snapshot_times.size())
        write_file(report, report.output_dir / (label + "_t" + time_label(target) + ".csv"),
                   [&](std::ostream& out) { write_field_csv(out, f, map); });
    }
    int iterations = 0;
    for (const auto& b : history) iterations = std::max(iterations, b.cg_iterations);
    const double residual = energy_balance(history);
    report.metrics.push_back({"energy_residual_max." + label, residual});
    report.metrics.push_back({"cg_iterations_max." + label, static_cast<double>(iterations)});
    report.metrics.push_back({"steps." + label, static_cast<double>(history.size())});
    if (residual > 1e-8)
      report.failures.push_back(label + ": energy-balance residual " + format_double(residual) + " exceeds 1e-8");
  }

  if (peaks.count(ClosureFamily::Diffusion) && peaks.count(ClosureFamily::CrescendoDiffusion)) {
    const auto& d = peaks[ClosureFamily::Diffusion];
    const auto& cr = peaks[ClosureFamily::CrescendoDiffusion];
    int violations = 0;
    for (std::size_t i = 0; i < std::min(d.size(), cr.size()); ++i)
      if (cr[i] < d[i]) ++violations;
    report.metrics.push_back({"peak_order_violations", static_cast<double>(violations)});
    if (violations > 0)
      report.failures.push_back("crescendo source peak fell below diffusion at " + std::to_string(violations) +
                                " steps");
  }
}

// ---------------------------------------------------------------------------
// model

void run_model(const ScenarioConfig& c, ScenarioReport& report) {
  const PeriodicGrid grid{c.lower, c.upper, c.cells};
  const double mid = 0.5 * (c.lower + c.upper), len = grid.length();
  VectorXd u1(c.cells);
  for (Index i = 0; i < c.cells; ++i) {
    const double s = (grid.x(i) - mid) / len;
    u1(i) = std::exp(-500.0 * s * s);
  }
  for (double t : c.snapshot_times) {
    const VectorXd mean = mean_solution(grid, u1, c.beta, t).u1;
    const VectorXd foop = foop_solution(grid, u1, c.beta, t);
    const VectorXd soop = soop_solution(grid, u1, c.beta, c.tau, t, MemoryQuadrature::Constant);
    const VectorXd cresc = soop_solution(grid, u1, c.beta, c.tau, t, MemoryQuadrature::Crescendo);
    const std::string at = ".t=" + time_label(t);
    for (const auto& [name, v] : {std::pair<const char*, const VectorXd*>{"foop", &foop}, {"soop", &soop},
                                  {"crescendo", &cresc}})
      report.metrics.push_back({std::string("l2_vs_mean.") + name + at,
                                std::sqrt((*v - mean).squaredNorm() * grid.spacing())});
    write_file(report, report.output_dir / ("model_t" + time_label(t) + ".csv"), [&](std::ostream& out) {
      const auto old = out.precision(17);
      out << "# t=" << t << " beta=" << c.beta << " tau=" << c.tau << "\n";
      out << "x,mean,foop,soop,crescendo\n";
      for (Index i = 0; i < c.cells; ++i)
        out << grid.x(i) << "," << mean(i) << "," << foop(i) << "," << soop(i) << "," << cresc(i) << "\n";
      out.precision(old);
    });
  }
}

// ---------------------------------------------------------------------------
// verify

void run_verify(const ScenarioConfig& c, ScenarioReport& report) {
  const std::vector<SuiteResult> suites{projection_suite(c.seed), dyson_suite(c.seed + 1),
                                        full_op_suite(c.seed + 2), moment_suite()};
  write_file(report, report.output_dir / "verify.csv", [&](std::ostream& out) {
    const auto old = out.precision(17);
    out << "suite,passed,total,worst\n";
    for (const auto& s : suites) out << s.name << "," << s.passed << "," << s.total << "," << s.worst << "\n";
    out.precision(old);
  });
  for (const auto& s : suites) {
    report.metrics.push_back({"verify." + s.name + ".passed", static_cast<double>(s.passed)});
    report.metrics.push_back({"verify." + s.name + ".total", static_cast<double>(s.total)});
    report.metrics.push_back({"verify." + s.name + ".worst", s.worst});
    if (!s.ok()) report.failures.push_back(s.name + ": " + s.detail);
  }
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Slab1D:
      return "slab1d";
    case ScenarioKind::Lattice2D:
      return "lattice2d";
    case ScenarioKind::Model:
      return "model";
    case ScenarioKind::Verify:
      return "verify";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto k : {ScenarioKind::Slab1D, ScenarioKind::Lattice2D, ScenarioKind::Model, ScenarioKind::Verify})
    if (to_string(k) == name) return k;
  throw Error("unknown scenario '" + std::string(name) + "' (expected slab1d, lattice2d, model or verify)");
}

std::vector<std::string_view> scenario_keys(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Slab1D:
      return {"scenario", "closure", "N", "kappa", "sigma", "qhat", "cells", "cfl", "x0", "reference_N",
              "measure_correlation", "t_final", "snapshot_times", "output_dir"};
    case ScenarioKind::Lattice2D:
      return {"scenario", "closure", "nx", "ny", "dt", "geometry", "boundary", "t_final", "snapshot_times",
              "output_dir"};
    case ScenarioKind::Model:
      return {"scenario", "cells", "beta", "gamma", "tau", "lower", "upper", "t_final", "snapshot_times",
              "output_dir"};
    case ScenarioKind::Verify:
      return {"scenario", "seed", "output_dir"};
  }
  return {};
}

ScenarioConfig default_config(ScenarioKind kind) {
  ScenarioConfig c;
  c.scenario = kind;
  switch (kind) {
    case ScenarioKind::Slab1D:
      c.closures = {ClosureFamily::PN};
      c.order = 1;
      c.t_final = 0.4;
      c.snapshot_times = {0.1, 0.2, 0.3, 0.4};
      break;
    case ScenarioKind::Lattice2D:
      c.closures = {ClosureFamily::Diffusion, ClosureFamily::CrescendoDiffusion};
      c.t_final = 2.0;
      c.snapshot_times = {0.5, 1.0, 1.5, 2.0};
      break;
    case ScenarioKind::Model:
      c.t_final = 3.0;
      c.snapshot_times = {0.1, 1.0, 2.0, 3.0};
      break;
    case ScenarioKind::Verify:
      c.t_final = 0.0;
      break;
  }
  return c;
}

ScenarioConfig parse_config(std::string_view text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  auto fail_at = [&](int at, const std::string& what) -> void {
    throw Error(origin + ":" + std::to_string(at) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) fail_at(line, "expected key=value, got '" + stripped + "'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (std::find(std::begin(kAllKeys), std::end(kAllKeys), key) == std::end(kAllKeys))
      fail_at(line, "unknown key '" + key + "'");
    if (auto it = entries.find(key); it != entries.end())
      fail_at(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
    entries[key] = {value, line};
  }

  auto scenario_it = entries.find("scenario");
  if (scenario_it == entries.end()) throw Error(origin + ": missing required key 'scenario'");
  if (scenario_it->second.value.empty()) fail_at(scenario_it->second.line, "empty value for required key 'scenario'");
  ScenarioKind kind;
  try {
    kind = parse_scenario_kind(scenario_it->second.value);
  } catch (const Error& e) {
    fail_at(scenario_it->second.line, e.what());
    throw;
  }

  const ConfigParser p(origin, entries);
  const auto allowed = scenario_keys(kind);
  for (const auto& [key, entry] : entries)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      p.fail(key, "key '" + key + "' does not apply to scenario " + std::string(to_string(kind)));

  ScenarioConfig c = default_config(kind);
  auto set_number = [&](const char* key, double& field) {
    if (p.has(key)) field = p.number(key);
  };
  auto set_index = [&](const char* key, Index& field) {
    if (p.has(key)) field = static_cast<Index>(p.integer(key));
  };
  if (p.has("closure")) {
    c.closures.clear();
    for (const std::string& name : split_list(p.value("closure"))) {
      try {
        c.closures.push_back(parse_closure_family(name));
      } catch (const Error& e) {
        p.fail("closure", e.what());
      }
    }
  }
  if (p.has("N")) c.order = static_cast<int>(p.integer("N"));
  if (p.has("reference_N")) c.reference_order = static_cast<int>(p.integer("reference_N"));
  set_number("kappa", c.kappa);
  set_number("sigma", c.sigma);
  set_number("qhat", c.qhat);
  set_number("cfl", c.cfl);
  set_number("x0", c.x0);
  set_number("measure_correlation", c.measure_correlation);
  set_index("cells", c.cells);
  set_index("nx", c.nx);
  set_index("ny", c.ny);
  set_number("dt", c.dt);
  if (p.has("geometry")) c.geometry = p.value("geometry");
  if (p.has("boundary")) {
    try {
      c.boundary = parse_boundary_condition(p.value("boundary"));
    } catch (const Error& e) {
      p.fail("boundary", e.what());
    }
  }
  set_number("beta", c.beta);
  set_number("gamma", c.gamma);
  set_number("tau", c.tau);
  set_number("lower", c.lower);
  set_number("upper", c.upper);
  if (p.has("seed")) {
    const long long s = p.integer("seed");
    if (s < 0) p.fail("seed", "seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  set_number("t_final", c.t_final);
  if (p.has("snapshot_times")) c.snapshot_times = p.numbers("snapshot_times");
  if (p.has("output_dir")) c.output_dir = p.value("output_dir");

  validate(c, p);
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ScenarioConfig c = parse_config(text, path.string());
  if (!c.geometry.empty() && fs::path(c.geometry).is_relative())
    c.geometry = (path.parent_path() / c.geometry).lexically_normal().string();
  return c;
}

std::string serialize(const ScenarioConfig& c) {
  std::ostringstream os;
  for (std::string_view key : scenario_keys(c.scenario)) {
    os << key << "=";
    if (key == "scenario") os << to_string(c.scenario);
    else if (key == "closure") {
      for (std::size_t i = 0; i < c.closures.size(); ++i) os << (i ? "," : "") << to_string(c.closures[i]);
    } else if (key == "N") os << c.order;
    else if (key == "kappa") os << format_double(c.kappa);
    else if (key == "sigma") os << format_double(c.sigma);
    else if (key == "qhat") os << format_double(c.qhat);
    else if (key == "cells") os << c.cells;
    else if (key == "cfl") os << format_double(c.cfl);
    else if (key == "x0") os << format_double(c.x0);
    else if (key == "reference_N") os << c.reference_order;
    else if (key == "measure_correlation") os << format_double(c.measure_correlation);
    else if (key == "nx") os << c.nx;
    else if (key == "ny") os << c.ny;
    else if (key == "dt") os << format_double(c.dt);
    else if (key == "geometry") os << c.geometry;
    else if (key == "boundary") os << to_string(c.boundary);
    else if (key == "beta") os << format_double(c.beta);
    else if (key == "gamma") os << format_double(c.gamma);
    else if (key == "tau") os << format_double(c.tau);
    else if (key == "lower") os << format_double(c.lower);
    else if (key == "upper") os << format_double(c.upper);
    else if (key == "seed") os << c.seed;
    else if (key == "t_final") os << format_double(c.t_final);
    else if (key == "snapshot_times") os << join_times(c.snapshot_times);
    else if (key == "output_dir") os << c.output_dir;
    os << "\n";
  }
  return os.str();
}

void ScenarioReport::write(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "scenario " << to_string(scenario) << ": " << (ok() ? "ok" : "FAILED") << "\n";
  out << "output directory: " << output_dir.string() << "\n";
  for (const auto& n : notes) out << "note: " << n << "\n";
  for (const auto& f : files) out << "wrote " << f.string() << "\n";
  for (const auto& f : failures) out << "failure: " << f << "\n";
  for (const auto& m : metrics) out << "metric," << m.name << "," << m.value << "\n";
  out.precision(old);
}

fs::path output_root() {
  if (const char* env = std::getenv("OPCLOSURE_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return fs::path("out");
}

ScenarioReport run_scenario(const ScenarioConfig& config, const fs::path& root) {
  ScenarioReport report;
  report.scenario = config.scenario;
  const fs::path sub = config.output_dir.empty() ? fs::path(std::string(to_string(config.scenario)))
                                                 : fs::path(config.output_dir);
  report.output_dir = sub.is_absolute() ? sub : root / sub;
  fs::create_directories(report.output_dir);
  try {
    switch (config.scenario) {
      case ScenarioKind::Slab1D:
        run_slab(config, root, report);
        break;
      case ScenarioKind::Lattice2D:
        run_lattice(config, report);
        break;
      case ScenarioKind::Model:
        run_model(config, report);
        break;
      case ScenarioKind::Verify:
        run_verify(config, report);
        break;
    }
  } catch (const Error& e) {
    throw Error("scenario " + std::string(to_string(config.scenario)) + ": " + e.what());
  }
  return report;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace opclosure
