// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit
// when anything fails. Criteria 6-10 share a single benchmark run.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fracfield/driver.hpp"
#include "fracfield/vtk_io.hpp"

using namespace fracfield;

namespace {

int n_failed = 0;

void report(int id, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": "
            << detail << "\n";
  if (!ok) ++n_failed;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- 1. constitutive limit --------------------------------------------

void criterion_1() {
  MaterialModel m;  // mu = 80.8, beta = 1e-3, alpha = 1
  const double limit = 1.0 / (2.0 * m.mu * m.beta);
  bool monotone = true;
  double prev = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double r = std::pow(10.0, -4.0 + 12.0 * k / 400.0);
    const double v = r * r * psi1(r, m);
    if (v <= prev) monotone = false;
    prev = v;
  }
  const double at8 = 1e16 * psi1(1e8, m);
  const double rel = std::abs(at8 - limit) / limit;
  report(1, "constitutive stress limit", monotone && rel < 1e-3,
         "r^2 psi1 monotone=" + std::string(monotone ? "yes" : "no") +
             ", value(1e8)=" + fmt(at8) + " vs " + fmt(limit) +
             " (rel err " + fmt(rel) + ")");
}

// --- 2. FEM convergence ------------------------------------------------

double manufactured_l2_error(int divisions) {
  QuadMesh mesh = QuadMesh::build_uniform(divisions);
  DofMap dofmap(mesh);
  SparseSystem sys = assemble(
      mesh, dofmap,
      [](const CellContext& ctx, std::array<std::array<double, 4>, 4>& ke,
         std::array<double, 4>& fe) {
        const double scale = 1.0 / ctx.h;
        for (int q = 0; q < 4; ++q) {
          const ShapeValues sv = shape_values(ctx.rule->points[q]);
          const double w = ctx.rule->weights[q] * ctx.h * ctx.h;
          for (int i = 0; i < 4; ++i) {
            fe[i] += 0.0;
            for (int j = 0; j < 4; ++j) {
              ke[i][j] += w * scale * scale *
                          (sv.grad[i].x * sv.grad[j].x +
                           sv.grad[i].y * sv.grad[j].y);
            }
          }
        }
      });
  std::vector<std::pair<int, double>> bc;
  for (int v : dofmap.boundary_nodes()) {
    const double x = mesh.vertices[v].x, y = mesh.vertices[v].y;
    bc.emplace_back(v, x * x - y * y);
  }
  apply_dirichlet(sys, bc);
  Eigen::VectorXd u = solve(sys);
  dofmap.distribute_constraints(u);

  // Sample on a per-cell grid away from the Gauss points: the 2x2 rule
  // is blind to the interpolation error of this particular solution.
  double err2 = 0.0;
  const int ns = 4;
  for (int c : mesh.active_cells()) {
    const Cell& cell = mesh.cells[c];
    const double h = mesh.cell_size(c);
    const Vec2 lo = mesh.cell_lower(c);
    const double wq = h * h / (ns * ns);
    for (int a = 0; a < ns; ++a) {
      for (int b = 0; b < ns; ++b) {
        const Vec2 rp{(a + 0.5) / ns, (b + 0.5) / ns};
        const ShapeValues sv = shape_values(rp);
        double uh = 0.0;
        for (int i = 0; i < 4; ++i) uh += sv.n[i] * u[cell.v[i]];
        const double x = lo.x + rp.x * h, y = lo.y + rp.y * h;
        const double d = uh - (x * x - y * y);
        err2 += wq * d * d;
      }
    }
  }
  return std::sqrt(err2);
}

void criterion_2() {
  const double e16 = manufactured_l2_error(16);
  const double e32 = manufactured_l2_error(32);
  const double e64 = manufactured_l2_error(64);
  const double p1 = std::log2(e16 / e32);
  const double p2 = std::log2(e32 / e64);
  const bool ok = std::abs(p1 - 2.0) <= 0.2 && std::abs(p2 - 2.0) <= 0.2;
  report(2, "FEM L2 convergence", ok,
         "errors {" + fmt(e16) + ", " + fmt(e32) + ", " + fmt(e64) +
             "}, orders {" + fmt(p1) + ", " + fmt(p2) + "}");
}

// --- 3. calibration ----------------------------------------------------

void criterion_3() {
  const double Gc = 2.7, cv = 8.0 / 3.0;
  const double hs[3] = {0.008, 0.004, 0.002};
  const double want[3] = {493.75, 1975.0, 7900.0};
  bool ok = true;
  std::string detail = "delta {";
  for (int k = 0; k < 3; ++k) {
    const double d = calibrate_delta(hs[k], Gc, cv);
    if (std::abs(d - want[k]) / want[k] > 0.01) ok = false;
    const double eta = calibrate_eta(hs[k], Gc, cv, d);
    if (std::abs(eta - 3.125) > 1e-12) ok = false;
    detail += fmt(d) + (k < 2 ? ", " : "}");
  }
  detail += ", eta = 3.125 at every h (tabulated 9.36 is not reproducible "
            "from the printed formulas; flagged, not matched)";
  report(3, "calibration", ok, detail);
}

// --- 4. global-xi stationarity vs brute force --------------------------

void criterion_4() {
  QuadMesh mesh = QuadMesh::build_uniform(32);
  const int n = int(mesh.vertices.size());
  LengthScaleConfig lsc;
  lsc.delta = 129.6;
  const double Gc = 2.7;
  std::mt19937 rng(20260823);
  std::uniform_real_distribution<double> amp(-0.3, 0.3);
  std::uniform_real_distribution<double> freq(1.0, 3.0);
  bool ok = true;
  std::string detail;
  for (int trial = 0; trial < 5; ++trial) {
    const double a1 = amp(rng), a2 = amp(rng);
    const double f1 = freq(rng), f2 = freq(rng);
    Eigen::VectorXd phi(n);
    for (int v = 0; v < n; ++v) {
      const double x = mesh.vertices[v].x, y = mesh.vertices[v].y;
      const double val = 0.55 + a1 * std::sin(2.0 * M_PI * f1 * x) +
                         a2 * std::cos(2.0 * M_PI * f2 * y);
      phi[v] = std::clamp(val, 0.0, 1.0);
    }
    const double xi_star = xi_global_optimal(mesh, phi, lsc, Gc);

    // Independent quadrature of the two xi-dependent energy integrals,
    // then a brute-force scan of A/xi + B xi.
    double A = 0.0, B = lsc.delta;  // unit square: int delta = delta
    const QuadratureRule& rule = QuadratureRule::gauss2x2();
    for (int c : mesh.active_cells()) {
      const double area = mesh.cell_area(c);
      const CellField cf = evaluate_on_cell(mesh, c, phi, rule);
      for (int q = 0; q < 4; ++q) {
        const double w = rule.weights[q] * area;
        A += w * (Gc / lsc.c_v) * (1.0 - cf.value[q] + lsc.eta);
        B += w * (Gc / lsc.c_v) *
             (cf.gradient[q].x * cf.gradient[q].x +
              cf.gradient[q].y * cf.gradient[q].y);
      }
    }
    const int npts = 2000;
    const double lo = 1e-3, hi = 0.5;
    int best = 0;
    double best_e = std::numeric_limits<double>::max();
    for (int k = 0; k < npts; ++k) {
      const double xi = lo + (hi - lo) * k / (npts - 1);
      const double e = A / xi + B * xi;
      if (e < best_e) { best_e = e; best = k; }
    }
    const double cell = (hi - lo) / (npts - 1);
    const double xi_scan = lo + cell * best;
    if (std::abs(xi_star - xi_scan) > cell) ok = false;
    if (trial == 0) {
      detail = "e.g. xi*=" + fmt(xi_star) + " vs scan " + fmt(xi_scan) +
               " (cell " + fmt(cell) + ")";
    }
  }
  report(4, "global-xi stationarity", ok, "5 random fields, " + detail);
}

// --- 5. Table-2 trend --------------------------------------------------

void criterion_5() {
  const char* presets[3] = {"table2_128", "table2_256", "table2_512"};
  const double pinned[3] = {0.13605, 0.06927, 0.039844};
  double xi[3] = {0, 0, 0};
  double mh[3] = {0, 0, 0};
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    RunConfig cfg = preset_config(presets[k]);
    cfg.finalize();
    mh[k] = cfg.xi_iv_multiplier * cfg.base_h();
    RunReport rep = run_simulation(cfg);
    xi[k] = rep.records.back().xi_mean;  // global mode: uniform field
    if (!(xi[k] > mh[k])) ok = false;
    if (std::abs(xi[k] - pinned[k]) / pinned[k] > 0.5) ok = false;
  }
  if (!(xi[0] > xi[1] && xi[1] > xi[2])) ok = false;
  report(5, "global-optimal xi trend", ok,
         "xi {" + fmt(xi[0]) + ", " + fmt(xi[1]) + ", " + fmt(xi[2]) +
             "} vs pins {0.13605, 0.06927, 0.039844}, floors m*h {" +
             fmt(mh[0]) + ", " + fmt(mh[1]) + ", " + fmt(mh[2]) + "}");
}

// --- shared benchmark run for 6-10 ------------------------------------

struct BenchmarkData {
  RunReport rep;
  bool max_principle_ok = true;
  double worst_violation = 0.0;
  int min_level = 99, max_level = -1;
  long long steps = 0;
};

BenchmarkData run_benchmark() {
  BenchmarkData data;
  RunConfig cfg = preset_config("local64");
  cfg.finalize();
  Eigen::VectorXd prev_phi;
  data.rep = run_simulation(
      cfg, [&](int, const QuadMesh& mesh, const FieldState& st,
               const EnergyRecord&) {
        ++data.steps;
        for (int c : mesh.active_cells()) {
          data.min_level = std::min(data.min_level, mesh.cells[c].level);
          data.max_level = std::max(data.max_level, mesh.cells[c].level);
        }
        // Irreversibility: vertex slots are append-only across AMR, so
        // the common prefix is the same set of material points. Skip
        // slots that are hanging or retired on either mesh state.
        const DofMap dm(mesh);
        const Eigen::Index nc = std::min<Eigen::Index>(
            prev_phi.size(), st.phase.phi.size());
        for (Eigen::Index v = 0; v < nc; ++v) {
          if (!dm.is_node(int(v)) || dm.is_hanging(int(v))) continue;
          const double d = st.phase.phi[v] - prev_phi[v];
          if (st.phase.phi[v] < 0.0 || d > 1e-12) {
            data.max_principle_ok = false;
            data.worst_violation = std::max(data.worst_violation, d);
          }
        }
        prev_phi = st.phase.phi;
      });
  return data;
}

void criterion_6(const BenchmarkData& d) {
  report(6, "maximum principle", d.max_principle_ok,
         d.max_principle_ok
             ? "0 <= phi(t_k) <= phi(t_{k-1}) + 1e-12 at every node of all " +
                   std::to_string(d.steps) + " steps"
             : "worst increase " + fmt(d.worst_violation));
}

void criterion_7(const BenchmarkData& d) {
  const auto& r = d.rep.records;
  const double surf_final = r.back().surface;
  const double total_final = r.back().total;
  bool ok = surf_final > 0.0;
  std::string detail;

  // (i) initial interval: surface ~ 0, bulk ~ total.
  size_t k0 = 0;
  while (k0 < r.size() && std::abs(r[k0].surface) <= 0.02 * surf_final &&
         std::abs(r[k0].total - r[k0].bulk) <= 0.02 * total_final) {
    ++k0;
  }
  if (k0 < 3) ok = false;

  // (ii) first sustained surface increase over the running minimum.
  double running_min = std::numeric_limits<double>::max();
  size_t k_init = r.size();
  for (size_t k = 0; k < r.size(); ++k) {
    running_min = std::min(running_min, r[k].surface);
    if (r[k].surface > running_min + 0.01 * surf_final) {
      k_init = k;
      break;
    }
  }
  if (k_init == r.size() || k_init < k0) ok = false;

  // (iii) unique global bulk peak after initiation.
  size_t k_peak = 0;
  for (size_t k = 1; k < r.size(); ++k) {
    if (r[k].bulk > r[k_peak].bulk) k_peak = k;
  }
  int at_peak = 0;
  for (const EnergyRecord& rec : r) {
    if (rec.bulk == r[k_peak].bulk) ++at_peak;
  }
  if (at_peak != 1 || k_peak < k_init) ok = false;

  // (iv) terminal plateau.
  const size_t tail = std::min<size_t>(8, r.size());
  double tmin = std::numeric_limits<double>::max(), tmax = 0.0, bmax = 0.0;
  for (size_t k = r.size() - tail; k < r.size(); ++k) {
    tmin = std::min(tmin, r[k].total);
    tmax = std::max(tmax, r[k].total);
    bmax = std::max(bmax, r[k].bulk);
  }
  if ((tmax - tmin) / tmax > 0.02) ok = false;
  if (bmax > 0.05 * r[k_peak].bulk) ok = false;

  // Timing: initiation calibrated to ~0.25 puts the peak in [0.3, 0.5].
  const double t_init = k_init < r.size() ? r[k_init].time : -1.0;
  const double t_peak = r[k_peak].time;
  if (std::abs(t_init - 0.25) > 0.05) ok = false;
  if (t_peak < 0.3 || t_peak > 0.5) ok = false;

  detail = "zero-surface through t=" + fmt(k0 ? r[k0 - 1].time : 0.0) +
           ", initiation t=" + fmt(t_init) + ", bulk peak " +
           fmt(r[k_peak].bulk) + " at t=" + fmt(t_peak) +
           ", plateau drift " + fmt((tmax - tmin) / tmax) +
           ", terminal bulk/peak " + fmt(bmax / r[k_peak].bulk);
  report(7, "energy phase ordering", ok, detail);
}

void criterion_8(const BenchmarkData& d) {
  const QuadMesh& mesh = d.rep.mesh;
  const Eigen::VectorXd& phi = d.rep.state.phase.phi;
  const int finest = d.max_level;
  const double h_min = 1.0 / double(1u << finest);
  const int nrows = 1 << finest;
  std::vector<double> lo(nrows, 2.0), hi(nrows, -1.0);

  // Per-cell bilinear sampling binned into finest-cell rows.
  const int ns = 4;
  for (int c : mesh.active_cells()) {
    const Cell& cell = mesh.cells[c];
    double corner[4];
    double cmin = 2.0;
    for (int i = 0; i < 4; ++i) {
      corner[i] = phi[cell.v[i]];
      cmin = std::min(cmin, corner[i]);
    }
    if (cmin >= 0.1) continue;
    const double h = mesh.cell_size(c);
    const Vec2 low = mesh.cell_lower(c);
    const int sub = ns << (finest - cell.level);
    for (int a = 0; a <= sub; ++a) {
      for (int b = 0; b <= sub; ++b) {
        const double rx = double(a) / sub, ry = double(b) / sub;
        const ShapeValues sv = shape_values({rx, ry});
        double val = 0.0;
        for (int i = 0; i < 4; ++i) val += sv.n[i] * corner[i];
        if (val >= 0.1) continue;
        const double x = low.x + rx * h;
        const int row = std::min(nrows - 1, int((low.y + ry * h) / h_min));
        lo[row] = std::min(lo[row], x);
        hi[row] = std::max(hi[row], x);
      }
    }
  }

  int first = -1, last = -1;
  bool contiguous = true, contains = true;
  double worst = 0.0;
  int gap_rows = 0;
  for (int j = 0; j < nrows; ++j) {
    if (hi[j] < 0.0) continue;
    if (first < 0) first = j;
    if (last >= 0 && j != last + 1) {
      contiguous = false;
      ++gap_rows;
    }
    last = j;
    if (lo[j] > 0.5 || hi[j] < 0.5) contains = false;
    worst = std::max({worst, hi[j] - 0.5, 0.5 - lo[j]});
  }
  const bool spans = first == 0 && last == nrows - 1;
  const bool narrow = worst <= 3.0 * h_min + 1e-12;
  report(8, "crack path", spans && contiguous && contains && narrow,
         "phi<0.1 band spans y, contiguous=" +
             std::string(contiguous ? "yes" : "no") + ", contains x=0.5, "
             "max half-width " + fmt(worst) + " = " + fmt(worst / h_min) +
             " finest cells (limit 3)");
}

void criterion_9(const BenchmarkData& d) {
  const auto& r = d.rep.records;
  double xi_min_all = 1e9, xi_max_all = 0.0;
  for (const EnergyRecord& rec : r) {
    xi_min_all = std::min(xi_min_all, rec.xi_min);
    xi_max_all = std::max(xi_max_all, rec.xi_max);
  }
  // Damaged regime: cells whose quadrature-mean phi is in (0.05, 0.95).
  const QuadMesh& mesh = d.rep.mesh;
  const QuadratureRule& rule = QuadratureRule::gauss2x2();
  double xi_damaged = 1e9;
  const auto& active = mesh.active_cells();
  for (int k = 0; k < int(active.size()); ++k) {
    const CellField cf =
        evaluate_on_cell(mesh, active[k], d.rep.state.phase.phi, rule);
    const double mean =
        0.25 * (cf.value[0] + cf.value[1] + cf.value[2] + cf.value[3]);
    if (mean > 0.05 && mean < 0.95) {
      xi_damaged = std::min(xi_damaged, d.rep.state.xi.cell_xi[k]);
    }
  }
  const bool ok = d.min_level >= 6 && d.max_level <= 10 &&
                  xi_min_all >= 0.011 && xi_max_all <= 0.16 &&
                  xi_damaged >= 0.015 && xi_damaged <= 0.045;
  report(9, "AMR bounds", ok,
         "levels [" + std::to_string(d.min_level) + ", " +
             std::to_string(d.max_level) + "], xi [" + fmt(xi_min_all) +
             ", " + fmt(xi_max_all) + "], damaged-regime xi_min " +
             fmt(xi_damaged));
}

void criterion_10(const BenchmarkData& d) {
  const int n = 1 << d.max_level;
  const long long uniform_dofs = (long long)(n + 1) * (n + 1);
  const long long baseline = uniform_dofs * d.steps;
  const double ratio = double(d.rep.dof_steps) / double(baseline);
  report(10, "AMR efficiency", ratio <= 0.40,
         "adaptive dof-steps " + std::to_string(d.rep.dof_steps) + " vs " +
             std::to_string(baseline) + " uniform at level " +
             std::to_string(d.max_level) + " (ratio " + fmt(ratio) + ")");
}

// --- 11. determinism and transfer exactness ----------------------------

void criterion_11() {
  RunConfig cfg;
  cfg.mesh.divisions_per_side = 16;
  cfg.mesh.amr_enabled = false;
  cfg.length_scale.mode = XiMode::Fixed;
  cfg.loading.c = 1.0;
  cfg.loading.dt = 0.01;
  cfg.loading.max_steps = 8;
  cfg.crack.y_bot = 0.575;
  cfg.xi_iv_multiplier = 2.0;
  cfg.finalize();
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fracfield_acceptance";
  fs::create_directories(dir);
  std::string csv[2];
  for (int k = 0; k < 2; ++k) {
    RunReport rep = run_simulation(cfg);
    const std::string path =
        (dir / ("run" + std::to_string(k) + ".csv")).string();
    write_energy_csv(path, rep.records);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    csv[k] = buf.str();
  }
  fs::remove_all(dir);
  const bool identical = !csv[0].empty() && csv[0] == csv[1];

  // Pure-refinement transfer keeps the energies to round-off.
  QuadMesh mesh = QuadMesh::build_uniform(8, 2);
  const int nv = int(mesh.vertices.size());
  FieldState state;
  state.phi_airy = Eigen::VectorXd(nv);
  state.phase.phi = Eigen::VectorXd(nv);
  state.phase.crack_threshold = 0.01;
  for (int v = 0; v < nv; ++v) {
    const double x = mesh.vertices[v].x, y = mesh.vertices[v].y;
    state.phi_airy[v] = 0.4 * x - 0.9 * y;
    state.phase.phi[v] = std::min(1.0, 0.55 + 0.45 * x);
  }
  state.xi = uniform_xi_field(mesh, 0.05);
  MaterialModel m;
  LengthScaleConfig lsc;
  const double e0 =
      bulk_energy(mesh, state.phi_airy, state.phase.phi, m) +
      surface_energy(mesh, state.phase.phi, state.xi, lsc, m.Gc);
  std::set<int> flags(mesh.active_cells().begin(),
                      std::next(mesh.active_cells().begin(), 16));
  auto [fine, corr] = refine_and_coarsen(mesh, flags, {});
  FieldState out = transfer_solution(mesh, fine, corr, state);
  const double e1 =
      bulk_energy(fine, out.phi_airy, out.phase.phi, m) +
      surface_energy(fine, out.phase.phi, out.xi, lsc, m.Gc);
  const double drift = std::abs(e1 - e0) / std::abs(e0);

  report(11, "determinism and transfer", identical && drift < 1e-10,
         std::string("CSV re-run ") +
             (identical ? "bit-identical" : "DIFFERS") +
             ", refinement energy drift " + fmt(drift));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  BenchmarkData bench = run_benchmark();
  criterion_6(bench);
  criterion_7(bench);
  criterion_8(bench);
  criterion_9(bench);
  criterion_10(bench);
  criterion_11();
  if (n_failed > 0) {
    std::cout << n_failed << " criteria failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
