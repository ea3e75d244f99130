// Command-line front end. Exit codes: 0 success, 1 input error, 2 numerical
// invariant failure.

#include "stokescell/rescale.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace stokescell;
namespace fs = std::filesystem;

namespace {

struct Config {
  std::string shape;
  std::string n;
  int dim = 0;
  std::vector<double> etas, eps;
  std::string out;
  int threads = 0;
  double tol = 0;
  std::vector<int> ks;
  unsigned seed = 7;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ShapeSpec need_shape(const Config& c) {
  if (c.shape.empty()) throw InputError("--shape is required");
  ShapeSpec s = load_shape(c.shape);
  if (c.dim && c.dim != s.dim) throw InputError("--dim does not match the shape file");
  return s;
}

MeshSize mesh_size(const Config& c, int dim) {
  if (!c.n.empty()) return parse_mesh_size(c.n);
  return dim == 2 ? MeshSize{256, 0} : MeshSize{16, 32};
}

std::vector<double> etas_for(const Config& c, int dim) {
  std::vector<double> e = c.etas;
  if (e.empty()) e = dim == 2 ? std::vector<double>{1e-2, 1e-3, 1e-4} : std::vector<double>{0.05, 0.1, 0.2};
  for (double x : e)
    if (!(x > 0 && x < 1)) throw InputError("eta values must lie in (0, 1)");
  return e;
}

std::vector<int> ks_for(const Config& c, int dim) {
  std::vector<int> ks;
  for (int k : c.ks) {
    if (k < 1 || k > dim) throw InputError("--k must lie in 1..dim");
    ks.push_back(k - 1);
  }
  return ks;
}

// writes to <out>/<name> when --out is set, and always echoes to stdout
void emit(const Config& c, const std::string& name, const std::string& text) {
  std::cout << text;
  if (c.out.empty()) return;
  fs::create_directories(c.out);
  fs::path p = fs::path(c.out) / name;
  std::ofstream f(p);
  if (!f) throw InputError("cannot write '" + p.string() + "'");
  f << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_capacity(const Config& c) {
  ShapeSpec spec = need_shape(c);
  MeshSize ms = mesh_size(c, spec.dim);
  const double tol = c.tol > 0 ? c.tol : 1e-8;
  std::vector<MeshSize> levels;
  if (spec.dim == 2)
    levels = {{std::max(ms.a / 4, 16), 0}, {std::max(ms.a / 2, 16), 0}, ms};
  else
    levels = {{std::max(ms.a / 2, 6), ms.b ? std::max(ms.b / 2, 6) : 0}, ms};
  // coarse levels clamped to the minimum mesh; drop duplicates
  levels.erase(std::unique(levels.begin(), levels.end(),
                           [](const MeshSize& x, const MeshSize& y) { return x.a == y.a && x.b == y.b; }),
               levels.end());
  std::vector<CapacityResult> caps;
  std::vector<int> unknowns;
  for (const auto& l : levels) {
    BoundaryMesh m = build_mesh(spec, l);
    caps.push_back(solve_kernel_basis(m));
    unknowns.push_back(m.unknowns());
  }
  const CapacityResult& fine = caps.back();
  std::ostringstream tab;
  tab << "level,mesh,unknowns";
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j) tab << ",A" << i + 1 << j + 1;
  tab << ",asymmetry,kernel_residual,delta_to_finest\n" << std::setprecision(12);
  for (std::size_t l = 0; l < caps.size(); ++l) {
    const MatX& A = caps[l].A;
    tab << l << ',' << levels[l].a << (levels[l].b ? "x" + std::to_string(levels[l].b) : "") << ',' << unknowns[l];
    for (int i = 0; i < spec.dim; ++i)
      for (int j = 0; j < spec.dim; ++j) tab << ',' << A(i, j);
    tab << ',' << (A - A.transpose()).cwiseAbs().maxCoeff() << ',' << caps[l].kernel_residual << ','
        << (A - fine.A).cwiseAbs().maxCoeff() << '\n';
  }
  nlohmann::json j = capacity_to_json(fine);
  j["mesh"] = c.n.empty() ? (spec.dim == 2 ? "256" : "16x32") : c.n;
  emit(c, "capacity.json", j.dump(2) + "\n");
  emit(c, "capacity_convergence.csv", tab.str());

  double asym = (fine.A - fine.A.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) throw Failure("capacity matrix asymmetry " + fmt(asym) + " exceeds " + fmt(tol));
  if (spec.dim == 3) {
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (fine.A + fine.A.transpose()));
    if (!(es.eigenvalues().minCoeff() > 0)) throw Failure("capacity matrix is not positive definite");
  }
  return 0;
}

int cmd_cell(const Config& c) {
  ShapeSpec spec = need_shape(c);
  CellOptions opt;
  if (c.tol > 0) opt.consistency_tol = c.tol;
  auto hole = make_hole(spec, mesh_size(c, spec.dim));
  std::vector<int> ks = ks_for(c, spec.dim);
  std::vector<CellRow> rows;
  for (double eta : etas_for(c, spec.dim)) {
    auto setup = make_cell_setup(hole, eta, opt);
    std::vector<CellCorrector> cs;
    if (ks.empty())
      cs = solve_cells(setup);
    else
      for (int k : ks) cs.push_back(solve_cell(setup, k));
    for (const auto& cc : cs) rows.push_back(cell_row(cc, corrector_average(cc), boundary_residual(cc)));
  }
  std::ostringstream os;
  write_cell_csv(os, rows);
  emit(c, "cell.csv", os.str());
  return 0;
}

int cmd_rates(const Config& c) {
  ShapeSpec spec = need_shape(c);
  SweepOptions opt;
  opt.etas = etas_for(c, spec.dim);
  opt.ks = ks_for(c, spec.dim);
  std::vector<double> eps = c.eps.empty() ? std::vector<double>{0.1} : c.eps;
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw InputError("eps values must lie in (0, 1)");
  opt.eps = eps[0];
  if (c.tol > 0) opt.cell.consistency_tol = c.tol;
  Sweep sw = run_sweep(make_hole(spec, mesh_size(c, spec.dim)), opt);

  std::vector<CellRow> rows;
  for (const auto& e : sw.entries) rows.push_back(cell_row(e.c, e.avg, e.boundary_residual));
  std::ostringstream cell, rates, checks, summary;
  write_cell_csv(cell, rows);
  bool all = true;
  bool first = true;
  for (double e : eps) {
    Sweep s2 = sw;
    s2.eps = e;
    if (e != opt.eps)
      for (auto& x : s2.entries) x.ts = two_scale_measures(x.c, x.avg, x.norms, x.samples, e);
    std::ostringstream r;
    write_rate_csv(r, s2);
    std::string txt = r.str();
    rates << (first ? txt : txt.substr(txt.find('\n') + 1));
    std::vector<int> kk = opt.ks;
    if (kk.empty())
      for (int k = 0; k < sw.dim; ++k) kk.push_back(k);
    for (int k : kk) {
      auto ch = rate_checks(s2, k);
      std::ostringstream t;
      write_checks_csv(t, ch);
      std::string tt = t.str();
      if (first) checks << "eps,k," << tt.substr(0, tt.find('\n') + 1);
      std::istringstream lines(tt.substr(tt.find('\n') + 1));
      for (std::string ln; std::getline(lines, ln);) checks << e << ',' << k + 1 << ',' << ln << '\n';
      for (const auto& x : ch) {
        all = all && x.pass;
        summary << (x.pass ? "PASS " : "FAIL ") << "eps=" << e << " k=" << k + 1 << ' ' << x.name << ' ' << x.kind
                << '=' << std::setprecision(4) << x.value << " (target " << x.target << " +- " << x.window << ")\n";
      }
      first = false;
    }
  }
  double worst_res = 0, worst_dev = 0;
  for (const auto& e : sw.entries) {
    worst_res = std::max(worst_res, e.boundary_residual);
    worst_dev = std::max(worst_dev, e.c.solve_dev);
  }
  bool res_ok = worst_res <= 1e-6;
  summary << (res_ok ? "PASS " : "FAIL ") << "boundary_residual max=" << std::setprecision(4) << worst_res
          << " (<= 1e-06)\n";
  summary << "INFO projected_vs_direct max=" << worst_dev << '\n';
  all = all && res_ok;
  summary << (all ? "ALL PASS\n" : "SOME FAILED\n");
  emit(c, "cell.csv", cell.str());
  emit(c, "rates.csv", rates.str());
  emit(c, "checks.csv", checks.str());
  emit(c, "summary.txt", summary.str());
  return all ? 0 : 2;
}

int cmd_green_selftest(const Config& c) {
  if (c.dim != 2 && c.dim != 3) throw InputError("--dim 2 or 3 is required");
  const double tol = c.tol > 0 ? c.tol : 1e-10;
  GreenSelfTest t = green_selftest(c.dim);
  std::ostringstream os;
  os << "x,y,z,alpha_variation,fourier_dev\n" << std::setprecision(12);
  for (const auto& r : t.rows)
    os << r.x[0] << ',' << r.x[1] << ',' << r.x[2] << ',' << r.alpha_variation << ',' << r.fourier_dev << '\n';
  emit(c, "green_selftest.csv", os.str());
  std::cout << "max_alpha_variation=" << t.max_alpha_variation << "\n";
  if (c.dim == 2) std::cout << "max_fourier_dev=" << t.max_fourier_dev << "\n";
  if (t.max_alpha_variation > tol) throw Failure("Ewald splitting variation " + fmt(t.max_alpha_variation));
  if (c.dim == 2 && t.max_fourier_dev > 1e-8) throw Failure("Fourier oracle deviation " + fmt(t.max_fourier_dev));
  return 0;
}

int cmd_regime(const Config& c) {
  if (c.dim != 2 && c.dim != 3) throw InputError("--dim 2 or 3 is required");
  if (c.eps.empty() || c.etas.empty()) throw InputError("--eps and --eta are required");
  std::optional<CapacityResult> cap;
  if (!c.shape.empty()) {
    ShapeSpec spec = need_shape(c);
    cap = solve_kernel_basis(build_mesh(spec, mesh_size(c, spec.dim)));
  }
  nlohmann::json all = nlohmann::json::array();
  for (double e : c.eps)
    for (double eta : c.etas) {
      RegimeParams p = classify(c.dim, e, eta);
      std::cout << "eps=" << e << " eta=" << eta << " sigma_eps=" << p.sigma << " kappa_eta=" << p.kappa
                << " regime=" << regime_name(p.regime) << "\n";
      if (cap) all.push_back(effective_to_json(effective_coefficients(*cap, p)));
    }
  if (cap) emit(c, "effective.json", (all.size() == 1 ? all[0] : all).dump(2) + "\n");
  return 0;
}

int cmd_jumps(const Config& c) {
  ShapeSpec spec = need_shape(c);
  if (spec.dim != 2) throw InputError("jump relation check is two-dimensional");
  const double tol = c.tol > 0 ? c.tol : 1e-6;
  BoundaryMesh m = build_mesh(spec, mesh_size(c, 2));
  LayerOperators ops = assemble_layer_operators(m);
  std::ostringstream os;
  os << "density,d_exterior,d_interior,sq_exterior,sq_interior,s_continuity\n" << std::setprecision(6);
  double worst = 0;
  for (int i = 0; i < 3; ++i) {
    JumpReport r = verify_jumps(m, ops, random_smooth_density(m, c.seed + i));
    os << i << ',' << r.d_exterior << ',' << r.d_interior << ',' << r.sq_exterior << ',' << r.sq_interior << ','
       << r.s_continuity << '\n';
    worst = std::max(worst, r.max());
  }
  emit(c, "jumps.csv", os.str());
  if (worst > tol) throw Failure("jump relation deviation " + fmt(worst) + " exceeds " + fmt(tol));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stokes cell problems in dilute periodic perforations"};
  app.require_subcommand(1);
  Config cfg;
  auto common = [&](CLI::App* s) {
    s->add_option("--out", cfg.out, "output directory");
    s->add_option("--threads", cfg.threads, "worker threads (default: STOKESCELL_THREADS or hardware)");
    s->add_option("--tol", cfg.tol, "tolerance for the command's checks")->check(CLI::PositiveNumber);
  };
  auto shape = [&](CLI::App* s) {
    s->add_option("--shape", cfg.shape, "shape JSON file");
    s->add_option("--n", cfg.n, "nodes: INT (2D) or AxB (3D)");
  };
  auto* cap = app.add_subcommand("capacity", "capacity matrix and permeability");
  shape(cap);
  common(cap);
  auto* cell = app.add_subcommand("cell", "cell correctors over an eta list");
  shape(cell);
  common(cell);
  cell->add_option("--etas", cfg.etas, "eta values")->delimiter(',');
  cell->add_option("--k", cfg.ks, "directions (1-based)")->delimiter(',');
  auto* rates = app.add_subcommand("rates", "eta sweep with rate fits and pass/fail summary");
  shape(rates);
  common(rates);
  rates->add_option("--dim", cfg.dim, "dimension (checked against the shape)");
  rates->add_option("--etas", cfg.etas, "eta values")->delimiter(',');
  rates->add_option("--eps", cfg.eps, "eps values")->delimiter(',');
  rates->add_option("--k", cfg.ks, "directions (1-based)")->delimiter(',');
  auto* green = app.add_subcommand("green-selftest", "periodic Green function self-test");
  green->add_option("--dim", cfg.dim, "dimension")->required();
  common(green);
  auto* reg = app.add_subcommand("regime", "regime classification and effective coefficients");
  reg->add_option("--dim", cfg.dim, "dimension")->required();
  reg->add_option("--eps", cfg.eps, "eps values")->delimiter(',');
  reg->add_option("--eta,--etas", cfg.etas, "eta values")->delimiter(',');
  shape(reg);
  common(reg);
  auto* jumps = app.add_subcommand("jumps", "jump relations for random smooth densities (2D)");
  shape(jumps);
  common(jumps);
  jumps->add_option("--seed", cfg.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    if (cfg.threads > 0) set_num_threads(cfg.threads);
    if (*cap) return cmd_capacity(cfg);
    if (*cell) return cmd_cell(cfg);
    if (*rates) return cmd_rates(cfg);
    if (*green) return cmd_green_selftest(cfg);
    if (*reg) return cmd_regime(cfg);
    if (*jumps) return cmd_jumps(cfg);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const Failure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
