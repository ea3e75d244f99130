// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include "stokescell/rescale.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace stokescell;

namespace {

ShapeSpec shape(const std::string& name) { return load_shape(std::string(STOKESCELL_SHAPES_DIR) + "/" + name); }

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

struct Line {
  bool pass = true;
  std::ostringstream msg;
  void need(bool ok, const std::string& what) {
    pass = pass && ok;
    msg << (msg.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [fail]");
  }
};

double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

// 1. constants are eigenvectors of K with eigenvalue 1/2
void np_eigen(Line& L) {
  for (const char* f : {"ellipse.json", "kite.json", "sphere_offcenter.json"}) {
    ShapeSpec s = shape(f);
    BoundaryMesh m = s.dim == 2 ? build_mesh(s, 256) : build_mesh(s, 12, 24);
    LayerOperators ops = assemble_np(m);
    double worst = 0;
    for (int l = 0; l < s.dim; ++l) {
      Vec3 el = Vec3::Zero();
      el[l] = 1;
      VecX c = m.constant(el);
      worst = std::max(worst, m.l2_norm(ops.K.apply(c) - 0.5 * c));
    }
    L.need(worst <= (s.dim == 2 ? 1e-8 : 1e-5), std::string(f) + " " + sci(worst));
  }
}

// 2. jump relations from extrapolated traces
void jumps(Line& L) {
  for (const char* f : {"ellipse.json", "kite.json"}) {
    BoundaryMesh m = build_mesh(shape(f), 256);
    LayerOperators ops = assemble_layer_operators(m);
    JumpReport r = verify_jumps(m, ops, random_smooth_density(m, 11));
    L.need(r.max() <= 1e-6, std::string(f) + " " + sci(r.max()));
  }
}

// 3. symmetry, definiteness, 2D rescaling law
void capacity_matrix(Line& L) {
  double asym = 0;
  for (const char* f : {"ellipse.json", "kite.json", "star.json"}) {
    CapacityResult r = solve_kernel_basis(build_mesh(shape(f), 256));
    asym = std::max(asym, max_abs(r.A - r.A.transpose()));
  }
  double min_eig = 1e300;
  for (const char* f : {"sphere_offcenter.json", "ellipsoid.json"}) {
    CapacityResult r = solve_kernel_basis(build_mesh(shape(f), 12, 24));
    asym = std::max(asym, max_abs(r.A - r.A.transpose()));
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (r.A + r.A.transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  L.need(asym <= 1e-8, "asymmetry " + sci(asym));
  L.need(min_eig > 0, "3D min eigenvalue " + sci(min_eig));
  // A_{sT} = A_T - log(s)/(4 pi) I; the "+" variant is reported alongside
  // kite base 0.28 so that all three scales stay inside B_{3/8}
  RescalingReport k = rescaling_law_check(with_scale(shape("kite.json"), 0.28), {1.0, 0.8, 1.25}, 256);
  RescalingReport s = rescaling_law_check(shape("star.json"), {1.0, 0.8, 1.2}, 256);
  double dev = std::max(k.max_dev, s.max_dev), plus = std::max(k.max_dev_plus, s.max_dev_plus);
  L.need(dev <= 1e-7, "rescaling A_sT = A_T - log(s)/(4pi) I dev " + sci(dev));
  L.msg << "; opposite sign A_sT = A_T + log(s)/(4pi) I misses by " << sci(plus);
}

// 4. sphere permeability and the energy identity
void sphere_permeability(Line& L) {
  const double a = 0.25, ref = 6 * pi * a;
  for (int nt : {8, 12, 16}) {
    BoundaryMesh m = build_mesh(shape("sphere.json"), nt, 2 * nt);
    LayerOperators ops = assemble_layer_operators(m);
    CapacityResult r = solve_kernel_basis(m, ops);
    double rel = max_abs(r.M - ref * MatX::Identity(3, 3)) / ref;
    L.need(rel <= 5e-3, std::to_string(nt) + "x" + std::to_string(2 * nt) + " M rel " + sci(rel));
    if (nt == 12) {
      EnergyReport e = energy_identity_check(m, ops, r);
      L.need(e.rel_dev <= 1e-6, "energy identity " + sci(e.rel_dev));
    }
  }
}

// 5. periodic Green function and the periodic NP identity on constants
void periodic_green(Line& L) {
  GreenSelfTest t2 = green_selftest(2), t3 = green_selftest(3);
  double xi = std::max(t2.max_alpha_variation, t3.max_alpha_variation);
  L.need(xi <= 1e-10, "Ewald splitting variation " + sci(xi));
  L.need(t2.max_fourier_dev <= 1e-8, "2D Fourier " + sci(t2.max_fourier_dev));
  const double eta = 0.1;
  double worst = 0;
  for (const char* f : {"ellipse.json", "sphere_offcenter.json"}) {
    ShapeSpec s = shape(f);
    BoundaryMesh m = s.dim == 2 ? build_mesh(s, 256) : build_mesh(s, 12, 24);
    LayerOperators ops = assemble_np(m);
    RescaledGreen g(s.dim, eta);
    PeriodicOperators po = assemble_periodic_np(m, g, ops.K);
    for (int k = 0; k < s.dim; ++k) {
      Vec3 ek = Vec3::Zero();
      ek[k] = 1;
      VecX c = m.constant(ek);
      VecX res = po.Keta.apply(c) - 0.5 * c + std::pow(eta, s.dim) * m.volume() * c;
      worst = std::max(worst, m.l2_norm(res));
    }
  }
  L.need(worst <= 1e-7, "constants at eta=0.1 " + sci(worst));
}

const RateCheck& find(const std::vector<RateCheck>& v, const std::string& name) {
  for (const auto& c : v)
    if (c.name == name) return c;
  throw std::runtime_error("missing rate check " + name);
}

std::string slope_text(const RateCheck& c) {
  return c.name + " slope " + sci(c.value) + " (" + sci(c.target) + " +- " + sci(c.window) + ")";
}

// 6-8 share the sweeps
struct Sweeps {
  Sweep s3, s2;
  std::vector<RateCheck> c3, c2;
};

Sweeps run_sweeps() {
  Sweeps w;
  SweepOptions o3;
  o3.etas = {0.05, 0.1, 0.2};
  o3.ks = {0};
  w.s3 = run_sweep(make_hole(shape("sphere_offcenter.json"), MeshSize{12, 24}), o3);
  w.c3 = rate_checks(w.s3, 0);
  SweepOptions o2;
  o2.etas = {1e-2, 1e-3, 1e-4};
  o2.ks = {0};
  w.s2 = run_sweep(make_hole(shape("ellipse.json"), MeshSize{256, 0}), o2);
  w.c2 = rate_checks(w.s2, 0);
  return w;
}

void corrector_pipeline(Line& L, const Sweeps& w) {
  double res = 0, dev3 = 0, dev2 = 0;
  for (const auto& e : w.s3.entries) {
    res = std::max(res, e.boundary_residual);
    dev3 = std::max(dev3, e.c.solve_dev);
  }
  for (const auto& e : w.s2.entries) {
    res = std::max(res, e.boundary_residual);
    dev2 = std::max(dev2, e.c.solve_dev);
  }
  L.need(res <= 1e-6, "boundary residual " + sci(res));
  L.need(dev3 <= 1e-6, "projected vs direct (3D) " + sci(dev3));
  // the direct 2D solve is conditioned like 1/(eta^2 |T|); reported only
  L.msg << "; projected vs direct (2D, informational) " << sci(dev2);
  const RateCheck& a = find(w.c3, "avg_chi_minus_ATek");
  L.need(a.pass, slope_text(a));
}

void uniform_energy(Line& L, const Sweeps& w) {
  const RateCheck& s = find(w.c3, "grad_norm_spread");
  L.need(s.pass, "3D spread " + sci(s.value));
  const RateCheck& r = find(w.c2, "grad_norm");
  L.need(r.pass, "2D |log eta|^(1/2) ratio deviation " + sci(r.value) + ", fitted power " + sci(r.fit.slope));
}

void two_scale_rates(Line& L, const Sweeps& w) {
  for (const char* n : {"v_lp_dev", "q_fluct", "q_mean", "stress_trace"}) {
    const RateCheck& c = find(w.c3, n);
    L.need(c.pass, slope_text(c));
  }
}

// 9. worked examples and bitwise coefficient emission
void regimes(Line& L) {
  RegimeParams a = classify(3, 0.1, 0.01), b = classify(3, 0.1, 0.2), c = classify(2, 0.1, std::exp(-100.0));
  auto near = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::abs(y); };
  bool ok = near(a.sigma, 1.0) && a.regime == Regime::critical && near(b.sigma, 0.1 / std::sqrt(0.2)) &&
            b.regime == Regime::super_critical && near(c.sigma, 1.0) && c.regime == Regime::critical;
  for (const RegimeParams& p : {a, b, c}) ok = ok && near(p.kappa, p.eps / p.sigma);
  L.need(ok, "sigma " + sci(a.sigma) + "/" + sci(b.sigma) + "/" + sci(c.sigma) + " -> " + regime_name(a.regime) +
                 "/" + regime_name(b.regime) + "/" + regime_name(c.regime));

  CapacityResult cap3 = solve_kernel_basis(build_mesh(shape("sphere.json"), 12, 24));
  CapacityResult cap2 = solve_kernel_basis(build_mesh(shape("kite.json"), 256));
  EffectiveModel darcy = effective_coefficients(cap3, b);
  RegimeParams unit = a;
  unit.sigma = 1.0;
  EffectiveModel brink = effective_coefficients(cap3, unit);
  EffectiveModel darcy2 = effective_coefficients(cap2, classify(2, 0.01, 0.1));
  bool bits = darcy.model == "darcy" && (darcy.M.array() == cap3.M.array()).all() && brink.model == "brinkman" &&
              (brink.M.array() == cap3.M.array()).all() && darcy2.model == "darcy" &&
              (darcy2.M.array() == cap2.M.array()).all();
  L.need(bits, "Darcy/Brinkman coefficients bitwise equal to capacity M");
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& title, const std::function<void(Line&)>& fn) {
    Line L;
    try {
      fn(L);
    } catch (const std::exception& e) {
      L.need(false, std::string("exception: ") + e.what());
    }
    failed += !L.pass;
    std::cout << (L.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << L.msg.str() << std::endl;
  };
  report(1, "NP eigen-relation", np_eigen);
  report(2, "jump relations", jumps);
  report(3, "capacity matrix", capacity_matrix);
  report(4, "sphere permeability", sphere_permeability);
  report(5, "periodic Green function", periodic_green);
  Sweeps w;
  bool swept = true;
  try {
    w = run_sweeps();
  } catch (const std::exception& e) {
    swept = false;
    std::cerr << "sweep failed: " << e.what() << "\n";
  }
  auto swept_report = [&](int id, const std::string& title, void (*fn)(Line&, const Sweeps&)) {
    report(id, title, [&](Line& L) {
      if (!swept) throw std::runtime_error("sweep failed");
      fn(L, w);
    });
  };
  swept_report(6, "corrector pipeline", corrector_pipeline);
  swept_report(7, "uniform energy", uniform_energy);
  swept_report(8, "two-scale rates", two_scale_rates);
  report(9, "regime classifier", regimes);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
