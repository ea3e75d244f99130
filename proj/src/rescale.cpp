#include "stokescell/rescale.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace stokescell {

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::critical: return "critical";
    case Regime::super_critical: return "dilute-super-critical";
    case Regime::sub_critical: return "sub-critical";
    case Regime::classical: return "classical";
  }
  return "?";
}

RegimeParams classify(int dim, double eps, double eta, double lo, double hi) {
  if (dim != 2 && dim != 3) throw InputError("dimension must be 2 or 3");
  if (!(eps > 0 && eps < 1)) throw InputError("eps must lie in (0, 1)");
  if (!(eta > 0 && eta <= 1)) throw InputError("eta must lie in (0, 1]");
  if (dim == 2 && eta >= 1) throw InputError("d = 2 needs eta < 1 (|log eta| = 0)");
  if (!(lo > 0 && lo <= hi)) throw InputError("bad regime thresholds");
  RegimeParams p;
  p.dim = dim;
  p.eps = eps;
  p.eta = eta;
  p.lo = lo;
  p.hi = hi;
  p.kappa = dim == 2 ? 1.0 / std::sqrt(std::abs(std::log(eta))) : std::pow(eta, 0.5 * (dim - 2));
  p.sigma = dim == 2 ? eps * std::sqrt(std::abs(std::log(eta))) : eps * std::pow(eta, -0.5 * (dim - 2));
  if (eta == 1)
    p.regime = Regime::classical;
  else if (p.sigma < lo)
    p.regime = Regime::super_critical;
  else if (p.sigma > hi)
    p.regime = Regime::sub_critical;
  else
    p.regime = Regime::critical;
  return p;
}

EffectiveModel effective_coefficients(const CapacityResult& cap, const RegimeParams& p) {
  if (cap.dim != p.dim) throw InputError("capacity and regime dimensions differ");
  EffectiveModel m;
  m.params = p;
  switch (p.regime) {
    case Regime::super_critical: m.model = "darcy"; m.M = cap.M; break;
    case Regime::critical: m.model = "brinkman"; m.M = cap.M / (p.sigma * p.sigma); break;
    case Regime::sub_critical: m.model = "stokes"; break;
    // Darcy, but with the permeability of the non-dilute cell problem,
    // which is not the dilute M computed here
    case Regime::classical: m.model = "darcy"; break;
  }
  return m;
}

nlohmann::json effective_to_json(const EffectiveModel& m) {
  nlohmann::json j;
  j["model"] = m.model;
  if (m.M.size() == 0) {
    j["M"] = nullptr;
  } else {
    std::vector<std::vector<double>> rows(m.M.rows(), std::vector<double>(m.M.cols()));
    for (int i = 0; i < m.M.rows(); ++i)
      for (int k = 0; k < m.M.cols(); ++k) rows[i][k] = m.M(i, k);
    j["M"] = rows;
  }
  j["sigma_eps"] = m.params.sigma;
  j["kappa_eta"] = m.params.kappa;
  j["regime"] = regime_name(m.params.regime);
  return j;
}

MatX permeability_inverse(const CapacityResult& cap) {
  if (cap.dim == 2) return MatX::Identity(2, 2) / (4 * pi);
  return cap.A;
}

// ---------------------------------------------------------------------------
// two-scale fields

namespace {

double log_factor(int d, double eta) { return d == 2 ? 1.0 / std::abs(std::log(eta)) : 1.0; }

Vec3 unit(int k) {
  Vec3 e = Vec3::Zero();
  e[k] = 1;
  return e;
}

std::vector<Vec3> scaled(const std::vector<Vec3>& x, double s) {
  std::vector<Vec3> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * s;
  return y;
}

}  // namespace

TwoScaleField::TwoScaleField(const CellCorrector& c, double eps) : c_(&c), eps_(eps) {
  if (!(eps > 0)) throw InputError("eps must be positive");
  f_ = log_factor(c.dim, c.eta);
}

MatX TwoScaleField::v(const std::vector<Vec3>& x, FieldMode mode) const {
  return f_ * c_->chi(scaled(x, 1 / length()), mode);
}

VecX TwoScaleField::q(const std::vector<Vec3>& x, FieldMode mode) const {
  return (f_ / length()) * c_->omega(scaled(x, 1 / length()), mode);
}

std::vector<Mat3> TwoScaleField::grad_v(const std::vector<Vec3>& x, FieldMode mode) const {
  auto g = c_->grad_chi(scaled(x, 1 / length()), mode);
  for (auto& m : g) m *= f_ / length();
  return g;
}

PdeResidual two_scale_residual(const TwoScaleField& tv, const std::vector<Vec3>& x, double sigma) {
  const CellCorrector& c = tv.corrector();
  const int d = c.dim;
  const double L = tv.length(), force = 1 / (sigma * sigma);
  std::vector<Vec3> st;
  std::vector<double> hs;
  for (const Vec3& p : x) {
    double h = 1e-3 * L * std::max(p.norm() / L, 0.25);
    hs.push_back(h);
    st.push_back(p);
    for (int l = 0; l < d; ++l)
      for (int s : {1, -1}) st.push_back(p + s * h * unit(l));
  }
  MatX v = tv.v(st, FieldMode::exact);
  VecX q = tv.q(st, FieldMode::exact);
  PdeResidual r;
  const int per = 1 + 2 * d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t b = i * per;
    const double h = hs[i];
    Vec3 lap = Vec3::Zero(), gq = Vec3::Zero();
    double div = 0, gscale = 0;
    for (int l = 0; l < d; ++l) {
      const std::size_t p = b + 1 + 2 * l, m = p + 1;
      for (int j = 0; j < d; ++j) {
        lap[j] += (v(p, j) - 2 * v(b, j) + v(m, j)) / (h * h);
        gscale = std::max(gscale, std::abs(v(p, j) - v(m, j)) / (2 * h));
      }
      gq[l] = (q[p] - q[m]) / (2 * h);
      div += (v(p, l) - v(m, l)) / (2 * h);
    }
    Vec3 mom = -lap + gq - force * unit(c.k);
    r.momentum = std::max(r.momentum, mom.norm() / std::max({lap.norm(), gq.norm(), force}));
    r.divergence = std::max(r.divergence, std::abs(div) / std::max(gscale, 1e-300));
  }
  return r;
}

FaceStress face_stress(const CellCorrector& c, int face_nodes) {
  const int d = c.dim;
  const int n = face_nodes > 0 ? face_nodes : (d == 2 ? 33 : 9);
  const double half = 0.5 / c.eta;
  std::vector<Vec3> pts;
  std::vector<int> face;
  for (int ax = 0; ax < d; ++ax)
    for (int sg : {-1, 1}) {
      int o1 = (ax + 1) % d, o2 = (ax + 2) % d;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < (d == 2 ? 1 : n); ++j) {
          Vec3 p = sg * half * unit(ax);
          p += half * (-1 + 2.0 * i / (n - 1)) * unit(o1);
          if (d == 3) p += half * (-1 + 2.0 * j / (n - 1)) * unit(o2);
          pts.push_back(p);
          face.push_back(2 * ax + (sg > 0));
        }
    }
  auto g = c.grad_chi(pts, FieldMode::fast);
  VecX w = c.omega(pts, FieldMode::fast);
  FaceStress fs;
  fs.face_max.assign(2 * d, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = g[i].norm() + std::abs(w[i]);
    fs.face_max[face[i]] = std::max(fs.face_max[face[i]], s);
  }
  fs.max = *std::max_element(fs.face_max.begin(), fs.face_max.end());
  return fs;
}

TwoScaleMeasures two_scale_measures(const CellCorrector& c, const CellAverages& avg, const CellNorms& norms,
                                    const TorusSamples& s, double eps, int face_nodes) {
  const int d = c.dim;
  const double e = c.eta, L = eps * e, f = log_factor(d, e);
  TwoScaleMeasures m;
  m.eps = eps;
  m.eta = e;
  m.k = c.k;
  m.p = norms.p;
  // <|f chi - M^{-1} e_k|^p> over the torus; chi = 0 in the hole
  Vec3 target = Vec3::Zero();
  target.head(d) = permeability_inverse(c.setup->hole->capacity).col(c.k);
  double acc = s.hole_volume * std::pow(target.norm(), m.p);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    Vec3 v = Vec3::Zero();
    v.head(d) = f * s.chi.row(i).transpose();
    acc += s.w[i] * std::pow((v - target).norm(), m.p);
  }
  m.lp_dev = std::pow(acc / s.cell_volume, 1.0 / m.p);
  // |grad v|^2_L2(eps Q) = f^2 (eps eta)^{d-2} |grad chi|^2
  m.grad_cell = f * std::pow(L, 0.5 * (d - 2)) * avg.grad_norm;
  m.grad_omega = m.grad_cell * std::pow(eps, -0.5 * d);
  m.q_fluct = f * std::pow(L, 0.5 * (d - 2)) * norms.omega_fluct;
  m.q_mean = f * avg.omega / L;
  FaceStress fs = face_stress(c, face_nodes);
  for (double v : fs.face_max) m.face_stress.push_back(f * v / L);
  m.stress = f * fs.max / L;
  return m;
}

GradientIdentity gradient_identity(const TwoScaleField& tv, const TorusSamples& s) {
  if (s.grad.size() != s.x.size()) throw InputError("torus samples carry no gradients");
  const CellCorrector& c = tv.corrector();
  const double L = tv.length();
  const int d = c.dim;
  std::vector<Vec3> x = scaled(s.x, L);
  auto gv = tv.grad_v(x, FieldMode::fast);
  GradientIdentity gi;
  double a = 0, b = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a += s.w[i] * std::pow(L, d) * gv[i].squaredNorm();
    b += s.w[i] * s.grad[i].squaredNorm();
  }
  gi.direct = std::sqrt(a);
  gi.via_chi = tv.factor() * std::pow(L, 0.5 * (d - 2)) * std::sqrt(b);
  return gi;
}

WeakSurrogate weak_surrogate(const TwoScaleField& tv, const TorusSamples& s, int l) {
  if (s.grad.size() != s.x.size()) throw InputError("torus samples carry no gradients");
  const CellCorrector& c = tv.corrector();
  const int d = c.dim;
  const double eps = tv.eps(), L = tv.length();
  const int m = int(std::lround(1 / eps));
  if (std::abs(m * eps - 1) > 1e-12) throw InputError("weak surrogate needs eps = 1/m");
  auto phi = [&](const Vec3& x) {
    double p = 1;
    for (int i = 0; i < d; ++i) p *= std::sin(pi * x[i]);
    return p;
  };
  const double scale = std::pow(L, d) * tv.factor() / L;
  double total = 0;
  const int cells = d == 2 ? m * m : m * m * m;
  for (int j = 0; j < cells; ++j) {
    Vec3 ctr((j % m + 0.5) * eps, ((j / m) % m + 0.5) * eps, d == 3 ? (j / (m * m) + 0.5) * eps : 0.0);
    double acc = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) acc += s.w[i] * s.grad[i](c.k, l) * phi(ctr + L * s.x[i]);
    total += scale * acc;
  }
  WeakSurrogate w;
  w.value = total;
  w.bound = (d == 2 ? 1 / std::sqrt(std::abs(std::log(c.eta))) : std::pow(c.eta, 0.5 * (d - 2))) * pi;
  return w;
}

// ---------------------------------------------------------------------------
// sweeps

LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InputError("log-log fit needs at least two points");
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw InputError("log-log fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n == 2) {
    f.half_width = std::numeric_limits<double>::infinity();
  } else {
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = ly[i] - f.intercept - f.slope * lx[i];
      ss += r * r;
    }
    boost::math::students_t t(double(n - 2));
    f.half_width = boost::math::quantile(boost::math::complement(t, 0.025)) * std::sqrt(ss / (n - 2) / sxx);
  }
  return f;
}

std::vector<double> Sweep::etas() const {
  std::vector<double> e;
  for (const auto& x : entries)
    if (e.empty() || e.back() != x.c.eta) e.push_back(x.c.eta);
  return e;
}

std::vector<const SweepEntry*> Sweep::for_k(int k) const {
  std::vector<const SweepEntry*> v;
  for (const auto& x : entries)
    if (x.c.k == k) v.push_back(&x);
  return v;
}

Sweep run_sweep(std::shared_ptr<const Hole> hole, const SweepOptions& opt) {
  const int d = hole->mesh.dim;
  if (opt.etas.empty()) throw InputError("empty eta list");
  std::vector<int> ks = opt.ks;
  if (ks.empty())
    for (int k = 0; k < d; ++k) ks.push_back(k);
  for (int k : ks)
    if (k < 0 || k >= d) throw InputError("direction k out of range");
  Sweep sw;
  sw.dim = d;
  sw.eps = opt.eps;
  sw.hole = hole;
  for (double eta : opt.etas) {
    auto setup = make_cell_setup(hole, eta, opt.cell);
    std::vector<CellCorrector> cs;
    if (ks.size() == std::size_t(d))
      cs = solve_cells(setup);
    else
      for (int k : ks) cs.push_back(solve_cell(setup, k));
    for (auto& c : cs) {
      SweepEntry e;
      e.avg = corrector_average(c, opt.hole_rule);
      e.samples = sample_torus(c, opt.torus);
      e.norms = corrector_norms(c, e.avg, e.samples);
      e.boundary_residual = boundary_residual(c);
      e.ts = two_scale_measures(c, e.avg, e.norms, e.samples, opt.eps, opt.face_nodes);
      e.c = std::move(c);
      sw.entries.push_back(std::move(e));
    }
  }
  return sw;
}

namespace {

RateCheck slope_check(const std::string& name, const std::vector<double>& x, const std::vector<double>& y,
                      double target, double window) {
  RateCheck r;
  r.name = name;
  r.kind = "slope";
  r.fit = fit_loglog(x, y);
  r.value = r.fit.slope;
  r.target = target;
  r.window = window;
  r.pass = std::abs(r.value - target) <= window;
  return r;
}

// consecutive ratios y_{i+1}/y_i against (L_{i+1}/L_i)^power, L = |log eta|;
// "ratio" asks for agreement within window, "bound" only for decay at least
// as fast as predicted (up to window)
RateCheck log_ratio_check(const std::string& name, const std::string& kind, const std::vector<double>& eta,
                          const std::vector<double>& y, double power, double window) {
  RateCheck r;
  r.name = name;
  r.kind = kind;
  r.target = power;
  r.window = window;
  r.pass = true;
  double worst = 0;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    double pred = std::pow(std::log(eta[i + 1]) / std::log(eta[i]), power);
    double dev = (y[i + 1] / y[i]) / pred - 1;
    if (kind == "bound") dev = std::max(dev, 0.0);
    worst = std::max(worst, std::abs(dev));
  }
  r.value = worst;
  r.pass = worst <= window;
  if (y.size() >= 2) {
    std::vector<double> L;
    for (double e : eta) L.push_back(std::abs(std::log(e)));
    r.fit = fit_loglog(L, y);
  }
  return r;
}

}  // namespace

std::vector<RateCheck> rate_checks(const Sweep& s, int k) {
  auto es = s.for_k(k);
  if (es.size() < 2) throw InputError("rate checks need at least two eta values");
  std::vector<double> eta, avg, grad, lp, qf, qm, st;
  for (auto* e : es) {
    eta.push_back(e->c.eta);
    avg.push_back(e->avg.chi_minus_Aek.norm());
    grad.push_back(e->avg.grad_norm);
    lp.push_back(e->ts.lp_dev);
    qf.push_back(e->ts.q_fluct);
    qm.push_back(std::abs(e->ts.q_mean));
    st.push_back(e->ts.stress);
  }
  std::vector<RateCheck> out;
  if (s.dim == 3) {
    out.push_back(slope_check("avg_chi_minus_ATek", eta, avg, 1.0, 0.3));
    RateCheck sp;
    sp.name = "grad_norm_spread";
    sp.kind = "spread";
    auto [mn, mx] = std::minmax_element(grad.begin(), grad.end());
    sp.value = *mx / *mn - 1;
    sp.target = 0;
    sp.window = 0.15;
    sp.pass = sp.value < sp.window;
    out.push_back(sp);
    out.push_back(slope_check("v_lp_dev", eta, lp, 0.5, 0.2));
    out.push_back(slope_check("q_fluct", eta, qf, 0.5, 0.2));
    out.push_back(slope_check("q_mean", eta, qm, 2.0, 0.5));
    out.push_back(slope_check("stress_trace", eta, st, 1.0, 0.3));
  } else {
    out.push_back(log_ratio_check("grad_norm", "ratio", eta, grad, 0.5, 0.2));
    out.push_back(log_ratio_check("v_lp_dev", "bound", eta, lp, -0.5, 0.2));
    out.push_back(log_ratio_check("q_fluct", "bound", eta, qf, -0.5, 0.2));
    out.push_back(slope_check("q_mean", eta, qm, 1.0, 0.5));
    out.push_back(log_ratio_check("stress_trace", "bound", eta, st, -1.0, 0.2));
  }
  return out;
}

void write_rate_csv(std::ostream& os, const Sweep& s) {
  os << "d,eta,k,eps,avg_chi_minus_ATek,grad_norm,v_lp_dev,p,grad_cell,q_fluct,q_mean,stress_trace\n";
  os << std::setprecision(12);
  for (const auto& e : s.entries)
    os << s.dim << ',' << e.c.eta << ',' << e.c.k + 1 << ',' << s.eps << ',' << e.avg.chi_minus_Aek.norm() << ','
       << e.avg.grad_norm << ',' << e.ts.lp_dev << ',' << e.ts.p << ',' << e.ts.grad_cell << ',' << e.ts.q_fluct
       << ',' << e.ts.q_mean << ',' << e.ts.stress << '\n';
}

void write_checks_csv(std::ostream& os, const std::vector<RateCheck>& checks) {
  os << "check,kind,value,target,window,slope,slope_ci95,pass\n";
  os << std::setprecision(8);
  for (const auto& c : checks)
    os << c.name << ',' << c.kind << ',' << c.value << ',' << c.target << ',' << c.window << ',' << c.fit.slope
       << ',' << c.fit.half_width << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
}

}  // namespace stokescell
