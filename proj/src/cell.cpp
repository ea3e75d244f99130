#include "stokescell/cell.hpp"

#include "stokescell/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace stokescell {

std::shared_ptr<const Hole> make_hole(const BoundaryMesh& mesh, const LayerOperators& ops,
                                      const CapacityResult& cap) {
  auto h = std::make_shared<Hole>();
  h->mesh = mesh;
  h->ops = ops;
  for (OperatorMatrix* o : {&h->ops.S, &h->ops.K, &h->ops.Kstar}) o->mesh = &h->mesh;
  h->capacity = cap;
  h->volume = h->mesh.volume();
  return h;
}

std::shared_ptr<const Hole> make_hole(const ShapeSpec& spec, const MeshSize& size) {
  BoundaryMesh mesh = build_mesh(spec, size);
  LayerOperators ops = assemble_layer_operators(mesh);
  CapacityResult cap = solve_kernel_basis(mesh, ops);
  return make_hole(mesh, ops, cap);
}

std::shared_ptr<const CellSetup> make_cell_setup(std::shared_ptr<const Hole> hole, double eta,
                                                 const CellOptions& opt) {
  if (!(eta > 0 && eta < 1)) throw InputError("eta must lie in (0, 1)");
  const int d = hole->mesh.dim;
  auto s = std::make_shared<CellSetup>(CellSetup{hole, eta, opt, RescaledGreen(d, eta, opt.alpha), {}});
  s->periodic = assemble_periodic_np(hole->mesh, s->green, hole->ops.K);
  s->periodic.R.mesh = s->periodic.Keta.mesh = &hole->mesh;
  return s;
}

// ---------------------------------------------------------------------------
// Chebyshev proxies for the smooth periodic remainders of D[g~] and P[g~]

namespace {

struct Cheb1 {
  std::vector<double> x, w;  // second-kind points on [lo, hi], barycentric weights
};

Cheb1 cheb_nodes(int n, double lo, double hi) {
  Cheb1 c;
  for (int i = 0; i < n; ++i) {
    double t = std::cos(pi * i / (n - 1));
    c.x.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
    c.w.push_back((i % 2 ? -1.0 : 1.0) * (i == 0 || i == n - 1 ? 0.5 : 1.0));
  }
  return c;
}

void cheb_basis(const Cheb1& c, double x, double* l) {
  const int n = int(c.x.size());
  for (int i = 0; i < n; ++i)
    if (x == c.x[i]) {
      for (int j = 0; j < n; ++j) l[j] = i == j;
      return;
    }
  double s = 0;
  for (int i = 0; i < n; ++i) s += l[i] = c.w[i] / (x - c.x[i]);
  for (int i = 0; i < n; ++i) l[i] /= s;
}

struct ProxyBox {
  int n = 0, dim = 0;
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  Cheb1 axis[3];
  std::vector<MatX> vals;  // per density: (n^dim) x (dim + 1), velocity then pressure

  std::vector<Vec3> nodes() const {
    std::vector<Vec3> p;
    if (dim == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p.emplace_back(axis[0].x[i], axis[1].x[j], 0);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) p.emplace_back(axis[0].x[i], axis[1].x[j], axis[2].x[k]);
    }
    return p;
  }

  bool contains(const Vec3& x) const {
    for (int c = 0; c < dim; ++c)
      if (x[c] < lo[c] || x[c] > hi[c]) return false;
    return true;
  }

  Eigen::RowVectorXd eval(int slot, const Vec3& x) const {
    std::vector<double> l[3];
    for (int c = 0; c < dim; ++c) {
      l[c].resize(n);
      cheb_basis(axis[c], x[c], l[c].data());
    }
    const MatX& V = vals[slot];
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(V.cols());
    if (dim == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out += l[0][i] * l[1][j] * V.row(i * n + j);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double lij = l[0][i] * l[1][j];
          const int base = (i * n + j) * n;
          for (int k = 0; k < n; ++k) out += (lij * l[2][k]) * V.row(base + k);
        }
    }
    return out;
  }
};

ProxyBox make_box(int dim, int n, const Vec3& lo, const Vec3& hi) {
  ProxyBox b;
  b.n = n;
  b.dim = dim;
  b.lo = lo;
  b.hi = hi;
  for (int c = 0; c < dim; ++c) b.axis[c] = cheb_nodes(n, lo[c], hi[c]);
  return b;
}

// remainder parts of D[f] (dim columns) and P[f] (one column) for several
// densities at once; one Ewald evaluation per point pair
std::vector<MatX> remainder_fields(const CellSetup& s, const std::vector<const VecX*>& dens,
                                   const std::vector<Vec3>& pts) {
  const BoundaryMesh& m = s.hole->mesh;
  const int d = m.dim;
  const double e = s.eta, sP = std::pow(e, d - 1), sD = std::pow(e, d);
  std::vector<MatX> out(dens.size(), MatX::Zero(pts.size(), d + 1));
  parallel_for(pts.size(), [&](std::size_t p) {
    const Vec3& x = pts[p];
    std::vector<Vec3> vel(dens.size(), Vec3::Zero());
    std::vector<double> pre(dens.size(), 0.0);
    for (int j = 0; j < m.n; ++j) {
      const Vec3& ny = m.normal[j];
      GreenValue r = s.green.base().remainder(e * (m.x[j] - x));
      Mat3 M = Mat3::Zero();
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) {
          double v = -r.P[k] * ny[i];
          for (int l = 0; l < d; ++l) v += ny[l] * r.dG[l](i, k);
          M(k, i) = v;
        }
      Vec3 pk = r.dP.transpose() * ny;
      for (std::size_t q = 0; q < dens.size(); ++q) {
        Vec3 f = Vec3::Zero();
        for (int c = 0; c < d; ++c) f[c] = (*dens[q])[j * d + c];
        vel[q] += m.w[j] * sP * (M * f);
        pre[q] -= m.w[j] * sD * pk.dot(f);
      }
    }
    for (std::size_t q = 0; q < dens.size(); ++q) {
      for (int c = 0; c < d; ++c) out[q](p, c) = vel[q][c];
      out[q](p, d) = pre[q];
    }
  });
  return out;
}

}  // namespace

struct RemainderProxy {
  ProxyBox cell, hole;
};

namespace {

std::shared_ptr<const RemainderProxy> build_proxy(const CellSetup& s, const std::vector<const VecX*>& dens) {
  const int d = s.dim();
  const BoundaryMesh& m = s.hole->mesh;
  auto px = std::make_shared<RemainderProxy>();
  int nc = s.opt.cell_proxy > 0 ? s.opt.cell_proxy : (d == 2 ? 16 : 8);
  int nh = s.opt.hole_proxy > 0 ? s.opt.hole_proxy : (d == 2 ? 16 : 8);
  Vec3 half = Vec3::Zero();
  for (int c = 0; c < d; ++c) half[c] = 0.5 * s.period();
  px->cell = make_box(d, nc, -half, half);
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  for (int c = 0; c < d; ++c) {
    lo[c] = hi[c] = m.x[0][c];
    for (const Vec3& x : m.x) lo[c] = std::min(lo[c], x[c]), hi[c] = std::max(hi[c], x[c]);
    double pad = 0.1 * (hi[c] - lo[c]) + 0.02;
    lo[c] -= pad;
    hi[c] += pad;
  }
  px->hole = make_box(d, nh, lo, hi);
  px->cell.vals = remainder_fields(s, dens, px->cell.nodes());
  px->hole.vals = remainder_fields(s, dens, px->hole.nodes());
  return px;
}

Vec3 unit(int k) {
  Vec3 e = Vec3::Zero();
  e[k] = 1;
  return e;
}

CellCorrector solve_density(std::shared_ptr<const CellSetup> sp, int k) {
  const CellSetup& s = *sp;
  const Hole& H = *s.hole;
  const BoundaryMesh& m = H.mesh;
  const int d = m.dim, N = d * m.n;
  if (k < 0 || k >= d) throw InputError("direction k out of range");
  const double e = s.eta, sP = std::pow(e, d - 1), sD = std::pow(e, d);

  CellCorrector c;
  c.dim = d;
  c.k = k;
  c.eta = e;
  c.setup = sp;

  // boundary data -G_k and its split into Pi_0 and Pi_1 parts
  VecX b(N);
  for (int i = 0; i < m.n; ++i) {
    GreenValue gv = s.green.eval(m.x[i]);
    for (int j = 0; j < d; ++j) b[i * d + j] = -gv.G(j, k);
  }
  Projection pr = project(m, H.capacity, b);
  c.c = pr.coef;
  c.A_ek = Vec3::Zero();
  c.A_ek.head(d) = H.capacity.A.col(k);
  c.r_tilde = c.c - c.A_ek;
  const VecX& h = pr.rest;

  // projected system on mean-zero densities
  MatX E = MatX::Zero(N, d), Phi(N, d);
  VecX W = weight_vector(m);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < d; ++j) E(i * d + j, j) = 1;
  for (int j = 0; j < d; ++j) Phi.col(j) = H.capacity.phi[j];
  const MatX& R = s.periodic.R.A;
  MatX PhiWR = Phi.transpose() * W.asDiagonal() * R;  // d x N, rows <phi_l, R .>
  MatX B = MatX::Zero(N + d, N + d);
  B.topLeftCorner(N, N) = H.ops.K.A - 0.5 * MatX::Identity(N, N) + sP * (R - E * PhiWR);
  B.topRightCorner(N, d) = E;
  B.bottomLeftCorner(d, N) = E.transpose() * W.asDiagonal();
  VecX rhs = VecX::Zero(N + d);
  rhs.head(N) = h;
  SolveResult proj = solve_dense(B, rhs, OpTag::Keta);
  c.g_tilde = proj.x.head(N);
  c.multiplier = proj.x.tail(d).norm();
  // eta^{d-1} Pi_0 R[g~] = eta^d |T| <g>
  VecX coef = PhiWR * c.g_tilde;
  c.g_mean = Vec3::Zero();
  for (int j = 0; j < d; ++j) c.g_mean[j] = coef[j] / (e * H.volume);

  // direct solve of (-1/2 + K^eta) g = h. The matrix has an eigenvalue of
  // size eta^d |T| (constants), so plain LU loses about eta^{-d} digits; the
  // residual is recomputed in extended precision from K and R and refined.
  SolveResult dir = solve_dense(s.periodic.Keta.A - 0.5 * MatX::Identity(N, N), h, OpTag::Keta);
  c.g = dir.x;
  {
    Eigen::PartialPivLU<MatX> lu(s.periodic.Keta.A - 0.5 * MatX::Identity(N, N));
    const MatX& K = H.ops.K.A;
    for (int it = 0; it < 6; ++it) {
      VecX res(N);
      for (int i = 0; i < N; ++i) {
        long double a = 0, b = 0;
        for (int j = 0; j < N; ++j) {
          a += (long double)K(i, j) * c.g[j];
          b += (long double)R(i, j) * c.g[j];
        }
        res[i] = double((long double)h[i] - (a - 0.5L * c.g[i] + (long double)sP * b));
      }
      VecX dx = lu.solve(res);
      c.g += dx;
      if (dx.norm() <= 1e-15 * c.g.norm()) break;
    }
  }
  VecX recon = c.g_tilde + m.constant(c.g_mean);
  c.solve_dev = m.l2_norm(c.g - recon) / std::max(m.l2_norm(c.g), 1e-300);
  // the direct matrix is only as singular as eta^d |T| along the constants,
  // so rounding in K alone moves its mean by ~u / (eta^d |T|)
  c.solve_dev_floor = 100 * std::numeric_limits<double>::epsilon() / (sD * H.volume);
  if (!(c.solve_dev <= std::max(s.opt.consistency_tol, c.solve_dev_floor))) {
    std::ostringstream msg;
    msg << "projected and direct cell densities differ by " << c.solve_dev << " (eta " << e << ", k " << k << ")";
    throw InvariantError(msg.str());
  }

  c.t_absorbed = sD * H.volume * c.g_mean.norm();
  c.r = c.r_tilde - sD * H.volume * c.g_mean;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < d; ++j) c.flux += m.w[i] * m.normal[i][j] * c.g_tilde[i * d + j];
  return c;
}

}  // namespace

CellCorrector solve_cell(std::shared_ptr<const CellSetup> setup, int k) {
  CellCorrector c = solve_density(setup, k);
  c.proxy = build_proxy(*setup, {&c.g_tilde});
  c.proxy_slot = 0;
  return c;
}

std::vector<CellCorrector> solve_cells(std::shared_ptr<const CellSetup> setup) {
  std::vector<CellCorrector> out;
  for (int k = 0; k < setup->dim(); ++k) out.push_back(solve_density(setup, k));
  std::vector<const VecX*> dens;
  for (auto& c : out) dens.push_back(&c.g_tilde);
  auto px = build_proxy(*setup, dens);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].proxy = px;
    out[k].proxy_slot = int(k);
  }
  return out;
}

CellCorrector solve_cell(const BoundaryMesh& mesh, double eta, int k, const CapacityResult& cap,
                         const CellOptions& opt) {
  auto hole = make_hole(mesh, assemble_layer_operators(mesh), cap);
  return solve_cell(make_cell_setup(hole, eta, opt), k);
}

// ---------------------------------------------------------------------------
// field evaluation

bool CellCorrector::in_hole(const Vec3& x) const { return setup->hole->mesh.shape->inside(setup->green.wrap(x)); }

namespace {

std::vector<Vec3> wrapped(const CellSetup& s, const std::vector<Vec3>& pts) {
  std::vector<Vec3> w(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) w[i] = s.green.wrap(pts[i]);
  return w;
}

// D[g~] (velocity columns) and P[g~] (last column) at wrapped points;
// hole_box, if given, fixes the proxy per point instead of containment
MatX layer_fields(const CellCorrector& c, const std::vector<Vec3>& pts, FieldMode mode, bool vel, bool pre,
                  const std::vector<char>* hole_box = nullptr) {
  const CellSetup& s = *c.setup;
  const BoundaryMesh& m = s.hole->mesh;
  const int d = c.dim;
  MatX out = MatX::Zero(pts.size(), d + 1);
  if (mode == FieldMode::exact) {
    if (vel) out.leftCols(d) = eval_periodic(Potential::D, m, s.green, c.g_tilde, pts);
    if (pre) out.col(d) = eval_periodic(Potential::P, m, s.green, c.g_tilde, pts).col(0);
    return out;
  }
  if (vel) out.leftCols(d) = eval_offsurface(Potential::D, m, c.g_tilde, pts);
  if (pre) out.col(d) = eval_offsurface(Potential::P, m, c.g_tilde, pts).col(0);
  const RemainderProxy& px = *c.proxy;
  parallel_for(pts.size(), [&](std::size_t i) {
    bool in = hole_box ? bool((*hole_box)[i]) : px.hole.contains(pts[i]);
    const ProxyBox& box = in ? px.hole : px.cell;
    Eigen::RowVectorXd r = box.eval(c.proxy_slot, pts[i]);
    if (vel) out.row(i).head(d) += r.head(d);
    if (pre) out(i, d) += r[d];
  });
  return out;
}

}  // namespace

MatX CellCorrector::double_layer(const std::vector<Vec3>& pts, FieldMode mode) const {
  return layer_fields(*this, wrapped(*setup, pts), mode, true, false).leftCols(dim);
}

VecX CellCorrector::double_layer_pressure(const std::vector<Vec3>& pts, FieldMode mode) const {
  return layer_fields(*this, wrapped(*setup, pts), mode, false, true).col(dim);
}

namespace {

// chi formula at points taken as given
MatX chi_raw(const CellCorrector& c, const std::vector<Vec3>& pts, FieldMode mode,
             const std::vector<char>* hole_box) {
  MatX out = layer_fields(c, pts, mode, true, false, hole_box).leftCols(c.dim);
  const Vec3 cst = c.A_ek + c.r;
  parallel_for(pts.size(), [&](std::size_t i) {
    GreenValue gv = c.setup->green.eval(pts[i]);
    for (int j = 0; j < c.dim; ++j) out(i, j) += gv.G(j, c.k) + cst[j];
  });
  return out;
}

}  // namespace

MatX CellCorrector::chi_formula(const std::vector<Vec3>& pts0, FieldMode mode) const {
  return chi_raw(*this, wrapped(*setup, pts0), mode, nullptr);
}

VecX CellCorrector::omega_formula(const std::vector<Vec3>& pts0, FieldMode mode) const {
  std::vector<Vec3> pts = wrapped(*setup, pts0);
  VecX out = layer_fields(*this, pts, mode, false, true).col(dim);
  parallel_for(pts.size(), [&](std::size_t i) { out[i] += setup->green.eval(pts[i]).P[k]; });
  return out;
}

namespace {

// evaluates only the fluid points, zero elsewhere
template <class F>
MatX masked(const CellCorrector& c, const std::vector<Vec3>& pts, int cols, F&& formula) {
  std::vector<Vec3> fluid;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!c.in_hole(pts[i])) {
      fluid.push_back(pts[i]);
      idx.push_back(i);
    }
  MatX out = MatX::Zero(pts.size(), cols);
  if (fluid.empty()) return out;
  MatX v = formula(fluid);
  for (std::size_t q = 0; q < idx.size(); ++q) out.row(idx[q]) = v.row(q);
  return out;
}

}  // namespace

MatX CellCorrector::chi(const std::vector<Vec3>& pts, FieldMode mode) const {
  return masked(*this, pts, dim, [&](const std::vector<Vec3>& p) { return chi_formula(p, mode); });
}

VecX CellCorrector::omega(const std::vector<Vec3>& pts, FieldMode mode) const {
  return masked(*this, pts, 1, [&](const std::vector<Vec3>& p) { return MatX(omega_formula(p, mode)); }).col(0);
}

std::vector<Mat3> CellCorrector::grad_chi(const std::vector<Vec3>& pts, FieldMode mode, double h) const {
  const int d = dim;
  // stencil: x, x +- h e_l, x + 2h e_l, x - 2h e_l around the wrapped
  // centre, not wrapped again and on the centre's proxy, so the difference
  // quotients never straddle the cell faces or a proxy switch
  const int per = 1 + 4 * d;
  std::vector<Vec3> st;
  std::vector<char> hole_box;
  std::vector<double> hs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec3 xc = setup->green.wrap(pts[i]);
    hs[i] = h * std::max(xc.norm(), 0.25);
    st.push_back(xc);
    for (int l = 0; l < d; ++l)
      for (int s : {1, -1, 2, -2}) st.push_back(xc + s * hs[i] * unit(l));
    char hb = proxy && proxy->hole.contains(xc);
    hole_box.insert(hole_box.end(), per, hb);
  }
  std::vector<char> fluid(st.size());
  for (std::size_t q = 0; q < st.size(); ++q) fluid[q] = !in_hole(st[q]);
  MatX v = chi_raw(*this, st, mode, &hole_box);
  std::vector<Mat3> out(pts.size(), Mat3::Zero());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t b = i * per;
    if (!fluid[b]) continue;
    for (int l = 0; l < d; ++l) {
      const std::size_t p1 = b + 1 + 4 * l, m1 = p1 + 1, p2 = p1 + 2, m2 = p1 + 3;
      Vec3 g = Vec3::Zero();
      for (int j = 0; j < d; ++j) {
        double f0 = v(b, j);
        if (fluid[p1] && fluid[m1])
          g[j] = (v(p1, j) - v(m1, j)) / (2 * hs[i]);
        else if (fluid[p1] && fluid[p2])
          g[j] = (-3 * f0 + 4 * v(p1, j) - v(p2, j)) / (2 * hs[i]);
        else
          g[j] = (3 * f0 - 4 * v(m1, j) + v(m2, j)) / (2 * hs[i]);
      }
      out[i].col(l) = g;
    }
  }
  return out;
}

double boundary_residual(const CellCorrector& c, FieldMode mode) {
  const BoundaryMesh& m = c.setup->hole->mesh;
  MatX tr = extrapolated_trace(m, +1, [&](const std::vector<Vec3>& p) { return c.chi_formula(p, mode); });
  return tr.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// averages

namespace {

struct HolePoints {
  std::vector<Vec3> x;
  std::vector<double> w;
};

// polar rule from the origin over the star-shaped hole, r = rho tau^2
HolePoints hole_points(const Shape& shape, int dim, const HoleRule& rule) {
  HolePoints hp;
  Rule rad = gauss_legendre(rule.radial, 0.0, 1.0);
  auto add_ray = [&](const Vec3& u, double wdir) {
    double rho = shape.ray(u).rho;
    for (std::size_t a = 0; a < rad.x.size(); ++a) {
      double tau = rad.x[a], t = tau * tau;
      // dr r^{d-1} = rho^d t^{d-1} 2 tau dtau
      double w = wdir * rad.w[a] * std::pow(rho, dim) * std::pow(t, dim - 1) * 2 * tau;
      hp.x.push_back(rho * t * u);
      hp.w.push_back(w);
    }
  };
  if (dim == 2) {
    int nd = rule.directions > 0 ? rule.directions : 64;
    for (int i = 0; i < nd; ++i) {
      double a = 2 * pi * (i + 0.5) / nd;
      add_ray(Vec3(std::cos(a), std::sin(a), 0), 2 * pi / nd);
    }
  } else {
    int nt = rule.directions > 0 ? rule.directions : 12, np = 2 * nt;
    Rule gl = gauss_legendre(nt);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < np; ++j) {
        double ct = gl.x[i], st = std::sqrt(1 - ct * ct), ph = 2 * pi * (j + 0.5) / np;
        add_ray(Vec3(st * std::cos(ph), st * std::sin(ph), ct), gl.w[i] * 2 * pi / np);
      }
  }
  return hp;
}

}  // namespace

CellAverages corrector_average(const CellCorrector& c, const HoleRule& rule) {
  const CellSetup& s = *c.setup;
  const int d = c.dim;
  const double e = c.eta, sD = std::pow(e, d), T = s.hole->volume;
  HolePoints hp = hole_points(*s.hole->mesh.shape, d, rule);
  MatX lf = layer_fields(c, hp.x, FieldMode::fast, true, true);
  CellAverages a;
  for (std::size_t i = 0; i < hp.x.size(); ++i) {
    GreenValue gv = s.green.eval(hp.x[i]);
    for (int j = 0; j < d; ++j) {
      a.hole_G[j] += hp.w[i] * gv.G(j, c.k);
      a.hole_D[j] += hp.w[i] * lf(i, j);
    }
    a.hole_P += hp.w[i] * (gv.P[c.k] + lf(i, d));
  }
  // the torus integrals of G_k, P_k, D[g~], P[g~] vanish
  a.chi = sD * ((1.0 / sD - T) * (c.A_ek + c.r) - a.hole_G - a.hole_D);
  a.omega = -sD * a.hole_P;
  a.chi_minus_Aek = a.chi - c.A_ek;
  // testing the cell equation with chi: |grad chi|^2 = eta^d int chi^k
  a.energy = a.chi[c.k];
  a.grad_norm = std::sqrt(std::max(a.energy, 0.0));
  return a;
}

// ---------------------------------------------------------------------------
// exterior volume rule

TorusSamples sample_torus(const CellCorrector& c, const TorusRule& rule, bool with_grad) {
  const CellSetup& s = *c.setup;
  const int d = c.dim;
  const Shape& shape = *s.hole->mesh.shape;
  const double half = 0.5 * s.period();
  int nf = rule.face > 0 ? rule.face : (d == 2 ? 24 : 8);
  Rule fg = gauss_legendre(nf);
  Rule pg = gauss_legendre(rule.panel_nodes, 0.0, 1.0);
  TorusSamples ts;
  ts.hole_volume = s.hole->volume;
  ts.cell_volume = std::pow(s.period(), d);

  auto ray = [&](const Vec3& w, double wface) {
    double len = w.norm();
    double sT = shape.ray(w / len).rho / (half * len);
    if (sT >= 1) throw InvariantError("hole reaches the cell boundary");
    double a = sT;
    while (a < 1) {
      double b = a * rule.ratio;
      if (b >= 1 || 1 - b < 0.25 * (b - a)) b = 1;
      for (std::size_t q = 0; q < pg.x.size(); ++q) {
        double sv = a + (b - a) * pg.x[q];
        ts.x.push_back(sv * half * w);
        ts.w.push_back(wface * (b - a) * pg.w[q] * std::pow(half, d) * std::pow(sv, d - 1));
      }
      a = b;
    }
  };
  for (int cax = 0; cax < d; ++cax)
    for (int sg : {1, -1}) {
      int o1 = (cax + 1) % d, o2 = (cax + 2) % d;
      if (d == 2) {
        for (int i = 0; i < nf; ++i) ray(sg * unit(cax) + fg.x[i] * unit(o1), fg.w[i]);
      } else {
        for (int i = 0; i < nf; ++i)
          for (int j = 0; j < nf; ++j)
            ray(sg * unit(cax) + fg.x[i] * unit(o1) + fg.x[j] * unit(o2), fg.w[i] * fg.w[j]);
      }
    }
  ts.chi = c.chi_formula(ts.x, FieldMode::fast);
  ts.omega = c.omega_formula(ts.x, FieldMode::fast);
  if (with_grad) ts.grad = c.grad_chi(ts.x, FieldMode::fast);
  return ts;
}

CellNorms corrector_norms(const CellCorrector& c, const CellAverages& avg, const TorusSamples& s) {
  const int d = c.dim;
  CellNorms n;
  n.p = d == 2 ? 2 : 2 * d / (d - 2);
  const Vec3 Ae = c.A_ek;
  double lp = s.hole_volume * std::pow(Ae.norm(), n.p), om = s.hole_volume * avg.omega * avg.omega;
  double omean = 0, en = 0;
  Vec3 cm = Vec3::Zero();
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    Vec3 v = Vec3::Zero();
    v.head(d) = s.chi.row(i).transpose();
    lp += s.w[i] * std::pow((v - Ae).norm(), n.p);
    double dw = s.omega[i] - avg.omega;
    om += s.w[i] * dw * dw;
    omean += s.w[i] * s.omega[i];
    cm += s.w[i] * v;
    if (!s.grad.empty()) en += s.w[i] * s.grad[i].squaredNorm();
  }
  n.lp = std::pow(lp / s.cell_volume, 1.0 / n.p);
  n.omega_fluct = std::sqrt(om);
  n.omega_mean_quad = omean / s.cell_volume;
  n.chi_mean_quad = cm / s.cell_volume;
  if (!s.grad.empty()) n.energy_quad = en;
  return n;
}

PdeResidual pde_residual(const CellCorrector& c, const std::vector<Vec3>& probes, double h) {
  const int d = c.dim;
  const double f = std::pow(c.eta, d);
  std::vector<Vec3> st;
  for (const Vec3& x : probes) {
    double hh = h > 0 ? h : 1e-3 * std::max(x.norm(), 0.25);
    st.push_back(x);
    for (int l = 0; l < d; ++l)
      for (int s : {1, -1}) st.push_back(x + s * hh * unit(l));
  }
  MatX v = c.chi_formula(st, FieldMode::exact);
  VecX w = c.omega_formula(st, FieldMode::exact);
  PdeResidual r;
  const int per = 1 + 2 * d;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    double hh = h > 0 ? h : 1e-3 * std::max(probes[i].norm(), 0.25);
    const std::size_t b = i * per;
    Vec3 lap = Vec3::Zero(), gp = Vec3::Zero();
    double div = 0, gscale = 0;
    for (int l = 0; l < d; ++l) {
      const std::size_t p = b + 1 + 2 * l, m = p + 1;
      for (int j = 0; j < d; ++j) {
        lap[j] += (v(p, j) - 2 * v(b, j) + v(m, j)) / (hh * hh);
        gscale = std::max(gscale, std::abs(v(p, j) - v(m, j)) / (2 * hh));
      }
      gp[l] = (w[p] - w[m]) / (2 * hh);
      div += (v(p, l) - v(m, l)) / (2 * hh);
    }
    Vec3 mom = -lap + gp - f * unit(c.k);
    double scale = std::max({lap.norm(), gp.norm(), f});
    r.momentum = std::max(r.momentum, mom.norm() / scale);
    r.divergence = std::max(r.divergence, std::abs(div) / std::max(gscale, f));
  }
  return r;
}

CellRow cell_row(const CellCorrector& c, const CellAverages& avg, double residual) {
  CellRow row;
  row.d = c.dim;
  row.eta = c.eta;
  row.k = c.k + 1;
  row.avg_chi_minus_ATek = avg.chi_minus_Aek.norm();
  row.avg_omega = avg.omega;
  row.grad_norm = avg.grad_norm;
  row.g_mean = c.g_mean.norm();
  row.g_fluct_norm = c.setup->hole->mesh.l2_norm(c.g_tilde);
  row.boundary_residual = residual;
  return row;
}

void write_cell_csv(std::ostream& os, const std::vector<CellRow>& rows) {
  os << "d,eta,k,avg_chi_minus_ATek,avg_omega,grad_norm,g_mean,g_fluct_norm,boundary_residual\n";
  os << std::setprecision(12);
  for (const auto& r : rows)
    os << r.d << ',' << r.eta << ',' << r.k << ',' << r.avg_chi_minus_ATek << ',' << r.avg_omega << ','
       << r.grad_norm << ',' << r.g_mean << ',' << r.g_fluct_norm << ',' << r.boundary_residual << '\n';
}

}  // namespace stokescell
