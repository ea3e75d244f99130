#include "stokescell/nystrom.hpp"

#include "stokescell/kernels.hpp"
#include "stokescell/quadrature.hpp"
#include "stokescell/sphharm.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace stokescell {

std::string tag_name(OpTag t) {
  switch (t) {
    case OpTag::S: return "S";
    case OpTag::K: return "K";
    case OpTag::Kstar: return "K*";
    case OpTag::Keta: return "K^eta";
    case OpTag::Reta: return "R^eta";
    case OpTag::Seta: return "S^eta";
    case OpTag::Other: return "other";
  }
  return "?";
}

VecX weight_vector(const BoundaryMesh& m) {
  VecX w(m.unknowns());
  for (int i = 0; i < m.n; ++i)
    for (int c = 0; c < m.dim; ++c) w[i * m.dim + c] = m.w[i];
  return w;
}

namespace {

// ---------------------------------------------------------------------------
// 2D

void assemble_2d(const BoundaryMesh& m, MatX* S, MatX* K, MatX* Ks) {
  const int n = m.n;
  const double h = m.h;
  // Kress weights for log(4 sin^2((t - tau)/2)), depend on (i - j) mod n
  std::vector<double> R(n), cotk(n), logsin(n);
  const int half = n / 2;
  for (int k = 0; k < n; ++k) {
    double d = h * k, s = 0;
    for (int q = 1; q < half; ++q) s += std::cos(q * d) / q;
    R[k] = -(4 * pi / n) * s - (4 * pi / (double(n) * n)) * std::cos(half * d);
    if (k > 0) {
      cotk[k] = 1 / std::tan(0.5 * d);
      logsin[k] = std::log(4 * std::sin(0.5 * d) * std::sin(0.5 * d));
    }
  }
  if (S) S->setZero(2 * n, 2 * n);
  if (K) K->setZero(2 * n, 2 * n);
  if (Ks) Ks->setZero(2 * n, 2 * n);
  const double c4 = 1 / (4 * pi), c8 = 1 / (8 * pi);
  parallel_for(n, [&](std::size_t ii) {
    const int i = int(ii);
    for (int j = 0; j < n; ++j) {
      const int kij = ((i - j) % n + n) % n, kji = ((j - i) % n + n) % n;
      const double sj = m.speed[j];
      Eigen::Matrix2d bs, bk, bks;
      if (i != j) {
        Vec3 w = m.x[i] - m.x[j];
        double r = w.norm();
        Eigen::Vector2d wh(w.x() / r, w.y() / r);
        if (S) {
          double c = c4 * (0.5 * R[kij] * sj + h * sj * (std::log(r) - 0.5 * logsin[kij]));
          bs = c * Eigen::Matrix2d::Identity() - (h * sj * c4) * wh * wh.transpose();
        }
        // The (0,1) Cauchy entry times |x'(tau)| behaves like
        // -(1/8pi) cot((tau - t)/2) + smooth; the cot part gets odd-offset
        // Hilbert weights, the remainder plain trapezoid.
        double ct = cotk[kji];
        double hil = (kji % 2 == 1) ? 2 * h * ct * c8 : 0.0;
        if (K) {
          DlpKernel dk = dlp_kernel(m.x[i], m.x[j], m.normal[j], 2);
          bk = h * sj * dk.weak.topLeftCorner<2, 2>();
          double v = h * (sj * dk.cauchy(0, 1) + c8 * ct) - hil;
          bk(0, 1) += v;
          bk(1, 0) -= v;
        }
        if (Ks) {
          DlpKernel ak = adjoint_kernel(m.x[i], m.x[j], m.normal[i], 2);
          bks = h * sj * ak.weak.topLeftCorner<2, 2>();
          double v = h * (sj * ak.cauchy(0, 1) + c8 * ct) - hil;
          bks(0, 1) += v;
          bks(1, 0) -= v;
        }
      } else {
        const Vec3& d1 = m.dx[i];
        const Vec3& d2 = m.ddx[i];
        double s = m.speed[i];
        Eigen::Vector2d T(d1.x() / s, d1.y() / s);
        Eigen::Matrix2d TT = T * T.transpose(), I = Eigen::Matrix2d::Identity();
        if (S) bs = c4 * (0.5 * R[0] * s + h * s * std::log(s)) * I - (h * s * c4) * TT;
        double nk = m.normal[i].dot(d2) / (2 * s * s);  // limit of <N_y, x - y>/|x - y|^2
        double cc = d1.dot(d2) / (s * s);                // Cauchy remainder
        if (K) {
          bk = h * s * (-nk / (2 * pi) * TT - nk * c4 * I);
          bk(0, 1) -= h * cc * c8;
          bk(1, 0) += h * cc * c8;
        }
        if (Ks) {
          double nx = -nk;  // limit of <N_x, x - y>/|x - y|^2
          bks = h * s * (nx / (2 * pi) * TT + nx * c4 * I);
          bks(0, 1) -= h * cc * c8;
          bks(1, 0) += h * cc * c8;
        }
      }
      if (S) S->block<2, 2>(2 * i, 2 * j) = bs;
      if (K) K->block<2, 2>(2 * i, 2 * j) = bk;
      if (Ks) Ks->block<2, 2>(2 * i, 2 * j) = bks;
    }
  });
}

// ---------------------------------------------------------------------------
// 3D

void assemble_3d(const BoundaryMesh& m, const NystromOptions& opt, MatX* S, MatX* K, MatX* Ks) {
  const int n = m.n, p = m.ntheta - 1, nc = sh_count(p);
  MatX Y = sh_matrix(p, m.yhat);
  MatX B = Y.transpose();
  for (int j = 0; j < n; ++j) B.col(j) *= m.omega[j];

  int nt = opt.rot_theta > 0 ? opt.rot_theta : std::max(24, 2 * m.ntheta);
  int np = opt.rot_phi > 0 ? opt.rot_phi : 2 * nt;
  if (np % 2) ++np;
  Rule gl = gauss_legendre(nt, 0.0, pi);
  std::vector<Vec3> loc;
  std::vector<double> lw;
  for (int a = 0; a < nt; ++a)
    for (int b = 0; b < np; ++b) {
      double th = gl.x[a], ph = 2 * pi * b / np;
      loc.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      lw.push_back(gl.w[a] * (2 * pi / np) * std::sin(th));
    }
  const int nq = int(loc.size());
  const int nops = 3;
  MatX* out[nops] = {S, K, Ks};
  for (auto* o : out)
    if (o) o->setZero(3 * n, 3 * n);

  parallel_for(n, [&](std::size_t ii) {
    const int i = int(ii);
    Mat3 Q = frame_to(m.yhat[i]);
    MatX Kq = MatX::Zero(9 * nops, nq);
    MatX Yq(nq, nc);
    std::vector<double> buf(nc);
    for (int q = 0; q < nq; ++q) {
      Vec3 yh = (Q * loc[q]).normalized();
      SurfacePoint sp = m.shape->surface(yh);
      double wq = lw[q] * sp.jac;
      Mat3 ks[nops];
      if (S) ks[0] = stokeslet(m.x[i] - sp.x, 3) * wq;
      if (K) ks[1] = dlp_kernel(m.x[i], sp.x, sp.normal, 3).full() * wq;
      if (Ks) ks[2] = adjoint_kernel(m.x[i], sp.x, m.normal[i], 3).full() * wq;
      for (int o = 0; o < nops; ++o) {
        if (!out[o]) continue;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) Kq(o * 9 + a * 3 + b, q) = ks[o](a, b);
      }
      sh_eval(p, yh, buf.data());
      for (int c = 0; c < nc; ++c) Yq(q, c) = buf[c];
    }
    MatX rows = (Kq * Yq) * B;  // (27) x n
    for (int o = 0; o < nops; ++o) {
      if (!out[o]) continue;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int j = 0; j < n; ++j) (*out[o])(3 * i + a, 3 * j + b) = rows(o * 9 + a * 3 + b, j);
    }
  });
}

}  // namespace

LayerOperators assemble_layer_operators(const BoundaryMesh& mesh, const NystromOptions& opt) {
  LayerOperators ops;
  ops.S.tag = OpTag::S;
  ops.K.tag = OpTag::K;
  ops.Kstar.tag = OpTag::Kstar;
  ops.S.mesh = ops.K.mesh = ops.Kstar.mesh = &mesh;
  if (mesh.dim == 2)
    assemble_2d(mesh, &ops.S.A, &ops.K.A, &ops.Kstar.A);
  else
    assemble_3d(mesh, opt, &ops.S.A, &ops.K.A, &ops.Kstar.A);
  return ops;
}

OperatorMatrix assemble_slp(const BoundaryMesh& mesh) {
  OperatorMatrix S;
  S.tag = OpTag::S;
  S.mesh = &mesh;
  if (mesh.dim == 2)
    assemble_2d(mesh, &S.A, nullptr, nullptr);
  else
    assemble_3d(mesh, {}, &S.A, nullptr, nullptr);
  return S;
}

LayerOperators assemble_np(const BoundaryMesh& mesh) {
  LayerOperators ops;
  ops.K.tag = OpTag::K;
  ops.Kstar.tag = OpTag::Kstar;
  ops.K.mesh = ops.Kstar.mesh = &mesh;
  if (mesh.dim == 2)
    assemble_2d(mesh, nullptr, &ops.K.A, &ops.Kstar.A);
  else
    assemble_3d(mesh, {}, nullptr, &ops.K.A, &ops.Kstar.A);
  return ops;
}

// ---------------------------------------------------------------------------
// interpolation

VecX trig_upsample(const VecX& f, int dim, int nf) {
  const int n = int(f.size()) / dim;
  if (nf == n) return f;
  if (nf < n || n % 2) throw std::invalid_argument("trig_upsample: bad sizes");
  Eigen::FFT<double> fft;
  VecX out(nf * dim);
  std::vector<double> in(n), res;
  std::vector<std::complex<double>> spec, big(nf, 0.0);
  for (int c = 0; c < dim; ++c) {
    for (int i = 0; i < n; ++i) in[i] = f[i * dim + c];
    fft.fwd(spec, in);
    std::fill(big.begin(), big.end(), 0.0);
    const int half = n / 2;
    for (int k = 0; k < half; ++k) big[k] = spec[k];
    for (int k = 1; k < half; ++k) big[nf - k] = spec[n - k];
    big[half] = 0.5 * spec[half];
    big[nf - half] = 0.5 * spec[half];
    std::vector<std::complex<double>> tmp;
    fft.inv(tmp, big);
    for (int i = 0; i < nf; ++i) out[i * dim + c] = tmp[i].real() * double(nf) / n;
  }
  return out;
}

Vec3 interpolate_density(const BoundaryMesh& m, const VecX& f, double t) {
  Vec3 v = Vec3::Zero();
  const int n = m.n;
  for (int j = 0; j < n; ++j) {
    double d = t - m.t[j];
    double s = std::sin(0.5 * d);
    double L;
    if (std::abs(s) < 1e-14)
      L = 1;
    else
      L = std::sin(0.5 * n * d) / (n * std::tan(0.5 * d));
    for (int c = 0; c < 2; ++c) v[c] += L * f[j * 2 + c];
  }
  return v;
}

Vec3 interpolate_density(const BoundaryMesh& m, const VecX& f, const Vec3& yhat) {
  const int p = m.ntheta - 1, nc = sh_count(p);
  std::vector<double> y(nc), coef(3 * nc, 0.0);
  MatX Y = sh_matrix(p, m.yhat);
  Vec3 v = Vec3::Zero();
  sh_eval(p, yhat, y.data());
  for (int j = 0; j < m.n; ++j) {
    double lj = 0;
    for (int c = 0; c < nc; ++c) lj += y[c] * Y(j, c);
    lj *= m.omega[j];
    for (int c = 0; c < 3; ++c) v[c] += lj * f[j * 3 + c];
  }
  return v;
}

RefinedDensity refine(const BoundaryMesh& mesh, const VecX& f, int target) {
  RefinedDensity r;
  if (mesh.dim == 2) {
    int nf = target > 0 ? target : 8192;
    if (nf <= mesh.n) return {mesh, f};
    nf += nf % 2;
    r.mesh = resample_mesh(mesh, nf);
    r.values = trig_upsample(f, 2, nf);
    return r;
  }
  int nt = target > 0 ? target : 48;
  if (nt <= mesh.ntheta) return {mesh, f};
  r.mesh = resample_mesh(mesh, nt, 2 * nt);
  const int p = mesh.ntheta - 1;
  MatX B = sh_matrix(p, mesh.yhat).transpose();
  for (int j = 0; j < mesh.n; ++j) B.col(j) *= mesh.omega[j];
  MatX Yf = sh_matrix(p, r.mesh.yhat);
  MatX F(mesh.n, 3);
  for (int j = 0; j < mesh.n; ++j)
    for (int c = 0; c < 3; ++c) F(j, c) = f[j * 3 + c];
  MatX Ff = Yf * (B * F);
  r.values.resize(3 * r.mesh.n);
  for (int j = 0; j < r.mesh.n; ++j)
    for (int c = 0; c < 3; ++c) r.values[j * 3 + c] = Ff(j, c);
  return r;
}

// ---------------------------------------------------------------------------
// off-surface evaluation

namespace {

// 3D targets closer than the finest refinement can resolve go to a local
// polar rule around their foot point
constexpr int near_limit = 96;
constexpr int near_level = -1;

// enough fine nodes that the node spacing stays a few times below the
// distance from an evaluation point to the boundary; 0 means the mesh itself
// is already fine enough
int refinement_for(const BoundaryMesh& mesh, double dist) {
  dist = std::max(dist, 1e-12);
  if (mesh.dim == 2) {
    // the widest node gap sets the spacing, not the mean one
    double wmax = 0;
    for (double w : mesh.w) wmax = std::max(wmax, w);
    double want = 6 * mesh.n * wmax / dist;
    if (4 * want <= mesh.n) return 0;
    int nf = 4096;
    while (nf < want && nf < 65536) nf *= 2;
    return std::max(nf, mesh.n);
  }
  double rmax = 0;
  for (const auto& x : mesh.x) rmax = std::max(rmax, (x - mesh.shape->spec().center).norm());
  double want = 3 * pi * rmax / dist;
  if (2 * want <= mesh.ntheta) return 0;
  if (want > near_limit) return near_level;
  return std::clamp(int(std::ceil(want)), std::max(32, mesh.ntheta), near_limit);
}

// distance to the surface itself, not to the nearest node: off the node
// normals the node distance overestimates it by up to half a node gap
double boundary_distance(const BoundaryMesh& mesh, const Vec3& x) {
  double dmin = std::numeric_limits<double>::max();
  int jn = 0;
  for (int j = 0; j < mesh.n; ++j) {
    double dd = (x - mesh.x[j]).squaredNorm();
    if (dd < dmin) dmin = dd, jn = j;
  }
  dmin = std::sqrt(dmin);
  if (!mesh.shape) return dmin;
  const Shape& sh = *mesh.shape;
  if (mesh.dim == 3) return std::min(dmin, (x - sh.surface(sh.foot(x)).x).norm());
  // Newton on |x - curve(t)|^2 from the nearest node, steps kept within a node gap
  double t = mesh.t[jn];
  for (int it = 0; it < 30; ++it) {
    CurvePoint c = sh.curve(t);
    Vec3 r = c.x - x;
    double g = r.dot(c.d1), H = c.d1.squaredNorm() + r.dot(c.d2);
    if (!(H > 0)) break;
    double dt = std::clamp(-g / H, -mesh.h, mesh.h);
    t += dt;
    if (std::abs(dt) < 1e-14) break;
  }
  return std::min(dmin, (sh.curve(t).x - x).norm());
}

// points grouped by the refinement they need
std::map<int, std::vector<std::size_t>> refinement_groups(const BoundaryMesh& mesh, const std::vector<Vec3>& pts,
                                                          int requested) {
  std::map<int, std::vector<std::size_t>> g;
  if (requested > 0) {
    auto& v = g[requested];
    for (std::size_t i = 0; i < pts.size(); ++i) v.push_back(i);
    return g;
  }
  std::vector<int> lev(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { lev[i] = refinement_for(mesh, boundary_distance(mesh, pts[i])); });
  for (std::size_t i = 0; i < pts.size(); ++i) g[lev[i]].push_back(i);
  return g;
}

}  // namespace

namespace {

// Polar rule on the parameter sphere centred at the foot point of x, with the
// polar angle stretched by a sinh map so the nodes cluster on the scale of
// the distance. The density comes from its spherical-harmonic interpolant.
struct NearRule3 {
  std::vector<double> u, wu;
  int nphi;
};

const NearRule3& near_rule() {
  static const NearRule3 r = [] {
    NearRule3 q;
    Rule gl = gauss_legendre(40, 0.0, 1.0);
    q.u = gl.x;
    q.wu = gl.w;
    q.nphi = 32;
    return q;
  }();
  return r;
}

void near_eval_3d(Potential kind, const BoundaryMesh& m, const MatX& coef, const std::vector<Vec3>& pts,
                  const std::vector<std::size_t>& idx, bool subtract, MatX& out) {
  const int p = m.ntheta - 1, nc = sh_count(p);
  const Shape& shape = *m.shape;
  const auto& spec = shape.spec();
  Vec3 ax = spec.kind == ShapeKind::sphere ? Vec3::Constant(spec.radius)
                                           : Vec3(spec.axes[0], spec.axes[1], spec.axes[2]);
  const double size = spec.scale * ax.minCoeff();
  const NearRule3& nr = near_rule();
  const bool velocity = kind == Potential::S || kind == Potential::D;
  parallel_for(idx.size(), [&](std::size_t q) {
    const std::size_t ip = idx[q];
    const Vec3& x = pts[ip];
    Vec3 yf = shape.foot(x);
    SurfacePoint fp = shape.surface(yf);
    double t = (x - fp.x).norm();
    if (t == 0) throw std::domain_error("evaluation point lies on the boundary");
    std::vector<double> buf(nc);
    auto density = [&](const Vec3& yh) {
      sh_eval(p, yh, buf.data());
      Vec3 v = Vec3::Zero();
      for (int c = 0; c < nc; ++c) v += buf[c] * coef.row(c).transpose().head<3>();
      return v;
    };
    bool sub = subtract && (kind == Potential::D || kind == Potential::P);
    Vec3 f0 = sub ? density(yf) : Vec3::Zero();
    Mat3 Q = frame_to(yf);
    const double ts = t / size, umax = std::asinh(pi / ts);
    Vec3 acc = Vec3::Zero();
    double pacc = 0;
    for (std::size_t a = 0; a < nr.u.size(); ++a) {
      double u = nr.u[a] * umax, th = ts * std::sinh(u);
      double wth = nr.wu[a] * umax * ts * std::cosh(u) * std::sin(th) * (2 * pi / nr.nphi);
      for (int b = 0; b < nr.nphi; ++b) {
        double ph = 2 * pi * (b + 0.5) / nr.nphi;
        Vec3 yh = (Q * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th))).normalized();
        SurfacePoint sp = shape.surface(yh);
        double w = wth * sp.jac;
        Vec3 fj = density(yh) - f0;
        switch (kind) {
          case Potential::S: acc += w * (stokeslet(x - sp.x, 3) * fj); break;
          case Potential::D: acc += w * (dlp_kernel(x, sp.x, sp.normal, 3).full() * fj); break;
          case Potential::Q: pacc += w * pressurelet(x - sp.x, 3).dot(fj); break;
          case Potential::P: pacc += w * dlp_pressure_kernel(x, sp.x, sp.normal, 3).dot(fj); break;
        }
      }
    }
    if (sub && kind == Potential::D && (x - fp.x).dot(fp.normal) < 0) acc += f0;
    if (velocity)
      for (int c = 0; c < 3; ++c) out(ip, c) = acc[c];
    else
      out(ip, 0) = pacc;
  });
}

MatX sh_coefficients(const BoundaryMesh& m, const VecX& f) {
  const int p = m.ntheta - 1;
  MatX B = sh_matrix(p, m.yhat).transpose();
  for (int j = 0; j < m.n; ++j) B.col(j) *= m.omega[j];
  MatX F(m.n, 3);
  for (int j = 0; j < m.n; ++j)
    for (int c = 0; c < 3; ++c) F(j, c) = f[j * 3 + c];
  return B * F;
}

void eval_group(Potential kind, const BoundaryMesh& m, const VecX& g, const std::vector<Vec3>& pts,
                const std::vector<std::size_t>& idx, bool subtract, MatX& out) {
  const int d = m.dim;
  const bool velocity = kind == Potential::S || kind == Potential::D;
  parallel_for(idx.size(), [&](std::size_t q) {
    const std::size_t ip = idx[q];
    const Vec3& x = pts[ip];
    int jn = 0;
    double dmin = std::numeric_limits<double>::max();
    for (int j = 0; j < m.n; ++j) {
      double dd = (x - m.x[j]).squaredNorm();
      if (dd < dmin) dmin = dd, jn = j;
    }
    dmin = std::sqrt(dmin);
    if (dmin == 0) throw std::domain_error("evaluation point coincides with a boundary node");
    if (dmin < 1e-12) std::cerr << "warning: near-singular off-surface evaluation\n";
    Vec3 f0 = Vec3::Zero();
    bool sub = subtract && (kind == Potential::D || kind == Potential::P);
    if (sub)
      for (int c = 0; c < d; ++c) f0[c] = g[jn * d + c];
    Vec3 acc = Vec3::Zero();
    double pacc = 0;
    for (int j = 0; j < m.n; ++j) {
      Vec3 fj = Vec3::Zero();
      for (int c = 0; c < d; ++c) fj[c] = g[j * d + c];
      fj -= f0;
      switch (kind) {
        case Potential::S: acc += m.w[j] * (stokeslet(x - m.x[j], d) * fj); break;
        case Potential::D: acc += m.w[j] * (dlp_kernel(x, m.x[j], m.normal[j], d).full() * fj); break;
        case Potential::Q: pacc += m.w[j] * pressurelet(x - m.x[j], d).dot(fj); break;
        case Potential::P: pacc += m.w[j] * dlp_pressure_kernel(x, m.x[j], m.normal[j], d).dot(fj); break;
      }
    }
    // D of a constant is the constant inside and zero outside
    if (sub && kind == Potential::D && (x - m.x[jn]).dot(m.normal[jn]) < 0) acc += f0;
    if (velocity)
      for (int c = 0; c < d; ++c) out(ip, c) = acc[c];
    else
      out(ip, 0) = pacc;
  });
}

}  // namespace

MatX eval_offsurface(Potential kind, const BoundaryMesh& mesh, const VecX& f, const std::vector<Vec3>& pts,
                     const EvalOptions& opt) {
  const bool velocity = kind == Potential::S || kind == Potential::D;
  MatX out = MatX::Zero(pts.size(), velocity ? mesh.dim : 1);
  for (const auto& [level, idx] : refinement_groups(mesh, pts, opt.refine_nodes)) {
    if (level == near_level) {
      near_eval_3d(kind, mesh, sh_coefficients(mesh, f), pts, idx, opt.subtract, out);
    } else if (level == 0) {
      eval_group(kind, mesh, f, pts, idx, opt.subtract, out);
    } else {
      RefinedDensity rd = refine(mesh, f, level);
      eval_group(kind, rd.mesh, rd.values, pts, idx, opt.subtract, out);
    }
  }
  return out;
}

MatX eval_slp_traction(const BoundaryMesh& mesh, const VecX& f, const std::vector<Vec3>& pts,
                       const std::vector<Vec3>& normals, const EvalOptions& opt) {
  const int d = mesh.dim;
  MatX out = MatX::Zero(pts.size(), d);
  for (const auto& [level, idx] : refinement_groups(mesh, pts, opt.refine_nodes)) {
    const int lv = level == near_level ? near_limit : level;
    RefinedDensity rd = lv == 0 ? RefinedDensity{mesh, f} : refine(mesh, f, lv);
    const BoundaryMesh& m = rd.mesh;
    parallel_for(idx.size(), [&](std::size_t q) {
      const std::size_t ip = idx[q];
      Vec3 acc = Vec3::Zero();
      for (int j = 0; j < m.n; ++j) {
        Vec3 fj = Vec3::Zero();
        for (int c = 0; c < d; ++c) fj[c] = rd.values[j * d + c];
        acc += m.w[j] * (slp_traction_kernel(pts[ip], m.x[j], normals[ip], d) * fj);
      }
      for (int c = 0; c < d; ++c) out(ip, c) = acc[c];
    });
  }
  return out;
}

MatX extrapolated_trace(const BoundaryMesh& mesh, int side, const FieldFn& F, double t0, int levels) {
  const int n = mesh.n;
  std::vector<Vec3> pts;
  pts.reserve(levels * n);
  std::vector<double> ts;
  for (int lev = 0; lev < levels; ++lev) {
    ts.push_back(t0 / (1 << lev));
    for (int i = 0; i < n; ++i) pts.push_back(mesh.x[i] + side * ts.back() * mesh.normal[i]);
  }
  MatX v = F(pts);
  // Neville's scheme evaluated at t = 0
  std::vector<MatX> P;
  for (int lev = 0; lev < levels; ++lev) P.push_back(v.middleRows(lev * n, n));
  for (int k = 1; k < levels; ++k)
    for (int i = 0; i < levels - k; ++i) P[i] = (ts[i + k] * P[i] - ts[i] * P[i + 1]) / (ts[i + k] - ts[i]);
  return P[0];
}

double JumpReport::max() const {
  return std::max({d_exterior, d_interior, sq_exterior, sq_interior, s_continuity});
}

namespace {

double max_dev(const MatX& trace, const VecX& ref, int d) {
  double e = 0;
  for (int i = 0; i < trace.rows(); ++i)
    for (int c = 0; c < d; ++c) e = std::max(e, std::abs(trace(i, c) - ref[i * d + c]));
  return e;
}

}  // namespace

JumpReport verify_jumps(const BoundaryMesh& mesh, const LayerOperators& ops, const VecX& phi) {
  JumpReport rep;
  const int d = mesh.dim;
  // the extrapolation window has to sit well inside the smallest radius of
  // curvature (the kite tip is ~0.015)
  double t0 = 1e-2;
  if (d == 2)
    for (int i = 0; i < mesh.n; ++i) {
      double k = std::abs(mesh.dx[i].x() * mesh.ddx[i].y() - mesh.dx[i].y() * mesh.ddx[i].x()) /
                 std::pow(mesh.speed[i], 3);
      if (k > 0) t0 = std::min(t0, 0.25 / k);
    }
  const int levels = 6;
  auto trace = [&](int side, const FieldFn& f) { return extrapolated_trace(mesh, side, f, t0, levels); };
  auto D = [&](const std::vector<Vec3>& p) { return eval_offsurface(Potential::D, mesh, phi, p); };
  auto S = [&](const std::vector<Vec3>& p) { return eval_offsurface(Potential::S, mesh, phi, p); };
  auto T = [&](const std::vector<Vec3>& p) {
    std::vector<Vec3> nrm(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) nrm[i] = mesh.normal[i % mesh.n];
    return eval_slp_traction(mesh, phi, p, nrm);
  };
  VecX Kp = ops.K.apply(phi), Ksp = ops.Kstar.apply(phi);
  rep.d_exterior = max_dev(trace(+1, D), Kp - 0.5 * phi, d);
  rep.d_interior = max_dev(trace(-1, D), Kp + 0.5 * phi, d);
  rep.sq_exterior = max_dev(trace(+1, T), Ksp + 0.5 * phi, d);
  rep.sq_interior = max_dev(trace(-1, T), Ksp - 0.5 * phi, d);
  MatX sp = trace(+1, S), sm = trace(-1, S);
  rep.s_continuity = (sp - sm).cwiseAbs().maxCoeff();
  return rep;
}

VecX random_smooth_density(const BoundaryMesh& mesh, unsigned seed, int waves) {
  const int d = mesh.dim;
  std::mt19937 rng(seed);
  std::normal_distribution<double> kdist(0.0, 2.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VecX f = VecX::Zero(mesh.unknowns());
  for (int c = 0; c < d; ++c)
    for (int w = 0; w < waves; ++w) {
      Vec3 kv = Vec3::Zero();
      for (int l = 0; l < d; ++l) kv[l] = kdist(rng);
      double amp = u(rng), ph = pi * u(rng);
      for (int i = 0; i < mesh.n; ++i) f[i * d + c] += amp * std::cos(kv.dot(mesh.x[i]) + ph);
    }
  return f;
}

// ---------------------------------------------------------------------------

SolveResult solve_dense(const MatX& A, const VecX& b, OpTag tag) {
  Eigen::PartialPivLU<MatX> lu(A);
  SolveResult r;
  r.rcond = lu.rcond();
  if (!(r.rcond > 1e-14)) {
    std::ostringstream os;
    os << "operator " << tag_name(tag) << " is numerically singular (condition estimate " << 1 / r.rcond << ")";
    throw SingularError(os.str());
  }
  r.x = lu.solve(b);
  double nb = b.norm();
  r.rel_residual = (A * r.x - b).norm() / (nb > 0 ? nb : 1.0);
  return r;
}

SolveResult solve_dense(const OperatorMatrix& A, const VecX& b) { return solve_dense(A.A, b, A.tag); }

}  // namespace stokescell
