#include "stokescell/periodic.hpp"

#include <cmath>
#include <algorithm>
#include <complex>

namespace stokescell {

namespace {

constexpr double euler_gamma = 0.57721566490153286061;

// Radial Laplace-type function f(r) with A = f'/r and B = A'/r. Every
// Stokes quantity below is assembled from one such triple.
struct Radial {
  double f = 0, A = 0, B = 0;
};

Radial free_radial(double r, int dim) {
  if (dim == 2) return {-std::log(r) / (2 * pi), -1 / (2 * pi * r * r), 1 / (pi * r * r * r * r)};
  return {1 / (4 * pi * r), -1 / (4 * pi * r * r * r), 3 / (4 * pi * std::pow(r, 5))};
}

// Gaussian-screened part, decays like exp(-alpha^2 r^2)
Radial screened_radial(double r, int dim, double a) {
  const double u = a * a * r * r, e = std::exp(-u), r2 = r * r;
  if (dim == 2) {
    double e1 = -std::expint(-u);
    return {e1 / (4 * pi), -e / (2 * pi * r2), e * (1 + u) / (pi * r2 * r2)};
  }
  const double ec = std::erfc(a * r), sp = std::pow(pi, 1.5);
  Radial q;
  q.f = ec / (4 * pi * r);
  q.A = -a * e / (2 * sp * r2) - ec / (4 * pi * r2 * r);
  q.B = a * a * a * e / (sp * r2) + 3 * a * e / (2 * sp * r2 * r2) + 3 * ec / (4 * pi * r2 * r2 * r);
  return q;
}

// smooth complement free - screened, by series near the origin
Radial smooth_radial(double r, int dim, double a) {
  const double u = a * a * r * r;
  if (u > 1.0) {
    Radial fr = free_radial(r, dim), sc = screened_radial(r, dim, a);
    return {fr.f - sc.f, fr.A - sc.A, fr.B - sc.B};
  }
  // F(u) and derivatives; A = 2 a^2 F'(u), B = 4 a^4 F''(u)
  double F = 0, F1 = 0, F2 = 0;
  if (dim == 3) {
    double pre = a / (4 * pi) * 2 / std::sqrt(pi);
    // c_n = (-1)^n / (n! (2n + 1)); F = sum c_n u^n
    double fact = 1, up = 1;  // n!, u^n
    for (int n = 0; n < 40; ++n) {
      if (n > 0) fact *= n;
      const double c = (n % 2 ? -1.0 : 1.0) / (fact * (2 * n + 1));
      F += c * up;
      // derivative terms: coefficient of u^{n-1} in F', u^{n-2} in F''
      if (n + 1 < 40) {
        const double c1 = ((n + 1) % 2 ? -1.0 : 1.0) / (fact * (n + 1) * (2 * n + 3));
        F1 += (n + 1) * c1 * up;
        if (n + 2 < 40) {
          const double c2 = ((n + 2) % 2 ? -1.0 : 1.0) / (fact * (n + 1) * (n + 2) * (2 * n + 5));
          F2 += (n + 2) * (n + 1) * c2 * up;
        }
      }
      up *= u;
    }
    return {pre * F, 2 * a * a * pre * F1, 4 * a * a * a * a * pre * F2};
  }
  // Ein(u) = sum_{n>=1} (-1)^{n+1} u^n / (n n!)
  double ein = 0, d1 = 0, d2 = 0, fact = 1;
  for (int n = 1; n < 40; ++n) {
    fact *= n;
    double s = (n % 2 ? 1.0 : -1.0) / fact;
    ein += s * std::pow(u, n) / n;
    d1 += s * std::pow(u, n - 1);
    if (n >= 2) d2 += s * (n - 1) * std::pow(u, n - 2);
  }
  F = (euler_gamma + 2 * std::log(a) - ein) / (4 * pi);
  F1 = -d1 / (4 * pi);
  F2 = -d2 / (4 * pi);
  return {F, 2 * a * a * F1, 4 * a * a * a * a * F2};
}

Mat3 ident(int dim) {
  Mat3 I = Mat3::Identity();
  if (dim == 2) I(2, 2) = 0;
  return I;
}

}  // namespace

PeriodicGreen::PeriodicGreen(int dim, double alpha, double digits) : dim_(dim) {
  if (dim != 2 && dim != 3) throw InputError("periodic Green function needs dim 2 or 3");
  // balances real-space special functions against reciprocal modes
  alpha_ = alpha > 0 ? alpha : (dim == 2 ? 3.0 : 2.4);
  // exp(-alpha^2 r^2) < exp(-digits) beyond r = cut
  cut_ = std::sqrt(digits) / alpha_;
  nreal_ = int(std::ceil(cut_ + 0.5));
  // exp(-|xi|^2 / 4 alpha^2) < exp(-digits) beyond |m| = alpha sqrt(digits) / pi
  nfour_ = int(std::ceil(alpha_ * std::sqrt(digits) / pi));
  const int M = nfour_;
  for (int a = -M; a <= M; ++a)
    for (int b = -M; b <= M; ++b)
      for (int c = (dim == 3 ? -M : 0); c <= (dim == 3 ? M : 0); ++c) {
        // one representative of each pair m, -m
        if (a < 0 || (a == 0 && (b < 0 || (b == 0 && c <= 0)))) continue;
        Mode md;
        md.m[0] = a;
        md.m[1] = b;
        md.m[2] = c;
        md.xi = 2 * pi * Vec3(a, b, c);
        double x2 = md.xi.squaredNorm(), s = x2 / (4 * alpha_ * alpha_);
        if (s > digits + 5) continue;
        md.fh = std::exp(-s) / x2;
        md.gq = md.fh * (1 + s) / x2;
        modes_.push_back(md);
      }
  if (nfour_ > 31) throw InputError("Ewald parameter too large");
  const int L = nreal_ + 1;
  for (int a = -L; a <= L; ++a)
    for (int b = -L; b <= L; ++b)
      for (int c = (dim == 3 ? -L : 0); c <= (dim == 3 ? L : 0); ++c) {
        Vec3 n(a, b, c);
        if (n.norm() > cut_ + 1.5) continue;
        images_.push_back(n);
      }
}

Vec3 PeriodicGreen::wrap(const Vec3& x) const {
  Vec3 z = x;
  for (int c = 0; c < dim_; ++c) z[c] -= std::floor(z[c] + 0.5);
  if (dim_ == 2) z[2] = 0;
  return z;
}

namespace {

// Sums of radial moments; G, dG, P, dP follow from them at the end.
struct Moments {
  double f = 0, A = 0;
  Vec3 Ax = Vec3::Zero();
  double Axx[6] = {}, Bxx[6] = {}, Bxxx[10] = {};
  void add(const Radial& q, const Vec3& x, double s) {
    const double a = s * q.A, b = s * q.B;
    f += s * q.f;
    A += a;
    Ax += a * x;
    const double xx[6] = {x[0] * x[0], x[0] * x[1], x[0] * x[2], x[1] * x[1], x[1] * x[2], x[2] * x[2]};
    for (int i = 0; i < 6; ++i) {
      Axx[i] += a * xx[i];
      Bxx[i] += b * xx[i];
    }
    // x_l x_j x_k for l <= j <= k
    const double t[10] = {xx[0] * x[0], xx[0] * x[1], xx[0] * x[2], xx[1] * x[1], xx[1] * x[2],
                          xx[2] * x[2], xx[3] * x[1], xx[3] * x[2], xx[4] * x[2], xx[5] * x[2]};
    for (int i = 0; i < 10; ++i) Bxxx[i] += b * t[i];
  }
};

inline int sym2(int i, int j) {
  static const int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return idx[i][j];
}

inline int sym3(int l, int j, int k) {
  int a[3] = {l, j, k};
  std::sort(a, a + 3);
  static const int idx[3][3][3] = {{{0, 1, 2}, {-1, 3, 4}, {-1, -1, 5}},
                                   {{-1, -1, -1}, {-1, 6, 7}, {-1, -1, 8}},
                                   {{-1, -1, -1}, {-1, -1, -1}, {-1, -1, 9}}};
  return idx[a[0]][a[1]][a[2]];
}

}  // namespace

void PeriodicGreen::accumulate(const Vec3& x0, bool remainder, GreenValue& v, double* lap, Vec3* lapg) const {
  const int d = dim_;
  // the remainder is not periodic: only the full function is wrapped
  Vec3 x = remainder ? x0 : wrap(x0);
  if (d == 2) x[2] = 0;
  Moments mo;
  const double cut2 = cut_ * cut_;
  for (const Vec3& n : images_) {
    if (remainder && n.isZero()) continue;
    Vec3 y = x + n;
    double r2 = y.squaredNorm();
    if (r2 > cut2) continue;
    double r = std::sqrt(r2);
    if (r == 0) throw std::domain_error("periodic Green function evaluated on a lattice point");
    mo.add(screened_radial(r, d, alpha_), y, 1.0);
  }
  if (remainder) {
    // n = 0 image replaced by minus its smooth complement
    mo.add(smooth_radial(x.norm(), d, alpha_), x, -1.0);
  }
  // reciprocal space over half the modes (pairs m, -m give equal terms)
  const int M = nfour_;
  std::complex<double> ph[3][64];
  for (int c = 0; c < 3; ++c) {
    std::complex<double> e1 = std::polar(1.0, 2 * pi * x[c]);
    ph[c][M] = 1;
    for (int m = 1; m <= M; ++m) {
      ph[c][M + m] = ph[c][M + m - 1] * e1;
      ph[c][M - m] = std::conj(ph[c][M + m]);
    }
  }
  double F0 = 0;                         // sum fh cos
  Vec3 Fs = Vec3::Zero();                // sum fh sin xi
  double Fxx[6] = {}, Gxx[6] = {}, Gxxx[10] = {};
  for (const Mode& md : modes_) {
    std::complex<double> e = ph[0][M + md.m[0]] * ph[1][M + md.m[1]] * ph[2][M + md.m[2]];
    const double cs = 2 * e.real(), sn = 2 * e.imag();
    const Vec3& xi = md.xi;
    F0 += md.fh * cs;
    Fs += (md.fh * sn) * xi;
    const double xx[6] = {xi[0] * xi[0], xi[0] * xi[1], xi[0] * xi[2], xi[1] * xi[1], xi[1] * xi[2], xi[2] * xi[2]};
    const double gc = md.gq * cs, gs = md.gq * sn, fc = md.fh * cs;
    for (int i = 0; i < 6; ++i) {
      Gxx[i] += gc * xx[i];
      Fxx[i] += fc * xx[i];
    }
    const double t[10] = {xx[0] * xi[0], xx[0] * xi[1], xx[0] * xi[2], xx[1] * xi[1], xx[1] * xi[2],
                          xx[2] * xi[2], xx[3] * xi[1], xx[3] * xi[2], xx[4] * xi[2], xx[5] * xi[2]};
    for (int i = 0; i < 10; ++i) Gxxx[i] += gs * t[i];
  }
  const double c0 = 1 / (4 * alpha_ * alpha_);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      int s2 = sym2(j, k);
      v.G(j, k) += (j == k ? -0.5 * mo.f - F0 + c0 : 0.0) + 0.5 * mo.Axx[s2] + Gxx[s2];
      v.dP(j, k) += (j == k ? mo.A : 0.0) + mo.Bxx[s2] - Fxx[s2];
      for (int l = 0; l < d; ++l) {
        double t = 0.5 * mo.Bxxx[sym3(l, j, k)] - Gxxx[sym3(l, j, k)];
        if (j == k) t += -0.5 * mo.Ax[l] + Fs[l];
        if (l == j) t += 0.5 * mo.Ax[k];
        if (l == k) t += 0.5 * mo.Ax[j];
        v.dG[l](j, k) += t;
      }
    }
  for (int k = 0; k < d; ++k) v.P[k] += mo.Ax[k] - Fs[k];
  if (lap) *lap += mo.f + F0 - c0;
  if (lapg) *lapg += mo.Ax - Fs;
}

GreenValue PeriodicGreen::eval(const Vec3& x) const {
  GreenValue v;
  accumulate(x, false, v, nullptr, nullptr);
  return v;
}

GreenValue PeriodicGreen::remainder(const Vec3& x) const {
  GreenValue v;
  accumulate(x, true, v, nullptr, nullptr);
  return v;
}

double PeriodicGreen::laplace(const Vec3& x) const {
  GreenValue v;
  double l = 0;
  accumulate(x, false, v, &l, nullptr);
  return l;
}

Vec3 PeriodicGreen::laplace_grad(const Vec3& x) const {
  GreenValue v;
  Vec3 g = Vec3::Zero();
  accumulate(x, false, v, nullptr, &g);
  return g;
}

Mat3 fourier_reference_2d(const Vec3& x, int m0, int levels) {
  // partial sums over growing squares, then Neville in h = 1/M
  std::vector<double> h;
  std::vector<Mat3> S;
  Mat3 acc = Mat3::Zero();
  int done = 0;
  for (int l = 0; l < levels; ++l) {
    int M = m0 << l;
    for (int a = -M; a <= M; ++a)
      for (int b = -M; b <= M; ++b) {
        if (std::max(std::abs(a), std::abs(b)) <= done) continue;
        Vec3 xi = 2 * pi * Vec3(a, b, 0);
        double x2 = xi.squaredNorm();
        Mat3 gh = Mat3::Zero();
        gh.topLeftCorner(2, 2) = -(Eigen::Matrix2d::Identity() - xi.head(2) * xi.head(2).transpose() / x2) / x2;
        acc += std::cos(xi.dot(x)) * gh;
      }
    done = M;
    h.push_back(1.0 / M);
    S.push_back(acc);
  }
  int n = int(S.size());
  for (int k = 1; k < n; ++k)
    for (int i = n - 1; i >= k; --i) S[i] = S[i] + (S[i] - S[i - 1]) * (h[i] / (h[i - k] - h[i]));
  return S[n - 1];
}

RescaledGreen::RescaledGreen(int dim, double eta, double alpha) : base_(dim, alpha), eta_(eta) {
  if (!(eta > 0 && eta <= 1)) throw InputError("eta must lie in (0, 1]");
}

Vec3 RescaledGreen::wrap(const Vec3& x) const { return base_.wrap(eta_ * x) / eta_; }

GreenValue RescaledGreen::eval(const Vec3& x) const {
  const int d = dim();
  GreenValue u = base_.eval(eta_ * x), v;
  const double e = eta_, sG = std::pow(e, d - 2), sP = std::pow(e, d - 1), sD = std::pow(e, d);
  v.G = sG * u.G;
  for (int l = 0; l < 3; ++l) v.dG[l] = sP * u.dG[l];
  v.P = sP * u.P;
  v.dP = sD * u.dP;
  return v;
}

GreenValue RescaledGreen::remainder(const Vec3& x) const {
  const int d = dim();
  GreenValue u = base_.remainder(eta_ * x), v;
  const double e = eta_, sG = std::pow(e, d - 2), sP = std::pow(e, d - 1), sD = std::pow(e, d);
  v.G = sG * u.G;
  if (d == 2) v.G += std::log(e) / (4 * pi) * ident(2);
  for (int l = 0; l < 3; ++l) v.dG[l] = sP * u.dG[l];
  v.P = sP * u.P;
  v.dP = sD * u.dP;
  return v;
}

Mat3 periodic_dlp_remainder(const RescaledGreen& g, const Vec3& x, const Vec3& y, const Vec3& ny) {
  const int d = g.dim();
  // unscaled remainder at z = eta (y - x)
  GreenValue r = g.base().remainder(g.eta() * (y - x));
  Mat3 M = Mat3::Zero();
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) {
      double s = -r.P[k] * ny[j];
      for (int l = 0; l < d; ++l) s += ny[l] * r.dG[l](j, k);
      M(k, j) = s;
    }
  return M;
}

PeriodicOperators assemble_periodic_np(const BoundaryMesh& m, const RescaledGreen& g, const OperatorMatrix& K) {
  const int d = m.dim, n = m.n;
  PeriodicOperators ops;
  ops.R.A = MatX::Zero(d * n, d * n);
  ops.R.tag = OpTag::Reta;
  ops.R.mesh = &m;
  parallel_for(std::size_t(n), [&](std::size_t ii) {
    int i = int(ii);
    for (int j = 0; j < n; ++j) {
      Mat3 M = periodic_dlp_remainder(g, m.x[i], m.x[j], m.normal[j]);
      ops.R.A.block(i * d, j * d, d, d) = m.w[j] * M.topLeftCorner(d, d);
    }
  });
  ops.Keta.A = K.A + std::pow(g.eta(), d - 1) * ops.R.A;
  ops.Keta.tag = OpTag::Keta;
  ops.Keta.mesh = &m;
  return ops;
}

MatX eval_periodic(Potential kind, const BoundaryMesh& m, const RescaledGreen& g, const VecX& f,
                   const std::vector<Vec3>& pts0, const EvalOptions& opt) {
  const int d = m.dim;
  const double e = g.eta();
  std::vector<Vec3> pts(pts0.size());
  for (std::size_t p = 0; p < pts.size(); ++p) pts[p] = g.wrap(pts0[p]);
  MatX out = eval_offsurface(kind, m, f, pts, opt);
  const double sP = std::pow(e, d - 1), sD = std::pow(e, d);
  parallel_for(pts.size(), [&](std::size_t p) {
    const Vec3& x = pts[p];
    VecX acc = VecX::Zero(out.cols());
    for (int j = 0; j < m.n; ++j) {
      Vec3 phi = Vec3::Zero();
      for (int c = 0; c < d; ++c) phi[c] = f[j * d + c];
      const Vec3& y = m.x[j];
      const Vec3& ny = m.normal[j];
      switch (kind) {
        case Potential::S: {
          GreenValue r = g.remainder(x - y);
          acc += m.w[j] * (r.G * phi).head(d);
          break;
        }
        case Potential::Q: {
          GreenValue r = g.remainder(x - y);
          acc[0] += m.w[j] * r.P.dot(phi);
          break;
        }
        case Potential::D: {
          Mat3 M = periodic_dlp_remainder(g, x, y, ny);
          acc += m.w[j] * sP * (M * phi).head(d);
          break;
        }
        case Potential::P: {
          // same sign rule as dlp_pressure_kernel: -eta^d N^i (d_i h_k)(eta (y - x))
          GreenValue r = g.base().remainder(e * (y - x));
          acc[0] -= m.w[j] * sD * (r.dP.transpose() * ny).dot(phi);
          break;
        }
      }
    }
    out.row(p) += acc.transpose();
  });
  return out;
}

GreenSelfTest green_selftest(int dim) {
  PeriodicGreen a(dim), b(dim, 2 * a.alpha());
  GreenSelfTest rep;
  std::vector<Vec3> xs;
  if (dim == 2) {
    for (Vec3 x : {Vec3(0.25, 0.125, 0), Vec3(0.375, -0.25, 0), Vec3(-0.125, 0.5, 0), Vec3(0.5, 0.5, 0),
                   Vec3(0.125, 0, 0)})
      xs.push_back(x);
  } else {
    for (Vec3 x : {Vec3(0.25, 0.125, 0.1), Vec3(0.375, -0.25, 0.3), Vec3(-0.1, 0.45, -0.2), Vec3(0.5, 0.5, 0.5),
                   Vec3(0.05, 0.02, 0.01)})
      xs.push_back(x);
  }
  for (const Vec3& x : xs) {
    GreenValue u = a.eval(x), v = b.eval(x);
    double dv = (u.G - v.G).cwiseAbs().maxCoeff();
    dv = std::max(dv, (u.P - v.P).cwiseAbs().maxCoeff());
    dv = std::max(dv, (u.dP - v.dP).cwiseAbs().maxCoeff());
    for (int l = 0; l < 3; ++l) dv = std::max(dv, (u.dG[l] - v.dG[l]).cwiseAbs().maxCoeff());
    dv = std::max(dv, std::abs(a.laplace(x) - b.laplace(x)));
    double fd = -1;
    if (dim == 2) {
      fd = (fourier_reference_2d(x) - u.G).cwiseAbs().maxCoeff();
      rep.max_fourier_dev = std::max(rep.max_fourier_dev, fd);
    }
    rep.max_alpha_variation = std::max(rep.max_alpha_variation, dv);
    rep.rows.push_back({x, dv, fd});
  }
  return rep;
}

}  // namespace stokescell
