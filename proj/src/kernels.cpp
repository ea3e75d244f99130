#include "stokescell/kernels.hpp"

#include <cmath>

namespace stokescell {

namespace {

Vec3 planar(const Vec3& x, int dim) {
  Vec3 v = x;
  if (dim == 2) v.z() = 0;
  return v;
}

void check_nonzero(double r) {
  if (!(r > 0)) throw std::domain_error("kernel evaluated at coincident points");
}

Mat3 eye(int dim) {
  Mat3 I = Mat3::Identity();
  if (dim == 2) I(2, 2) = 0;
  return I;
}

}  // namespace

double laplace_green(const Vec3& xin, int dim) {
  Vec3 x = planar(xin, dim);
  double r = x.norm();
  check_nonzero(r);
  return dim == 2 ? -std::log(r) / (2 * pi) : 1 / (4 * pi * r);
}

Mat3 stokeslet(const Vec3& xin, int dim) {
  Vec3 x = planar(xin, dim);
  double r = x.norm();
  check_nonzero(r);
  if (dim == 2) return (std::log(r) * eye(2) - x * x.transpose() / (r * r)) / (4 * pi);
  return -(Mat3::Identity() / r + x * x.transpose() / (r * r * r)) / (8 * pi);
}

Grad3 stokeslet_grad(const Vec3& xin, int dim) {
  Vec3 x = planar(xin, dim);
  double r = x.norm();
  check_nonzero(r);
  Grad3 g;
  // 2D: d_l G_jk = (x_l d_jk - d_lj x_k - d_lk x_j) / (4 pi r^2) + 2 x_j x_k x_l / (4 pi r^4)
  // 3D: d_l G_jk = (x_l d_jk - d_lj x_k - d_lk x_j) / (8 pi r^3) + 3 x_j x_k x_l / (8 pi r^5)
  double c1, c2;
  if (dim == 2) {
    c1 = 1 / (4 * pi * r * r);
    c2 = 2 / (4 * pi * r * r * r * r);
  } else {
    c1 = 1 / (8 * pi * r * r * r);
    c2 = 3 / (8 * pi * std::pow(r, 5));
  }
  for (int l = 0; l < 3; ++l) {
    g[l].setZero();
    if (l >= dim) continue;
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k)
        g[l](j, k) = c1 * (x[l] * (j == k) - (l == j) * x[k] - (l == k) * x[j]) + c2 * x[j] * x[k] * x[l];
  }
  return g;
}

Vec3 pressurelet(const Vec3& xin, int dim) {
  Vec3 x = planar(xin, dim);
  double r = x.norm();
  check_nonzero(r);
  return -x / (sphere_area(dim) * std::pow(r, dim));
}

Mat3 pressurelet_grad(const Vec3& xin, int dim) {
  Vec3 x = planar(xin, dim);
  double r = x.norm();
  check_nonzero(r);
  double rd = std::pow(r, dim);
  return (-eye(dim) / rd + dim * x * x.transpose() / (rd * r * r)) / sphere_area(dim);
}

DlpKernel dlp_kernel(const Vec3& xin, const Vec3& yin, const Vec3& nyin, int dim) {
  Vec3 w = planar(xin - yin, dim), n = planar(nyin, dim);
  double r = w.norm();
  check_nonzero(r);
  double dw = sphere_area(dim);  // d * varpi_d
  double varpi = dw / dim;
  double rd = std::pow(r, dim), nw = n.dot(w);
  DlpKernel k;
  // row k, column j holds K_jk: the field is D[phi]_k = K_jk phi_j
  k.cauchy = (n * w.transpose() - w * n.transpose()) / (2 * dw * rd);
  k.weak = -nw * w * w.transpose() / (2 * varpi * rd * r * r) - nw * eye(dim) / (2 * dw * rd);
  return k;
}

DlpKernel adjoint_kernel(const Vec3& x, const Vec3& y, const Vec3& nx, int dim) {
  DlpKernel k = dlp_kernel(y, x, nx, dim);
  k.cauchy.transposeInPlace();
  k.weak.transposeInPlace();
  return k;
}

Mat3 kdiff_kernel(const Vec3& xin, const Vec3& yin, const Vec3& nx, const Vec3& ny, int dim) {
  Vec3 w = planar(xin - yin, dim), s = planar(nx + ny, dim), dn = planar(nx - ny, dim);
  double r = w.norm();
  check_nonzero(r);
  double dw = sphere_area(dim), varpi = dw / dim, rd = std::pow(r, dim), sw = s.dot(w);
  return sw * w * w.transpose() / (2 * varpi * rd * r * r) + sw * eye(dim) / (2 * dw * rd) +
         (dn * w.transpose() - w * dn.transpose()) / (2 * dw * rd);
}

Vec3 dlp_pressure_kernel(const Vec3& x, const Vec3& y, const Vec3& ny, int dim) {
  return -(pressurelet_grad(x - y, dim).transpose() * planar(ny, dim));
}

Mat3 slp_traction_kernel(const Vec3& x, const Vec3& y, const Vec3& nx, int dim) {
  Vec3 n = planar(nx, dim), th = pressurelet(x - y, dim);
  Grad3 g = stokeslet_grad(x - y, dim);
  Mat3 t = -n * th.transpose();  // (i, k) = -theta_k n_i
  for (int l = 0; l < dim; ++l) t += n[l] * g[l];
  return t;
}

}  // namespace stokescell
