#pragma once

#include "stokescell/common.hpp"

#include <array>

namespace stokescell {

// Free-space Stokes kernels, unit viscosity. Points are 3-vectors; for
// dim == 2 the third component is ignored and the returned matrices are
// zero outside the leading 2x2 block.

using Grad3 = std::array<Mat3, 3>;  // g[l](j, k) = d_l M_jk

double laplace_green(const Vec3& x, int dim);  // Gamma_Delta, -Delta G = delta
Mat3 stokeslet(const Vec3& x, int dim);         // Gamma(x)
Grad3 stokeslet_grad(const Vec3& x, int dim);
Vec3 pressurelet(const Vec3& x, int dim);       // theta(x)
Mat3 pressurelet_grad(const Vec3& x, int dim);  // (l, k) = d_l theta_k

// Double-layer kernel with the modified conormal -pN + (grad u)N. With
// K_jk(x, y) = -theta_k(y - x) N_y^j + N_y^l d_l Gamma^j_k(y - x) the field
// D[phi]_k = int K_jk phi_j is a Stokes solution, so the returned matrix is
// M(k, j) = K_jk and D[phi](x) = int M(x, y) phi(y). The antisymmetric
// Cauchy term is kept apart from the two weakly singular terms.
struct DlpKernel {
  Mat3 cauchy;
  Mat3 weak;
  Mat3 full() const { return cauchy + weak; }
};
DlpKernel dlp_kernel(const Vec3& x, const Vec3& y, const Vec3& ny, int dim);

// adjoint: M*(x, y) = M(y, x)^T, which is the modified traction kernel of
// the single layer, -theta_k(x - y) N_x^i + N_x^j d_j Gamma^i_k(x - y)
DlpKernel adjoint_kernel(const Vec3& x, const Vec3& y, const Vec3& nx, int dim);

// explicit (K* - K)(x, y)
Mat3 kdiff_kernel(const Vec3& x, const Vec3& y, const Vec3& nx, const Vec3& ny, int dim);

// double-layer pressure: P[phi](x) = int p(x, y) . phi(y),
// p_k = -N_y^l (d_l theta_k)(x - y), the pressure that makes (D, P) a
// Stokes pair for D as above
Vec3 dlp_pressure_kernel(const Vec3& x, const Vec3& y, const Vec3& ny, int dim);

// modified traction of (Gamma_k(x - y), theta_k(x - y)) with respect to x
// along n: column k is -theta_k n + (grad_x Gamma_k) n
Mat3 slp_traction_kernel(const Vec3& x, const Vec3& y, const Vec3& nx, int dim);

}  // namespace stokescell
