#pragma once

#include "stokescell/kernels.hpp"
#include "stokescell/nystrom.hpp"

namespace stokescell {

// Values of a Stokes pair (G_k, P_k) and derivatives at one point.
// G(j, k) = G^j_k, dG[l](j, k) = d_l G^j_k, P[k], dP(l, k) = d_l P_k.
struct GreenValue {
  Mat3 G = Mat3::Zero();
  Vec3 P = Vec3::Zero();
  Grad3 dG{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  Mat3 dP = Mat3::Zero();
};

// Ewald-split Stokes and Laplace Green functions on the unit torus,
//   Delta G_k - grad P_k = (delta_0 - 1) e_k,  div G_k = 0,
//   -Delta G_Delta = delta_0 - 1,  P = grad G_Delta,
// all mean zero. Fourier synthesis uses exp(i xi.x), xi in 2 pi Z^d.
class PeriodicGreen {
 public:
  // alpha <= 0 picks a dimension-dependent default; digits sets the
  // truncation exp(-digits)
  explicit PeriodicGreen(int dim, double alpha = 0, double digits = 40);

  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  int real_shells() const { return nreal_; }
  int fourier_shells() const { return nfour_; }

  GreenValue eval(const Vec3& x) const;
  // R = G - Gamma, h = P - theta and their gradients; the singular n = 0
  // image is replaced by its smooth complement, so this is stable at 0
  GreenValue remainder(const Vec3& x) const;
  double laplace(const Vec3& x) const;
  Vec3 laplace_grad(const Vec3& x) const;

  // lattice point closest to x removed: components in [-1/2, 1/2)
  Vec3 wrap(const Vec3& x) const;

 private:
  struct Mode {
    Vec3 xi;
    double fh, gq;  // exp(-s)/|xi|^2, fh (1 + s)/|xi|^2
    int m[3];
  };
  int dim_;
  double alpha_, cut_;
  int nreal_, nfour_;
  std::vector<Mode> modes_;
  std::vector<Vec3> images_;
  void accumulate(const Vec3& x, bool skip_origin, GreenValue& v, double* lap, Vec3* lapg) const;
};

// Plain square partial sums of the Fourier series of G (2D), extrapolated in
// the truncation order; an oracle for the Ewald evaluation. x should have
// coordinates that are multiples of 1/8.
Mat3 fourier_reference_2d(const Vec3& x, int m0 = 64, int levels = 5);

// Fundamental pair on the rescaled torus eta^{-1} T^d:
//   G^eta(x) = eta^{d-2} G(eta x), P^eta(x) = eta^{d-1} P(eta x).
// In 2D, G^eta(x) = Gamma(x) + R(eta x) + log(eta)/(4 pi) I.
class RescaledGreen {
 public:
  RescaledGreen(int dim, double eta, double alpha = 0);
  int dim() const { return base_.dim(); }
  double eta() const { return eta_; }
  double period() const { return 1.0 / eta_; }
  const PeriodicGreen& base() const { return base_; }

  GreenValue eval(const Vec3& x) const;
  // G^eta - Gamma, P^eta - theta (and gradients), smooth near 0
  GreenValue remainder(const Vec3& x) const;
  // x shifted by lattice vectors of period 1/eta into the centered cell
  Vec3 wrap(const Vec3& x) const;

 private:
  PeriodicGreen base_;
  double eta_;
};

// Smooth part of the periodic double-layer kernel, transposed convention as
// dlp_kernel: Mr(k, j) = -h_k(z) N_y^j + N_y^l (d_l R^j_k)(z), z = eta (y - x),
// so that the periodic kernel is dlp_kernel + eta^{d-1} Mr.
Mat3 periodic_dlp_remainder(const RescaledGreen& g, const Vec3& x, const Vec3& y, const Vec3& ny);

struct PeriodicOperators {
  OperatorMatrix R;     // R^eta (without the eta^{d-1} factor)
  OperatorMatrix Keta;  // K + eta^{d-1} R^eta
};
PeriodicOperators assemble_periodic_np(const BoundaryMesh& mesh, const RescaledGreen& g, const OperatorMatrix& K);

// Off-surface periodic potentials: free-space part with the near-surface
// machinery of eval_offsurface plus plain quadrature of the smooth
// remainder. Points are wrapped into the centered cell first.
MatX eval_periodic(Potential kind, const BoundaryMesh& mesh, const RescaledGreen& g, const VecX& f,
                   const std::vector<Vec3>& pts, const EvalOptions& opt = {});

struct GreenSelfTest {
  struct Row {
    Vec3 x;
    double alpha_variation;  // |G_alpha - G_2alpha| (+ P, grad)
    double fourier_dev;      // 2D only, -1 otherwise
  };
  std::vector<Row> rows;
  double max_alpha_variation = 0;
  double max_fourier_dev = 0;
};
GreenSelfTest green_selftest(int dim);

}  // namespace stokescell
