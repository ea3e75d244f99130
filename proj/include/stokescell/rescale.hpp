#pragma once

#include "stokescell/cell.hpp"

#include <iosfwd>
#include <string>

namespace stokescell {

enum class Regime { critical, super_critical, sub_critical, classical };
std::string regime_name(Regime r);  // "critical", "dilute-super-critical", ...

struct RegimeParams {
  int dim = 3;
  double eps = 0, eta = 0;
  double sigma = 0;  // sigma_eps
  double kappa = 0;  // kappa_eta = eps / sigma_eps
  double lo = 1.0 / 3, hi = 3.0;  // critical window for sigma
  Regime regime = Regime::critical;
};

// eta = 1 (d >= 3) is the non-dilute classical setting; otherwise sigma in
// [lo, hi] is critical, below super-critical, above sub-critical
RegimeParams classify(int dim, double eps, double eta, double lo = 1.0 / 3, double hi = 3.0);

struct EffectiveModel {
  std::string model;  // "darcy", "brinkman", "stokes"
  MatX M;             // Darcy matrix / Brinkman zeroth-order term; empty if none
  RegimeParams params;
};
EffectiveModel effective_coefficients(const CapacityResult& cap, const RegimeParams& p);
nlohmann::json effective_to_json(const EffectiveModel& m);

// M^{-1}: A_T (d = 3), I / (4 pi) (d = 2)
MatX permeability_inverse(const CapacityResult& cap);

// v(x) = f chi(x / (eps eta)), q(x) = f omega(x / (eps eta)) / (eps eta),
// f = 1 (d = 3), 1 / |log eta| (d = 2)
class TwoScaleField {
 public:
  TwoScaleField(const CellCorrector& c, double eps);
  double eps() const { return eps_; }
  double factor() const { return f_; }
  double length() const { return eps_ * c_->eta; }  // eps eta
  Vec3 cell_point(const Vec3& x) const { return x / length(); }

  MatX v(const std::vector<Vec3>& x, FieldMode mode = FieldMode::fast) const;
  VecX q(const std::vector<Vec3>& x, FieldMode mode = FieldMode::fast) const;
  std::vector<Mat3> grad_v(const std::vector<Vec3>& x, FieldMode mode = FieldMode::fast) const;
  const CellCorrector& corrector() const { return *c_; }

 private:
  const CellCorrector* c_;
  double eps_, f_;
};

// finite-difference residual of -Lap v + grad q = sigma^{-2} e_k at physical
// points, relative to the largest term
PdeResidual two_scale_residual(const TwoScaleField& v, const std::vector<Vec3>& x, double sigma);

// per-cell quantities of the two-scale fields for one corrector
struct TwoScaleMeasures {
  double eps = 0, eta = 0;
  int k = 0, p = 0;
  double lp_dev = 0;       // |v - M^{-1} e_k|_Lp(eps Q) / |eps Q|^{1/p}
  double grad_cell = 0;    // |grad v|_L2(eps Q) from the energy identity
  double grad_omega = 0;   // grad_cell eps^{-d/2}: the domain-level value for a unit domain
  double q_fluct = 0;      // |q - <q>|_L2(eps Q)
  double q_mean = 0;       // <q>
  double stress = 0;       // max over eps dQ of |grad v| + |q|
  std::vector<double> face_stress;  // per face: -x, +x, -y, +y (, -z, +z)
};
// lp from the torus samples; the rest from averages, norms and face samples
TwoScaleMeasures two_scale_measures(const CellCorrector& c, const CellAverages& avg, const CellNorms& norms,
                                    const TorusSamples& s, double eps, int face_nodes = 0);

// face samples of the cell eta^{-1} Q: uniform grid with face_nodes per axis
// (0 = 33 in 2D, 9 in 3D), centres and edges included
struct FaceStress {
  std::vector<double> face_max;  // max |grad chi| + |omega| per face
  double max = 0;
};
FaceStress face_stress(const CellCorrector& c, int face_nodes = 0);

// |grad v|_L2(eps Q) by quadrature of grad v over the mapped torus samples
// (needs gradients in s), and the same through |grad chi|
struct GradientIdentity {
  double direct = 0, via_chi = 0;
};
GradientIdentity gradient_identity(const TwoScaleField& v, const TorusSamples& s);

// int_Omega (d_l v^k) phi over Omega = (0,1)^d tiled by cells of size
// eps = 1/m, phi = prod sin(pi x_i); the bound is kappa-like:
// eta^{(d-2)/2} |grad phi|_inf (d = 3), |log eta|^{-1/2} (d = 2)
struct WeakSurrogate {
  double value = 0, bound = 0;
};
WeakSurrogate weak_surrogate(const TwoScaleField& v, const TorusSamples& s, int l);

// ---------------------------------------------------------------------------
// sweeps and rate fits

struct LogFit {
  double slope = 0, intercept = 0;
  double half_width = 0;  // 95% confidence half width of the slope (inf for 2 points)
};
LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepOptions {
  std::vector<double> etas;
  std::vector<int> ks;  // 0-based; empty = all
  double eps = 0.1;
  CellOptions cell;
  HoleRule hole_rule;
  TorusRule torus;
  int face_nodes = 0;
};

struct SweepEntry {
  CellCorrector c;
  CellAverages avg;
  CellNorms norms;
  TorusSamples samples;
  double boundary_residual = 0;
  TwoScaleMeasures ts;
};

struct Sweep {
  int dim = 0;
  double eps = 0;
  std::shared_ptr<const Hole> hole;
  std::vector<SweepEntry> entries;  // eta-major, then k
  std::vector<double> etas() const;
  std::vector<const SweepEntry*> for_k(int k) const;
};
Sweep run_sweep(std::shared_ptr<const Hole> hole, const SweepOptions& opt);

// rate checks over one direction k
struct RateCheck {
  std::string name;
  std::string kind;  // "slope", "ratio", "bound", "spread"
  double value = 0;  // fitted slope / worst ratio deviation / spread
  double target = 0, window = 0;
  LogFit fit;
  bool pass = false;
};
std::vector<RateCheck> rate_checks(const Sweep& s, int k);
void write_rate_csv(std::ostream& os, const Sweep& s);
void write_checks_csv(std::ostream& os, const std::vector<RateCheck>& checks);

}  // namespace stokescell
