#pragma once

#include "stokescell/capacity.hpp"
#include "stokescell/periodic.hpp"

#include <iosfwd>
#include <memory>

namespace stokescell {

// Everything about the hole that does not depend on eta.
struct Hole {
  BoundaryMesh mesh;
  LayerOperators ops;
  CapacityResult capacity;
  double volume = 0;  // |T|
};
std::shared_ptr<const Hole> make_hole(const ShapeSpec& spec, const MeshSize& size);
// takes copies; operator mesh pointers are rebound to the stored mesh
std::shared_ptr<const Hole> make_hole(const BoundaryMesh& mesh, const LayerOperators& ops,
                                      const CapacityResult& cap);

struct CellOptions {
  double alpha = 0;               // Ewald splitting parameter, 0 = default
  int cell_proxy = 0;             // Chebyshev nodes per axis over the whole cell (0 = 16 in 2D, 8 in 3D)
  int hole_proxy = 0;             // Chebyshev nodes per axis around the hole (0 = 16 in 2D, 8 in 3D)
  double consistency_tol = 1e-6;  // projected vs direct density, raised to the direct solve's floor
};

// Periodic operators at one eta, shared by the d correctors.
struct CellSetup {
  std::shared_ptr<const Hole> hole;
  double eta = 0;
  CellOptions opt;
  RescaledGreen green;
  PeriodicOperators periodic;
  int dim() const { return hole->mesh.dim; }
  double period() const { return 1.0 / eta; }
};
std::shared_ptr<const CellSetup> make_cell_setup(std::shared_ptr<const Hole> hole, double eta,
                                                 const CellOptions& opt = {});

// fast: smooth periodic remainders of the layer potentials from Chebyshev
// proxies; exact: direct quadrature of every term
enum class FieldMode { fast, exact };

struct RemainderProxy;

// Solution of the cell problem on the punctured torus for one direction k,
//   chi = G_k + A e_k + D[g~] + r,  omega = P_k + P[g~]  outside the hole,
// both zero inside.
class CellCorrector {
 public:
  int dim = 0, k = 0;
  double eta = 0;
  std::shared_ptr<const CellSetup> setup;

  VecX g;            // density of the direct solve
  VecX g_tilde;      // mean-zero part from the projected solve
  Vec3 g_mean = Vec3::Zero();
  Vec3 A_ek = Vec3::Zero();
  Vec3 c = Vec3::Zero();        // Pi_0 of the boundary data
  Vec3 r_tilde = Vec3::Zero();  // c - A e_k
  Vec3 r = Vec3::Zero();        // r~ - eta^d |T| <g>
  double t_absorbed = 0;        // eta^d |T| |<g>|, folded into r
  double multiplier = 0;        // bordering multiplier, ~0
  double solve_dev = 0;         // |g - g~ - <g>| / |g|
  double solve_dev_floor = 0;   // conditioning floor of the direct solve
  double flux = 0;              // int N . g~

  bool in_hole(const Vec3& x) const;  // after wrapping
  // npts x dim; zero in the hole
  MatX chi(const std::vector<Vec3>& pts, FieldMode mode = FieldMode::fast) const;
  VecX omega(const std::vector<Vec3>& pts, FieldMode mode = FieldMode::fast) const;
  // finite differences of chi with step h * max(|x|, 1/4), one-sided next to
  // the hole; row-major dim x dim blocks (j, l) = d_l chi^j
  std::vector<Mat3> grad_chi(const std::vector<Vec3>& pts, FieldMode mode = FieldMode::fast,
                             double h = 1e-4) const;

  // the exterior formula without the zero extension, at arbitrary points
  MatX chi_formula(const std::vector<Vec3>& pts, FieldMode mode) const;
  VecX omega_formula(const std::vector<Vec3>& pts, FieldMode mode) const;
  // D[g~] and P[g~] alone (interior values inside the hole)
  MatX double_layer(const std::vector<Vec3>& pts, FieldMode mode) const;
  VecX double_layer_pressure(const std::vector<Vec3>& pts, FieldMode mode) const;

  std::shared_ptr<const RemainderProxy> proxy;
  int proxy_slot = 0;
};

CellCorrector solve_cell(std::shared_ptr<const CellSetup> setup, int k);
// k = 0 .. dim-1 with shared remainder proxies
std::vector<CellCorrector> solve_cells(std::shared_ptr<const CellSetup> setup);
CellCorrector solve_cell(const BoundaryMesh& mesh, double eta, int k, const CapacityResult& cap,
                         const CellOptions& opt = {});

// max |chi| over boundary nodes from the extrapolated exterior trace
double boundary_residual(const CellCorrector& c, FieldMode mode = FieldMode::fast);

// ---------------------------------------------------------------------------
// averages and norms

struct HoleRule {
  int directions = 0;  // 2D rays / 3D polar nodes (azimuth doubles); 0 = 64 / 12
  int radial = 12;
};

struct CellAverages {
  Vec3 chi = Vec3::Zero();            // over the torus, zero in the hole
  double omega = 0;
  Vec3 chi_minus_Aek = Vec3::Zero();
  double energy = 0;                  // |grad chi|^2 = <chi>^k
  double grad_norm = 0;
  Vec3 hole_G = Vec3::Zero();         // int_T G_k
  Vec3 hole_D = Vec3::Zero();         // int_T D[g~]
  double hole_P = 0;                  // int_T (P_k + P[g~])
};
// Uses the torus mean-zero property of G, P and the layer potentials, so
// only integrals over the hole remain.
CellAverages corrector_average(const CellCorrector& c, const HoleRule& rule = {});

// exterior of the hole in the cell split into 2d pyramids with apex at the
// origin; radial panels grow geometrically from the hole outwards
struct TorusRule {
  int face = 0;         // Gauss nodes per in-face axis; 0 = 24 / 8
  int panel_nodes = 6;
  double ratio = 2.0;
};

struct TorusSamples {
  std::vector<Vec3> x;
  std::vector<double> w;  // fluid part only; the hole is added analytically
  MatX chi;               // npts x dim
  VecX omega;
  std::vector<Mat3> grad;  // filled on request
  double hole_volume = 0;
  double cell_volume = 0;
};
TorusSamples sample_torus(const CellCorrector& c, const TorusRule& rule = {}, bool with_grad = false);

struct CellNorms {
  double lp = 0;              // (<|chi - A e_k|^p>)^{1/p}, p = 6 (3D), 2 (2D)
  int p = 0;
  double omega_fluct = 0;     // |omega - <omega>|_L2(torus)
  double omega_mean_quad = 0; // <omega> from the volume rule, cross-check
  Vec3 chi_mean_quad = Vec3::Zero();
  double energy_quad = -1;    // int |grad chi|^2 when gradients were sampled
};
CellNorms corrector_norms(const CellCorrector& c, const CellAverages& avg, const TorusSamples& s);

// finite-difference residuals at probe points away from the hole
struct PdeResidual {
  double momentum = 0;    // |-Lap chi + grad omega - eta^d e_k| over the largest term
  double divergence = 0;  // |div chi| over the largest first derivative
};
PdeResidual pde_residual(const CellCorrector& c, const std::vector<Vec3>& probes, double h = 0);

struct CellRow {
  int d = 0;
  double eta = 0;
  int k = 0;
  double avg_chi_minus_ATek = 0, avg_omega = 0, grad_norm = 0, g_mean = 0, g_fluct_norm = 0,
         boundary_residual = 0;
};
CellRow cell_row(const CellCorrector& c, const CellAverages& avg, double residual);
void write_cell_csv(std::ostream& os, const std::vector<CellRow>& rows);

}  // namespace stokescell
