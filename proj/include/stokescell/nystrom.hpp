#pragma once

#include "stokescell/geometry.hpp"

#include <string>

namespace stokescell {

enum class OpTag { S, K, Kstar, Keta, Reta, Seta, Other };
std::string tag_name(OpTag t);

// Dense (d n) x (d n) matrix acting on node-major densities.
struct OperatorMatrix {
  MatX A;
  OpTag tag = OpTag::Other;
  const BoundaryMesh* mesh = nullptr;
  VecX apply(const VecX& f) const { return A * f; }
};

struct NystromOptions {
  int rot_theta = 0;  // 3D rotated polar grid; 0 = automatic
  int rot_phi = 0;
};

struct LayerOperators {
  OperatorMatrix S, K, Kstar;
};

// S, K and K* on the boundary. 2D: log-splitting for S, Hilbert-weight
// principal value for the Cauchy part of K and K*. 3D: per-target rotated
// polar grid with spherical-harmonic interpolation of the density.
LayerOperators assemble_layer_operators(const BoundaryMesh& mesh, const NystromOptions& opt = {});
OperatorMatrix assemble_slp(const BoundaryMesh& mesh);
LayerOperators assemble_np(const BoundaryMesh& mesh);  // fills K and K* only

// block-diagonal weight matrix W (each weight repeated d times)
VecX weight_vector(const BoundaryMesh& mesh);

// ---------------------------------------------------------------------------
// off-surface evaluation

enum class Potential { S, D, Q, P };

// A density together with the mesh it lives on; refine() returns the same
// density interpolated to a finer mesh (trigonometric in 2D, spherical
// harmonics in 3D), which is what near-surface evaluation uses.
struct SampledDensity {
  const BoundaryMesh* mesh;
  VecX values;
};

struct RefinedDensity {
  BoundaryMesh mesh;
  VecX values;
};
RefinedDensity refine(const BoundaryMesh& mesh, const VecX& f, int target_nodes);

// Trigonometric interpolation of a periodic d-component density to nf nodes.
VecX trig_upsample(const VecX& f, int dim, int nf);
// density value at arbitrary parameter (2D: t, 3D: unit vector)
Vec3 interpolate_density(const BoundaryMesh& mesh, const VecX& f, double t);
Vec3 interpolate_density(const BoundaryMesh& mesh, const VecX& f, const Vec3& yhat);

struct EvalOptions {
  int refine_nodes = 0;      // 0 = automatic from the point-boundary distance
  bool subtract = true;      // constant-density subtraction for D and P
};

// Plain quadrature on a refined mesh. Velocities (S, D) fill dim columns,
// pressures (Q, P) one column. Throws near-singular warnings as
// std::domain_error only when a point coincides with a node.
MatX eval_offsurface(Potential kind, const BoundaryMesh& mesh, const VecX& f,
                     const std::vector<Vec3>& pts, const EvalOptions& opt = {});

// modified traction -Q n + (grad S) n of the single-layer pair at pts
MatX eval_slp_traction(const BoundaryMesh& mesh, const VecX& f, const std::vector<Vec3>& pts,
                       const std::vector<Vec3>& normals, const EvalOptions& opt = {});

// Exterior (+1, along N) or interior (-1) trace of a field by polynomial
// extrapolation to t = 0 of values at x_i + side t N_i, t = t0 / 2^l for
// l < levels.
using FieldFn = std::function<MatX(const std::vector<Vec3>&)>;
MatX extrapolated_trace(const BoundaryMesh& mesh, int side, const FieldFn& f, double t0 = 1e-2,
                        int levels = 5);

struct JumpReport {
  double d_exterior = 0;   // |D|+ - (-1/2 + K) phi|
  double d_interior = 0;   // |D|- - (1/2 + K) phi|
  double sq_exterior = 0;  // |dnu(S,Q)|+ - (1/2 + K*) phi|
  double sq_interior = 0;  // |dnu(S,Q)|- - (-1/2 + K*) phi|
  double s_continuity = 0; // |S|+ - S|-|
  double max() const;
};
JumpReport verify_jumps(const BoundaryMesh& mesh, const LayerOperators& ops, const VecX& phi);
// smooth test density: a few random plane waves in the node positions,
// reproducible from the seed
VecX random_smooth_density(const BoundaryMesh& mesh, unsigned seed, int waves = 4);

// ---------------------------------------------------------------------------

struct SolveResult {
  VecX x;
  double rel_residual = 0;
  double rcond = 0;
};

// Partial-pivot LU. Throws SingularError naming the tag if the reciprocal
// condition estimate is below 1e-14.
SolveResult solve_dense(const MatX& A, const VecX& b, OpTag tag = OpTag::Other);
SolveResult solve_dense(const OperatorMatrix& A, const VecX& b);

}  // namespace stokescell
