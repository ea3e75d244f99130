#pragma once

#include "stokescell/nystrom.hpp"

#include <json.hpp>

namespace stokescell {

struct CapacityResult {
  int dim = 0;
  std::vector<VecX> phi;      // basis of ker(-1/2 + K*), int phi_j = e_j
  std::vector<Vec3> a;        // S[phi_j] = -a_j on the boundary
  MatX A;                     // columns a_j
  MatX M;                     // A^{-1} (d = 3), 4 pi I (d = 2)
  double det_A = 0;
  // diagnostics
  double kernel_residual = 0;    // max |(-1/2 + K*) phi_j|_L2
  double normalization_dev = 0;  // max |int phi_j - e_j|
  double constancy_dev = 0;      // max |S[phi_j] + a_j| over nodes
  double multiplier = 0;         // bordering multiplier, ~0 when consistent
  double gram_dev = 0;           // |<phi_i, S phi_j> + A_ij|
  ShapeSpec shape;
};

// Bordered solve [(-1/2 + K*) E; E^T W 0] [phi; lambda] = [0; e_j] with E
// the constant vectors, then a_j from the boundary mean of -S[phi_j].
CapacityResult solve_kernel_basis(const BoundaryMesh& mesh, const LayerOperators& ops);
CapacityResult solve_kernel_basis(const BoundaryMesh& mesh);

// The same basis from the SVD null space of -1/2 + K*; returns the max
// L2 distance to result.phi.
double kernel_basis_svd_check(const BoundaryMesh& mesh, const LayerOperators& ops, const CapacityResult& r);

// number of singular values of -1/2 + K below rel * median
int kernel_dimension(const LayerOperators& ops, double rel = 1e-6);

struct Projection {
  Vec3 coef;  // Pi_0 psi = sum_k coef_k e_k
  VecX rest;  // Pi_1 psi
};
Projection project(const BoundaryMesh& mesh, const CapacityResult& r, const VecX& psi);

struct RescalingReport {
  std::vector<double> scales;
  std::vector<MatX> A;
  double max_dev = 0;        // against A_{sT} = A_T - log(s)/(4 pi) I
  double max_dev_plus = 0;   // against the "+" sign variant
};
// A at each scale multiplier of the base spec (d = 2); deviations measured
// against the first entry.
RescalingReport rescaling_law_check(const ShapeSpec& base, const std::vector<double>& scales, int n);

struct EnergyReport {
  MatX energy;        // int grad w_i : grad w_k from boundary data
  MatX M;
  double rel_dev = 0; // |energy - M| / |M|
  double min_eig = 0;
  double asym = 0;
};
EnergyReport energy_identity_check(const BoundaryMesh& mesh, const LayerOperators& ops, const CapacityResult& r);

nlohmann::json capacity_to_json(const CapacityResult& r);

}  // namespace stokescell
