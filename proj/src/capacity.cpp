#include "stokescell/capacity.hpp"

#include <algorithm>
#include <cmath>

namespace stokescell {

namespace {

MatX constants(const BoundaryMesh& m) {
  MatX E = MatX::Zero(m.unknowns(), m.dim);
  for (int i = 0; i < m.n; ++i)
    for (int c = 0; c < m.dim; ++c) E(i * m.dim + c, c) = 1;
  return E;
}

}  // namespace

CapacityResult solve_kernel_basis(const BoundaryMesh& m, const LayerOperators& ops) {
  const int d = m.dim, N = m.unknowns();
  MatX E = constants(m);
  VecX W = weight_vector(m);
  MatX B = MatX::Zero(N + d, N + d);
  B.topLeftCorner(N, N) = ops.Kstar.A - 0.5 * MatX::Identity(N, N);
  B.topRightCorner(N, d) = E;
  B.bottomLeftCorner(d, N) = E.transpose() * W.asDiagonal();

  Eigen::PartialPivLU<MatX> lu(B);
  if (!(lu.rcond() > 1e-14)) throw SingularError("bordered capacity system for K* is numerically singular");
  MatX rhs = MatX::Zero(N + d, d);
  rhs.bottomRows(d) = MatX::Identity(d, d);
  MatX sol = lu.solve(rhs);

  CapacityResult r;
  r.dim = d;
  r.shape = m.shape->spec();
  r.A = MatX::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    VecX phi = sol.col(j).head(N);
    r.multiplier = std::max(r.multiplier, sol.col(j).tail(d).cwiseAbs().maxCoeff());
    VecX Sphi = ops.S.apply(phi);
    Vec3 aj = -m.mean(Sphi);
    for (int i = 0; i < m.n; ++i)
      for (int c = 0; c < d; ++c) r.constancy_dev = std::max(r.constancy_dev, std::abs(Sphi[i * d + c] + aj[c]));
    r.kernel_residual = std::max(r.kernel_residual, m.l2_norm(ops.Kstar.apply(phi) - 0.5 * phi));
    Vec3 ej = Vec3::Zero();
    ej[j] = 1;
    r.normalization_dev = std::max(r.normalization_dev, (m.integrate(phi) - ej).norm());
    r.phi.push_back(phi);
    r.a.push_back(aj);
    r.A.col(j) = aj.head(d);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      r.gram_dev = std::max(r.gram_dev, std::abs(m.inner(r.phi[i], ops.S.apply(r.phi[j])) + r.A(i, j)));
  r.det_A = r.A.determinant();
  if (d == 2)
    r.M = 4 * pi * MatX::Identity(2, 2);
  else
    r.M = r.A.inverse();
  return r;
}

CapacityResult solve_kernel_basis(const BoundaryMesh& mesh) {
  return solve_kernel_basis(mesh, assemble_layer_operators(mesh));
}

double kernel_basis_svd_check(const BoundaryMesh& m, const LayerOperators& ops, const CapacityResult& r) {
  const int d = m.dim, N = m.unknowns();
  Eigen::BDCSVD<MatX> svd(ops.Kstar.A - 0.5 * MatX::Identity(N, N), Eigen::ComputeFullV);
  MatX V = svd.matrixV().rightCols(d);
  // combination with int = e_j
  MatX I = MatX::Zero(d, d);
  for (int k = 0; k < d; ++k) I.col(k) = m.integrate(V.col(k)).head(d);
  MatX C = I.inverse();
  double dev = 0;
  for (int j = 0; j < d; ++j) dev = std::max(dev, m.l2_norm(V * C.col(j) - r.phi[j]));
  return dev;
}

int kernel_dimension(const LayerOperators& ops, double rel) {
  const int N = int(ops.K.A.rows());
  Eigen::BDCSVD<MatX> svd(ops.K.A - 0.5 * MatX::Identity(N, N));
  VecX s = svd.singularValues();
  std::vector<double> v(s.data(), s.data() + s.size());
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  double med = v[v.size() / 2];
  int k = 0;
  for (int i = 0; i < s.size(); ++i) k += s[i] < rel * med;
  return k;
}

Projection project(const BoundaryMesh& m, const CapacityResult& r, const VecX& psi) {
  Projection p;
  p.coef = Vec3::Zero();
  for (int k = 0; k < m.dim; ++k) p.coef[k] = m.inner(r.phi[k], psi);
  p.rest = psi - m.constant(p.coef);
  return p;
}

RescalingReport rescaling_law_check(const ShapeSpec& base, const std::vector<double>& scales, int n) {
  if (base.dim != 2) throw InputError("rescaling law check is two-dimensional");
  RescalingReport rep;
  rep.scales = scales;
  for (double s : scales) {
    BoundaryMesh m = build_mesh(with_scale(base, base.scale * s), n);
    rep.A.push_back(solve_kernel_basis(m).A);
  }
  MatX I = MatX::Identity(2, 2);
  for (std::size_t k = 1; k < scales.size(); ++k) {
    double lr = std::log(scales[k] / scales[0]);
    MatX shift = rep.A[k] - rep.A[0];
    rep.max_dev = std::max(rep.max_dev, (shift + lr / (4 * pi) * I).cwiseAbs().maxCoeff());
    rep.max_dev_plus = std::max(rep.max_dev_plus, (shift - lr / (4 * pi) * I).cwiseAbs().maxCoeff());
  }
  return rep;
}

EnergyReport energy_identity_check(const BoundaryMesh& m, const LayerOperators& ops, const CapacityResult& r) {
  if (m.dim != 3) throw InputError("energy identity check needs d = 3");
  EnergyReport rep;
  const int d = 3;
  // exterior energy of S[phi_s], S[phi_l]: -int dnu(S phi_s)|+ . S phi_l
  MatX Eu(d, d);
  for (int s = 0; s < d; ++s) {
    VecX tr = 0.5 * r.phi[s] + ops.Kstar.apply(r.phi[s]);
    for (int l = 0; l < d; ++l) Eu(s, l) = -m.inner(tr, ops.S.apply(r.phi[l]));
  }
  rep.M = r.M;
  rep.energy = r.M * Eu * r.M.transpose();
  rep.rel_dev = (rep.energy - rep.M).norm() / rep.M.norm();
  rep.asym = (rep.energy - rep.energy.transpose()).norm();
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (rep.energy + rep.energy.transpose()));
  rep.min_eig = es.eigenvalues().minCoeff();
  return rep;
}

nlohmann::json capacity_to_json(const CapacityResult& r) {
  auto mat = [](const MatX& A) {
    std::vector<std::vector<double>> v(A.rows(), std::vector<double>(A.cols()));
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j) v[i][j] = A(i, j);
    return v;
  };
  nlohmann::json j;
  j["A_T"] = mat(r.A);
  j["M"] = mat(r.M);
  j["det_A_T"] = r.det_A;
  j["dim"] = r.dim;
  return j;
}

}  // namespace stokescell
