#include "support.hpp"

using namespace stokescell;
using namespace testing;

TEST_CASE("disk capacity against the closed form") {
  for (double a : {0.2, 0.25, 0.3}) {
    BoundaryMesh m = build_mesh(disk(a), 128);
    CapacityResult r = solve_kernel_basis(m);
    double ref = (0.5 - std::log(a)) / (4 * pi);
    CHECK(amax(r.A - ref * MatX::Identity(2, 2)) < 1e-12);
    // the basis is the uniform density
    for (int l = 0; l < 2; ++l) CHECK(amax(r.phi[l] - m.constant(e(l)) / (2 * pi * a)) < 1e-10);
  }
}

TEST_CASE("2D permeability is 4 pi I regardless of the shape") {
  for (auto s : {ellipse(0.3, 0.2), kite(), star()}) {
    CapacityResult r = solve_kernel_basis(build_mesh(s, 128));
    CHECK(r.M == 4 * pi * MatX::Identity(2, 2));
    CHECK(amax(r.A - r.A.transpose()) <= 1e-8);
    CHECK(r.kernel_residual < 1e-10);
    CHECK(r.normalization_dev < 1e-12);
    CHECK(r.constancy_dev < 1e-8);
  }
}

TEST_CASE("sphere capacity converges to 1 / (6 pi a)") {
  const double a = 0.25, ref = 1 / (6 * pi * a);
  for (int nt : {8, 12}) {
    CapacityResult r = solve_kernel_basis(build_mesh(sphere(a), nt, 2 * nt));
    CHECK(amax(r.A - ref * MatX::Identity(3, 3)) / ref < 1e-6);
    MatX off = r.A;
    off.diagonal().setZero();
    CHECK(amax(off) <= 1e-9);
    CHECK(amax(r.M - 6 * pi * a * MatX::Identity(3, 3)) / (6 * pi * a) < 5e-3);
  }
}

TEST_CASE("kernel basis from the SVD agrees with the bordered solve") {
  BoundaryMesh m = build_mesh(kite(), 128);
  LayerOperators ops = assemble_layer_operators(m);
  CapacityResult r = solve_kernel_basis(m, ops);
  CHECK(kernel_basis_svd_check(m, ops, r) < 1e-8);
  CHECK(kernel_dimension(ops) == 2);
}

TEST_CASE("projections") {
  BoundaryMesh m = build_mesh(ellipse(0.3, 0.2, Vec3(0.03, -0.02, 0)), 128);
  CapacityResult r = solve_kernel_basis(m);
  for (int l = 0; l < 2; ++l) {
    Projection p = project(m, r, m.constant(e(l)));
    CHECK((p.coef - e(l)).norm() < 1e-12);
    CHECK(m.l2_norm(p.rest) < 1e-12);
  }
  VecX psi = random_smooth_density(m, 5);
  Projection p = project(m, r, psi);
  Projection q = project(m, r, p.rest);
  CHECK(q.coef.norm() < 1e-9);
  CHECK(m.l2_norm(q.rest - p.rest) < 1e-9);
  // pieces add back up
  VecX back = p.rest;
  for (int k = 0; k < 2; ++k) back += p.coef[k] * m.constant(e(k));
  CHECK(m.l2_norm(back - psi) < 1e-12);
}

TEST_CASE("projection of -Gamma_l recovers the columns of A (3D)") {
  BoundaryMesh m = build_mesh(sphere(0.25, Vec3(0.05, 0.03, 0.02)), 12, 24);
  CapacityResult r = solve_kernel_basis(m);
  for (int l = 0; l < 3; ++l) {
    VecX psi(m.unknowns());
    for (int i = 0; i < m.n; ++i) psi.segment(3 * i, 3) = -stokeslet(m.x[i], 3).col(l);
    Projection p = project(m, r, psi);
    CHECK((p.coef - r.A.col(l)).norm() < 1e-6);
  }
}

TEST_CASE("2D rescaling law") {
  // disks of radius 0.2 and 0.3: shift log(1.5) / (4 pi) downwards
  RescalingReport d = rescaling_law_check(disk(0.2), {1.0, 1.5}, 128);
  MatX shift = d.A[1] - d.A[0];
  CHECK(amax(shift + std::log(1.5) / (4 * pi) * MatX::Identity(2, 2)) < 1e-8);
  CHECK(d.max_dev < 1e-8);
  CHECK(d.max_dev_plus == doctest::Approx(2 * std::log(1.5) / (4 * pi)).epsilon(1e-6));

  RescalingReport one = rescaling_law_check(ellipse(0.3, 0.2), {1.0, 1.0}, 128);
  CHECK(amax(one.A[1] - one.A[0]) == 0.0);

  RescalingReport k = rescaling_law_check(kite(0.28), {1.0, 0.8, 1.25}, 256);
  CHECK(k.max_dev < 1e-7);
  RescalingReport s = rescaling_law_check(star(0.3), {1.0, 0.8, 1.2}, 256);
  CHECK(s.max_dev < 1e-7);
}

TEST_CASE("energy identity on the sphere") {
  BoundaryMesh m = build_mesh(sphere(0.25), 12, 24);
  LayerOperators ops = assemble_layer_operators(m);
  CapacityResult r = solve_kernel_basis(m, ops);
  EnergyReport e = energy_identity_check(m, ops, r);
  CHECK(e.rel_dev < 1e-6);
  CHECK(e.asym < 1e-9);
  CHECK(e.min_eig > 0);
  CHECK(amax(e.energy - 6 * pi * 0.25 * MatX::Identity(3, 3)) / (6 * pi * 0.25) < 5e-3);
}

TEST_CASE("capacity json") {
  CapacityResult r = solve_kernel_basis(build_mesh(disk(0.25), 64));
  auto j = capacity_to_json(r);
  CHECK(j.at("A_T").size() == 2);
  CHECK(j.at("M")[0][0].get<double>() == 4 * pi);
}

TEST_CASE("capacity is translation invariant and positive definite in 3D") {
  CapacityResult c0 = solve_kernel_basis(build_mesh(sphere(0.25), 12, 24));
  CapacityResult c1 = solve_kernel_basis(build_mesh(sphere(0.25, Vec3(0.05, 0.03, 0.02)), 12, 24));
  CHECK(amax(c1.A - c0.A) < 1e-7);
  ShapeSpec el;
  el.dim = 3;
  el.kind = ShapeKind::ellipsoid;
  el.axes = {0.3, 0.22, 0.18};
  CapacityResult ce = solve_kernel_basis(build_mesh(el, 16, 32));
  CHECK(amax(ce.A - ce.A.transpose()) <= 1e-8);
  Eigen::SelfAdjointEigenSolver<MatX> es(ce.A);
  CHECK(es.eigenvalues().minCoeff() > 0);
  // the ellipsoid sits between its inscribed and circumscribed spheres
  CHECK(es.eigenvalues().maxCoeff() < 1 / (6 * pi * 0.18));
  CHECK(es.eigenvalues().minCoeff() > 1 / (6 * pi * 0.3));
}
