#include "support.hpp"

#include <random>

using namespace stokescell;
using namespace testing;

namespace {

Vec3 rnd(std::mt19937& g, int d) {
  std::uniform_real_distribution<double> u(-1, 1);
  Vec3 v(u(g), u(g), d == 3 ? u(g) : 0.0);
  return v;
}

Vec3 rnd_unit(std::mt19937& g, int d) { return rnd(g, d).normalized(); }

}  // namespace

TEST_CASE("stokeslet hand values") {
  Mat3 g2 = stokeslet(Vec3(1, 0, 0), 2);
  CHECK(g2(0, 0) == doctest::Approx(-1 / (4 * pi)));
  CHECK(g2(0, 1) == doctest::Approx(0).epsilon(1e-15));
  CHECK(g2(1, 0) == doctest::Approx(0).epsilon(1e-15));
  CHECK(std::abs(g2(1, 1)) < 1e-15);
  Mat3 g3 = stokeslet(Vec3(1, 0, 0), 3);
  CHECK(g3(0, 0) == doctest::Approx(-1 / (4 * pi)));
  CHECK(g3(1, 1) == doctest::Approx(-1 / (8 * pi)));
  CHECK(g3(2, 2) == doctest::Approx(-1 / (8 * pi)));
}

TEST_CASE("pressurelet hand values and parity") {
  Vec3 t2 = pressurelet(Vec3(1, 0, 0), 2);
  CHECK(t2[0] == doctest::Approx(-1 / (2 * pi)));
  CHECK(std::abs(t2[1]) < 1e-15);
  Vec3 t3 = pressurelet(Vec3(1, 0, 0), 3);
  CHECK(t3[0] == doctest::Approx(-1 / (4 * pi)));
  std::mt19937 g(3);
  for (int d : {2, 3})
    for (int i = 0; i < 20; ++i) {
      Vec3 x = rnd(g, d);
      CHECK((pressurelet(-x, d) + pressurelet(x, d)).norm() < 1e-14);
      Mat3 G = stokeslet(x, d);
      CHECK(amax(G - stokeslet(-x, d)) < 1e-14);
      CHECK(amax(G - G.transpose()) < 1e-15);
    }
}

TEST_CASE("pressurelet is the gradient of the Laplace Green function") {
  std::mt19937 g(5);
  const double h = 1e-5;
  for (int d : {2, 3})
    for (int i = 0; i < 10; ++i) {
      Vec3 x = rnd(g, d);
      for (int l = 0; l < d; ++l) {
        double fd = (laplace_green(x + h * e(l), d) - laplace_green(x - h * e(l), d)) / (2 * h);
        CHECK(pressurelet(x, d)[l] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
}

TEST_CASE("analytic gradients against central differences") {
  std::mt19937 g(7);
  const double h = 1e-5;
  for (int d : {2, 3})
    for (int i = 0; i < 10; ++i) {
      Vec3 x = rnd(g, d) + Vec3(0.5, 0.5, d == 3 ? 0.5 : 0.0);
      Grad3 dG = stokeslet_grad(x, d);
      Mat3 dth = pressurelet_grad(x, d);
      for (int l = 0; l < d; ++l) {
        Mat3 fd = (stokeslet(x + h * e(l), d) - stokeslet(x - h * e(l), d)) / (2 * h);
        CHECK(amax(dG[l] - fd) < 1e-8);
        Vec3 fp = (pressurelet(x + h * e(l), d) - pressurelet(x - h * e(l), d)) / (2 * h);
        for (int k = 0; k < d; ++k) CHECK(dth(l, k) == doctest::Approx(fp[k]).epsilon(1e-7));
      }
    }
}

TEST_CASE("stokeslet solves the homogeneous Stokes system away from 0") {
  const double h = 1e-3;
  for (int d : {2, 3}) {
    Vec3 x(0.4, -0.3, d == 3 ? 0.2 : 0.0);
    Mat3 lap = Mat3::Zero();
    Mat3 gth = pressurelet_grad(x, d);  // (l, k)
    Vec3 div = Vec3::Zero();
    for (int l = 0; l < d; ++l) {
      lap += (stokeslet(x + h * e(l), d) - 2 * stokeslet(x, d) + stokeslet(x - h * e(l), d)) / (h * h);
      div += stokeslet_grad(x, d)[l].row(l).transpose();
    }
    // column k: Delta Gamma_k = grad theta_k
    CHECK(amax((lap - gth).topLeftCorner(d, d)) < 1e-5);
    CHECK(div.norm() < 1e-12);
  }
}

TEST_CASE("adjoint kernel swaps the roles of x and y") {
  std::mt19937 g(11);
  for (int d : {2, 3})
    for (int i = 0; i < 30; ++i) {
      Vec3 x = rnd(g, d), y = rnd(g, d), nx = rnd_unit(g, d);
      Mat3 a = adjoint_kernel(x, y, nx, d).full();
      Mat3 b = dlp_kernel(y, x, nx, d).full().transpose();
      CHECK(amax(a - b) <= 1e-13 * std::max(1.0, amax(b)));
    }
}

TEST_CASE("explicit K* - K kernel equals the difference") {
  std::mt19937 g(13);
  for (int d : {2, 3})
    for (int i = 0; i < 30; ++i) {
      Vec3 x = rnd(g, d), y = rnd(g, d), nx = rnd_unit(g, d), ny = rnd_unit(g, d);
      Mat3 ref = adjoint_kernel(x, y, nx, d).full() - dlp_kernel(x, y, ny, d).full();
      CHECK(amax(kdiff_kernel(x, y, nx, ny, d) - ref) <= 1e-13 * std::max(1.0, amax(ref)));
    }
}

TEST_CASE("K* - K vanishes on a flat segment") {
  Vec3 n(0, 1, 0);
  for (double s : {1e-3, 0.1, 0.7}) {
    Mat3 k2 = kdiff_kernel(Vec3(0.2, 0, 0), Vec3(0.2 + s, 0, 0), n, n, 2);
    CHECK(amax(k2) == 0.0);
    Mat3 k3 = kdiff_kernel(Vec3(0.2, 0, 0.1), Vec3(0.2 + s, 0, 0.1 - s), n, n, 3);
    CHECK(amax(k3) == 0.0);
  }
}

TEST_CASE("circle: weak kernel and K* - K stay bounded at coincidence") {
  const double a = 0.25;
  auto pt = [&](double t) { return Vec3(a * std::cos(t), a * std::sin(t), 0); };
  auto nr = [&](double t) { return Vec3(std::cos(t), std::sin(t), 0); };
  double prev = -1;
  for (double dt : {1e-2, 1e-3, 1e-4, 1e-5}) {
    Vec3 x = pt(0), y = pt(dt);
    // <N_y, x - y> = -|x - y|^2 / (2a) on the circle
    CHECK(nr(dt).dot(x - y) == doctest::Approx(-(x - y).squaredNorm() / (2 * a)).epsilon(1e-10));
    double w = amax(dlp_kernel(x, y, nr(dt), 2).weak);
    double kd = amax(kdiff_kernel(x, y, nr(0), nr(dt), 2));
    CHECK(w < 10);
    CHECK(kd < 10);
    if (prev >= 0) CHECK(std::abs(w - prev) < 1e-1);
    prev = w;
  }
}

TEST_CASE("double layer and its pressure form a Stokes pair in x") {
  for (int d : {2, 3}) {
    Vec3 y(0.1, 0.05, d == 3 ? -0.02 : 0.0);
    Vec3 ny = Vec3(0.3, 0.8, d == 3 ? 0.5 : 0.0).normalized();
    Vec3 x(0.5, -0.2, d == 3 ? 0.3 : 0.0);
    auto M = [&](const Vec3& p) { return dlp_kernel(p, y, ny, d).full(); };
    auto P = [&](const Vec3& p) { return dlp_pressure_kernel(p, y, ny, d); };
    // column j of M is the velocity for density e_j, P[j] its pressure;
    // differences at h and h/2 combined to fourth order
    auto residual = [&](int j, double h) {
      Vec3 lap = Vec3::Zero(), gp = Vec3::Zero();
      double div = 0;
      for (int l = 0; l < d; ++l) {
        lap += (M(x + h * e(l)).col(j) - 2 * M(x).col(j) + M(x - h * e(l)).col(j)) / (h * h);
        gp[l] = (P(x + h * e(l))[j] - P(x - h * e(l))[j]) / (2 * h);
        div += (M(x + h * e(l))(l, j) - M(x - h * e(l))(l, j)) / (2 * h);
      }
      return std::make_pair(Vec3(lap - gp), div);
    };
    for (int j = 0; j < d; ++j) {
      auto [r1, d1] = residual(j, 2e-3);
      auto [r2, d2] = residual(j, 1e-3);
      Vec3 mom = (4 * r2 - r1) / 3;
      double div = (4 * d2 - d1) / 3;
      CHECK(mom.norm() < 1e-6);
      CHECK(std::abs(div) < 1e-8);
    }
  }
}

TEST_CASE("single-layer traction kernel from the pair") {
  std::mt19937 g(17);
  for (int d : {2, 3})
    for (int i = 0; i < 10; ++i) {
      Vec3 x = rnd(g, d), y = rnd(g, d), n = rnd_unit(g, d);
      Mat3 T = slp_traction_kernel(x, y, n, d);
      Grad3 dG = stokeslet_grad(x - y, d);
      Vec3 th = pressurelet(x - y, d);
      for (int k = 0; k < d; ++k) {
        Vec3 col = -th[k] * n;
        for (int l = 0; l < d; ++l)
          for (int i2 = 0; i2 < d; ++i2) col[i2] += dG[l](i2, k) * n[l];
        CHECK((T.col(k) - col).norm() <= 1e-13 * std::max(1.0, col.norm()));
      }
    }
}
