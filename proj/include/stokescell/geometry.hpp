#pragma once

#include "stokescell/common.hpp"

#include <array>
#include <memory>
#include <string>

#include <json.hpp>

namespace stokescell {

enum class ShapeKind { disk, ellipse, kite, star, sphere, ellipsoid };

// Hole description. Lengths are multiplied by `scale`; `center` is an
// absolute offset applied after scaling.
//   disk/sphere      radius
//   ellipse          axes[0], axes[1]
//   ellipsoid        axes[0..2]
//   kite             (cos t + a cos 2t - a, b sin t), normalised to unit max radius
//   star             r(t) = (1 + A cos(f t)) / (1 + A)
struct ShapeSpec {
  int dim = 2;
  ShapeKind kind = ShapeKind::disk;
  double radius = 0.25;
  std::array<double, 3> axes{0.3, 0.2, 0.2};
  double kite_a = 0.65;
  double kite_b = 1.5;
  double amplitude = 0.2;
  int frequency = 5;
  double scale = 1.0;
  Vec3 center = Vec3::Zero();
};

std::string kind_name(ShapeKind k);
ShapeSpec shape_from_json(const nlohmann::json& j);
nlohmann::json shape_to_json(const ShapeSpec& s);
ShapeSpec load_shape(const std::string& path);
ShapeSpec with_scale(ShapeSpec s, double scale);

struct CurvePoint {
  Vec3 x, d1, d2;  // position and first two t-derivatives
};

struct SurfacePoint {
  Vec3 x, normal;
  double jac;  // area element relative to the unit sphere
};

struct RayHit {
  double rho;    // distance from the origin to the boundary
  double t;      // 2D parameter of the hit
  Vec3 yhat;     // 3D parameter of the hit
};

class Shape {
 public:
  explicit Shape(const ShapeSpec& spec);

  const ShapeSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }

  CurvePoint curve(double t) const;
  SurfacePoint surface(const Vec3& yhat) const;

  // boundary point on the ray from the origin in unit direction u
  RayHit ray(const Vec3& u) const;
  bool inside(const Vec3& p) const;
  // 3D: parameter of the surface point closest to p (local iteration from
  // the radial projection)
  Vec3 foot(const Vec3& p) const;

 private:
  ShapeSpec spec_;
  double kite_norm_ = 1.0;
  bool star_ = true;
  std::vector<double> tab_t_, tab_ang_;  // unwrapped polar angle of curve samples
};

struct ContainmentReport {
  bool ok = false;
  double r_min = 0, r_max = 0;
  std::string message;
};

inline constexpr double a1_inner = 1.0 / 16.0;
inline constexpr double a1_outer = 3.0 / 8.0;

// B_{1/16} in T in B_{3/8}, checked on 2048 ray directions
ContainmentReport containment_check(const ShapeSpec& spec);

struct BoundaryMesh {
  int dim = 2;
  int n = 0;
  std::vector<Vec3> x, normal;
  std::vector<double> w;

  // 2D: t_i = i h, derivatives of the parameterization
  double h = 0;
  std::vector<double> t, speed;
  std::vector<Vec3> dx, ddx;

  // 3D: Gauss-Legendre in cos(theta) times trapezoid in phi
  int ntheta = 0, nphi = 0;
  std::vector<Vec3> yhat;
  std::vector<double> omega, jac;

  std::shared_ptr<const Shape> shape;

  int unknowns() const { return dim * n; }
  double perimeter() const;
  double volume() const;
  // weighted integral of a node-major density with dim components
  Vec3 integrate(const VecX& f) const;
  Vec3 mean(const VecX& f) const;
  double l2_norm(const VecX& f) const;
  double inner(const VecX& f, const VecX& g) const;
  // constant density c on every node
  VecX constant(const Vec3& c) const;
};

BoundaryMesh build_mesh(const ShapeSpec& spec, int n);
BoundaryMesh build_mesh(const ShapeSpec& spec, int ntheta, int nphi);

struct MeshSize {
  int a = 0, b = 0;  // b == 0 for a plain node count
};
// same shape, different resolution, no validation (used for refinement)
BoundaryMesh resample_mesh(const BoundaryMesh& m, int n);
BoundaryMesh resample_mesh(const BoundaryMesh& m, int ntheta, int nphi);

MeshSize parse_mesh_size(const std::string& s);
BoundaryMesh build_mesh(const ShapeSpec& spec, const MeshSize& m);

}  // namespace stokescell
