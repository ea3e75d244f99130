#include "stokescell/geometry.hpp"

#include "stokescell/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stokescell {

using nlohmann::json;

std::string kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::disk: return "disk";
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::kite: return "kite";
    case ShapeKind::star: return "star";
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::ellipsoid: return "ellipsoid";
  }
  return "?";
}

namespace {

ShapeKind parse_kind(const std::string& s) {
  for (auto k : {ShapeKind::disk, ShapeKind::ellipse, ShapeKind::kite, ShapeKind::star,
                 ShapeKind::sphere, ShapeKind::ellipsoid})
    if (kind_name(k) == s) return k;
  throw InputError("unknown shape kind '" + s + "'");
}

bool is3d(ShapeKind k) { return k == ShapeKind::sphere || k == ShapeKind::ellipsoid; }

}  // namespace

ShapeSpec shape_from_json(const json& j) {
  try {
    ShapeSpec s;
    s.kind = parse_kind(j.at("kind").get<std::string>());
    s.dim = j.value("dim", is3d(s.kind) ? 3 : 2);
    if (s.dim != 2 && s.dim != 3) throw InputError("dim must be 2 or 3");
    if (is3d(s.kind) != (s.dim == 3))
      throw InputError("shape kind '" + kind_name(s.kind) + "' does not match dim " +
                       std::to_string(s.dim));
    s.scale = j.value("scale", 1.0);
    s.radius = j.value("radius", s.radius);
    if (j.contains("axes")) {
      auto a = j.at("axes").get<std::vector<double>>();
      if ((int)a.size() != s.dim) throw InputError("axes needs dim entries");
      for (int i = 0; i < s.dim; ++i) s.axes[i] = a[i];
    }
    if (j.contains("kite")) {
      s.kite_a = j["kite"].value("a", s.kite_a);
      s.kite_b = j["kite"].value("b", s.kite_b);
    }
    s.amplitude = j.value("amplitude", s.amplitude);
    s.frequency = j.value("frequency", s.frequency);
    if (j.contains("center")) {
      auto c = j.at("center").get<std::vector<double>>();
      if ((int)c.size() != s.dim) throw InputError("center needs dim entries");
      for (int i = 0; i < s.dim; ++i) s.center[i] = c[i];
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad shape json: ") + e.what());
  }
}

json shape_to_json(const ShapeSpec& s) {
  json j;
  j["dim"] = s.dim;
  j["kind"] = kind_name(s.kind);
  j["scale"] = s.scale;
  switch (s.kind) {
    case ShapeKind::disk:
    case ShapeKind::sphere: j["radius"] = s.radius; break;
    case ShapeKind::ellipse: j["axes"] = {s.axes[0], s.axes[1]}; break;
    case ShapeKind::ellipsoid: j["axes"] = {s.axes[0], s.axes[1], s.axes[2]}; break;
    case ShapeKind::kite: j["kite"] = {{"a", s.kite_a}, {"b", s.kite_b}}; break;
    case ShapeKind::star:
      j["amplitude"] = s.amplitude;
      j["frequency"] = s.frequency;
      break;
  }
  if (s.center.norm() > 0) {
    std::vector<double> c(s.center.data(), s.center.data() + s.dim);
    j["center"] = c;
  }
  return j;
}

ShapeSpec load_shape(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open shape file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("cannot parse shape file '" + path + "': " + e.what());
  }
  return shape_from_json(j);
}

ShapeSpec with_scale(ShapeSpec s, double scale) {
  s.scale = scale;
  return s;
}

// ---------------------------------------------------------------------------

Shape::Shape(const ShapeSpec& spec) : spec_(spec) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw InputError(std::string(what) + " must be positive");
  };
  positive(spec.scale, "scale");
  switch (spec.kind) {
    case ShapeKind::disk:
    case ShapeKind::sphere: positive(spec.radius, "radius"); break;
    case ShapeKind::ellipse:
    case ShapeKind::ellipsoid:
      for (int i = 0; i < spec.dim; ++i) positive(spec.axes[i], "semi-axis");
      break;
    case ShapeKind::kite: positive(spec.kite_b, "kite b"); break;
    case ShapeKind::star:
      if (!(spec.amplitude >= 0 && spec.amplitude < 1)) throw InputError("star amplitude must be in [0,1)");
      if (spec.frequency < 1) throw InputError("star frequency must be >= 1");
      break;
  }
  if (spec.dim == 3) return;

  if (spec.kind == ShapeKind::kite) {
    // max radius of the raw kite, dense sampling then golden refinement
    auto rad = [&](double t) {
      double x = std::cos(t) + spec.kite_a * std::cos(2 * t) - spec.kite_a, y = spec.kite_b * std::sin(t);
      return std::hypot(x, y);
    };
    int m = 4096;
    int best = 0;
    for (int i = 0; i < m; ++i)
      if (rad(2 * pi * i / m) > rad(2 * pi * best / m)) best = i;
    double a = 2 * pi * (best - 1) / m, b = 2 * pi * (best + 1) / m;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      double c = b - g * (b - a), d = a + g * (b - a);
      if (rad(c) > rad(d)) b = d; else a = c;
    }
    kite_norm_ = rad(0.5 * (a + b));
  }

  int m = 4096;
  tab_t_.resize(m + 1);
  tab_ang_.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    double t = 2 * pi * i / m;
    Vec3 p = curve(t).x;
    double ang = std::atan2(p.y(), p.x());
    if (i > 0) {
      while (ang < tab_ang_[i - 1] - pi) ang += 2 * pi;
      while (ang > tab_ang_[i - 1] + pi) ang -= 2 * pi;
    }
    tab_t_[i] = t;
    tab_ang_[i] = ang;
    if (i > 0 && !(ang > tab_ang_[i - 1])) star_ = false;
  }
  if (std::abs(tab_ang_.back() - tab_ang_.front() - 2 * pi) > 1e-6) star_ = false;
}

CurvePoint Shape::curve(double t) const {
  const auto& s = spec_;
  double c = std::cos(t), sn = std::sin(t), sc = s.scale;
  CurvePoint p;
  switch (s.kind) {
    case ShapeKind::disk: {
      double a = s.radius * sc;
      p.x = {a * c, a * sn, 0};
      p.d1 = {-a * sn, a * c, 0};
      p.d2 = {-a * c, -a * sn, 0};
      break;
    }
    case ShapeKind::ellipse: {
      double a = s.axes[0] * sc, b = s.axes[1] * sc;
      p.x = {a * c, b * sn, 0};
      p.d1 = {-a * sn, b * c, 0};
      p.d2 = {-a * c, -b * sn, 0};
      break;
    }
    case ShapeKind::kite: {
      double k = sc / kite_norm_, a = s.kite_a, b = s.kite_b;
      double c2 = std::cos(2 * t), s2 = std::sin(2 * t);
      p.x = {k * (c + a * c2 - a), k * b * sn, 0};
      p.d1 = {k * (-sn - 2 * a * s2), k * b * c, 0};
      p.d2 = {k * (-c - 4 * a * c2), -k * b * sn, 0};
      break;
    }
    case ShapeKind::star: {
      double A = s.amplitude, f = s.frequency, k = sc / (1 + A);
      double r = k * (1 + A * std::cos(f * t));
      double r1 = -k * A * f * std::sin(f * t);
      double r2 = -k * A * f * f * std::cos(f * t);
      p.x = {r * c, r * sn, 0};
      p.d1 = {r1 * c - r * sn, r1 * sn + r * c, 0};
      p.d2 = {r2 * c - 2 * r1 * sn - r * c, r2 * sn + 2 * r1 * c - r * sn, 0};
      break;
    }
    default: throw std::logic_error("curve() on a 3D shape");
  }
  p.x += s.center;
  return p;
}

SurfacePoint Shape::surface(const Vec3& y) const {
  const auto& s = spec_;
  Vec3 ax = s.kind == ShapeKind::sphere ? Vec3::Constant(s.radius) : Vec3(s.axes[0], s.axes[1], s.axes[2]);
  ax *= s.scale;
  SurfacePoint p;
  p.x = ax.cwiseProduct(y) + s.center;
  Vec3 cof(ax[1] * ax[2] * y[0], ax[0] * ax[2] * y[1], ax[0] * ax[1] * y[2]);
  p.jac = cof.norm();
  p.normal = cof / p.jac;
  return p;
}

Vec3 Shape::foot(const Vec3& p) const {
  const auto& s = spec_;
  Vec3 ax = s.kind == ShapeKind::sphere ? Vec3::Constant(s.radius) : Vec3(s.axes[0], s.axes[1], s.axes[2]);
  ax *= s.scale;
  Vec3 y = (p - s.center).cwiseQuotient(ax);
  if (y.norm() == 0) return Vec3(0, 0, 1);
  y.normalize();
  for (int it = 0; it < 50; ++it) {
    SurfacePoint sp = surface(y);
    Vec3 dx = p - sp.x;
    dx -= dx.dot(sp.normal) * sp.normal;
    Vec3 yn = (sp.x + dx - s.center).cwiseQuotient(ax).normalized();
    double step = (yn - y).norm();
    y = yn;
    if (step < 1e-15) break;
  }
  return y;
}

RayHit Shape::ray(const Vec3& u) const {
  RayHit hit{0, 0, Vec3::Zero()};
  if (spec_.dim == 3) {
    const auto& s = spec_;
    Vec3 ax = s.kind == ShapeKind::sphere ? Vec3::Constant(s.radius) : Vec3(s.axes[0], s.axes[1], s.axes[2]);
    ax *= s.scale;
    Vec3 a = u.cwiseQuotient(ax), b = (-s.center).cwiseQuotient(ax);
    // |rho a + b|^2 = 1
    double A = a.squaredNorm(), B = 2 * a.dot(b), C = b.squaredNorm() - 1;
    if (C >= 0) throw InputError("origin is not inside the hole");
    hit.rho = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
    hit.yhat = (hit.rho * a + b).normalized();
    return hit;
  }
  double th = std::atan2(u.y(), u.x());
  double lo = tab_ang_.front();
  while (th < lo) th += 2 * pi;
  while (th >= lo + 2 * pi) th -= 2 * pi;
  if (!star_) throw InputError("hole is not star-shaped about the origin");
  auto it = std::upper_bound(tab_ang_.begin(), tab_ang_.end(), th);
  std::size_t i = std::clamp<std::size_t>(it - tab_ang_.begin(), 1, tab_ang_.size() - 1);
  double a = tab_t_[i - 1], b = tab_t_[i];
  auto f = [&](double t) {
    Vec3 p = curve(t).x;
    return p.x() * u.y() - p.y() * u.x();  // <0 before the ray, >0 after
  };
  double fa = f(a);
  double t = 0.5 * (a + b);
  for (int itn = 0; itn < 100; ++itn) {
    CurvePoint p = curve(t);
    double ft = p.x.x() * u.y() - p.x.y() * u.x();
    double dft = p.d1.x() * u.y() - p.d1.y() * u.x();
    if ((ft < 0) == (fa < 0)) a = t, fa = ft; else b = t;
    double tn = t - ft / dft;
    if (!(tn > a && tn < b)) tn = 0.5 * (a + b);
    if (std::abs(tn - t) < 1e-16 || b - a < 1e-16) {
      t = tn;
      break;
    }
    t = tn;
  }
  hit.t = t;
  hit.rho = curve(t).x.dot(u);
  return hit;
}

bool Shape::inside(const Vec3& p) const {
  double r = p.norm();
  if (r == 0) return true;
  return r < ray(p / r).rho;
}

ContainmentReport containment_check(const ShapeSpec& spec) {
  ContainmentReport rep;
  try {
    Shape sh(spec);
    const int m = 2048;
    rep.r_min = 1e300;
    rep.r_max = 0;
    for (int i = 0; i < m; ++i) {
      Vec3 u;
      if (spec.dim == 2) {
        double a = 2 * pi * i / m;
        u = {std::cos(a), std::sin(a), 0};
      } else {
        // Fibonacci directions
        double z = 1 - (2.0 * i + 1) / m, r = std::sqrt(1 - z * z);
        double a = pi * (3 - std::sqrt(5.0)) * i;
        u = {r * std::cos(a), r * std::sin(a), z};
      }
      double rho = sh.ray(u).rho;
      rep.r_min = std::min(rep.r_min, rho);
      rep.r_max = std::max(rep.r_max, rho);
    }
    const double tol = 1e-9;
    std::ostringstream os;
    if (rep.r_min < a1_inner - tol) os << "does not contain B_{1/16} (min radius " << rep.r_min << "); ";
    if (rep.r_max > a1_outer + tol) os << "not contained in B_{3/8} (max radius " << rep.r_max << "); ";
    rep.message = os.str();
    rep.ok = rep.message.empty();
    if (rep.ok) rep.message = "ok";
  } catch (const InputError& e) {
    rep.ok = false;
    rep.message = e.what();
  }
  return rep;
}

// ---------------------------------------------------------------------------

double BoundaryMesh::perimeter() const {
  double s = 0;
  for (double wi : w) s += wi;
  return s;
}

double BoundaryMesh::volume() const {
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * x[i].dot(normal[i]);
  return s / dim;
}

Vec3 BoundaryMesh::integrate(const VecX& f) const {
  Vec3 s = Vec3::Zero();
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < dim; ++c) s[c] += w[i] * f[i * dim + c];
  return s;
}

Vec3 BoundaryMesh::mean(const VecX& f) const { return integrate(f) / perimeter(); }

double BoundaryMesh::inner(const VecX& f, const VecX& g) const {
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < dim; ++c) s += w[i] * f[i * dim + c] * g[i * dim + c];
  return s;
}

double BoundaryMesh::l2_norm(const VecX& f) const { return std::sqrt(inner(f, f)); }

VecX BoundaryMesh::constant(const Vec3& c) const {
  VecX f(dim * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) f[i * dim + k] = c[k];
  return f;
}

namespace {

void validate(const ShapeSpec& spec) {
  auto rep = containment_check(spec);
  if (!rep.ok) throw InputError("shape violates B_{1/16} in T in B_{3/8}: " + rep.message);
}

BoundaryMesh make_2d(std::shared_ptr<const Shape> shape, int n) {
  BoundaryMesh m;
  m.dim = 2;
  m.n = n;
  m.shape = std::move(shape);
  m.h = 2 * pi / n;
  for (int i = 0; i < n; ++i) {
    double t = i * m.h;
    CurvePoint p = m.shape->curve(t);
    double sp = p.d1.norm();
    m.t.push_back(t);
    m.x.push_back(p.x);
    m.dx.push_back(p.d1);
    m.ddx.push_back(p.d2);
    m.speed.push_back(sp);
    m.normal.push_back(Vec3(p.d1.y(), -p.d1.x(), 0) / sp);
    m.w.push_back(m.h * sp);
  }
  return m;
}

BoundaryMesh make_3d(std::shared_ptr<const Shape> shape, int ntheta, int nphi) {
  BoundaryMesh m;
  m.dim = 3;
  m.ntheta = ntheta;
  m.nphi = nphi;
  m.n = ntheta * nphi;
  m.shape = std::move(shape);
  Rule gl = gauss_legendre(ntheta);
  for (int a = 0; a < ntheta; ++a) {
    double z = -gl.x[a], st = std::sqrt(1 - z * z);  // north to south
    for (int b = 0; b < nphi; ++b) {
      double ph = 2 * pi * b / nphi;
      Vec3 y(st * std::cos(ph), st * std::sin(ph), z);
      SurfacePoint p = m.shape->surface(y);
      double om = gl.w[a] * 2 * pi / nphi;
      m.yhat.push_back(y);
      m.omega.push_back(om);
      m.jac.push_back(p.jac);
      m.x.push_back(p.x);
      m.normal.push_back(p.normal);
      m.w.push_back(om * p.jac);
    }
  }
  return m;
}

}  // namespace

BoundaryMesh build_mesh(const ShapeSpec& spec, int n) {
  if (spec.dim == 3) return build_mesh(spec, n, 2 * n);
  if (n < 16) throw InputError("2D mesh needs n >= 16");
  if (n % 2) throw InputError("2D mesh needs an even node count");
  validate(spec);
  return make_2d(std::make_shared<Shape>(spec), n);
}

BoundaryMesh build_mesh(const ShapeSpec& spec, int ntheta, int nphi) {
  if (spec.dim == 2) throw InputError("AxB node counts are for 3D shapes");
  if (ntheta < 6 || nphi < 6) throw InputError("3D mesh needs at least 6x6 nodes");
  if (nphi % 2) throw InputError("3D mesh needs an even azimuthal count");
  validate(spec);
  return make_3d(std::make_shared<Shape>(spec), ntheta, nphi);
}

BoundaryMesh resample_mesh(const BoundaryMesh& m, int n) {
  if (m.dim == 3) return make_3d(m.shape, n, 2 * n);
  return make_2d(m.shape, n);
}

BoundaryMesh resample_mesh(const BoundaryMesh& m, int ntheta, int nphi) {
  return make_3d(m.shape, ntheta, nphi);
}

MeshSize parse_mesh_size(const std::string& s) {
  MeshSize m;
  auto pos = s.find_first_of("xX");
  try {
    std::size_t used = 0;
    if (pos == std::string::npos) {
      m.a = std::stoi(s, &used);
      if (used != s.size()) throw InputError("");
    } else {
      m.a = std::stoi(s.substr(0, pos), &used);
      if (used != pos) throw InputError("");
      std::string rest = s.substr(pos + 1);
      m.b = std::stoi(rest, &used);
      if (used != rest.size()) throw InputError("");
    }
  } catch (...) {
    throw InputError("bad node count '" + s + "' (expected INT or AxB)");
  }
  if (m.a <= 0 || m.b < 0) throw InputError("bad node count '" + s + "'");
  return m;
}

BoundaryMesh build_mesh(const ShapeSpec& spec, const MeshSize& m) {
  if (m.b == 0) return build_mesh(spec, m.a);
  return build_mesh(spec, m.a, m.b);
}

}  // namespace stokescell
