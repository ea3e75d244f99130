#pragma once

#include "stokescell/rescale.hpp"

#include <doctest.h>

namespace st = stokescell;

namespace testing {

inline st::ShapeSpec disk(double r) {
  st::ShapeSpec s;
  s.dim = 2;
  s.kind = st::ShapeKind::disk;
  s.radius = r;
  return s;
}

inline st::ShapeSpec ellipse(double a, double b, st::Vec3 c = st::Vec3::Zero()) {
  st::ShapeSpec s;
  s.dim = 2;
  s.kind = st::ShapeKind::ellipse;
  s.axes = {a, b, 0};
  s.center = c;
  return s;
}

inline st::ShapeSpec kite(double scale = 0.37) {
  st::ShapeSpec s;
  s.dim = 2;
  s.kind = st::ShapeKind::kite;
  s.scale = scale;
  return s;
}

inline st::ShapeSpec star(double scale = 0.3) {
  st::ShapeSpec s;
  s.dim = 2;
  s.kind = st::ShapeKind::star;
  s.scale = scale;
  return s;
}

inline st::ShapeSpec sphere(double r, st::Vec3 c = st::Vec3::Zero()) {
  st::ShapeSpec s;
  s.dim = 3;
  s.kind = st::ShapeKind::sphere;
  s.radius = r;
  s.center = c;
  return s;
}

inline st::Vec3 e(int k) {
  st::Vec3 v = st::Vec3::Zero();
  v[k] = 1;
  return v;
}

// max abs entry
inline double amax(const st::MatX& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
