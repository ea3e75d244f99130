#include "stokescell/sphharm.hpp"

#include <cmath>

namespace stokescell {

void sh_eval(int p, const Vec3& y, double* out) {
  double z = std::clamp(y.z(), -1.0, 1.0);
  double s = std::hypot(y.x(), y.y());
  double cp = s > 0 ? y.x() / s : 1.0, sp = s > 0 ? y.y() / s : 0.0;
  // cos(m phi), sin(m phi) by recurrence
  std::vector<double> cm(p + 1), sm(p + 1);
  cm[0] = 1;
  sm[0] = 0;
  for (int m = 1; m <= p; ++m) {
    cm[m] = cm[m - 1] * cp - sm[m - 1] * sp;
    sm[m] = sm[m - 1] * cp + cm[m - 1] * sp;
  }
  const double r2 = std::sqrt(2.0);
  double pmm = std::sqrt(1 / (4 * pi));
  for (int m = 0; m <= p; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1) / (2.0 * m)) * s;
    double plm2 = 0, plm1 = pmm;
    for (int l = m; l <= p; ++l) {
      double plm;
      if (l == m) {
        plm = pmm;
      } else if (l == m + 1) {
        plm = std::sqrt(2.0 * m + 3) * z * pmm;
      } else {
        double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(m) * m));
        double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1));
        plm = a * (z * plm1 - b * plm2);
      }
      if (l > m) {
        plm2 = plm1;
        plm1 = plm;
      } else {
        plm1 = plm;
        plm2 = 0;
      }
      int base = l * l + l;
      if (m == 0) {
        out[base] = plm;
      } else {
        out[base + m] = r2 * plm * cm[m];
        out[base - m] = r2 * plm * sm[m];
      }
    }
  }
}

MatX sh_matrix(int p, const std::vector<Vec3>& pts) {
  MatX Y(pts.size(), sh_count(p));
  std::vector<double> buf(sh_count(p));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sh_eval(p, pts[i], buf.data());
    for (int k = 0; k < sh_count(p); ++k) Y(i, k) = buf[k];
  }
  return Y;
}

Mat3 frame_to(const Vec3& y) {
  double th = std::acos(std::clamp(y.z(), -1.0, 1.0));
  double ph = std::atan2(y.y(), y.x());
  Mat3 rz, ry;
  rz << std::cos(ph), -std::sin(ph), 0, std::sin(ph), std::cos(ph), 0, 0, 0, 1;
  ry << std::cos(th), 0, std::sin(th), 0, 1, 0, -std::sin(th), 0, std::cos(th);
  return rz * ry;
}

}  // namespace stokescell
