#pragma once

#include "stokescell/common.hpp"

namespace stokescell {

// Real orthonormal spherical harmonics up to degree p, index l*l + l + m.
inline int sh_count(int p) { return (p + 1) * (p + 1); }

// writes sh_count(p) values for the unit vector y into out
void sh_eval(int p, const Vec3& y, double* out);

// rows: points, columns: harmonics
MatX sh_matrix(int p, const std::vector<Vec3>& pts);

// frame whose third column is the unit vector y (rotation taking e_z to y)
Mat3 frame_to(const Vec3& y);

}  // namespace stokescell
