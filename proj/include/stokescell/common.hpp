#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stokescell {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double pi = std::numbers::pi;

// bad user input (shape, flags, files)
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// a numerical invariant did not hold
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dense solve hit a numerically singular matrix
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// surface measure of the unit sphere S^{d-1}: 2pi (d=2), 4pi (d=3)
inline double sphere_area(int dim) { return dim == 2 ? 2.0 * pi : 4.0 * pi; }

// worker count: explicit setting, then STOKESCELL_THREADS, then hardware
void set_num_threads(int n);
int num_threads();

// Runs f(i) for i in [0, n). Work is split into contiguous chunks; every
// index is computed exactly once by one thread, so results never depend on
// the thread count as long as f(i) only writes its own outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace stokescell
