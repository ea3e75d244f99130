#pragma once

#include <vector>

namespace stokescell {

struct Rule {
  std::vector<double> x, w;
};

// Gauss-Legendre on [-1, 1]
Rule gauss_legendre(int n);

// Gauss-Legendre mapped to [a, b]
Rule gauss_legendre(int n, double a, double b);

}  // namespace stokescell
