#pragma once

#include <algorithm>
#include <cmath>

namespace test_support {

// Relative closeness with an absolute floor for values at zero.
inline bool close_rel(double a, double b, double tol, double floor = 1e-300) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), floor});
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace test_support
