#include "anchor/matrix.hpp"

#include <cassert>
#include <cmath>

namespace anchor {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double frobenius_norm(const Matrix& m) { return std::sqrt(squared_norm(m.values())); }

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace anchor
