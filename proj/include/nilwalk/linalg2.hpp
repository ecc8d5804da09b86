#pragma once

#include <array>
#include <cmath>

#include "nilwalk/errors.hpp"

namespace nilwalk {

/// Row-major 2x2 real matrix.
using mat2 = std::array<std::array<double, 2>, 2>;

constexpr mat2 identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

constexpr double det(const mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

constexpr std::array<double, 2> mat_vec(const mat2& m, const std::array<double, 2>& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

inline mat2 inverse(const mat2& m) {
  const double d = det(m);
  if (d == 0.0 || !std::isfinite(d)) throw numeric_domain_error("singular 2x2 matrix");
  return {{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
}

inline bool is_symmetric_positive_definite(const mat2& m, double tol = 1e-12) {
  const double scale = std::abs(m[0][1]) + std::abs(m[1][0]) + std::abs(m[0][0]) + std::abs(m[1][1]);
  return std::abs(m[0][1] - m[1][0]) <= tol * scale && m[0][0] > 0.0 && det(m) > 0.0;
}

/// Symmetric positive semidefinite square root of a symmetric 2x2 matrix.
inline mat2 sqrt_spd(const mat2& m) {
  if (std::abs(m[0][1] - m[1][0]) > 1e-12 * (std::abs(m[0][1]) + 1.0))
    throw numeric_domain_error("sqrt_spd: matrix is not symmetric");
  const double d = det(m);
  const double tr = m[0][0] + m[1][1];
  if (d < 0.0 || tr < 0.0) throw numeric_domain_error("sqrt_spd: matrix is not positive semidefinite");
  // sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)) for 2x2 SPD M.
  const double s = std::sqrt(d);
  const double t = std::sqrt(tr + 2.0 * s);
  if (t == 0.0) return {};
  return {{{(m[0][0] + s) / t, m[0][1] / t}, {m[1][0] / t, (m[1][1] + s) / t}}};
}

inline double norm2d(const std::array<double, 2>& v) { return std::hypot(v[0], v[1]); }

}  // namespace nilwalk
