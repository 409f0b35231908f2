#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace hjlab {

/// Point or covector in R^n, n <= 3. Unused trailing components are zero.
using Vec3 = std::array<double, 3>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

/// Unit vector along axis `i`.
inline Vec3 unit(int i) {
  Vec3 e{0.0, 0.0, 0.0};
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

}  // namespace hjlab
