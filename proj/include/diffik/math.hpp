#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "diffik/ad.hpp"

namespace diffik {

template <class S>
struct Vec3 {
  S x{}, y{}, z{};

  Vec3() = default;
  Vec3(S x_, S y_, S z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

  template <class U>
  explicit Vec3(const Vec3<U>& o) : x(S(o.x)), y(S(o.y)), z(S(o.z)) {}

  S& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  const S& operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

using Vec3d = Vec3<double>;

template <class S>
Vec3<S> operator+(const Vec3<S>& a, const Vec3<S>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class S>
Vec3<S> operator-(const Vec3<S>& a, const Vec3<S>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class S>
Vec3<S> operator*(const Vec3<S>& a, const S& s) {
  return {a.x * s, a.y * s, a.z * s};
}
template <class S>
S dot(const Vec3<S>& a, const Vec3<S>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <class S>
Vec3<S> cross(const Vec3<S>& a, const Vec3<S>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3d& a) { return std::sqrt(dot(a, a)); }
inline Vec3d normalized(const Vec3d& a) { return a * (1.0 / norm(a)); }

inline bool operator==(const Vec3d& a, const Vec3d& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Homogeneous 4x4 transform, row-major. The bottom row is always [0 0 0 1];
/// composition only computes the upper three rows.
template <class S>
struct Transform {
  std::array<S, 16> m;

  Transform() {
    for (auto& e : m) e = S(0.0);
    m[0] = m[5] = m[10] = m[15] = S(1.0);
  }

  template <class U>
  explicit Transform(const Transform<U>& o) {
    for (std::size_t i = 0; i < 16; ++i) m[i] = S(o.m[i]);
  }

  S& operator()(std::size_t r, std::size_t c) { return m[r * 4 + c]; }
  const S& operator()(std::size_t r, std::size_t c) const { return m[r * 4 + c]; }

  [[nodiscard]] Vec3<S> translation() const { return {m[3], m[7], m[11]}; }

  static Transform identity() { return Transform(); }

  static Transform translate(double x, double y, double z) {
    Transform t;
    t.m[3] = S(x);
    t.m[7] = S(y);
    t.m[11] = S(z);
    return t;
  }

  /// Applies the full affine transform to a point.
  [[nodiscard]] Vec3<S> apply_point(const Vec3<S>& p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
  }

  /// Applies only the rotation block.
  [[nodiscard]] Vec3<S> apply_vector(const Vec3<S>& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z};
  }
};

using Transformd = Transform<double>;

template <class S>
Transform<S> operator*(const Transform<S>& a, const Transform<S>& b) {
  Transform<S> c;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t col = 0; col < 4; ++col) {
      S acc = a(r, 0) * b(0, col) + a(r, 1) * b(1, col) + a(r, 2) * b(2, col);
      if (col == 3) acc = acc + a(r, 3);
      c(r, col) = acc;
    }
  }
  return c;
}

/// Rotation matrix of a unit quaternion (w, x, y, z). The quaternion is used
/// as given; callers validate orthonormality of the result.
inline Transformd quaternion_to_transform(const std::array<double, 4>& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Transformd t;
  t(0, 0) = 1.0 - 2.0 * (y * y + z * z);
  t(0, 1) = 2.0 * (x * y - w * z);
  t(0, 2) = 2.0 * (x * z + w * y);
  t(1, 0) = 2.0 * (x * y + w * z);
  t(1, 1) = 1.0 - 2.0 * (x * x + z * z);
  t(1, 2) = 2.0 * (y * z - w * x);
  t(2, 0) = 2.0 * (x * z - w * y);
  t(2, 1) = 2.0 * (y * z + w * x);
  t(2, 2) = 1.0 - 2.0 * (x * x + y * y);
  return t;
}

/// Largest |R^T R - I| entry of the rotation block.
inline double orthonormality_error(const Transformd& t) {
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += t(k, i) * t(k, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

/// Inverse of a rigid transform (rotation block assumed orthonormal).
inline Transformd rigid_inverse(const Transformd& t) {
  Transformd inv;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) inv(r, c) = t(c, r);
  const Vec3d p = t.translation();
  for (std::size_t r = 0; r < 3; ++r)
    inv(r, 3) = -(inv(r, 0) * p.x + inv(r, 1) * p.y + inv(r, 2) * p.z);
  return inv;
}

}  // namespace diffik
