#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace fieldnav {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// A world-frame position in meters.
using WorldPoint = Vec3;

struct GridIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  constexpr int& operator[](int axis) { return axis == 0 ? i : (axis == 1 ? j : k); }
  constexpr int operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }

  friend constexpr auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

inline Vec3 to_vec(const GridIndex& g) {
  return {static_cast<double>(g.i), static_cast<double>(g.j), static_cast<double>(g.k)};
}

}  // namespace fieldnav
