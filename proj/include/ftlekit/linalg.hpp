#pragma once

// Small fixed-size 2-D vector and matrix types used throughout the toolkit.

#include <array>
#include <cmath>

namespace ftlekit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : y; }
  constexpr double& operator[](int i) { return i == 0 ? x : y; }

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3-D cross product.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise rotation by +90 degrees.
constexpr Vec2 rot90(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 normalized(const Vec2& a) {
  const double n = norm(a);
  return {a.x / n, a.y / n};
}

/// Row-major 2x2 matrix; m(i, j) is row i, column j.
struct Mat2 {
  std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

  constexpr Mat2() = default;
  constexpr Mat2(double a11, double a12, double a21, double a22) : a{a11, a12, a21, a22} {}

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
  static Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
  }

  constexpr double operator()(int i, int j) const { return a[2 * i + j]; }
  constexpr double& operator()(int i, int j) { return a[2 * i + j]; }

  constexpr Vec2 col(int j) const { return {a[j], a[2 + j]}; }

  constexpr Mat2 transposed() const { return {a[0], a[2], a[1], a[3]}; }
  constexpr double det() const { return a[0] * a[3] - a[1] * a[2]; }
  constexpr double trace() const { return a[0] + a[3]; }
  double frobenius() const { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]); }

  friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.a[0] * v.x + m.a[1] * v.y, m.a[2] * v.x + m.a[3] * v.y};
  }
  friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a[0] * n.a[0] + m.a[1] * n.a[2], m.a[0] * n.a[1] + m.a[1] * n.a[3],
            m.a[2] * n.a[0] + m.a[3] * n.a[2], m.a[2] * n.a[1] + m.a[3] * n.a[3]};
  }
  friend constexpr Mat2 operator+(const Mat2& m, const Mat2& n) {
    return {m.a[0] + n.a[0], m.a[1] + n.a[1], m.a[2] + n.a[2], m.a[3] + n.a[3]};
  }
  friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
    return {m.a[0] - n.a[0], m.a[1] - n.a[1], m.a[2] - n.a[2], m.a[3] - n.a[3]};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& m) {
    return {s * m.a[0], s * m.a[1], s * m.a[2], s * m.a[3]};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Outer product u v^T.
constexpr Mat2 outer(const Vec2& u, const Vec2& v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

/// Axis-aligned rectangle.
struct Bounds {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  constexpr bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  constexpr Bounds inflated(double m) const { return {xmin - m, xmax + m, ymin - m, ymax + m}; }
};

}  // namespace ftlekit
