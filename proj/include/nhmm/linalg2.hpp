#pragma once

// Fixed 2x2 linear algebra for the bivariate demand model. Closed forms only.

#include <array>
#include <cmath>

namespace nhmm {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x1 : x2; }
  constexpr double& operator[](int i) { return i == 0 ? x1 : x2; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
  constexpr Vec2& operator+=(Vec2 b) {
    x1 += b.x1;
    x2 += b.x2;
    return *this;
  }
  friend constexpr double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

/// Row-major 2x2 matrix [[a11, a12], [a21, a22]].
struct Mat2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
  static constexpr Mat2 symmetric(double d1, double off, double d2) { return {d1, off, off, d2}; }

  constexpr double det() const { return a11 * a22 - a12 * a21; }
  constexpr double trace() const { return a11 + a22; }
  constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
  constexpr Mat2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }

  friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a11 * v.x1 + m.a12 * v.x2, m.a21 * v.x1 + m.a22 * v.x2};
  }
  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
  }
  friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
  }
  friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& a) {
    return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// x' A x
constexpr double quad_form(const Mat2& a, Vec2 x) { return dot(x, a * x); }

/// Outer product u v'.
constexpr Mat2 outer(Vec2 u, Vec2 v) { return {u.x1 * v.x1, u.x1 * v.x2, u.x2 * v.x1, u.x2 * v.x2}; }

/// tr(A B)
constexpr double trace_product(const Mat2& a, const Mat2& b) {
  return a.a11 * b.a11 + a.a12 * b.a21 + a.a21 * b.a12 + a.a22 * b.a22;
}

inline double max_abs(const Mat2& m) {
  return std::fmax(std::fmax(std::fabs(m.a11), std::fabs(m.a12)),
                   std::fmax(std::fabs(m.a21), std::fabs(m.a22)));
}

}  // namespace nhmm
