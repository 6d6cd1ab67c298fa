#pragma once

// Quaternion algebra over the basis {1, e1, e2, e3} with e_i e_j = -delta_ij + eps_ijk e_k.
//
// Three value types:
//   Quat      general quaternion w + x e1 + y e2 + z e3
//   PureQuat  zero scalar part; used interchangeably with 3-vectors
//   UnitQuat  modulus one; represents a rotation (u and -u rotate identically)

#include <array>
#include <cmath>
#include <ostream>

#include "spinctl/errors.hpp"

namespace spinctl {

struct PureQuat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr PureQuat() = default;
  constexpr PureQuat(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  static constexpr PureQuat e1() { return {1.0, 0.0, 0.0}; }
  static constexpr PureQuat e2() { return {0.0, 1.0, 0.0}; }
  static constexpr PureQuat e3() { return {0.0, 0.0, 1.0}; }
  /// e_i for i in {0, 1, 2}.
  static constexpr PureQuat basis(int i) {
    return i == 0 ? e1() : (i == 1 ? e2() : e3());
  }

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr PureQuat& operator+=(const PureQuat& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr PureQuat& operator-=(const PureQuat& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr PureQuat& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
};

constexpr PureQuat operator+(PureQuat a, const PureQuat& b) { return a += b; }
constexpr PureQuat operator-(PureQuat a, const PureQuat& b) { return a -= b; }
constexpr PureQuat operator-(const PureQuat& a) { return {-a.x, -a.y, -a.z}; }
constexpr PureQuat operator*(double s, PureQuat a) { return a *= s; }
constexpr PureQuat operator*(PureQuat a, double s) { return a *= s; }
constexpr PureQuat operator/(PureQuat a, double s) { return a *= (1.0 / s); }
constexpr bool operator==(const PureQuat& a, const PureQuat& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Dot product; for pure quaternions this is the Euclidean dot product.
constexpr double dot(const PureQuat& a, const PureQuat& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Wedge product (pq - qp)/2; for pure quaternions this is the cross product.
constexpr PureQuat wedge(const PureQuat& a, const PureQuat& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const PureQuat& a) { return std::sqrt(dot(a, a)); }

struct Quat {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Quat() = default;
  constexpr Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}
  constexpr Quat(double scalar) : w(scalar) {}  // NOLINT: real numbers embed in H
  constexpr Quat(const PureQuat& p) : x(p.x), y(p.y), z(p.z) {}  // NOLINT

  constexpr double scalar() const { return w; }
  constexpr PureQuat vec() const { return {x, y, z}; }

  constexpr Quat& operator+=(const Quat& o) {
    w += o.w;
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Quat& operator-=(const Quat& o) {
    w -= o.w;
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Quat& operator*=(double s) {
    w *= s;
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
};

constexpr Quat operator+(Quat a, const Quat& b) { return a += b; }
constexpr Quat operator-(Quat a, const Quat& b) { return a -= b; }
constexpr Quat operator-(const Quat& a) { return {-a.w, -a.x, -a.y, -a.z}; }
constexpr Quat operator*(double s, Quat a) { return a *= s; }
constexpr Quat operator*(Quat a, double s) { return a *= s; }
constexpr bool operator==(const Quat& a, const Quat& b) {
  return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Geometric (Hamilton) product.
constexpr Quat operator*(const Quat& p, const Quat& q) {
  return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
          p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
          p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
          p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

constexpr Quat qmul(const Quat& p, const Quat& q) { return p * q; }

constexpr Quat conj(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }
constexpr PureQuat conj(const PureQuat& p) { return -p; }

/// (p conj(q) + q conj(p)) / 2, a real number.
constexpr double dot(const Quat& p, const Quat& q) {
  return p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z;
}

/// (pq - qp) / 2. Only the vector parts contribute.
constexpr Quat wedge(const Quat& p, const Quat& q) { return Quat(wedge(p.vec(), q.vec())); }

constexpr double norm2(const Quat& q) { return dot(q, q); }
inline double norm(const Quat& q) { return std::sqrt(norm2(q)); }

inline bool is_finite(const Quat& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}
inline bool is_finite(const PureQuat& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Quaternion of modulus one. Construction renormalizes.
class UnitQuat {
 public:
  constexpr UnitQuat() : q_(1.0) {}

  /// Normalizes `q`; throws DomainError for a zero or non-finite input.
  explicit UnitQuat(const Quat& q) : q_(q) {
    const double n = norm(q);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw DomainError("UnitQuat: cannot normalize a zero or non-finite quaternion");
    }
    q_ *= 1.0 / n;
  }

  static constexpr UnitQuat identity() { return UnitQuat(); }

  constexpr const Quat& quat() const { return q_; }
  constexpr double scalar() const { return q_.w; }
  constexpr PureQuat vec() const { return q_.vec(); }
  constexpr double w() const { return q_.w; }
  constexpr double x() const { return q_.x; }
  constexpr double y() const { return q_.y; }
  constexpr double z() const { return q_.z; }

  constexpr operator const Quat&() const { return q_; }  // NOLINT

  UnitQuat renormalized() const { return UnitQuat(q_); }

 private:
  struct Trusted {};
  constexpr UnitQuat(const Quat& q, Trusted) : q_(q) {}
  friend constexpr UnitQuat conj(const UnitQuat& u);
  friend UnitQuat operator*(const UnitQuat& a, const UnitQuat& b);
  friend UnitQuat operator-(const UnitQuat& u);
  friend UnitQuat qexp(const PureQuat& p);

  Quat q_;
};

constexpr UnitQuat conj(const UnitQuat& u) { return UnitQuat(conj(u.q_), UnitQuat::Trusted{}); }

/// Product of rotations; renormalized so round-off does not accumulate.
inline UnitQuat operator*(const UnitQuat& a, const UnitQuat& b) {
  Quat p = a.q_ * b.q_;
  const double n2 = norm2(p);
  // One Newton step toward |p| = 1; p is already unit to O(1e-16).
  p *= 1.5 - 0.5 * n2;
  return UnitQuat(p, UnitQuat::Trusted{});
}

inline UnitQuat operator-(const UnitQuat& u) { return UnitQuat(-u.q_, UnitQuat::Trusted{}); }

/// exp(p) = cos|p| + p/|p| sin|p|.
inline UnitQuat qexp(const PureQuat& p) {
  const double a2 = dot(p, p);
  const double a = std::sqrt(a2);
  double c = 0.0;
  double sinc = 0.0;  // sin(a)/a
  if (a < 1e-6) {
    c = 1.0 - 0.5 * a2 + a2 * a2 / 24.0;
    sinc = 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
  } else {
    c = std::cos(a);
    sinc = std::sin(a) / a;
  }
  Quat q(c, sinc * p.x, sinc * p.y, sinc * p.z);
  const double n2 = norm2(q);
  if (n2 != 1.0) q *= 1.0 / std::sqrt(n2);
  return UnitQuat(q, UnitQuat::Trusted{});
}

/// Principal logarithm: returns p with |p| in [0, pi] and qexp(p) == u.
/// Throws AmbiguousAxis for u = -1.
inline PureQuat qlog(const UnitQuat& u) {
  const PureQuat v = u.vec();
  const double s = norm(v);
  if (s == 0.0) {
    if (u.scalar() < 0.0) {
      throw AmbiguousAxis("qlog(-1): rotation angle pi has no defined axis");
    }
    return {};
  }
  const double angle = std::atan2(s, u.scalar());
  return (angle / s) * v;
}

/// u p conj(u). Rotates p by angle 2|qlog u| about the axis of qlog u.
inline PureQuat rotate(const UnitQuat& u, const PureQuat& p) {
  const PureQuat v = u.vec();
  const PureQuat t = 2.0 * wedge(v, p);
  return p + u.scalar() * t + wedge(v, t);
}

/// Unit quaternion for a rotation by |angle_axis| about angle_axis (right-handed).
inline UnitQuat rotation(const PureQuat& angle_axis) { return qexp(0.5 * angle_axis); }

inline std::ostream& operator<<(std::ostream& os, const PureQuat& p) {
  return os << "(" << p.x << ", " << p.y << ", " << p.z << ")";
}
inline std::ostream& operator<<(std::ostream& os, const Quat& q) {
  return os << "(" << q.w << "; " << q.x << ", " << q.y << ", " << q.z << ")";
}
inline std::ostream& operator<<(std::ostream& os, const UnitQuat& u) { return os << u.quat(); }

}  // namespace spinctl
