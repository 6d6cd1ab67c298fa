#pragma once

// Control kinematics. The control evolution u_c(t) defines the rotating triad
// E_i(t) = conj(u_c) e_i u_c, which obeys dE_i/dt = E_i ^ Omega(t). Omega is the control
// in the rotating frame; omega = u_c Omega conj(u_c) is the same field in the lab frame.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/path.hpp"
#include "spinctl/quat.hpp"

namespace spinctl {

namespace detail {

/// Unit quaternion q with rotate(q, e_i) = c_i, for an orthonormal right-handed set c.
inline UnitQuat quat_from_columns(const std::array<PureQuat, 3>& c) {
  const double m00 = c[0].x, m10 = c[0].y, m20 = c[0].z;
  const double m01 = c[1].x, m11 = c[1].y, m21 = c[1].z;
  const double m02 = c[2].x, m12 = c[2].y, m22 = c[2].z;
  const double tr = m00 + m11 + m22;
  Quat q;
  if (tr > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m00 - m11 - m22);
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m11 - m00 - m22);
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m22 - m00 - m11);
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return UnitQuat(q);
}

}  // namespace detail

/// Rotating triad sampled on a grid. Stored as the control quaternion u_c(t_k); the three
/// vectors are derived from it, so rigidity holds by construction.
class TriadPath {
 public:
  TriadPath(TimeGrid grid, std::vector<UnitQuat> u) : grid_(grid), u_(std::move(u)) {
    if (static_cast<int>(u_.size()) != grid_.nodes()) {
      throw DomainError("TriadPath: quaternion count does not match grid nodes");
    }
  }

  /// From explicit vectors; they must be orthonormal and right-handed to 1e-9.
  static TriadPath from_vectors(TimeGrid grid, const std::vector<std::array<PureQuat, 3>>& e) {
    if (static_cast<int>(e.size()) != grid.nodes()) {
      throw DomainError("TriadPath: vector count does not match grid nodes");
    }
    std::vector<UnitQuat> u;
    u.reserve(e.size());
    for (const auto& c : e) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (std::abs(dot(c[i], c[j]) - (i == j ? 1.0 : 0.0)) > 1e-9) {
            throw DomainError("TriadPath: vectors are not orthonormal");
          }
        }
      }
      if (norm(wedge(c[0], c[1]) - c[2]) > 1e-9) throw DomainError("TriadPath: triad is left-handed");
      // E_i = rotate(conj(u), e_i)
      UnitQuat q = conj(detail::quat_from_columns(c));
      if (!u.empty() && dot(q.quat(), u.back().quat()) < 0.0) q = -q;
      u.push_back(q);
    }
    return TriadPath(grid, std::move(u));
  }

  const TimeGrid& grid() const { return grid_; }
  int nodes() const { return grid_.nodes(); }
  const UnitQuat& u(int k) const { return u_[k]; }
  const std::vector<UnitQuat>& quats() const { return u_; }

  /// E_i(t_k), i in {0, 1, 2}.
  PureQuat E(int i, int k) const { return rotate(conj(u_[k]), PureQuat::basis(i)); }
  std::array<PureQuat, 3> at(int k) const { return {E(0, k), E(1, k), E(2, k)}; }
  PurePath E(int i) const {
    PurePath p(grid_);
    for (int k = 0; k < nodes(); ++k) p[k] = E(i, k);
    return p;
  }

 private:
  TimeGrid grid_;
  std::vector<UnitQuat> u_;
};

/// Control field in both frames.
struct ControlPath {
  PurePath omega_rot;  // Omega(t)
  PurePath omega_lab;  // omega(t)
  const TimeGrid& grid() const { return omega_rot.grid(); }
};

/// Integrates dE_i/dt = E_i ^ Omega from E_i(0) = e_i: u_{k+1} = u_k exp((dt/2) Omega(t_k*)).
inline TriadPath propagate_triad(const PurePath& omega_rot, Midpoint rule = Midpoint::cubic) {
  const auto& grid = omega_rot.grid();
  const double half = 0.5 * grid.dt();
  std::vector<UnitQuat> u(grid.nodes());
  for (int k = 0; k < grid.n_steps(); ++k) {
    u[k + 1] = u[k] * qexp(half * midpoint_value(omega_rot, k, rule));
  }
  return TriadPath(grid, std::move(u));
}

inline PurePath constant_path(const TimeGrid& grid, const PureQuat& v) {
  return PurePath(grid, std::vector<PureQuat>(grid.nodes(), v));
}

/// Lab-frame field omega = u_c Omega conj(u_c).
inline PurePath to_lab(const TriadPath& E, const PurePath& omega_rot) {
  PurePath out(E.grid());
  for (int k = 0; k < E.nodes(); ++k) out[k] = rotate(E.u(k), omega_rot[k]);
  return out;
}

inline ControlPath make_control(const TriadPath& E, PurePath omega_rot) {
  PurePath lab = to_lab(E, omega_rot);
  return {std::move(omega_rot), std::move(lab)};
}

/// Recovers the control from the triad. Each step's rotation conj(u_k) u_{k+1} is the
/// exponential of (dt/2) Omega at the step midpoint, so its logarithm gives Omega there
/// exactly; nodal values average neighbouring midpoints (second order, exact for
/// constant fields). Lab components follow from omega^i = Omega . E_i.
inline ControlPath omega_from_triad(const TriadPath& E) {
  const auto& grid = E.grid();
  const int n = grid.n_steps();
  std::vector<PureQuat> mid(n);
  for (int k = 0; k < n; ++k) {
    UnitQuat step = conj(E.u(k)) * E.u(k + 1);
    if (step.scalar() < 0.0) step = -step;
    mid[k] = (2.0 / grid.dt()) * qlog(step);
  }
  PurePath omega(grid);
  omega[0] = 1.5 * mid[0] - 0.5 * mid[1];
  omega[n] = 1.5 * mid[n - 1] - 0.5 * mid[n - 2];
  for (int k = 1; k < n; ++k) omega[k] = 0.5 * (mid[k - 1] + mid[k]);
  return make_control(E, std::move(omega));
}

/// Lab components omega^i(t_k) = Omega(t_k) . E_i(t_k).
inline std::array<double, 3> lab_components(const TriadPath& E, const PurePath& omega_rot, int k) {
  return {dot(omega_rot[k], E.E(0, k)), dot(omega_rot[k], E.E(1, k)), dot(omega_rot[k], E.E(2, k))};
}

/// |Omega|^2 = 1/2 sum_i |dE_i/dt|^2.
inline std::vector<double> power_first_line(const TriadPath& E, const PurePath& omega_rot) {
  std::vector<double> p(E.nodes());
  for (int k = 0; k < E.nodes(); ++k) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const PureQuat d = wedge(E.E(i, k), omega_rot[k]);
      s += dot(d, d);
    }
    p[k] = 0.5 * s;
  }
  return p;
}

/// |Omega|^2 = 1/2 eps^{ijk} E_i . (dE_j/dt ^ dE_k/dt).
inline std::vector<double> power_second_line(const TriadPath& E, const PurePath& omega_rot) {
  std::vector<double> p(E.nodes());
  for (int k = 0; k < E.nodes(); ++k) {
    const auto e = E.at(k);
    const std::array<PureQuat, 3> d{wedge(e[0], omega_rot[k]), wedge(e[1], omega_rot[k]),
                                    wedge(e[2], omega_rot[k])};
    // eps^{ijk} sums to twice the cyclic terms
    p[k] = dot(e[0], wedge(d[1], d[2])) + dot(e[1], wedge(d[2], d[0])) + dot(e[2], wedge(d[0], d[1]));
  }
  return p;
}

inline std::vector<double> power(const TriadPath& E) {
  return power_second_line(E, omega_from_triad(E).omega_rot);
}

inline std::vector<double> power(const ControlPath& c) {
  std::vector<double> p(c.omega_rot.nodes());
  for (int k = 0; k < c.omega_rot.nodes(); ++k) p[k] = dot(c.omega_rot[k], c.omega_rot[k]);
  return p;
}

/// E_out = \int |Omega|^2 / 2 dt (trapezoid).
inline double energy_output(const std::vector<double>& power, const TimeGrid& grid) {
  double s = 0.0;
  for (int k = 0; k < grid.nodes(); ++k) s += grid.weight(k) * power[k];
  return 0.5 * s;
}

/// Target rotation u_T = exp(q_T / 2) with q_T = theta * axis, theta the principal angle
/// in [0, 2 pi), and a winding number selecting the topological sector.
class TargetRotation {
 public:
  /// `angle` may be any real; whole turns are moved into the winding number.
  /// `axis` may be omitted only for the identity target with winding 0.
  TargetRotation(std::optional<PureQuat> axis, double angle, int winding) {
    if (!std::isfinite(angle)) throw DomainError("TargetRotation: angle must be finite");
    const double turn = 2.0 * std::numbers::pi;
    const double whole = std::floor(angle / turn);
    theta_ = angle - whole * turn;
    if (theta_ >= turn) theta_ = 0.0;  // round-off at the top of the range
    winding_ = winding + static_cast<int>(whole);
    if (axis) {
      const double a = norm(*axis);
      if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("TargetRotation: axis must be non-zero");
      axis_ = *axis / a;
    } else if (theta_ != 0.0 || winding_ != 0) {
      throw AxisRequired("TargetRotation: a rotation axis is required for a non-trivial target");
    }
  }

  /// Target reached by the constant drift `drift` over [0, tau].
  static TargetRotation from_drift(const PureQuat& drift, double tau) {
    const double total = norm(drift) * tau;
    if (total == 0.0) return TargetRotation(std::nullopt, 0.0, 0);
    return TargetRotation(drift / norm(drift), total, 0);
  }

  double angle() const { return theta_; }
  int winding() const { return winding_; }
  const std::optional<PureQuat>& axis() const { return axis_; }
  PureQuat q() const { return axis_ ? theta_ * *axis_ : PureQuat{}; }
  UnitQuat u() const { return qexp(0.5 * q()); }

 private:
  std::optional<PureQuat> axis_;
  double theta_ = 0.0;
  int winding_ = 0;
};

struct BoundaryTriads {
  std::array<PureQuat, 3> initial;
  std::array<PureQuat, 3> final;
};

/// E_i(0) = e_i and E_i(tau) = conj(u_T) e_i u_T.
inline BoundaryTriads boundary_triad(const TargetRotation& target) {
  const UnitQuat u = target.u();
  BoundaryTriads b;
  for (int i = 0; i < 3; ++i) {
    b.initial[i] = PureQuat::basis(i);
    b.final[i] = rotate(conj(u), PureQuat::basis(i));
  }
  return b;
}

/// Constant control ((theta + 2 pi n) / tau) r whose geodesic meets the target.
inline PureQuat drift_for_target(const TargetRotation& target, double tau) {
  if (!(tau > 0.0)) throw DomainError("drift_for_target: tau must be > 0");
  if (!target.axis()) {
    if (target.winding() != 0) throw AxisRequired("drift_for_target: winding needs an axis");
    return {};
  }
  const double total = target.angle() + 2.0 * std::numbers::pi * target.winding();
  return (total / tau) * *target.axis();
}

/// Largest |E_i(tau) - E_i^target| over i.
inline double terminal_mismatch(const TriadPath& E, const TargetRotation& target) {
  const auto b = boundary_triad(target);
  double m = 0.0;
  for (int i = 0; i < 3; ++i) m = std::max(m, norm(E.E(i, E.nodes() - 1) - b.final[i]));
  return m;
}

/// Largest deviation of E_i . E_j from delta_ij and of E_1 ^ E_2 from E_3.
inline double orthonormality_error(const TriadPath& E) {
  double m = 0.0;
  for (int k = 0; k < E.nodes(); ++k) {
    const auto e = E.at(k);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(dot(e[i], e[j]) - (i == j ? 1.0 : 0.0)));
    }
    m = std::max(m, norm(wedge(e[0], e[1]) - e[2]));
  }
  return m;
}

}  // namespace spinctl
