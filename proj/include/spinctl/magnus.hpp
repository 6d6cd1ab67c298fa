#pragma once

// Relation between a noise history n(t) and the effective rotation vector m_eps(t) defined by
//
//     T exp( (eps/2) \int_0^t n ) = exp( (eps/2) m_eps(t) ).
//
// time_ordered_exp is the brute-force oracle (ordered product of short exponentials);
// solve_m_ode integrates the exact first-order equation for m_eps; magnus_term and
// magnus_iterate give the perturbative and iterative approximations of the same object.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/path.hpp"
#include "spinctl/quat.hpp"

namespace spinctl {

/// Ordered product over steps [k_begin, k_end) of exp((eps/2) n(t_k*) dt), later steps on
/// the left. The midpoint field comes from the stencil rule `rule`.
inline UnitQuat time_ordered_exp(const PurePath& n, EpsilonStrength epsilon, int k_begin,
                                 int k_end, Midpoint rule = Midpoint::cubic) {
  const double half = 0.5 * epsilon.value() * n.grid().dt();
  UnitQuat u;
  for (int k = k_begin; k < k_end; ++k) u = qexp(half * midpoint_value(n, k, rule)) * u;
  return u;
}

inline UnitQuat time_ordered_exp(const PurePath& n, EpsilonStrength epsilon,
                                 Midpoint rule = Midpoint::cubic) {
  return time_ordered_exp(n, epsilon, 0, n.grid().n_steps(), rule);
}

namespace detail {

/// (1 - (x/2) cot(x/2)) / x^2 for x = eps*m, multiplied by eps^2. Finite at m = 0.
inline double cot_coefficient(double epsilon, double m) {
  const double x = epsilon * m;
  if (x < 1e-4) {
    const double x2 = x * x;
    return epsilon * epsilon * (1.0 / 12.0 + x2 / 720.0 + x2 * x2 / 30240.0);
  }
  const double g = 1.0 - 0.5 * x / std::tan(0.5 * x);
  return g / (m * m);
}

/// Distance from the cot pole allowed before integration is refused.
inline constexpr double kCotGuard = 0.05;

/// dm/dt = n - (eps/2) m^n + (1 - (eps m/2) cot(eps m/2)) mhat^(mhat^n).
inline PureQuat m_rhs(const PureQuat& m, const PureQuat& n, double epsilon, double t) {
  const double mag = norm(m);
  if (epsilon * mag > 2.0 * std::numbers::pi - kCotGuard) {
    throw SingularCot("solve_m_ode: eps*|m| reached the cot(eps m/2) pole at 2*pi", t);
  }
  const PureQuat mn = wedge(m, n);
  return n - (0.5 * epsilon) * mn + detail::cot_coefficient(epsilon, mag) * wedge(m, mn);
}

}  // namespace detail

/// Integrates the exact m-equation from m(0) = 0 with classical RK4. The field at
/// half steps is interpolated with the cubic midpoint stencil.
inline PurePath solve_m_ode(const PurePath& n, EpsilonStrength epsilon) {
  const auto& grid = n.grid();
  const double h = grid.dt();
  const double eps = epsilon.value();
  PurePath m(grid);
  for (int k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.t(k);
    const PureQuat n0 = n[k];
    const PureQuat nh = midpoint_value(n, k, Midpoint::cubic);
    const PureQuat n1 = n[k + 1];
    const PureQuat& y = m[k];
    const PureQuat k1 = detail::m_rhs(y, n0, eps, t);
    const PureQuat k2 = detail::m_rhs(y + (0.5 * h) * k1, nh, eps, t + 0.5 * h);
    const PureQuat k3 = detail::m_rhs(y + (0.5 * h) * k2, nh, eps, t + 0.5 * h);
    const PureQuat k4 = detail::m_rhs(y + h * k3, n1, eps, t + h);
    m[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (eps * norm(m[k + 1]) > 2.0 * std::numbers::pi - detail::kCotGuard) {
      throw SingularCot("solve_m_ode: eps*|m| reached the cot(eps m/2) pole at 2*pi", t + h);
    }
  }
  return m;
}

/// Inverse map: n = mdot + a(m) m^mdot + b(m) m^(m^mdot), with
/// a = (1 - cos eps m)/(eps m^2) and b = (1 - sin(eps m)/(eps m))/m^2.
/// Equivalent to n = mdot_par + (sin eps m/eps) d(mhat)/dt + ((1 - cos eps m)/eps) mhat^d(mhat)/dt.
inline PurePath n_of_m(const PurePath& m, EpsilonStrength epsilon) {
  const double eps = epsilon.value();
  const PurePath mdot = derivative4(m);
  PurePath n(m.grid());
  for (int k = 0; k < m.nodes(); ++k) {
    const double mag = norm(m[k]);
    const double x = eps * mag;
    double a = 0.0;
    double b = 0.0;
    if (x < 1e-3) {
      const double x2 = x * x;
      a = eps * (0.5 - x2 / 24.0 + x2 * x2 / 720.0);
      b = eps * eps * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0);
    } else {
      a = (1.0 - std::cos(x)) / (eps * mag * mag);
      b = (1.0 - std::sin(x) / x) / (mag * mag);
    }
    const PureQuat mm = wedge(m[k], mdot[k]);
    n[k] = mdot[k] + a * mm + b * wedge(m[k], mm);
  }
  return n;
}

/// Magnus term m^(j)(t), j in {0, 1, 2}, by iterated trapezoid quadrature:
///   m^(0) = \int n
///   m^(1) = 1/2 \int_0^t dt1 \int_0^t1 dt2 n1 ^ n2
///   m^(2) = 1/6 \int\int\int_{t3<t2<t1} { n1^(n2^n3) + n3^(n2^n1) }
inline PurePath magnus_term(const PurePath& n, int order) {
  if (order < 0 || order > 2) {
    throw UnsupportedOrder("magnus_term: only orders 0, 1, 2 are implemented");
  }
  const auto& grid = n.grid();
  const PurePath m0 = cumulative_integral(n);
  if (order == 0) return m0;

  PurePath inner1(grid);  // n(t) ^ m0(t)
  for (int k = 0; k < n.nodes(); ++k) inner1[k] = wedge(n[k], m0[k]);
  PurePath m1 = cumulative_integral(inner1);
  for (int k = 0; k < n.nodes(); ++k) m1[k] *= 0.5;
  if (order == 1) return m1;

  // Second family: \int_0^t1 m0(t2)^(n2^n1) dt2 = P(t1) n1 - n1 q(t1), where
  // P(t1) = \int_0^t1 n(t2) m0(t2)^T dt2 and q(t1) = \int_0^t1 m0.n dt2 = |m0(t1)|^2 / 2.
  const double h = grid.dt();
  std::array<double, 9> P{};
  std::array<double, 9> prev{};
  auto outer = [](const PureQuat& a, const PureQuat& b) {
    return std::array<double, 9>{a.x * b.x, a.x * b.y, a.x * b.z, a.y * b.x, a.y * b.y,
                                 a.y * b.z, a.z * b.x, a.z * b.y, a.z * b.z};
  };
  PurePath integrand(grid);
  prev = outer(n[0], m0[0]);
  for (int k = 0; k < n.nodes(); ++k) {
    if (k > 0) {
      const auto cur = outer(n[k], m0[k]);
      for (int i = 0; i < 9; ++i) P[i] += 0.5 * h * (prev[i] + cur[i]);
      prev = cur;
    }
    const PureQuat& v = n[k];
    const PureQuat Pv{P[0] * v.x + P[1] * v.y + P[2] * v.z, P[3] * v.x + P[4] * v.y + P[5] * v.z,
                      P[6] * v.x + P[7] * v.y + P[8] * v.z};
    const double q = 0.5 * dot(m0[k], m0[k]);
    integrand[k] = wedge(n[k], 2.0 * m1[k]) + Pv - q * v;
  }
  PurePath m2 = cumulative_integral(integrand);
  for (int k = 0; k < n.nodes(); ++k) m2[k] *= 1.0 / 6.0;
  return m2;
}

struct MagnusIterate {
  PurePath m;
  int iterations = 0;
  double last_change = 0.0;  // sup-norm change of the final iteration
};

/// Fixed-point iteration m^[j] = \int rhs(m^[j-1], n), starting from m^[0] = \int n.
/// Throws NonConvergence when the step-to-step change grows three times in a row.
inline MagnusIterate magnus_iterate(const PurePath& n, EpsilonStrength epsilon, int iterations) {
  if (iterations < 0) throw DomainError("magnus_iterate: iteration count must be >= 0");
  const auto& grid = n.grid();
  MagnusIterate out{cumulative_integral(n), 0, 0.0};
  double previous_change = -1.0;
  int growth = 0;
  for (int j = 1; j <= iterations; ++j) {
    PurePath f(grid);
    for (int k = 0; k < n.nodes(); ++k) {
      f[k] = detail::m_rhs(out.m[k], n[k], epsilon.value(), grid.t(k));
    }
    PurePath next = cumulative_integral(f);
    const double change = sup_distance(next, out.m);
    if (previous_change >= 0.0 && change > previous_change) {
      if (++growth >= 3) {
        throw NonConvergence("magnus_iterate: iterates diverge (change grew 3 times in a row)");
      }
    } else {
      growth = 0;
    }
    previous_change = change;
    out.m = std::move(next);
    out.iterations = j;
    out.last_change = change;
  }
  return out;
}

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Bernoulli number B_j (B_1 = -1/2 convention), exact, from the double sum
///   B_j = sum_{k=0}^{j} sum_{l=0}^{k} (-1)^l k! l^j / (l! (k-l)! (k+1)).
inline Rational bernoulli(int j) {
  if (j < 0 || j > 20) throw DomainError("bernoulli: j must be in [0, 20]");
  using i128 = __int128;
  auto gcd = [](i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const i128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  };
  auto ipow = [](i128 base, int e) {
    i128 r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  };
  i128 num = 0;
  i128 den = 1;
  for (int k = 0; k <= j; ++k) {
    i128 inner = 0;
    i128 binom = 1;  // C(k, l)
    for (int l = 0; l <= k; ++l) {
      const i128 term = binom * ipow(l, j);  // 0^0 = 1
      inner += (l % 2 == 0) ? term : -term;
      binom = binom * (k - l) / (l + 1);
    }
    // num/den += inner/(k+1)
    num = num * (k + 1) + inner * den;
    den *= (k + 1);
    const i128 g = gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (num == 0) den = 1;
  return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

}  // namespace spinctl
