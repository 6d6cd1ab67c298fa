#pragma once

// Uniform time grids on [0, tau] and pure-quaternion trajectories sampled on them.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/quat.hpp"

namespace spinctl {

class TimeGrid {
 public:
  TimeGrid(double tau, int n_steps) : tau_(tau), n_steps_(n_steps) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("TimeGrid: tau must be > 0");
    if (n_steps < 2) throw DomainError("TimeGrid: n_steps must be >= 2");
  }

  double tau() const { return tau_; }
  int n_steps() const { return n_steps_; }
  int nodes() const { return n_steps_ + 1; }
  double dt() const { return tau_ / n_steps_; }
  double t(int k) const { return tau_ * static_cast<double>(k) / n_steps_; }

  /// Trapezoid weight of node k.
  double weight(int k) const { return (k == 0 || k == n_steps_) ? 0.5 * dt() : dt(); }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.tau_ == b.tau_ && a.n_steps_ == b.n_steps_;
  }

 private:
  double tau_;
  int n_steps_;
};

/// Dimensionless noise strength, finite and non-negative.
class EpsilonStrength {
 public:
  explicit EpsilonStrength(double epsilon) : value_(epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw DomainError("EpsilonStrength: epsilon must be finite and >= 0");
    }
  }
  double value() const { return value_; }
  operator double() const { return value_; }  // NOLINT

 private:
  double value_;
};

/// A pure-quaternion field sampled at every node of a grid.
class PurePath {
 public:
  explicit PurePath(TimeGrid grid) : grid_(grid), values_(grid.nodes()) {}

  PurePath(TimeGrid grid, std::vector<PureQuat> values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.nodes()) {
      throw DomainError("PurePath: value count does not match grid nodes");
    }
    for (const auto& v : values_) {
      if (!is_finite(v)) throw DomainError("PurePath: non-finite value");
    }
  }

  template <class F>
  static PurePath sample(TimeGrid grid, F&& f) {
    std::vector<PureQuat> v(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) v[k] = f(grid.t(k));
    return PurePath(grid, std::move(v));
  }

  const TimeGrid& grid() const { return grid_; }
  int nodes() const { return grid_.nodes(); }
  const PureQuat& operator[](int k) const { return values_[k]; }
  PureQuat& operator[](int k) { return values_[k]; }
  const std::vector<PureQuat>& values() const { return values_; }
  const PureQuat& back() const { return values_.back(); }

  /// Same samples reflected in time: result(t) = this(tau - t).
  PurePath reversed() const {
    return PurePath(grid_, std::vector<PureQuat>(values_.rbegin(), values_.rend()));
  }

 private:
  TimeGrid grid_;
  std::vector<PureQuat> values_;
};

/// Interpolation rule for the field at step midpoints.
enum class Midpoint { linear, cubic };

/// Nodal stencil for the midpoint of step k, (t_k + t_{k+1}) / 2.
struct MidpointStencil {
  int first = 0;                   // first node index
  int count = 0;                   // number of nodes used
  std::array<double, 4> weight{};  // weights for nodes first .. first+count-1
};

inline MidpointStencil midpoint_stencil(int k, int n_steps, Midpoint rule) {
  MidpointStencil s;
  if (rule == Midpoint::linear || n_steps < 3) {
    s.first = k;
    s.count = 2;
    s.weight = {0.5, 0.5, 0.0, 0.0};
    return s;
  }
  s.count = 4;
  if (k == 0) {
    s.first = 0;
    s.weight = {5.0 / 16, 15.0 / 16, -5.0 / 16, 1.0 / 16};
  } else if (k == n_steps - 1) {
    s.first = n_steps - 3;
    s.weight = {1.0 / 16, -5.0 / 16, 15.0 / 16, 5.0 / 16};
  } else {
    s.first = k - 1;
    s.weight = {-1.0 / 16, 9.0 / 16, 9.0 / 16, -1.0 / 16};
  }
  return s;
}

inline PureQuat midpoint_value(const PurePath& p, int k, Midpoint rule) {
  const auto s = midpoint_stencil(k, p.grid().n_steps(), rule);
  PureQuat v;
  for (int j = 0; j < s.count; ++j) v += s.weight[j] * p[s.first + j];
  return v;
}

/// Cumulative trapezoid integral, result[0] = 0.
inline PurePath cumulative_integral(const PurePath& f) {
  PurePath out(f.grid());
  const double h = f.grid().dt();
  for (int k = 1; k < f.nodes(); ++k) out[k] = out[k - 1] + (0.5 * h) * (f[k - 1] + f[k]);
  return out;
}

/// Fourth-order finite-difference time derivative (one-sided stencils at the ends).
inline PurePath derivative4(const PurePath& f) {
  const int n = f.nodes();
  const double h = f.grid().dt();
  PurePath d(f.grid());
  if (n < 5) {
    for (int k = 0; k < n; ++k) {
      if (k == 0) {
        d[k] = (f[1] - f[0]) / h;
      } else if (k == n - 1) {
        d[k] = (f[k] - f[k - 1]) / h;
      } else {
        d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
      }
    }
    return d;
  }
  for (int k = 0; k < n; ++k) {
    if (k >= 2 && k <= n - 3) {
      d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
    } else if (k < 2) {
      const int o = k;  // offset of the evaluation point inside nodes 0..4
      static constexpr double w0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
      static constexpr double w1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
      const double* w = o == 0 ? w0 : w1;
      PureQuat s;
      for (int j = 0; j < 5; ++j) s += w[j] * f[j];
      d[k] = s / (12.0 * h);
    } else {
      const int o = n - 1 - k;
      static constexpr double w0[5] = {25.0, -48.0, 36.0, -16.0, 3.0};
      static constexpr double w1[5] = {3.0, 10.0, -18.0, 6.0, -1.0};
      const double* w = o == 0 ? w0 : w1;
      PureQuat s;
      for (int j = 0; j < 5; ++j) s += w[j] * f[n - 1 - j];
      d[k] = s / (12.0 * h);
    }
  }
  return d;
}

/// Second-order central difference with second-order one-sided ends.
inline PureQuat derivative2_at(std::span<const PureQuat> f, int k, double h) {
  const int n = static_cast<int>(f.size());
  if (n < 3) return (f[1] - f[0]) / h;
  if (k == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  if (k == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return (f[k + 1] - f[k - 1]) / (2.0 * h);
}

/// Smooth random field: a constant plus three low Fourier modes per component, normal
/// amplitudes scaled by `amplitude`. Deterministic in (seed, index).
inline PurePath random_smooth_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t index,
                                   double amplitude = 1.0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9a7bu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<std::array<double, 6>, 3> c{};
  std::array<double, 3> mean{};
  for (auto& v : mean) v = amplitude * normal(rng);
  for (auto& comp : c) {
    for (int q = 0; q < 3; ++q) {
      comp[2 * q] = amplitude * normal(rng) / (q + 1);
      comp[2 * q + 1] = phase(rng);
    }
  }
  const double w = 2.0 * std::numbers::pi / grid.tau();
  return PurePath::sample(grid, [&](double t) {
    double v[3] = {mean[0], mean[1], mean[2]};
    for (int i = 0; i < 3; ++i) {
      for (int q = 0; q < 3; ++q) v[i] += c[i][2 * q] * std::cos((q + 1) * w * t + c[i][2 * q + 1]);
    }
    return PureQuat{v[0], v[1], v[2]};
  });
}

inline double sup_distance(const PurePath& a, const PurePath& b) {
  double m = 0.0;
  for (int k = 0; k < a.nodes(); ++k) m = std::max(m, norm(a[k] - b[k]));
  return m;
}

}  // namespace spinctl
