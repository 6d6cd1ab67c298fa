#pragma once

// Noise action of a triad path, weak-noise and exact fidelity formulas for spin s, and a
// Monte Carlo estimator that works from sampled noise and the time-ordered product.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/evolution.hpp"
#include "spinctl/magnus.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/path.hpp"

namespace spinctl {

class SpinNumber {
 public:
  explicit SpinNumber(int two_s) : two_s_(two_s) {
    if (two_s < 1) throw DomainError("SpinNumber: two_s must be >= 1");
  }
  static SpinNumber half() { return SpinNumber(1); }
  int two_s() const { return two_s_; }
  double s() const { return 0.5 * two_s_; }
  int multiplicity() const { return two_s_ + 1; }
  friend bool operator==(const SpinNumber&, const SpinNumber&) = default;

 private:
  int two_s_;
};

/// Triad as 3x3 matrices whose columns are E_1, E_2, E_3.
inline std::vector<Eigen::Matrix3d> triad_matrices(const TriadPath& E) {
  std::vector<Eigen::Matrix3d> L(E.nodes());
  for (int k = 0; k < E.nodes(); ++k) {
    for (int i = 0; i < 3; ++i) {
      const PureQuat e = E.E(i, k);
      L[k].col(i) << e.x, e.y, e.z;
    }
  }
  return L;
}

/// Columns of D[a] are D_i(t_a) = sum_b w_b N_ij(|t_a - t_b|) E_j(t_b).
inline std::vector<Eigen::Matrix3d> dual_matrices(const std::vector<Eigen::Matrix3d>& L,
                                                  const KernelTable& table, const TimeGrid& grid) {
  const int n = grid.nodes();
  std::vector<Eigen::Matrix3d> D(n, Eigen::Matrix3d::Zero());
  if (table.scalar) {
    // N = f a a^T: D[a] = (sum_b w_b f_ab L_b a) a^T
    const auto& f = *table.scalar;
    std::vector<Eigen::Vector3d> l(n);
    for (int b = 0; b < n; ++b) l[b] = grid.weight(b) * (L[b] * table.axis);
    for (int a = 0; a < n; ++a) {
      Eigen::Vector3d g = Eigen::Vector3d::Zero();
      for (int b = 0; b < n; ++b) g += f[a > b ? a - b : b - a] * l[b];
      D[a] = g * table.axis.transpose();
    }
    return D;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) D[a].noalias() += grid.weight(b) * L[b] * table(a, b);
  }
  return D;
}

/// S = 1/2 sum_a w_a <L_a, D_a> given the dual matrices.
inline double action_from_dual(const std::vector<Eigen::Matrix3d>& L,
                               const std::vector<Eigen::Matrix3d>& D, const TimeGrid& grid) {
  double s = 0.0;
  for (int a = 0; a < grid.nodes(); ++a) s += grid.weight(a) * L[a].cwiseProduct(D[a]).sum();
  return 0.5 * s;
}

/// Dual triad D_i(t) = \int N_ij(|t - t'|) E_j(t') dt' (trapezoid per node).
inline std::array<PurePath, 3> dual_triad(const TriadPath& E, const NoiseKernel& k) {
  const auto D = dual_matrices(triad_matrices(E), KernelTable(k, E.grid()), E.grid());
  std::array<PurePath, 3> out{PurePath(E.grid()), PurePath(E.grid()), PurePath(E.grid())};
  for (int a = 0; a < E.nodes(); ++a) {
    for (int i = 0; i < 3; ++i) out[i][a] = {D[a](0, i), D[a](1, i), D[a](2, i)};
  }
  return out;
}

/// S = 1/2 \int\int N_ij(|t - t'|) E_i(t) . E_j(t') dt dt' (2-D trapezoid).
inline double action_S(const TriadPath& E, const NoiseKernel& k) {
  const auto L = triad_matrices(E);
  return action_from_dual(L, dual_matrices(L, KernelTable(k, E.grid()), E.grid()), E.grid());
}

/// F_s = (2s+1)^-1 sum_{j=-s..s} exp(-(j eps)^2 S).
inline double fidelity_weak(SpinNumber s, EpsilonStrength epsilon, double S) {
  if (!(S >= 0.0)) throw DomainError("fidelity_weak: S must be >= 0");
  const double e2 = epsilon.value() * epsilon.value();
  double sum = 0.0;
  for (int m = 0; m <= s.two_s(); ++m) {
    const double j = -s.s() + m;
    sum += std::exp(-j * j * e2 * S);
  }
  return sum / s.multiplicity();
}

/// A_1/2 = cos(eps m / 2).
inline double amplitude_half(double m_tau, EpsilonStrength epsilon) {
  return std::cos(0.5 * epsilon.value() * m_tau);
}

/// (2s+1)^-1 sum_{j=-s..s} exp(-i j phi) with phi = eps m.
inline std::complex<double> amplitude_from_phase(SpinNumber s, double phi) {
  std::complex<double> sum = 0.0;
  for (int m = 0; m <= s.two_s(); ++m) {
    const double j = -s.s() + m;
    sum += std::polar(1.0, -j * phi);
  }
  return sum / static_cast<double>(s.multiplicity());
}

inline std::complex<double> amplitude_s(SpinNumber s, double m_tau, EpsilonStrength epsilon) {
  return amplitude_from_phase(s, epsilon.value() * m_tau);
}

/// Chebyshev polynomial of the second kind by the three-term recurrence.
inline double chebyshev_U(int j, double x) {
  if (j < 0) throw DomainError("chebyshev_U: order must be >= 0");
  if (std::abs(x) > 1.0 + 1e-12) throw DomainError("chebyshev_U: |x| must be <= 1");
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * x;
  for (int k = 1; k < j; ++k) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// A_s from A_1/2 through the phase eps m = 2 acos(A_1/2).
inline std::complex<double> lift_amplitude(SpinNumber s, double a_half) {
  if (std::abs(a_half) > 1.0 + 1e-12) throw DomainError("lift_amplitude: |A_1/2| exceeds 1");
  const double a = std::clamp(a_half, -1.0, 1.0);
  if (s.two_s() == 1) return a;
  return amplitude_from_phase(s, 2.0 * std::acos(a));
}

struct FidelityEstimate {
  SpinNumber spin = SpinNumber::half();
  std::complex<double> mean;
  double std_error = 0.0;  // of the real part
  std::int64_t samples = 0;
  double analytic_prediction = 0.0;
  double S = 0.0;
};

namespace detail {

struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

/// Monte Carlo fidelity for each spin in `spins`: lab noise n^i(t) is drawn with kernel k,
/// rotated into n(t) = n^i E_i(t), and A_1/2 is the scalar part of the time-ordered product.
/// All spins share the same noise paths.
inline std::vector<FidelityEstimate> mc_fidelity(const TriadPath& E, const NoiseKernel& k,
                                                 EpsilonStrength epsilon,
                                                 std::span<const SpinNumber> spins,
                                                 std::int64_t count, std::uint64_t seed) {
  if (count < 2) throw DegenerateSample("mc_fidelity: need at least two samples");
  const auto& grid = E.grid();
  const double S = action_S(E, k);
  const int nodes = grid.nodes();
  const int ns = static_cast<int>(spins.size());

  std::vector<detail::KahanSum> re(ns), im(ns), re2(ns);
  auto accumulate = [&](double a_half) {
    for (int i = 0; i < ns; ++i) {
      const std::complex<double> a = lift_amplitude(spins[i], a_half);
      re[i].add(a.real());
      im[i].add(a.imag());
      re2[i].add(a.real() * a.real());
    }
  };

  if (epsilon.value() == 0.0) {
    for (std::int64_t p = 0; p < count; ++p) accumulate(1.0);
  } else {
    const CovarianceFactor factor = assemble_covariance(k, grid);
    const PathSampler sampler(factor, seed);
    std::vector<std::array<PureQuat, 3>> triad(nodes);
    for (int t = 0; t < nodes; ++t) triad[t] = E.at(t);
    PurePath n(grid);
    constexpr int kBatch = 256;
    for (std::int64_t first = 0; first < count; first += kBatch) {
      const int c = static_cast<int>(std::min<std::int64_t>(kBatch, count - first));
      const Eigen::MatrixXd batch = sampler.batch(first, c);
      for (int j = 0; j < c; ++j) {
        for (int t = 0; t < nodes; ++t) {
          n[t] = batch(3 * t, j) * triad[t][0] + batch(3 * t + 1, j) * triad[t][1] +
                 batch(3 * t + 2, j) * triad[t][2];
        }
        accumulate(time_ordered_exp(n, epsilon).scalar());
      }
    }
  }

  std::vector<FidelityEstimate> out;
  out.reserve(ns);
  const double cnt = static_cast<double>(count);
  for (int i = 0; i < ns; ++i) {
    const double mean = re[i].sum / cnt;
    const double var = std::max(0.0, (re2[i].sum - cnt * mean * mean) / (cnt - 1.0));
    out.push_back({spins[i], {mean, im[i].sum / cnt}, std::sqrt(var / cnt), count,
                   fidelity_weak(spins[i], epsilon, S), S});
  }
  return out;
}

inline FidelityEstimate mc_fidelity(const TriadPath& E, const NoiseKernel& k, EpsilonStrength epsilon,
                                    SpinNumber s, std::int64_t count, std::uint64_t seed) {
  const SpinNumber spins[] = {s};
  return mc_fidelity(E, k, epsilon, spins, count, seed).front();
}

}  // namespace spinctl
