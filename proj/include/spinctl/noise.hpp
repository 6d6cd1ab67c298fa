#pragma once

// Stationary Gaussian noise: covariance kernels N_ij(|t - t'|), covariance assembly on a
// grid, and seeded sampling of zero-mean vector noise paths.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/path.hpp"
#include "spinctl/quat.hpp"

namespace spinctl {

/// Exponential integral E1(x) = \int_x^inf e^{-t}/t dt for x > 0.
/// Power series for x <= 1, continued fraction (modified Lentz) above.
inline double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw DomainError("exp_integral_e1: x must be > 0");
  if (x > 740.0) return 0.0;  // e^{-x} underflows
  constexpr double euler_gamma = 0.57721566490153286061;
  constexpr double eps = 1e-16;
  if (x <= 1.0) {
    double sum = 0.0;
    double term = 1.0;  // (-x)^k / k!
    for (int k = 1; k < 100; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < eps * std::abs(sum)) break;
    }
    return -euler_gamma - std::log(x) - sum;
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h * std::exp(-x);
}

/// 1/f noise along a fixed axis: N(s) = xi \int_{gamma_lo}^{gamma_hi} dg/g e^{-g s} a a^T.
struct OneOverF {
  double xi = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  PureQuat axis = PureQuat::e1();
};

/// Time-independent diagonal covariance (fully correlated in time).
struct DiagonalConstant {
  std::array<double, 3> kappa{};
};

/// Arbitrary stationary kernel supplied by the caller. Must be symmetric in (i, j).
struct UserMatrix {
  std::function<Eigen::Matrix3d(double)> fn;
};

class NoiseKernel {
 public:
  using Variant = std::variant<OneOverF, DiagonalConstant, UserMatrix>;

  static NoiseKernel one_over_f(double xi, double gamma_lo, double gamma_hi,
                                PureQuat axis = PureQuat::e1()) {
    if (!(xi > 0.0)) throw DomainError("OneOverF: xi must be > 0");
    if (!(gamma_lo > 0.0)) throw DomainError("OneOverF: gamma_lo must be > 0");
    if (!(gamma_hi > gamma_lo)) throw DomainError("OneOverF: gamma_hi must exceed gamma_lo");
    const double a = norm(axis);
    if (!(a > 0.0)) throw DomainError("OneOverF: axis must be non-zero");
    return NoiseKernel(OneOverF{xi, gamma_lo, gamma_hi, axis / a});
  }

  static NoiseKernel diagonal_constant(std::array<double, 3> kappa) {
    for (double k : kappa) {
      if (!(k >= 0.0)) throw DomainError("DiagonalConstant: kappa must be >= 0");
    }
    return NoiseKernel(DiagonalConstant{kappa});
  }

  static NoiseKernel zero() { return diagonal_constant({0.0, 0.0, 0.0}); }

  static NoiseKernel user(std::function<Eigen::Matrix3d(double)> fn) {
    if (!fn) throw DomainError("UserMatrix: empty callback");
    return NoiseKernel(UserMatrix{std::move(fn)});
  }

  const Variant& variant() const { return v_; }

  /// N(s) for lag s >= 0.
  Eigen::Matrix3d operator()(double s) const;

  /// Scalar profile f(s) and axis a when N(s) = f(s) a a^T.
  std::optional<std::pair<std::function<double(double)>, PureQuat>> rank_one() const {
    if (const auto* k = std::get_if<OneOverF>(&v_)) {
      const OneOverF p = *k;
      return std::make_pair(std::function<double(double)>([p](double s) { return profile(p, s); }),
                            p.axis);
    }
    return std::nullopt;
  }

  /// xi [E1(gamma_lo s) - E1(gamma_hi s)], and xi ln(gamma_hi/gamma_lo) at s = 0.
  static double profile(const OneOverF& p, double s) {
    if (s == 0.0) return p.xi * std::log(p.gamma_hi / p.gamma_lo);
    return p.xi * (exp_integral_e1(p.gamma_lo * s) - exp_integral_e1(p.gamma_hi * s));
  }

 private:
  explicit NoiseKernel(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline Eigen::Matrix3d NoiseKernel::operator()(double s) const {
  if (!(s >= 0.0)) throw DomainError("kernel_eval: lag must be >= 0");
  return std::visit(
      [s](const auto& k) -> Eigen::Matrix3d {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, OneOverF>) {
          const Eigen::Vector3d a(k.axis.x, k.axis.y, k.axis.z);
          return profile(k, s) * a * a.transpose();
        } else if constexpr (std::is_same_v<T, DiagonalConstant>) {
          return Eigen::Vector3d(k.kappa[0], k.kappa[1], k.kappa[2]).asDiagonal();
        } else {
          return k.fn(s);
        }
      },
      v_);
}

inline Eigen::Matrix3d kernel_eval(const NoiseKernel& k, double s) { return k(s); }

/// N evaluated at every lag j*dt of a grid (the kernel is stationary, so this is all the
/// grid ever needs).
struct KernelTable {
  std::vector<Eigen::Matrix3d> lag;
  // Set when N(s) = f(s) a a^T; lets quadratures use one multiply per node pair.
  std::optional<std::vector<double>> scalar;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();

  KernelTable(const NoiseKernel& k, const TimeGrid& grid) : lag(grid.nodes()) {
    for (int j = 0; j < grid.nodes(); ++j) lag[j] = k(grid.t(j));
    if (auto r1 = k.rank_one()) {
      std::vector<double> f(grid.nodes());
      for (int j = 0; j < grid.nodes(); ++j) f[j] = r1->first(grid.t(j));
      scalar = std::move(f);
      axis = Eigen::Vector3d(r1->second.x, r1->second.y, r1->second.z);
    }
  }
  const Eigen::Matrix3d& operator()(int a, int b) const { return lag[a > b ? a - b : b - a]; }
};

/// Covariance of the stacked path vector [n(t_0); n(t_1); ...] (index 3*node + component)
/// and its lower Cholesky factor.
struct CovarianceFactor {
  TimeGrid grid;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // diagonal shift that was needed for the factorization

  int dimension() const { return static_cast<int>(covariance.rows()); }
};

/// Assembles the block covariance and factors it, escalating a diagonal jitter from
/// 1e-12 to 1e-8 of the largest diagonal entry. Throws NotPSD when all attempts fail.
inline CovarianceFactor assemble_covariance(const NoiseKernel& k, const TimeGrid& grid) {
  const int nodes = grid.nodes();
  const int dim = 3 * nodes;
  const KernelTable table(k, grid);
  CovarianceFactor out{grid, Eigen::MatrixXd(dim, dim), Eigen::MatrixXd::Zero(dim, dim), 0.0};
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) out.covariance.block<3, 3>(3 * a, 3 * b) = table(a, b);
  }
  const double max_diag = out.covariance.diagonal().maxCoeff();
  if (max_diag == 0.0) {
    if (out.covariance.cwiseAbs().maxCoeff() != 0.0) {
      throw NotPSD("assemble_covariance: zero diagonal with non-zero off-diagonal entries",
                   -out.covariance.cwiseAbs().maxCoeff());
    }
    return out;
  }
  for (double rel : {1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    const double jitter = rel * max_diag;
    Eigen::MatrixXd shifted = out.covariance;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      out.lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.covariance, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  throw NotPSD("assemble_covariance: covariance is not positive semidefinite (min eigenvalue " +
                   std::to_string(min_eig) + ")",
               min_eig);
}

namespace detail {

inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Draws zero-mean Gaussian paths with a factored covariance. Path i depends only on
/// (seed, i), so batches can be generated in any order or in parallel.
class PathSampler {
 public:
  PathSampler(const CovarianceFactor& factor, std::uint64_t seed) : factor_(&factor), seed_(seed) {}

  /// Columns are paths first .. first+count-1 in the stacked 3*node layout.
  Eigen::MatrixXd batch(std::int64_t first, int count) const {
    const int dim = factor_->dimension();
    Eigen::MatrixXd z(dim, count);
    for (int c = 0; c < count; ++c) {
      auto rng = detail::path_stream(seed_, static_cast<std::uint64_t>(first + c));
      std::normal_distribution<double> normal;
      for (int i = 0; i < dim; ++i) z(i, c) = normal(rng);
    }
    return factor_->lower.triangularView<Eigen::Lower>() * z;
  }

  const CovarianceFactor& factor() const { return *factor_; }
  std::uint64_t seed() const { return seed_; }

 private:
  const CovarianceFactor* factor_;
  std::uint64_t seed_;
};

/// count x 3 x nodes block of noise samples.
struct NoiseSampleSet {
  TimeGrid grid;
  int count = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // index (path * 3 + component) * nodes + node

  double operator()(int path, int component, int node) const {
    return values[(static_cast<std::size_t>(path) * 3 + component) * grid.nodes() + node];
  }
  PurePath path(int p) const {
    PurePath out(grid);
    for (int k = 0; k < grid.nodes(); ++k) out[k] = {(*this)(p, 0, k), (*this)(p, 1, k), (*this)(p, 2, k)};
    return out;
  }
};

inline NoiseSampleSet sample_paths(const CovarianceFactor& factor, int count, std::uint64_t seed) {
  if (count < 0) throw DomainError("sample_paths: count must be >= 0");
  const int nodes = factor.grid.nodes();
  NoiseSampleSet set{factor.grid, count, seed, std::vector<double>(static_cast<std::size_t>(count) * 3 * nodes)};
  const PathSampler sampler(factor, seed);
  constexpr int kBatch = 256;
  for (int first = 0; first < count; first += kBatch) {
    const int c = std::min(kBatch, count - first);
    const Eigen::MatrixXd b = sampler.batch(first, c);
    for (int j = 0; j < c; ++j) {
      for (int k = 0; k < nodes; ++k) {
        for (int comp = 0; comp < 3; ++comp) {
          set.values[(static_cast<std::size_t>(first + j) * 3 + comp) * nodes + k] = b(3 * k + comp, j);
        }
      }
    }
  }
  return set;
}

inline NoiseSampleSet sample_paths(const NoiseKernel& k, const TimeGrid& grid, int count,
                                   std::uint64_t seed) {
  return sample_paths(assemble_covariance(k, grid), count, seed);
}

}  // namespace spinctl
