#include <gtest/gtest.h>

#include <complex>

#include "oracles.hpp"

using namespace spinctl;

namespace {

TEST(ExpIntegral, MatchesBoost) {
  for (double lx = -10.0; lx <= std::log10(700.0); lx += 0.05) {
    const double x = std::pow(10.0, lx);
    const double ref = oracle::e1(x);
    EXPECT_NEAR(exp_integral_e1(x), ref, 1e-12 * ref) << x;
  }
  EXPECT_NEAR(exp_integral_e1(1.0), 0.21938393439552027368, 1e-15);
}

TEST(ExpIntegral, Limits) {
  EXPECT_GT(exp_integral_e1(700.0), 0.0);
  EXPECT_GE(exp_integral_e1(800.0), 0.0);
  EXPECT_LT(exp_integral_e1(800.0), 1e-300);
  constexpr double euler_gamma = 0.57721566490153286061;
  for (double x : {1e-3, 1e-5, 1e-7}) {
    EXPECT_LT(std::abs(exp_integral_e1(x) + std::log(x) + euler_gamma), 1.01 * x) << x;
  }
  EXPECT_THROW(exp_integral_e1(0.0), DomainError);
  EXPECT_THROW(exp_integral_e1(-1.0), DomainError);
}

TEST(Kernel, OneOverFAtZeroLag) {
  const auto k = oracle::Scenario::kernel();
  EXPECT_NEAR(kernel_eval(k, 0.0)(0, 0), 8.0 * std::log(200.0), 1e-12);
  EXPECT_NEAR(kernel_eval(k, 0.0)(0, 0), 42.3865389, 1e-7);
  EXPECT_NEAR(oracle::one_over_f_quadrature(8.0, 0.1, 20.0, 0.0), 8.0 * std::log(200.0), 1e-12);
}

TEST(Kernel, OneOverFClosedFormMatchesQuadrature) {
  const auto k = oracle::Scenario::kernel();
  for (int i = 0; i < 50; ++i) {
    const double s = 2.0 * i / 49.0;
    const double ref = oracle::one_over_f_quadrature(8.0, 0.1, 20.0, s);
    EXPECT_NEAR(kernel_eval(k, s)(0, 0), ref, 1e-8 * ref) << s;
  }
  for (double s : {0.0, 0.01, 0.1, 1.0}) {
    const double ref = oracle::one_over_f_quadrature(8.0, 0.1, 20.0, s);
    EXPECT_NEAR(kernel_eval(k, s)(0, 0), ref, 1e-8 * ref) << s;
  }
}

TEST(Kernel, OneOverFShape) {
  const auto k = oracle::Scenario::kernel();
  double prev = kernel_eval(k, 0.0)(0, 0);
  for (int i = 1; i <= 200; ++i) {
    const Eigen::Matrix3d m = kernel_eval(k, 0.05 * i);
    EXPECT_LT(m(0, 0), prev);
    prev = m(0, 0);
    EXPECT_EQ((m - m.transpose()).norm(), 0.0);
    EXPECT_EQ(m(1, 1), 0.0);
    EXPECT_EQ(m(2, 2), 0.0);
  }
  EXPECT_LT(kernel_eval(k, 500.0)(0, 0), 1e-20);
  EXPECT_THROW(kernel_eval(k, -0.1), DomainError);
}

TEST(Kernel, OneOverFAlongOtherAxis) {
  const auto k = NoiseKernel::one_over_f(2.0, 1.0, 5.0, {0.0, 0.0, 3.0});
  const Eigen::Matrix3d m = k(0.3);
  EXPECT_NEAR(m(2, 2), 2.0 * (oracle::e1(0.3) - oracle::e1(1.5)), 1e-12);
  EXPECT_EQ(m(0, 0), 0.0);
}

TEST(Kernel, ConstructionChecks) {
  EXPECT_THROW(NoiseKernel::one_over_f(8.0, 20.0, 0.1), DomainError);
  EXPECT_THROW(NoiseKernel::one_over_f(8.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(NoiseKernel::one_over_f(0.0, 0.1, 1.0), DomainError);
  EXPECT_THROW(NoiseKernel::one_over_f(1.0, 0.1, 1.0, {0, 0, 0}), DomainError);
  EXPECT_THROW(NoiseKernel::diagonal_constant({1.0, -1.0, 0.0}), DomainError);
}

TEST(Covariance, ZeroKernel) {
  const auto f = assemble_covariance(NoiseKernel::zero(), TimeGrid(1.0, 20));
  EXPECT_EQ(f.covariance.norm(), 0.0);
  EXPECT_EQ(f.lower.norm(), 0.0);
}

TEST(Covariance, DiagonalConstantIsBlockConstant) {
  const auto f = assemble_covariance(NoiseKernel::diagonal_constant({1.0, 2.0, 0.5}), TimeGrid(1.0, 30));
  for (int a = 0; a < 31; ++a) {
    EXPECT_EQ((f.covariance.block<3, 3>(3 * a, 0) - f.covariance.block<3, 3>(0, 0)).norm(), 0.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.covariance, Eigen::EigenvaluesOnly);
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 1e-9 ? 1 : 0;
  EXPECT_LE(rank, 3);
  EXPECT_LT((f.lower * f.lower.transpose() - f.covariance).norm(), 1e-6);
}

TEST(Covariance, SymmetricAndFactored) {
  const auto f = assemble_covariance(oracle::Scenario::kernel(), TimeGrid(1.0, 64));
  EXPECT_EQ((f.covariance - f.covariance.transpose()).norm(), 0.0);
  const Eigen::MatrixXd back = f.lower * f.lower.transpose();
  EXPECT_LT((back - f.covariance).cwiseAbs().maxCoeff(), 1e-7 * f.covariance.diagonal().maxCoeff());
}

TEST(Covariance, RejectsIndefiniteKernel) {
  const auto k = NoiseKernel::user([](double s) -> Eigen::Matrix3d {
    return (s == 0.0 ? 1.0 : -1.0) * Eigen::Matrix3d::Identity();
  });
  try {
    assemble_covariance(k, TimeGrid(1.0, 10));
    FAIL() << "expected NotPSD";
  } catch (const NotPSD& e) {
    EXPECT_LT(e.min_eigenvalue(), -1.0);
  }
}

TEST(Sampling, EmptyAndZero) {
  const TimeGrid g(1.0, 16);
  EXPECT_EQ(sample_paths(oracle::Scenario::kernel(), g, 0, 1).values.size(), 0u);
  const auto z = sample_paths(NoiseKernel::zero(), g, 50, 1);
  for (double v : z.values) EXPECT_EQ(v, 0.0);
}

TEST(Sampling, DeterministicPerPath) {
  const TimeGrid g(1.0, 32);
  const auto f = assemble_covariance(oracle::Scenario::kernel(), g);
  const auto a = sample_paths(f, 40, 99);
  const auto b = sample_paths(f, 40, 99);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, sample_paths(f, 40, 100).values);
  // path i depends only on (seed, i)
  const PathSampler s(f, 99);
  const Eigen::MatrixXd whole = s.batch(0, 10);
  const Eigen::MatrixXd part = s.batch(5, 3);
  EXPECT_EQ((whole.middleCols(5, 3) - part).norm(), 0.0);
  for (int k = 0; k < g.nodes(); ++k) EXPECT_EQ(a(7, 0, k), whole(3 * k, 7));
}

TEST(Sampling, MomentsMatchKernel) {
  const TimeGrid g(1.0, 255);  // 256 nodes
  const auto k = oracle::Scenario::kernel();
  const auto f = assemble_covariance(k, g);
  const int count = 100000;
  const auto set = sample_paths(f, count, 2024);
  const int nodes = g.nodes();
  const std::vector<std::pair<int, int>> pairs{{0, 0}, {0, 1}, {10, 40}, {100, 101}, {0, 255}, {128, 200}, {255, 255}};
  for (auto [a, b] : pairs) {
    double mean_a = 0.0, cov = 0.0;
    for (int p = 0; p < count; ++p) {
      mean_a += set(p, 0, a);
      cov += set(p, 0, a) * set(p, 0, b);
    }
    mean_a /= count;
    cov /= count;
    const double caa = k(0.0)(0, 0);
    const double cab = k(std::abs(g.t(a) - g.t(b)))(0, 0);
    EXPECT_LT(std::abs(mean_a), 4.0 * std::sqrt(caa / count));
    const double se = std::sqrt((caa * caa + cab * cab) / count);
    EXPECT_LT(std::abs(cov - cab), 4.0 * se) << a << "," << b;
  }
  // components outside the noise axis stay zero up to the factorization jitter
  double off = 0.0;
  for (int p = 0; p < 1000; ++p) off = std::max(off, std::abs(set(p, 1, nodes / 2)));
  EXPECT_LT(off, 1e-3);
}

// Hann-windowed periodogram averaged over paths; the fitted log-log slope over
// [2 gamma_lo, gamma_hi / 2] should be close to -1.
TEST(Sampling, OneOverFSpectrum) {
  const double tau = 50.0;
  const TimeGrid g(tau, 500);
  const auto f = assemble_covariance(oracle::Scenario::kernel(), g);
  const int count = 10000;
  const int nodes = g.nodes();
  std::vector<double> w(nodes);
  for (int j = 0; j < nodes; ++j) w[j] = 0.5 - 0.5 * std::cos(2.0 * oracle::kPi * j / (nodes - 1));
  std::vector<double> freqs;
  for (int m = 1; m < nodes / 2; ++m) {
    const double om = 2.0 * oracle::kPi * m / tau;
    if (om >= 0.2 && om <= 10.0) freqs.push_back(om);
  }
  std::vector<std::vector<std::complex<double>>> phase(freqs.size(), std::vector<std::complex<double>>(nodes));
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    for (int j = 0; j < nodes; ++j) phase[i][j] = w[j] * std::polar(1.0, -freqs[i] * g.t(j));
  }
  std::vector<double> power(freqs.size(), 0.0);
  const PathSampler sampler(f, 5);
  for (int first = 0; first < count; first += 250) {
    const Eigen::MatrixXd b = sampler.batch(first, 250);
    for (int c = 0; c < 250; ++c) {
      for (std::size_t i = 0; i < freqs.size(); ++i) {
        std::complex<double> s = 0.0;
        for (int j = 0; j < nodes; ++j) s += b(3 * j, c) * phase[i][j];
        power[i] += std::norm(s);
      }
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double x = std::log(freqs[i]), y = std::log(power[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GT(slope, -1.3);
  EXPECT_LT(slope, -0.7);
  RecordProperty("slope", std::to_string(slope));
}

}  // namespace
