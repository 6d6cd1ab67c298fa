#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace spinctl;
using oracle::dist;
using oracle::kPi;

namespace {

double triad_dist(const std::array<PureQuat, 3>& a, const std::array<PureQuat, 3>& b) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i) m = std::max(m, dist(a[i], b[i]));
  return m;
}

TEST(PropagateTriad, ZeroControlKeepsLabAxes) {
  const TimeGrid g(1.0, 50);
  const auto E = propagate_triad(PurePath(g));
  for (int k = 0; k < g.nodes(); ++k) {
    for (int i = 0; i < 3; ++i) EXPECT_EQ(E.E(i, k), PureQuat::basis(i));
  }
}

TEST(PropagateTriad, ConstantControl) {
  const TimeGrid g(1.0, 100);
  const PureQuat w{0.0, 0.0, 2.0};
  const auto E = propagate_triad(constant_path(g, w));
  // dE_1/dt = E_1 ^ 2 e_3 turns E_1 from e_1 towards -e_2
  for (int k = 0; k < g.nodes(); ++k) {
    const double t = g.t(k);
    EXPECT_LT(dist(E.E(0, k), {std::cos(2 * t), -std::sin(2 * t), 0.0}), 1e-13);
    EXPECT_LT(dist(E.E(2, k), PureQuat::e3()), 1e-15);
  }
}

TEST(PropagateTriad, SolvesTriadEquation) {
  const TimeGrid g(1.0, 20000);
  const auto omega = PurePath::sample(g, [](double t) { return PureQuat{std::sin(3 * t), 1.0 + t, std::cos(5 * t)}; });
  const auto E = propagate_triad(omega);
  const double h = g.dt();
  for (int k = 1; k < g.n_steps(); k += 997) {
    for (int i = 0; i < 3; ++i) {
      const PureQuat d = (E.E(i, k + 1) - E.E(i, k - 1)) / (2.0 * h);
      EXPECT_LT(dist(d, wedge(E.E(i, k), omega[k])), 1e-6) << k << " " << i;
    }
  }
}

TEST(OmegaFromTriad, ExactForConstantControl) {
  const TimeGrid g(1.0, 64);
  const PureQuat w{1.0, -2.0, 3.0};
  const auto c = omega_from_triad(propagate_triad(constant_path(g, w)));
  for (int k = 0; k < g.nodes(); ++k) EXPECT_LT(dist(c.omega_rot[k], w), 1e-12);
}

TEST(OmegaFromTriad, RoundTripIsSecondOrder) {
  auto err = [](int n) {
    const TimeGrid g(1.0, n);
    const auto w = random_smooth_path(g, 4, 2, 3.0);
    double scale = 0.0;
    for (int k = 0; k < g.nodes(); ++k) scale = std::max(scale, norm(w[k]));
    return sup_distance(omega_from_triad(propagate_triad(w)).omega_rot, w) / scale;
  };
  const double e1 = err(200), e2 = err(400);
  EXPECT_LT(e2, 1e-3);
  EXPECT_GT(e1 / e2, 3.0);
}

TEST(Power, BothLinesAgreeWithSquaredNorm) {
  const TimeGrid g(1.0, 300);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto w = random_smooth_path(g, 8, i, 4.0);
    const auto E = propagate_triad(w);
    const auto p1 = power_first_line(E, w);
    const auto p2 = power_second_line(E, w);
    const auto p3 = power(make_control(E, w));
    for (int k = 0; k < g.nodes(); ++k) {
      const double ref = dot(w[k], w[k]);
      EXPECT_NEAR(p1[k], ref, 1e-12 * std::max(1.0, ref));
      EXPECT_NEAR(p2[k], ref, 1e-12 * std::max(1.0, ref));
      EXPECT_NEAR(p3[k], ref, 1e-12 * std::max(1.0, ref));
    }
  }
}

TEST(Power, DriftScenario) {
  const TimeGrid g(1.0, 512);
  const auto E = propagate_triad(constant_path(g, oracle::Scenario::drift()));
  const auto p = power(E);
  for (double v : p) EXPECT_NEAR(v, 8.0 * kPi * kPi, 1e-9);
  EXPECT_NEAR(energy_output(p, g), 4.0 * kPi * kPi, 1e-9);
  EXPECT_LT(terminal_mismatch(E, oracle::Scenario::target()), 1e-12);
}

TEST(Boundary, HalfTurnAboutZ) {
  const TargetRotation t(PureQuat::e3(), kPi, 0);
  const auto b = boundary_triad(t);
  EXPECT_EQ(b.initial, (std::array<PureQuat, 3>{PureQuat::e1(), PureQuat::e2(), PureQuat::e3()}));
  EXPECT_LT(triad_dist(b.final, {-PureQuat::e1(), -PureQuat::e2(), PureQuat::e3()}), 1e-15);
  // the triad does not see the sign of u_T
  const TargetRotation other(-PureQuat::e3(), kPi, 0);
  EXPECT_LT(triad_dist(boundary_triad(other).final, b.final), 1e-15);
  const TargetRotation full(PureQuat::e3(), 3.0 * kPi, 0);
  EXPECT_LT(triad_dist(boundary_triad(full).final, b.final), 1e-14);
}

TEST(Boundary, AngleNormalization) {
  const TargetRotation t(PureQuat{0, 0, 2}, 2.0 * kPi * 2 + 0.5, -1);
  EXPECT_NEAR(t.angle(), 0.5, 1e-14);
  EXPECT_EQ(t.winding(), 1);
  EXPECT_LT(dist(*t.axis(), PureQuat::e3()), 1e-15);
  const TargetRotation neg(PureQuat::e1(), -0.5, 0);
  EXPECT_NEAR(neg.angle(), 2.0 * kPi - 0.5, 1e-14);
  EXPECT_EQ(neg.winding(), -1);
}

TEST(DriftForTarget, Examples) {
  EXPECT_LT(dist(drift_for_target(TargetRotation(PureQuat::e2(), 1.0, 0), 2.0), 0.5 * PureQuat::e2()), 1e-15);
  EXPECT_LT(dist(drift_for_target(TargetRotation(PureQuat::e2(), 1.0, 1), 1.0), (1.0 + 2.0 * kPi) * PureQuat::e2()),
            1e-14);
  EXPECT_EQ(drift_for_target(TargetRotation(std::nullopt, 0.0, 0), 1.0), PureQuat{});
  EXPECT_THROW(drift_for_target(TargetRotation(PureQuat::e1(), 1.0, 0), 0.0), DomainError);
  const auto d = drift_for_target(oracle::Scenario::target(), 1.0);
  EXPECT_LT(dist(d, oracle::Scenario::drift()), 1e-13);
}

TEST(DriftForTarget, EveryWindingReachesTheTarget) {
  const TimeGrid g(1.0, 400);
  const PureQuat axis = PureQuat{1, -1, 2} / std::sqrt(6.0);
  for (int n = -2; n <= 2; ++n) {
    const TargetRotation t(axis, 1.3, n);
    const auto E = propagate_triad(constant_path(g, drift_for_target(t, 1.0)));
    EXPECT_LT(terminal_mismatch(E, t), 1e-12) << n;
    EXPECT_LT(terminal_mismatch(E, TargetRotation(axis, 1.3, 0)), 1e-12) << n;
  }
}

// The drift (2 pi, 0, 2 pi) turns through 2 pi sqrt 2; modulo a whole turn this is the
// rotation by 2 pi (sqrt 2 - 1) about r. A turn of 2 pi (2 - sqrt 2) about r is its inverse.
TEST(DriftForTarget, ReducedAngleOfDriftScenario) {
  const TimeGrid g(1.0, 256);
  const PureQuat r = oracle::Scenario::drift() / norm(oracle::Scenario::drift());
  const auto target = oracle::Scenario::target();
  EXPECT_NEAR(target.angle(), 2.0 * kPi * (std::sqrt(2.0) - 1.0), 1e-13);
  EXPECT_EQ(target.winding(), 1);

  const auto drift = propagate_triad(constant_path(g, oracle::Scenario::drift()));
  const auto reduced = propagate_triad(constant_path(g, 2.0 * kPi * (std::sqrt(2.0) - 1.0) * r));
  EXPECT_LT(triad_dist(drift.at(g.n_steps()), reduced.at(g.n_steps())), 1e-12);

  const auto inverse = propagate_triad(constant_path(g, 2.0 * kPi * (2.0 - std::sqrt(2.0)) * r));
  EXPECT_GT(terminal_mismatch(inverse, target), 0.1);
  EXPECT_LT(terminal_mismatch(inverse, TargetRotation(-r, target.angle(), 0)), 1e-12);
}

TEST(TargetRotation, AxisRequired) {
  EXPECT_THROW(TargetRotation(std::nullopt, 1.0, 0), AxisRequired);
  EXPECT_THROW(TargetRotation(std::nullopt, 0.0, 1), AxisRequired);
  EXPECT_THROW(TargetRotation(PureQuat{}, 1.0, 0), DomainError);
  EXPECT_NO_THROW(TargetRotation(std::nullopt, 0.0, 0));
  EXPECT_FALSE(TargetRotation::from_drift({}, 1.0).axis());
}

TEST(TriadPath, FromVectors) {
  const TimeGrid g(1.0, 20);
  const auto E = propagate_triad(random_smooth_path(g, 9, 0, 2.0));
  std::vector<std::array<PureQuat, 3>> v;
  for (int k = 0; k < g.nodes(); ++k) v.push_back(E.at(k));
  const auto back = TriadPath::from_vectors(g, v);
  for (int k = 0; k < g.nodes(); ++k) {
    EXPECT_LT(triad_dist(back.at(k), v[k]), 1e-13);
    if (k > 0) EXPECT_GT(dot(back.u(k).quat(), back.u(k - 1).quat()), 0.0);
  }
  auto bad = v;
  bad[3][2] = -bad[3][2];
  EXPECT_THROW(TriadPath::from_vectors(g, bad), DomainError);
  bad = v;
  bad[4][0] = 1.01 * bad[4][0];
  EXPECT_THROW(TriadPath::from_vectors(g, bad), DomainError);
  v.pop_back();
  EXPECT_THROW(TriadPath::from_vectors(g, v), DomainError);
}

TEST(TriadProperty, OrthonormalOverLongRuns) {
  const TimeGrid g(1.0, 10000);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto w = random_smooth_path(g, 30, i, 50.0);
    const auto E = propagate_triad(w);
    EXPECT_LT(orthonormality_error(E), 1e-12) << i;
  }
  const auto fast = propagate_triad(constant_path(g, {30.0, -30.0, 20.0}));
  EXPECT_LT(orthonormality_error(fast), 1e-12);
}

TEST(TriadProperty, FrameConsistency) {
  const TimeGrid g(1.0, 200);
  oracle::Rng rng(17);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto w = random_smooth_path(g, 31, i, 5.0);
    const auto E = propagate_triad(w);
    const auto c = make_control(E, w);
    for (int k = 0; k < g.nodes(); k += 7) {
      const auto lab = lab_components(E, w, k);
      EXPECT_NEAR(lab[0], c.omega_lab[k].x, 1e-12);
      EXPECT_NEAR(lab[1], c.omega_lab[k].y, 1e-12);
      EXPECT_NEAR(lab[2], c.omega_lab[k].z, 1e-12);
      EXPECT_NEAR(norm(c.omega_lab[k]), norm(w[k]), 1e-12);
      // omega = sum_i omega^i e_i and Omega = sum_i omega^i E_i
      const PureQuat rebuilt = lab[0] * E.E(0, k) + lab[1] * E.E(1, k) + lab[2] * E.E(2, k);
      EXPECT_LT(dist(rebuilt, w[k]), 1e-12);
    }
  }
}

}  // namespace
