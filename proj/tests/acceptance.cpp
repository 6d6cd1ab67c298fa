// Acceptance run: one line per criterion. With an argument only that criterion runs.
// Exit status is 0 when every criterion that ran passed.

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "oracles.hpp"

using namespace spinctl;
using oracle::dist;
using oracle::kPi;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const std::vector<SweepPoint>& sweep() {
  static const std::vector<SweepPoint> pts = [] {
    auto p = oracle::Scenario::problem(512);
    p.continuation = {0, 10, 20, 30, 50, 100, 250};
    return sweep_lambda(p);
  }();
  return pts;
}

const ControlSolution* at(double lam) {
  for (const auto& pt : sweep()) {
    if (pt.lambda_inv == lam) return pt.solution ? &*pt.solution : nullptr;
  }
  return nullptr;
}

Outcome magnus_ode_equivalence() {
  const TimeGrid g(1.0, 10000);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto n = random_smooth_path(g, 7, i, 1.0);
    for (double e : {0.1, 0.5, 1.0}) {
      const EpsilonStrength eps(e);
      const auto m = solve_m_ode(n, eps);
      worst = std::max(worst, dist(qexp((0.5 * e) * m.back()).quat(), time_ordered_exp(n, eps).quat()));
    }
  }
  return {worst <= 1e-8, fmt("max |qexp(eps m/2) - T exp| = %.3g over 60 cases", worst)};
}

Outcome magnus_orders() {
  const TimeGrid g(1.0, 4000);
  const double h = 0.02;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto n = random_smooth_path(g, 21, i, 1.5);
    PurePath neg(g);
    for (int k = 0; k < g.nodes(); ++k) neg[k] = -n[k];
    // m_{-eps}[n] = -m_eps[-n]
    auto f = [&](double eps) {
      if (eps >= 0.0) return solve_m_ode(n, EpsilonStrength(eps)).back();
      return -solve_m_ode(neg, EpsilonStrength(-eps)).back();
    };
    const PureQuat f0 = f(0.0), fp1 = f(h), fm1 = f(-h), fp2 = f(2 * h), fm2 = f(-2 * h);
    const PureQuat c[3] = {f0, (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h),
                           0.5 * (-1.0 * fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h)};
    for (int j = 0; j < 3; ++j) {
      const PureQuat ref = magnus_term(n, j).back();
      worst = std::max(worst, dist(c[j], ref) / norm(ref));
    }
  }
  return {worst <= 1e-4, fmt("max relative mismatch of orders 0-2 = %.3g on 10 paths", worst)};
}

Outcome quat_laws() {
  oracle::Rng rng(1001);
  double assoc = 0.0, modulus = 0.0, compose = 0.0, roundtrip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Quat p = rng.quat(), q = rng.quat(), r = rng.quat();
    const Quat a = (p * q) * r;
    assoc = std::max(assoc, dist(a, p * (q * r)) / std::max(1.0, norm(a)));
    modulus = std::max(modulus, std::abs(norm(p * q) - norm(p) * norm(q)) / std::max(1.0, norm(p) * norm(q)));
    const UnitQuat u1 = rng.unit(), u2 = rng.unit();
    const PureQuat v = rng.pure();
    compose = std::max(compose, dist(rotate(u2 * u1, v), rotate(u2, rotate(u1, v))) / std::max(1.0, norm(v)));
    PureQuat w = rng.pure();
    w = (rng.uniform(0.0, kPi - 1e-6) / norm(w)) * w;
    roundtrip = std::max(roundtrip, dist(qlog(qexp(w)), w));
    const UnitQuat u = rng.unit();
    roundtrip = std::max(roundtrip, dist(qexp(qlog(u)).quat(), u.quat()));
  }
  const bool ok = assoc <= 1e-12 && modulus <= 1e-12 && compose <= 1e-12 && roundtrip <= 1e-10;
  char buf[256];
  std::snprintf(buf, sizeof buf, "assoc %.2g, modulus %.2g, composition %.2g, exp/log %.2g (10^4 cases each)", assoc,
                modulus, compose, roundtrip);
  return {ok, buf};
}

Outcome chebyshev() {
  oracle::Rng rng(1002);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double m = rng.uniform(-20.0, 20.0);
    const EpsilonStrength eps(rng.uniform(0.0, 1.0));
    const double a = amplitude_half(m, eps);
    for (int two_s = 1; two_s <= 25; ++two_s) {
      const SpinNumber s(two_s);
      worst = std::max(worst, std::abs(amplitude_s(s, m, eps) - chebyshev_U(two_s, a) / s.multiplicity()));
    }
  }
  return {worst <= 1e-10, fmt("max |A_s - U_2s(A_1/2)/(2s+1)| = %.3g, s <= 25/2", worst)};
}

Outcome kernel_closed_form() {
  const auto k = oracle::Scenario::kernel();
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double s = 2.0 * i / 49.0;
    const double ref = oracle::one_over_f_quadrature(8.0, 0.1, 20.0, s);
    worst = std::max(worst, std::abs(k(s)(0, 0) - ref) / ref);
  }
  const double zero = std::abs(k(0.0)(0, 0) - 8.0 * std::log(200.0));
  return {worst <= 1e-8 && zero <= 1e-12,
          fmt("max relative error vs quadrature %.3g on 50 points; |N(0) - xi ln 200| = %.2g", worst, zero)};
}

Outcome mc_vs_analytic() {
  const auto E = propagate_triad(constant_path(TimeGrid(1.0, 256), oracle::Scenario::drift()));
  const SpinNumber spins[] = {SpinNumber(1), SpinNumber(4)};
  const auto est = mc_fidelity(E, oracle::Scenario::kernel(), EpsilonStrength(0.05), spins, 10000, 20240611);
  bool ok = true;
  std::string detail;
  for (const auto& f : est) {
    const double z = (f.mean.real() - f.analytic_prediction) / f.std_error;
    ok = ok && std::abs(z) <= 3.0 && std::abs(f.mean.imag()) <= 3.0 * f.std_error;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%ss=%g: MC %.6f +- %.1e vs %.6f (%.2f SE, imag %.1e)", detail.empty() ? "" : "; ",
                  f.spin.s(), f.mean.real(), f.std_error, f.analytic_prediction, z, f.mean.imag());
    detail += buf;
  }
  return {ok, detail};
}

Outcome baseline() {
  const auto p = oracle::Scenario::problem(512);
  const auto sol = solve(p);
  double dev = 0.0;
  for (int k = 0; k < p.grid.nodes(); ++k) dev = std::max(dev, norm(sol.delta_omega_rot[k]));
  const double ref = action_S(propagate_triad(constant_path(p.grid, oracle::Scenario::drift())), p.kernel);
  const double rel = std::abs(sol.S - ref) / ref;
  return {dev == 0.0 && rel <= 1e-8, fmt("max |delta Omega| = %.2g, S = %.8g, relative difference %.2g", dev, sol.S, rel)};
}

Outcome negative_x_and_rising_z() {
  double worst_x = -1e300;
  double prev_z = -1e300;
  bool rising = true;
  std::string zs;
  for (double lam : {10.0, 20.0, 30.0, 50.0, 100.0}) {
    const auto* s = at(lam);
    if (!s) return {false, fmt("no solution at lambda_inv = %g", lam)};
    for (int k = 0; k < s->delta_omega.nodes(); ++k) worst_x = std::max(worst_x, s->delta_omega[k].x);
    const double z = oracle::mean_component(s->control.omega_lab, 2);
    rising = rising && z > prev_z;
    prev_z = z;
    zs += (zs.empty() ? "" : ", ") + fmt("%.3f", z);
  }
  return {worst_x <= 1e-8 && rising, fmt("max delta omega_x = %.3g; ", worst_x) + "mean omega_z = " + zs};
}

Outcome action_and_threshold() {
  bool monotone = true;
  double prev = 1e300;
  std::string ss;
  for (const auto& pt : sweep()) {
    if (!pt.solution) return {false, "sweep failed at lambda_inv = " + fmt("%g: ", pt.lambda_inv) + pt.error};
    monotone = monotone && pt.solution->S <= prev;
    prev = pt.solution->S;
    ss += (ss.empty() ? "" : ", ") + fmt("%.4f", prev);
  }
  const double F = fidelity_weak(SpinNumber::half(), EpsilonStrength(0.1), prev);
  return {monotone && F >= 0.999, "S = " + ss + fmt("; F_1/2(250, eps=0.1) = %.6f (needs >= 0.999)", F)};
}

Outcome s_universality() {
  std::vector<double> S;
  for (const auto& pt : sweep()) {
    if (pt.solution) S.push_back(pt.solution->S);
  }
  int pairs = 0, bad = 0;
  for (double a : S) {
    for (double b : S) {
      if (!(a < b)) continue;
      for (double e : {0.05, 0.1, 0.3}) {
        for (int two_s = 1; two_s <= 25; ++two_s) {
          ++pairs;
          const EpsilonStrength eps(e);
          if (!(fidelity_weak(SpinNumber(two_s), eps, a) > fidelity_weak(SpinNumber(two_s), eps, b))) ++bad;
        }
      }
    }
  }
  return {bad == 0 && pairs > 0, fmt("%g of %g ordered comparisons disagree", bad, pairs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::function<Outcome()> criteria[] = {magnus_ode_equivalence, magnus_orders, quat_laws, chebyshev,
                                               kernel_closed_form, mc_vs_analytic, baseline, negative_x_and_rising_z,
                                               action_and_threshold, s_universality};
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1-10]\n", argv[0]);
      return 2;
    }
  }
  bool all = true;
  for (int i = 1; i <= 10; ++i) {
    if (only && i != only) continue;
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
