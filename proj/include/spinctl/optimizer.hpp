#pragma once

// Constrained minimization of the noise action over rigid triad trajectories.
//
// The control is written as Omega = Omega_D + conj(d) x d with d(t) = exp(Omega_D t / 2),
// so x(t) is the deviation from the drift seen in the frame co-rotating with the drift.
// Decision variables are the step values m_k = x(t_k + h/2). The triad in that frame is
// propagated with Q_{k+1} = exp(-h [m_k]x) Q_k and must close (Q_N = I) for the target to
// be met. The minimized function is
//
//   lambda_inv * S + h/2 sum_k |Omega_D + m_k|^2 + nu . c + 4 mu (1 - w_N),
//
// c = axial part of Q_N and w_N the scalar part of the co-rotating quaternion at tau
// (Q_N = I for w_N = +-1). Near closure 4(1 - w_N) = |c|^2 / 2 to leading order; the
// penalty is largest at w_N = -1, which keeps the solver in the drift's winding sector.
// nu follows augmented-Lagrangian updates and mu is escalated when closure stalls.
// Gradients come from a reverse (adjoint) sweep through the propagation.

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinctl/errors.hpp"
#include "spinctl/evolution.hpp"
#include "spinctl/fidelity.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/path.hpp"
#include "spinctl/quat.hpp"

namespace spinctl {

struct Tolerances {
  double bc_tol = 1e-6;
  double el_tol = 1e-4;
  double step_tol = 1e-10;
};

struct OptimizationProblem {
  NoiseKernel kernel;
  TargetRotation target;
  TimeGrid grid;
  double lambda_inv = 0.0;
  std::vector<double> continuation{0.0};
  Tolerances tol;
  int refine_steps = 2048;  // grid used for the refinement report; 0 disables it

  double tau() const { return grid.tau(); }
  PureQuat drift() const { return drift_for_target(target, grid.tau()); }
};

struct ControlSolution {
  TriadPath triad;
  ControlPath control;
  PurePath delta_omega;      // omega(t) - Omega_D, lab frame
  PurePath delta_omega_rot;  // x(t), nodal values of the deviation in the co-rotating frame
  std::vector<double> steps;  // decision variables m_k (3 per step)
  double S = 0.0;
  double S_c = 0.0;  // lambda_inv * S + E_out; S_c scaled by lambda_inv so lambda_inv = 0 is finite
  double E_out = 0.0;
  double el_residual = 0.0;
  double bc_error = 0.0;
  double lambda_inv = 0.0;
  PureQuat multiplier;  // nu at exit, reused by warm starts
  double penalty = 0.0;
  int iterations = 0;
  int penalty_rounds = 0;
  bool certified = false;  // bc_error <= bc_tol and el_residual <= el_tol
  // Refinement report: same control on the finer grid
  int refine_steps = 0;
  double S_refine_delta = 0.0;
  double bc_error_refined = 0.0;
};

namespace detail {

inline Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

inline Eigen::Vector3d vee(const Eigen::Matrix3d& b) {
  return {b(2, 1) - b(1, 2), b(0, 2) - b(2, 0), b(1, 0) - b(0, 1)};
}

/// Axial vector of the antisymmetric part: zero exactly when Q is symmetric (Q = I near identity).
inline Eigen::Vector3d axial(const Eigen::Matrix3d& q) { return 0.5 * vee(q); }

inline Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi) {
  const double th = phi.norm();
  if (th == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(th, phi / th).toRotationMatrix();
}

/// Left Jacobian of the SO(3) exponential.
inline Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double th = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  if (th < 1e-5) return Eigen::Matrix3d::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  const double t2 = th * th;
  return Eigen::Matrix3d::Identity() + ((1.0 - std::cos(th)) / t2) * k +
         ((th - std::sin(th)) / (t2 * th)) * k * k;
}

inline Eigen::Vector3d vec3(const PureQuat& p) { return {p.x, p.y, p.z}; }
inline PureQuat pure(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

/// Objective, gradient and propagated state for one set of nodal controls.
class Discretization {
 public:
  Discretization(const NoiseKernel& k, const TimeGrid& grid, const PureQuat& drift)
      : grid_(grid), table_(k, grid), drift_(vec3(drift)), drift_rot_(grid.nodes()) {
    for (int j = 0; j < grid.nodes(); ++j) drift_rot_[j] = exp_so3(-grid.t(j) * drift_);
  }

  const TimeGrid& grid() const { return grid_; }
  int dimension() const { return 3 * grid_.n_steps(); }
  const Eigen::Vector3d& drift() const { return drift_; }

  struct State {
    std::vector<Eigen::Matrix3d> P, Q, L, D;
    double S = 0.0;
    double sign = 1.0;  // sign of the scalar part of the co-rotating quaternion at tau
  };

  State propagate(const double* x) const {
    const int n = grid_.n_steps();
    const double h = grid_.dt();
    State s;
    s.P.resize(n);
    s.Q.resize(n + 1);
    s.L.resize(n + 1);
    s.Q[0].setIdentity();
    UnitQuat u;
    for (int k = 0; k < n; ++k) {
      const Eigen::Map<const Eigen::Vector3d> m(x + 3 * k);
      s.P[k] = exp_so3(-h * m);
      s.Q[k + 1] = s.P[k] * s.Q[k];
      u = u * qexp((0.5 * h) * pure(m));
    }
    s.sign = u.scalar() < 0.0 ? -1.0 : 1.0;
    for (int k = 0; k <= n; ++k) s.L[k] = drift_rot_[k] * s.Q[k];
    s.D = dual_matrices(s.L, table_, grid_);
    s.S = action_from_dual(s.L, s.D, grid_);
    return s;
  }

  struct Weights {
    double lambda_inv = 0.0;
    Eigen::Vector3d nu = Eigen::Vector3d::Zero();
    double mu = 0.0;
  };

  /// Value of the augmented objective; fills grad (length dimension()) when non-null.
  double evaluate(const double* x, double* grad, const Weights& w, State* keep = nullptr) const {
    const int n = grid_.n_steps();
    const double h = grid_.dt();
    State s = propagate(x);
    const Eigen::Vector3d c = axial(s.Q[n]);
    const double root = std::sqrt(std::max(1.0 + s.Q[n].trace(), 1e-300));  // 2 |w_N|
    double f = w.lambda_inv * s.S + w.nu.dot(c) + 4.0 * w.mu * (1.0 - 0.5 * s.sign * root);
    for (int k = 0; k < n; ++k) {
      f += 0.5 * h * (drift_ + Eigen::Map<const Eigen::Vector3d>(x + 3 * k)).squaredNorm();
    }
    if (grad) {
      Eigen::Map<Eigen::VectorXd> g(grad, dimension());
      for (int k = 0; k < n; ++k) {
        g.segment<3>(3 * k) = h * (drift_ + Eigen::Map<const Eigen::Vector3d>(x + 3 * k));
      }
      // dS/dL_a = w_a D_a; dS/dQ_a = w_a R_a^T D_a
      auto direct = [&](int k) -> Eigen::Matrix3d {
        return (w.lambda_inv * grid_.weight(k)) * (drift_rot_[k].transpose() * s.D[k]);
      };
      Eigen::Matrix3d lam =
          direct(n) + 0.5 * hat(w.nu) - (w.mu * s.sign / root) * Eigen::Matrix3d::Identity();
      for (int k = n - 1; k >= 0; --k) {
        const Eigen::Matrix3d a = lam * s.Q[k].transpose();  // d f / d P_k
        const Eigen::Map<const Eigen::Vector3d> m(x + 3 * k);
        g.segment<3>(3 * k) -= h * left_jacobian(-h * m).transpose() * vee(a * s.P[k].transpose());
        lam = direct(k) + s.P[k].transpose() * lam;
      }
    }
    if (keep) *keep = std::move(s);
    return f;
  }

 private:
  TimeGrid grid_;
  KernelTable table_;
  Eigen::Vector3d drift_;
  std::vector<Eigen::Matrix3d> drift_rot_;  // rotation by -|Omega_D| t about Omega_D
};

/// Ceres adaptor in the scaled variables y = sqrt(h) m, where the energy term is |y|^2 / 2.
class ScaledObjective final : public ceres::FirstOrderFunction {
 public:
  ScaledObjective(const Discretization& d, Discretization::Weights w)
      : d_(d), w_(w), scale_(d.dimension(), std::sqrt(d.grid().dt())), x_(d.dimension()) {}

  bool Evaluate(const double* y, double* cost, double* gradient) const override {
    for (int i = 0; i < d_.dimension(); ++i) x_[i] = y[i] / scale_[i];
    *cost = d_.evaluate(x_.data(), gradient, w_);
    if (gradient) {
      for (int i = 0; i < d_.dimension(); ++i) gradient[i] /= scale_[i];
    }
    return std::isfinite(*cost);
  }
  int NumParameters() const override { return d_.dimension(); }

  const std::vector<double>& scale() const { return scale_; }

 private:
  const Discretization& d_;
  Discretization::Weights w_;
  std::vector<double> scale_;
  mutable std::vector<double> x_;
};

}  // namespace detail

/// Assembles the solution record for step controls m on the problem grid.
inline ControlSolution make_solution(const OptimizationProblem& problem, const std::vector<double>& x,
                                     double lambda_inv);

/// Euler-Lagrange residual: max_t |dOmega/dt + lambda_inv sum_i E_i ^ D_i| divided by
/// |Omega_D| / tau + lambda_inv max_t sum_i |D_i|. At lambda_inv = 0 only the
/// geodesic condition dOmega/dt = 0 remains.
inline double el_residual(const TriadPath& E, const PurePath& omega_rot, const NoiseKernel& k,
                          double lambda_inv, const PureQuat& drift) {
  const auto& grid = E.grid();
  const PurePath domega = derivative4(omega_rot);
  const double drift_scale = norm(drift) / grid.tau();
  if (lambda_inv == 0.0) {
    double m = 0.0;
    for (int t = 0; t < grid.nodes(); ++t) m = std::max(m, norm(domega[t]));
    return drift_scale > 0.0 ? m / drift_scale : m;
  }
  const auto D = dual_triad(E, k);
  double num = 0.0;
  double dmax = 0.0;
  for (int t = 0; t < grid.nodes(); ++t) {
    PureQuat force;
    double dsum = 0.0;
    for (int i = 0; i < 3; ++i) {
      force += wedge(E.E(i, t), D[i][t]);
      dsum += norm(D[i][t]);
    }
    num = std::max(num, norm(domega[t] + lambda_inv * force));
    dmax = std::max(dmax, dsum);
  }
  const double den = drift_scale + lambda_inv * dmax;
  return den > 0.0 ? num / den : num;
}

inline double el_residual(const ControlSolution& sol, const OptimizationProblem& problem) {
  return el_residual(sol.triad, sol.control.omega_rot, problem.kernel, sol.lambda_inv, problem.drift());
}

namespace detail {

struct Realization {
  TriadPath triad;
  PurePath omega_rot;
  PurePath x;
};

/// Nodal values from step values by four-point interpolation (one-sided near the ends), so
/// the interpolation error stays O(h^4) and smooth up to the boundary.
inline PurePath nodal_from_steps(const TimeGrid& grid, const std::vector<double>& m) {
  const int n = grid.n_steps();
  auto step = [&](int k) { return PureQuat{m[3 * k], m[3 * k + 1], m[3 * k + 2]}; };
  PurePath x(grid);
  if (n < 4) {
    x[0] = 1.5 * step(0) - 0.5 * step(1);
    x[n] = 1.5 * step(n - 1) - 0.5 * step(n - 2);
    for (int k = 1; k < n; ++k) x[k] = 0.5 * (step(k - 1) + step(k));
    return x;
  }
  auto comb = [&](int first, std::array<double, 4> w, bool backward) {
    PureQuat v;
    for (int j = 0; j < 4; ++j) v += (w[j] / 16.0) * step(backward ? first - j : first + j);
    return v;
  };
  x[0] = comb(0, {35.0, -35.0, 21.0, -5.0}, false);
  x[1] = comb(0, {5.0, 15.0, -5.0, 1.0}, false);
  x[n] = comb(n - 1, {35.0, -35.0, 21.0, -5.0}, true);
  x[n - 1] = comb(n - 1, {5.0, 15.0, -5.0, 1.0}, true);
  for (int k = 2; k < n - 1; ++k) x[k] = comb(k - 2, {-1.0, 9.0, 9.0, -1.0}, false);
  return x;
}

/// Triad and control for step values m on `grid`, with the propagation used by the solver.
inline Realization realize(const TimeGrid& grid, const PureQuat& drift, const std::vector<double>& m) {
  const int n = grid.n_steps();
  const double h = grid.dt();
  std::vector<UnitQuat> ut(n + 1);  // co-rotating frame
  for (int k = 0; k < n; ++k) ut[k + 1] = ut[k] * qexp((0.5 * h) * PureQuat{m[3 * k], m[3 * k + 1], m[3 * k + 2]});
  PurePath x = nodal_from_steps(grid, m);
  std::vector<UnitQuat> u(n + 1);
  PurePath omega(grid);
  for (int k = 0; k <= n; ++k) {
    const UnitQuat d = qexp((0.5 * grid.t(k)) * drift);
    u[k] = ut[k] * d;
    omega[k] = drift + rotate(conj(d), x[k]);
  }
  return {TriadPath(grid, std::move(u)), std::move(omega), std::move(x)};
}

/// Step values on grid `to` by piecewise-linear interpolation of the nodal control.
inline std::vector<double> resample(const TimeGrid& from, const std::vector<double>& m, const TimeGrid& to) {
  const PurePath x = nodal_from_steps(from, m);
  std::vector<double> out(3 * to.n_steps());
  for (int k = 0; k < to.n_steps(); ++k) {
    const double pos = (to.t(k) + 0.5 * to.dt()) / from.dt();
    const int j = std::min(static_cast<int>(std::floor(pos)), from.n_steps() - 1);
    const double a = pos - j;
    const PureQuat v = (1.0 - a) * x[j] + a * x[j + 1];
    out[3 * k] = v.x;
    out[3 * k + 1] = v.y;
    out[3 * k + 2] = v.z;
  }
  return out;
}

}  // namespace detail

inline ControlSolution make_solution(const OptimizationProblem& problem, const std::vector<double>& x,
                                     double lambda_inv) {
  const PureQuat drift = problem.drift();
  auto r = detail::realize(problem.grid, drift, x);
  ControlPath control = make_control(r.triad, r.omega_rot);
  PurePath delta(problem.grid);
  for (int k = 0; k < problem.grid.nodes(); ++k) delta[k] = control.omega_lab[k] - drift;
  ControlSolution sol{r.triad, std::move(control), std::move(delta), std::move(r.x), x};
  sol.lambda_inv = lambda_inv;
  sol.S = action_S(sol.triad, problem.kernel);
  sol.E_out = energy_output(power(sol.control), problem.grid);
  sol.S_c = lambda_inv * sol.S + sol.E_out;
  sol.bc_error = terminal_mismatch(sol.triad, problem.target);
  sol.el_residual = el_residual(sol, problem);
  sol.certified = sol.bc_error <= problem.tol.bc_tol && sol.el_residual <= problem.tol.el_tol;
  if (problem.refine_steps > 0) {
    const TimeGrid fine(problem.grid.tau(), problem.refine_steps);
    const auto rf = detail::realize(fine, drift, detail::resample(problem.grid, x, fine));
    sol.refine_steps = problem.refine_steps;
    sol.S_refine_delta = action_S(rf.triad, problem.kernel) - sol.S;
    sol.bc_error_refined = terminal_mismatch(rf.triad, problem.target);
  }
  return sol;
}

/// Starting point for a solve; taken from a previous solution on the same grid.
struct WarmStart {
  std::vector<double> x;
  PureQuat multiplier;
  double penalty = 0.0;

  static WarmStart from(const ControlSolution& s) {
    WarmStart w;
    w.x = s.steps;
    w.multiplier = s.multiplier;
    w.penalty = s.penalty;
    return w;
  }
};

inline ControlSolution solve(const OptimizationProblem& problem, const std::optional<WarmStart>& warm = std::nullopt) {
  const double lambda_inv = problem.lambda_inv;
  if (!(lambda_inv >= 0.0) || !std::isfinite(lambda_inv)) {
    throw DomainError("solve: lambda_inv must be finite and >= 0");
  }
  const PureQuat drift = problem.drift();
  const int dim = 3 * problem.grid.n_steps();
  if (lambda_inv == 0.0) {
    // Energy is infinitely costly: the geodesic (pure drift) is the solution.
    ControlSolution sol = make_solution(problem, std::vector<double>(dim, 0.0), 0.0);
    sol.multiplier = drift;
    return sol;
  }

  const detail::Discretization disc(problem.kernel, problem.grid, drift);
  std::vector<double> x(dim, 0.0);
  detail::Discretization::Weights w;
  w.lambda_inv = lambda_inv;
  w.nu = disc.drift();  // exact multiplier of the drift solution at lambda_inv = 0
  w.mu = 100.0 / problem.grid.tau();
  if (warm) {
    if (static_cast<int>(warm->x.size()) != dim) throw DomainError("solve: warm start has the wrong size");
    x = warm->x;
    w.nu = detail::vec3(warm->multiplier);
    if (warm->penalty > 0.0) w.mu = warm->penalty;
  }

  constexpr int kMaxEscalations = 10;
  constexpr int kMaxRounds = 40;
  int escalations = 0;
  int iterations = 0;
  int rounds = 0;
  double last_c = std::numeric_limits<double>::infinity();
  double bc = std::numeric_limits<double>::infinity();
  double prev_value = std::numeric_limits<double>::infinity();
  for (; rounds < kMaxRounds; ++rounds) {
    auto* fn = new detail::ScaledObjective(disc, w);
    const auto scale = fn->scale();
    ceres::GradientProblem gp(fn);
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.max_lbfgs_rank = 30;
    opts.max_num_iterations = 20000;
    opts.function_tolerance = 1e-15;
    opts.gradient_tolerance = 1e-13;
    opts.parameter_tolerance = 1e-15;
    opts.logging_type = ceres::SILENT;
    std::vector<double> y(dim);
    for (int i = 0; i < dim; ++i) y[i] = x[i] * scale[i];
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opts, gp, y.data(), &summary);
    iterations += summary.iterations.empty() ? 0 : static_cast<int>(summary.iterations.size()) - 1;
    if (summary.termination_type == ceres::FAILURE && summary.final_cost >= summary.initial_cost &&
        summary.iterations.size() <= 1) {
      throw NoDescent("solve: line search made no progress at lambda_inv = " + std::to_string(lambda_inv) +
                      " (" + summary.message + ")");
    }
    for (int i = 0; i < dim; ++i) x[i] = y[i] / scale[i];

    detail::Discretization::State st;
    const double value = disc.evaluate(x.data(), nullptr, w, &st);
    const Eigen::Vector3d c = detail::axial(st.Q.back());
    bc = terminal_mismatch(detail::realize(problem.grid, drift, x).triad, problem.target);
    const bool settled = std::abs(prev_value - value) <= problem.tol.step_tol * std::max(1.0, std::abs(value));
    prev_value = value;
    if (bc <= problem.tol.bc_tol && c.norm() <= 0.1 * problem.tol.bc_tol && settled) break;
    w.nu += w.mu * c;
    if (c.norm() > 0.25 * last_c) {
      if (++escalations > kMaxEscalations) {
        throw BCUnreachable("solve: boundary triad not reached after " + std::to_string(kMaxEscalations) +
                            " penalty escalations (bc error " + std::to_string(bc) + ")");
      }
      w.mu *= 10.0;
    }
    last_c = c.norm();
  }
  if (bc > problem.tol.bc_tol) {
    throw BCUnreachable("solve: boundary triad not reached (bc error " + std::to_string(bc) + ")");
  }

  ControlSolution sol = make_solution(problem, x, lambda_inv);
  sol.multiplier = detail::pure(w.nu);
  sol.penalty = w.mu;
  sol.iterations = iterations;
  sol.penalty_rounds = rounds + 1;
  return sol;
}

struct SweepPoint {
  double lambda_inv = 0.0;
  std::optional<ControlSolution> solution;
  std::string error;  // non-empty when this point failed
};

/// Solves every lambda_inv of problem.continuation in order, warm-starting from the last
/// successful point. Failures are recorded and the sweep moves on.
inline std::vector<SweepPoint> sweep_lambda(const OptimizationProblem& problem) {
  const auto& lams = problem.continuation;
  if (lams.empty()) throw DomainError("sweep_lambda: continuation list is empty");
  for (std::size_t i = 0; i < lams.size(); ++i) {
    if (!(lams[i] >= 0.0) || (i > 0 && !(lams[i] > lams[i - 1]))) {
      throw DomainError("sweep_lambda: continuation must be non-negative and strictly increasing");
    }
  }
  std::vector<SweepPoint> out;
  std::optional<WarmStart> warm;
  for (double lam : lams) {
    OptimizationProblem p = problem;
    p.lambda_inv = lam;
    SweepPoint pt{lam, std::nullopt, {}};
    try {
      pt.solution = solve(p, warm);
      warm = WarmStart::from(*pt.solution);
    } catch (const Error& e) {
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace spinctl
