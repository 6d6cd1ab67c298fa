#pragma once

// Experiment orchestration for the spinctl tool. Each run writes CSV/JSON files into the
// output directory and returns a report; numbers in CSV bodies depend only on the config.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinctl/config.hpp"
#include "spinctl/evolution.hpp"
#include "spinctl/fidelity.hpp"
#include "spinctl/magnus.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/optimizer.hpp"

namespace spinctl {

inline constexpr const char* kVersion = "0.1.0";

/// A computation stage failed after the config was accepted.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            const std::string& comment = {})
      : out_(path, std::ios::binary) {
    if (!out_) throw StageFailure("output", "cannot open " + path.string());
    if (!comment.empty()) out_ << "# " << comment << '\n';
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void values(const std::vector<double>& v) {
    std::vector<std::string> c;
    c.reserve(v.size());
    for (double x : v) c.push_back(num(x));
    row(c);
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageFailure("output", "cannot open " + path.string());
  out << j.dump(2) << '\n';
}

inline json vec_json(const PureQuat& p) { return json::array({p.x, p.y, p.z}); }

inline OptimizationProblem make_problem(const RunConfig& c) {
  OptimizationProblem p{c.kernel->build(), c.target->build(c.tau), TimeGrid(c.tau, c.n_steps)};
  p.refine_steps = c.refine_steps;
  return p;
}

/// Solves at `lambda_inv`, warm-starting through the listed lower values first.
inline ControlSolution solve_through(const OptimizationProblem& base, const std::vector<double>& path,
                                     double lambda_inv) {
  std::optional<WarmStart> warm;
  for (double lam : path) {
    OptimizationProblem p = base;
    p.lambda_inv = lam;
    warm = WarmStart::from(solve(p, warm));
  }
  OptimizationProblem p = base;
  p.lambda_inv = lambda_inv;
  return solve(p, warm);
}

inline std::string refine_comment(const ControlSolution& s) {
  return "n_steps=" + std::to_string(s.triad.grid().n_steps()) + " refine_steps=" + std::to_string(s.refine_steps) +
         " S_refine_delta=" + num(s.S_refine_delta);
}

inline std::vector<std::string> control_header(bool with_lambda) {
  std::vector<std::string> h{"t", "omega_x", "omega_y", "omega_z", "d_omega_x", "d_omega_y", "d_omega_z"};
  if (with_lambda) h.insert(h.begin(), "lambda_inv");
  return h;
}

inline void control_rows(CsvWriter& w, const ControlSolution& s, std::optional<double> lambda) {
  const auto& g = s.triad.grid();
  for (int k = 0; k < g.nodes(); ++k) {
    const PureQuat& o = s.control.omega_lab[k];
    const PureQuat& d = s.delta_omega[k];
    std::vector<double> v{g.t(k), o.x, o.y, o.z, d.x, d.y, d.z};
    if (lambda) v.insert(v.begin(), *lambda);
    w.values(v);
  }
}

inline json solution_summary(const ControlSolution& s) {
  return {{"lambda_inv", s.lambda_inv},
          {"S", s.S},
          {"S_c", s.S_c},
          {"E_out", s.E_out},
          {"el_residual", s.el_residual},
          {"bc_error", s.bc_error},
          {"certified", s.certified},
          {"iterations", s.iterations},
          {"penalty_rounds", s.penalty_rounds},
          {"refine_steps", s.refine_steps},
          {"S_refine_delta", s.S_refine_delta},
          {"bc_error_refined", s.bc_error_refined}};
}

inline json solution_json(const RunConfig& c, const OptimizationProblem& p, const ControlSolution& s) {
  json j;
  j["config"] = to_json(c);
  j["drift"] = vec_json(p.drift());
  j["target"] = {{"angle", p.target.angle()}, {"winding", p.target.winding()}};
  if (p.target.axis()) j["target"]["axis"] = vec_json(*p.target.axis());
  j["summary"] = solution_summary(s);
  json t = json::array(), rot = json::array(), lab = json::array(), dw = json::array(), u = json::array();
  const auto& g = s.triad.grid();
  for (int k = 0; k < g.nodes(); ++k) {
    t.push_back(g.t(k));
    rot.push_back(vec_json(s.control.omega_rot[k]));
    lab.push_back(vec_json(s.control.omega_lab[k]));
    dw.push_back(vec_json(s.delta_omega[k]));
    const UnitQuat& q = s.triad.u(k);
    u.push_back(json::array({q.w(), q.x(), q.y(), q.z()}));
  }
  j["nodes"] = {{"t", t}, {"omega_rot", rot}, {"omega_lab", lab}, {"delta_omega", dw}, {"triad_quaternion", u}};
  return j;
}

inline json run_solve(const RunConfig& c, const std::filesystem::path& dir) {
  const auto p = make_problem(c);
  ControlSolution s = [&] {
    try {
      return solve_through(p, c.continuation, c.lambda_inv.front());
    } catch (const Error& e) {
      throw StageFailure("solve", e.what());
    }
  }();
  write_json(dir / "solution.json", solution_json(c, p, s));
  CsvWriter w(dir / "controls.csv", control_header(false), refine_comment(s));
  control_rows(w, s, std::nullopt);
  return json::array({solution_summary(s)});
}

inline json run_sweep(const RunConfig& c, const std::filesystem::path& dir, std::vector<std::string>& errors) {
  auto p = make_problem(c);
  p.continuation = c.lambda_inv;
  const auto points = sweep_lambda(p);
  std::vector<int> spins = c.spins.empty() ? std::vector<int>{1} : c.spins;
  std::vector<std::string> header{"lambda_inv", "S", "E_out", "S_c", "el_residual", "bc_error", "certified",
                                  "S_refine_delta"};
  for (int s : spins) {
    for (double e : c.epsilon) header.push_back("F_s" + short_num(0.5 * s) + "_eps" + short_num(e));
  }
  const int fine = points.empty() || !points.front().solution ? c.refine_steps : points.front().solution->refine_steps;
  CsvWriter w(dir / "sweep.csv", header,
              "n_steps=" + std::to_string(c.n_steps) + " refine_steps=" + std::to_string(fine) +
                  " (S_refine_delta per row)");
  CsvWriter cw(dir / "controls.csv", control_header(true), "n_steps=" + std::to_string(c.n_steps));
  json rows = json::array();
  for (const auto& pt : points) {
    if (!pt.solution) {
      errors.push_back("sweep at lambda_inv=" + num(pt.lambda_inv) + ": " + pt.error);
      rows.push_back({{"lambda_inv", pt.lambda_inv}, {"error", pt.error}});
      continue;
    }
    const auto& s = *pt.solution;
    std::vector<std::string> cells{num(s.lambda_inv), num(s.S), num(s.E_out), num(s.S_c), num(s.el_residual),
                                   num(s.bc_error), s.certified ? "1" : "0", num(s.S_refine_delta)};
    json row = solution_summary(s);
    json f = json::array();
    for (int sp : spins) {
      for (double e : c.epsilon) {
        const double F = fidelity_weak(SpinNumber(sp), EpsilonStrength(e), s.S);
        cells.push_back(num(F));
        f.push_back({{"s", 0.5 * sp}, {"epsilon", e}, {"F", F}});
      }
    }
    row["fidelity"] = f;
    rows.push_back(row);
    w.row(cells);
    control_rows(cw, s, s.lambda_inv);
  }
  return rows;
}

inline json run_mc(const RunConfig& c, const std::filesystem::path& dir) {
  const auto p = make_problem(c);
  const double lam = c.lambda_inv.empty() ? 0.0 : c.lambda_inv.front();
  ControlSolution s = [&] {
    try {
      return solve_through(p, c.continuation, lam);
    } catch (const Error& e) {
      throw StageFailure("solve", e.what());
    }
  }();
  std::vector<SpinNumber> spins;
  for (int v : c.spins) spins.emplace_back(v);
  CsvWriter w(dir / "mc.csv",
              {"epsilon", "s", "S_analytic", "F_analytic", "F_mc_real", "F_mc_imag", "std_err", "samples", "seed"});
  json rows = json::array();
  for (double e : c.epsilon) {
    std::vector<FidelityEstimate> est;
    try {
      est = mc_fidelity(s.triad, p.kernel, EpsilonStrength(e), spins, c.samples, *c.seed);
    } catch (const Error& err) {
      throw StageFailure("mc-sampling", err.what());
    }
    for (const auto& f : est) {
      w.row({num(e), num(f.spin.s()), num(f.S), num(f.analytic_prediction), num(f.mean.real()), num(f.mean.imag()),
             num(f.std_error), std::to_string(f.samples), std::to_string(*c.seed)});
      rows.push_back({{"epsilon", e},
                      {"s", f.spin.s()},
                      {"S_analytic", f.S},
                      {"F_analytic", f.analytic_prediction},
                      {"F_mc_real", f.mean.real()},
                      {"F_mc_imag", f.mean.imag()},
                      {"std_err", f.std_error},
                      {"samples", f.samples}});
    }
  }
  return rows;
}

inline json run_magnus(const RunConfig& c, const std::filesystem::path& dir) {
  const TimeGrid g(c.tau, c.n_steps);
  CsvWriter w(dir / "magnus.csv", {"path", "epsilon", "n_steps", "ode_vs_product", "iterate_vs_ode"});
  json rows = json::array();
  for (int i = 0; i < c.paths; ++i) {
    const PurePath n = random_smooth_path(g, *c.seed, static_cast<std::uint64_t>(i), 1.0 / c.tau);
    for (double e : c.epsilon) {
      const EpsilonStrength eps(e);
      double ode = 0.0;
      double iter = 0.0;
      try {
        const PurePath m = solve_m_ode(n, eps);
        const Quat diff = Quat(qexp((0.5 * e) * m.back())) - Quat(time_ordered_exp(n, eps));
        ode = norm(diff);
        iter = sup_distance(magnus_iterate(n, eps, 12).m, m);
      } catch (const Error& err) {
        throw StageFailure("magnus-check", err.what());
      }
      w.values({static_cast<double>(i), e, static_cast<double>(c.n_steps), ode, iter});
      rows.push_back({{"path", i}, {"epsilon", e}, {"ode_vs_product", ode}, {"iterate_vs_ode", iter}});
    }
  }
  return rows;
}

inline json run_kernel_table(const RunConfig& c, const std::filesystem::path& dir) {
  const NoiseKernel k = c.kernel->build();
  CsvWriter w(dir / "kernel.csv", {"s", "N_xx"});
  json rows = json::array();
  const auto r1 = k.rank_one();
  for (int i = 0; i < c.points; ++i) {
    const double s = c.s_max * i / (c.points - 1);
    // For an axis-aligned kernel N_xx is the entry along its own axis.
    const double v = r1 ? r1->first(s) : k(s)(0, 0);
    w.values({s, v});
    rows.push_back({{"s", s}, {"N_xx", v}});
  }
  return rows;
}

}  // namespace detail

/// Runs the experiment described by `c` into `dir` and writes report.json there.
/// Throws StageFailure naming the stage when a computation fails; for sweeps all
/// points are attempted and written before the failure is raised.
inline json run(const RunConfig& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StageFailure("output", "cannot create " + dir.string() + ": " + ec.message());
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> errors;
  json rows;
  switch (c.kind) {
    case RunKind::solve: rows = detail::run_solve(c, dir); break;
    case RunKind::sweep: rows = detail::run_sweep(c, dir, errors); break;
    case RunKind::mc_validate: rows = detail::run_mc(c, dir); break;
    case RunKind::magnus_check: rows = detail::run_magnus(c, dir); break;
    case RunKind::kernel_table: rows = detail::run_kernel_table(c, dir); break;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json report;
  report["tool"] = "spinctl";
  report["version"] = kVersion;
  report["wall_clock_seconds"] = seconds;
  report["config"] = to_json(c);
  report["rows"] = rows;
  report["errors"] = errors;
  detail::write_json(dir / "report.json", report);
  if (!errors.empty()) throw StageFailure("sweep", errors.front());
  return report;
}

}  // namespace spinctl
