#pragma once

// Run configuration for the spinctl tool: a JSON document, schema-checked in full before
// anything is computed. Every violation is collected so one run reports all of them.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinctl/errors.hpp"
#include "spinctl/evolution.hpp"
#include "spinctl/noise.hpp"

namespace spinctl {

using json = nlohmann::ordered_json;

enum class RunKind { solve, sweep, mc_validate, magnus_check, kernel_table };

inline const char* kind_name(RunKind k) {
  switch (k) {
    case RunKind::solve: return "solve";
    case RunKind::sweep: return "sweep";
    case RunKind::mc_validate: return "mc-validate";
    case RunKind::magnus_check: return "magnus-check";
    case RunKind::kernel_table: return "kernel-table";
  }
  return "?";
}

inline std::optional<RunKind> parse_kind(const std::string& s) {
  for (RunKind k : {RunKind::solve, RunKind::sweep, RunKind::mc_validate, RunKind::magnus_check,
                    RunKind::kernel_table}) {
    if (s == kind_name(k)) return k;
  }
  return std::nullopt;
}

using Vec3 = std::array<double, 3>;

struct KernelSpec {
  std::string type = "one_over_f";  // one_over_f | diagonal_constant | zero
  double xi = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  Vec3 axis{1.0, 0.0, 0.0};
  Vec3 kappa{0.0, 0.0, 0.0};

  NoiseKernel build() const {
    if (type == "one_over_f") return NoiseKernel::one_over_f(xi, gamma_lo, gamma_hi, {axis[0], axis[1], axis[2]});
    if (type == "diagonal_constant") return NoiseKernel::diagonal_constant(kappa);
    return NoiseKernel::zero();
  }
};

/// Either an explicit rotation (axis, angle, winding) or the rotation produced by a
/// constant drift field over [0, tau].
struct TargetSpec {
  std::optional<Vec3> drift;
  std::optional<Vec3> axis;
  double angle = 0.0;
  int winding = 0;

  TargetRotation build(double tau) const {
    if (drift) return TargetRotation::from_drift({(*drift)[0], (*drift)[1], (*drift)[2]}, tau);
    std::optional<PureQuat> a;
    if (axis) a = PureQuat{(*axis)[0], (*axis)[1], (*axis)[2]};
    return TargetRotation(a, angle, winding);
  }
};

struct RunConfig {
  RunKind kind = RunKind::solve;
  std::optional<KernelSpec> kernel;
  std::optional<TargetSpec> target;
  double tau = 1.0;
  std::vector<double> lambda_inv;   // solve: one value; sweep: continuation list
  std::vector<double> continuation;  // solve only: warm-start path before lambda_inv
  std::vector<double> epsilon;
  std::vector<int> spins;  // two_s values
  int n_steps = 512;
  int refine_steps = 2048;
  std::optional<std::uint64_t> seed;
  int samples = 0;  // mc-validate
  int paths = 0;    // magnus-check
  double s_max = 0.0;  // kernel-table
  int points = 0;      // kernel-table
  std::string output = "out";
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string s = "invalid configuration:";
    for (const auto& x : d) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> diagnostics_;
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> diag;

  void fail(const std::string& field, const std::string& what) { diag.push_back(field + ": " + what); }

  /// Reports keys of `obj` outside `allowed`.
  void only(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
  }

  std::optional<double> number(const json& obj, const std::string& where, const char* key, bool required) {
    const std::string f = where.empty() ? key : where + "." + key;
    if (!obj.contains(key)) {
      if (required) fail(f, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      fail(f, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<long long> integer(const json& obj, const std::string& where, const char* key, bool required) {
    const std::string f = where.empty() ? key : where + "." + key;
    if (!obj.contains(key)) {
      if (required) fail(f, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(f, "expected an integer");
      return std::nullopt;
    }
    return v.get<long long>();
  }

  std::optional<Vec3> vec3(const json& obj, const std::string& where, const char* key, bool required) {
    const std::string f = where.empty() ? key : where + "." + key;
    if (!obj.contains(key)) {
      if (required) fail(f, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 3) {
      fail(f, "expected an array of 3 numbers");
      return std::nullopt;
    }
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) {
        fail(f, "expected an array of 3 numbers");
        return std::nullopt;
      }
      out[i] = v[i].get<double>();
    }
    return out;
  }

  template <class T>
  std::optional<std::vector<T>> list(const json& obj, const std::string& where, const char* key, bool required) {
    const std::string f = where.empty() ? key : where + "." + key;
    if (!obj.contains(key)) {
      if (required) fail(f, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      fail(f, "expected a non-empty array");
      return std::nullopt;
    }
    std::vector<T> out;
    for (const auto& e : v) {
      const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
      if (!ok) {
        fail(f, std::is_integral_v<T> ? "expected integers" : "expected numbers");
        return std::nullopt;
      }
      out.push_back(e.get<T>());
    }
    return out;
  }
};

inline KernelSpec read_kernel(ConfigReader& r, const json& j) {
  KernelSpec k;
  if (!j.is_object()) {
    r.fail("kernel", "expected an object");
    return k;
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    r.fail("kernel.type", "missing required field (one_over_f, diagonal_constant or zero)");
    return k;
  }
  k.type = j["type"].get<std::string>();
  if (k.type == "one_over_f") {
    r.only(j, "kernel", {"type", "xi", "gamma_lo", "gamma_hi", "axis"});
    const auto xi = r.number(j, "kernel", "xi", true);
    const auto lo = r.number(j, "kernel", "gamma_lo", true);
    const auto hi = r.number(j, "kernel", "gamma_hi", true);
    if (xi) {
      k.xi = *xi;
      if (!(k.xi > 0.0)) r.fail("kernel.xi", "must be > 0");
    }
    if (lo) {
      k.gamma_lo = *lo;
      if (!(k.gamma_lo > 0.0)) r.fail("kernel.gamma_lo", "must be > 0");
    }
    if (hi) k.gamma_hi = *hi;
    if (lo && hi && !(k.gamma_lo < k.gamma_hi)) {
      r.fail("kernel.gamma_lo", "cutoff order violated: gamma_lo must be < gamma_hi");
    }
    if (auto a = r.vec3(j, "kernel", "axis", false)) {
      k.axis = *a;
      if ((*a)[0] == 0.0 && (*a)[1] == 0.0 && (*a)[2] == 0.0) r.fail("kernel.axis", "must be non-zero");
    }
  } else if (k.type == "diagonal_constant") {
    r.only(j, "kernel", {"type", "kappa"});
    if (auto kap = r.vec3(j, "kernel", "kappa", true)) {
      k.kappa = *kap;
      for (double v : k.kappa) {
        if (!(v >= 0.0)) r.fail("kernel.kappa", "entries must be >= 0");
      }
    }
  } else if (k.type == "zero") {
    r.only(j, "kernel", {"type"});
  } else {
    r.fail("kernel.type", "unknown kernel type '" + k.type + "'");
  }
  return k;
}

inline TargetSpec read_target(ConfigReader& r, const json& j) {
  TargetSpec t;
  if (!j.is_object()) {
    r.fail("target", "expected an object");
    return t;
  }
  r.only(j, "target", {"drift", "axis", "angle", "winding"});
  if (j.contains("drift")) {
    t.drift = r.vec3(j, "target", "drift", true);
    if (j.contains("axis") || j.contains("angle") || j.contains("winding")) {
      r.fail("target", "give either drift or axis/angle/winding, not both");
    }
    return t;
  }
  t.axis = r.vec3(j, "target", "axis", false);
  if (auto a = r.number(j, "target", "angle", true)) t.angle = *a;
  if (auto w = r.integer(j, "target", "winding", false)) t.winding = static_cast<int>(*w);
  if (!t.axis && (t.angle != 0.0 || t.winding != 0)) r.fail("target.axis", "required for a non-trivial target");
  return t;
}

}  // namespace detail

/// Byte offset to "line L, column C" for parse diagnostics.
inline std::string text_position(const std::string& text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Full schema and physics check. Throws ConfigError listing every violation.
inline RunConfig parse_config(const json& j) {
  detail::ConfigReader r;
  RunConfig c;
  if (!j.is_object()) throw ConfigError({"<root>: expected a JSON object"});
  r.only(j, "", {"kind", "kernel", "target", "tau", "lambda_inv", "continuation", "epsilon", "spins", "grid",
                 "seed", "samples", "paths", "table", "output"});

  if (!j.contains("kind") || !j["kind"].is_string()) {
    r.fail("kind", "missing required field");
    throw ConfigError(r.diag);
  }
  const auto kind = parse_kind(j["kind"].get<std::string>());
  if (!kind) {
    r.fail("kind", "unknown experiment kind '" + j["kind"].get<std::string>() + "'");
    throw ConfigError(r.diag);
  }
  c.kind = *kind;
  const bool needs_physics = c.kind == RunKind::solve || c.kind == RunKind::sweep || c.kind == RunKind::mc_validate;

  if (j.contains("kernel")) {
    c.kernel = detail::read_kernel(r, j["kernel"]);
  } else if (needs_physics || c.kind == RunKind::kernel_table) {
    r.fail("kernel", "missing required field");
  }
  if (auto tau = r.number(j, "", "tau", needs_physics || c.kind == RunKind::magnus_check)) {
    c.tau = *tau;
    if (!(c.tau > 0.0)) r.fail("tau", "must be > 0");
  }
  if (j.contains("target")) {
    c.target = detail::read_target(r, j["target"]);
  } else if (needs_physics) {
    r.fail("target", "missing required field");
  }

  if (j.contains("lambda_inv")) {
    if (c.kind == RunKind::sweep) {
      if (auto l = r.list<double>(j, "", "lambda_inv", true)) c.lambda_inv = *l;
    } else if (auto l = r.number(j, "", "lambda_inv", true)) {
      c.lambda_inv = {*l};
    }
  } else if (c.kind == RunKind::solve || c.kind == RunKind::sweep) {
    r.fail("lambda_inv", "missing required field");
  }
  for (std::size_t i = 0; i < c.lambda_inv.size(); ++i) {
    if (!(c.lambda_inv[i] >= 0.0)) r.fail("lambda_inv", "values must be >= 0");
    if (i > 0 && !(c.lambda_inv[i] > c.lambda_inv[i - 1])) r.fail("lambda_inv", "must be strictly increasing");
  }
  if (auto l = r.list<double>(j, "", "continuation", false)) {
    c.continuation = *l;
    for (std::size_t i = 0; i < c.continuation.size(); ++i) {
      if (!(c.continuation[i] >= 0.0) || (i > 0 && !(c.continuation[i] > c.continuation[i - 1]))) {
        r.fail("continuation", "must be non-negative and strictly increasing");
        break;
      }
    }
    if (!c.lambda_inv.empty() && !c.continuation.empty() && !(c.continuation.back() < c.lambda_inv.front())) {
      r.fail("continuation", "values must lie below lambda_inv");
    }
  }

  const bool needs_eps = c.kind == RunKind::sweep || c.kind == RunKind::mc_validate || c.kind == RunKind::magnus_check;
  if (auto e = r.list<double>(j, "", "epsilon", needs_eps && c.kind != RunKind::sweep)) {
    c.epsilon = *e;
    for (double v : c.epsilon) {
      if (!(v >= 0.0) || !std::isfinite(v)) r.fail("epsilon", "values must be finite and >= 0");
    }
  }
  if (auto s = r.list<int>(j, "", "spins", c.kind == RunKind::mc_validate)) {
    c.spins = *s;
    for (int v : c.spins) {
      if (v < 1) r.fail("spins", "two_s must be >= 1");
    }
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_object()) {
      r.fail("grid", "expected an object");
    } else {
      r.only(g, "grid", {"n_steps", "refine_steps"});
      if (auto n = r.integer(g, "grid", "n_steps", false)) {
        c.n_steps = static_cast<int>(*n);
        if (*n < 2) r.fail("grid.n_steps", "must be >= 2");
      }
      if (auto n = r.integer(g, "grid", "refine_steps", false)) {
        c.refine_steps = static_cast<int>(*n);
        if (*n != 0 && *n < 2) r.fail("grid.refine_steps", "must be 0 (off) or >= 2");
      }
    }
  }

  const bool needs_seed = c.kind == RunKind::mc_validate || c.kind == RunKind::magnus_check;
  if (auto s = r.integer(j, "", "seed", needs_seed)) {
    if (*s < 0) {
      r.fail("seed", "must be >= 0");
    } else {
      c.seed = static_cast<std::uint64_t>(*s);
    }
  }
  if (auto s = r.integer(j, "", "samples", c.kind == RunKind::mc_validate)) {
    c.samples = static_cast<int>(*s);
    if (*s < 2) r.fail("samples", "must be >= 2");
  }
  if (auto p = r.integer(j, "", "paths", c.kind == RunKind::magnus_check)) {
    c.paths = static_cast<int>(*p);
    if (*p < 1) r.fail("paths", "must be >= 1");
  }
  if (j.contains("table")) {
    const auto& t = j["table"];
    if (!t.is_object()) {
      r.fail("table", "expected an object");
    } else {
      r.only(t, "table", {"s_max", "points"});
      if (auto s = r.number(t, "table", "s_max", true)) {
        c.s_max = *s;
        if (!(c.s_max > 0.0)) r.fail("table.s_max", "must be > 0");
      }
      if (auto p = r.integer(t, "table", "points", true)) {
        c.points = static_cast<int>(*p);
        if (*p < 2) r.fail("table.points", "must be >= 2");
      }
    }
  } else if (c.kind == RunKind::kernel_table) {
    r.fail("table", "missing required field");
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) {
      r.fail("output", "expected a string");
    } else {
      c.output = j["output"].get<std::string>();
    }
  }

  if (!r.diag.empty()) throw ConfigError(r.diag);
  return c;
}

/// Parses JSON text; syntax errors are reported with their line and column.
inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({"<syntax> " + text_position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what()});
  }
  return parse_config(j);
}

inline json to_json(const RunConfig& c) {
  json j;
  j["kind"] = kind_name(c.kind);
  if (c.kernel) {
    json k;
    k["type"] = c.kernel->type;
    if (c.kernel->type == "one_over_f") {
      k["xi"] = c.kernel->xi;
      k["gamma_lo"] = c.kernel->gamma_lo;
      k["gamma_hi"] = c.kernel->gamma_hi;
      k["axis"] = c.kernel->axis;
    } else if (c.kernel->type == "diagonal_constant") {
      k["kappa"] = c.kernel->kappa;
    }
    j["kernel"] = k;
  }
  if (c.target) {
    json t;
    if (c.target->drift) {
      t["drift"] = *c.target->drift;
    } else {
      if (c.target->axis) t["axis"] = *c.target->axis;
      t["angle"] = c.target->angle;
      t["winding"] = c.target->winding;
    }
    j["target"] = t;
  }
  j["tau"] = c.tau;
  if (!c.lambda_inv.empty()) {
    if (c.kind == RunKind::sweep) {
      j["lambda_inv"] = c.lambda_inv;
    } else {
      j["lambda_inv"] = c.lambda_inv.front();
    }
  }
  if (!c.continuation.empty()) j["continuation"] = c.continuation;
  if (!c.epsilon.empty()) j["epsilon"] = c.epsilon;
  if (!c.spins.empty()) j["spins"] = c.spins;
  j["grid"] = {{"n_steps", c.n_steps}, {"refine_steps", c.refine_steps}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.kind == RunKind::mc_validate) j["samples"] = c.samples;
  if (c.kind == RunKind::magnus_check) j["paths"] = c.paths;
  if (c.kind == RunKind::kernel_table) j["table"] = {{"s_max", c.s_max}, {"points", c.points}};
  j["output"] = c.output;
  return j;
}

}  // namespace spinctl
