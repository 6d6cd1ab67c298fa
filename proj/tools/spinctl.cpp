// spinctl: batch front end. Exit codes: 0 ok, 1 config error, 2 solver failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spinctl/config.hpp"
#include "spinctl/run.hpp"

namespace {

int run_kind(spinctl::RunKind kind, const std::string& path, int grid) {
  using namespace spinctl;
  RunConfig cfg;
  try {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path + ": cannot read config file"});
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config_text(ss.str());
    if (cfg.kind != kind) {
      throw ConfigError({std::string("kind: config is for '") + kind_name(cfg.kind) + "' but the subcommand is '" +
                         kind_name(kind) + "'"});
    }
    if (grid > 0) {
      if (grid < 2) throw ConfigError({"--grid: must be >= 2"});
      cfg.n_steps = grid;
    }
  } catch (const ConfigError& e) {
    std::cerr << "spinctl: " << e.what() << '\n';
    return 1;
  }
  if (const char* out = std::getenv("SPINCTL_OUT"); out && *out) cfg.output = out;
  try {
    const auto report = run(cfg, cfg.output);
    std::cout << "spinctl " << kind_name(kind) << ": wrote " << cfg.output << " ("
              << report["wall_clock_seconds"].get<double>() << " s)\n";
  } catch (const StageFailure& e) {
    std::cerr << "spinctl: failed in stage " << e.stage() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "spinctl: failed in stage " << kind_name(kind) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a spin under colored noise"};
  app.require_subcommand(1);
  int grid = 0;
  app.add_option("--grid", grid, "override the grid step count");
  std::string path;
  struct Sub {
    const char* name;
    spinctl::RunKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {"solve", spinctl::RunKind::solve, "optimal control at one lambda_inv"},
      {"sweep", spinctl::RunKind::sweep, "warm-started lambda_inv continuation"},
      {"mc-validate", spinctl::RunKind::mc_validate, "Monte Carlo fidelity against the weak-noise formula"},
      {"magnus-check", spinctl::RunKind::magnus_check, "m-equation against the time-ordered product"},
      {"kernel-table", spinctl::RunKind::kernel_table, "tabulate the noise kernel"},
  };
  std::vector<CLI::App*> cmds;
  for (const auto& s : subs) {
    auto* c = app.add_subcommand(s.name, s.help);
    c->add_option("config", path, "JSON config file")->required();
    c->add_option("--grid", grid, "override the grid step count");
    cmds.push_back(c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (cmds[i]->parsed()) return run_kind(subs[i].kind, path, grid);
  }
  return 1;
}
