#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "critlab/app/commands.hpp"

using namespace critlab;
using namespace critlab::app;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out, format, cache_dir;
  std::optional<int> workers;
  std::optional<double> omega;
  bool no_cache = false;
};

RunConfig build_config(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.out) cfg.out_dir = *o.out;
  if (o.format) cfg.format = parse_format(*o.format, "--format");
  if (o.cache_dir) cfg.cache_dir = *o.cache_dir;
  if (o.workers) {
    if (*o.workers < 1) throw ConfigError("--workers", "must be at least 1");
    cfg.workers = *o.workers;
  }
  if (o.omega) cfg.problem.omega = *o.omega;
  if (o.no_cache) cfg.cache_enabled = false;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground states, spectra and mass curves for the radial NLS with a critical term"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--out", o.out, "output directory");
  app.add_option("-w,--workers", o.workers, "parallel workers for sweeps");
  app.add_option("-f,--format", o.format, "csv, json or both");
  app.add_option("--cache-dir", o.cache_dir, "cache directory");
  app.add_option("--omega", o.omega, "frequency for solve and spectrum");
  app.add_flag("--no-cache", o.no_cache, "compute everything afresh");

  auto* solve = app.add_subcommand("solve", "ground state at one frequency");
  auto* sweep = app.add_subcommand("sweep", "asymptotic sweep over the configured frequencies");
  auto* spectrum = app.add_subcommand("spectrum", "linearized spectra, instability and index");
  auto* mass = app.add_subcommand("mass", "mass curve and its derivative");
  auto* resolvent = app.add_subcommand("resolvent", "three-dimensional resolvent checks");
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  bool list = false;
  std::vector<int> only;
  verify->add_flag("--list", list, "print criterion ids and exit");
  verify->add_option("--only", only, "run only these criterion ids")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed() && list) {
      std::cout << list_criteria();
      return 0;
    }
    Context ctx(build_config(o));
    CommandResult r;
    if (solve->parsed()) r = cmd_solve(ctx);
    else if (sweep->parsed()) r = cmd_sweep(ctx);
    else if (spectrum->parsed()) r = cmd_spectrum(ctx);
    else if (mass->parsed()) r = cmd_mass(ctx);
    else if (resolvent->parsed()) r = cmd_resolvent(ctx);
    else {
      std::vector<int> ids = only.empty() ? all_criteria() : only;
      for (int id : ids)
        if (id < 1 || id > static_cast<int>(criterion_list().size()))
          throw ConfigError("--only", "no criterion with id " + std::to_string(id));
      r = cmd_verify(ctx, ids);
    }
    write_outputs(r, ctx.cfg);
    std::cout << r.summary;
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "critlab: " << e.what() << "\n";
    return 1;
  }
}
