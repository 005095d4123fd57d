#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "critlab/app/cache.hpp"
#include "critlab/groundstate.hpp"

namespace critlab::app {

enum class Format { csv, json, both };

inline std::string to_string(Format f) {
  switch (f) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    case Format::both: return "both";
  }
  return "both";
}

inline Format parse_format(const std::string& s, const std::string& key = "output.format") {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "both") return Format::both;
  throw ConfigError(key, "format must be csv, json or both, got '" + s + "'");
}

struct SpectrumOptions {
  int n = 500;                   // spectral grid size
  double core_fraction = 1e-2;
  int k = 5;                     // eigenpairs reported per operator
  double eigen_tol = 1e-8;       // relative classification threshold
  double witness_radius = 10.0;  // R_cut in rescaled units
};

struct MassOptions {
  double rel_step = 1e-3;  // delta / omega
};

struct ResolventOptions {
  double s = 1.5, q = 3.0;
  std::vector<double> lambdas;            // scaling check, geometric over [0.01, 1] when empty
  std::vector<double> expansion_lambdas;  // decreasing, geometric over [1e-3, 1e-2] when empty
  double probe_width = 2.0;               // Gaussian width of the expansion input
};

struct RunConfig {
  ProblemParams problem{};
  GridOptions grid{};
  ShootTolerances tol{};
  SpectrumOptions spectrum{};
  MassOptions mass{};
  ResolventOptions resolvent{};
  std::vector<double> omegas{10.0, 100.0, 1000.0, 10000.0};
  std::vector<double> q_list{4.0, 6.0, INFINITY};
  std::string out_dir = "critlab-out";
  Format format = Format::both;
  bool cache_enabled = true;
  std::string cache_dir = default_cache_dir();
  int workers = 1;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
  }
}

template <class T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key, std::string("bad value: ") + e.what());
  }
}

inline double exponent_value(const json& v, const std::string& key) {
  if (v.is_string() && (v == "inf" || v == "infinity")) return INFINITY;
  if (v.is_number()) return v.get<double>();
  throw ConfigError(key, "exponent must be a number or \"inf\"");
}

// Geometric list from {"start", "stop", "count"}.
inline std::vector<double> geometric(const json& j, const std::string& where) {
  check_keys(j, where, {"start", "stop", "count"});
  double a = 0, b = 0;
  int n = 0;
  read(j, where, "start", a);
  read(j, where, "stop", b);
  read(j, where, "count", n);
  if (!(a > 0 && b > 0 && n >= 2)) throw ConfigError(where, "range needs start, stop > 0 and count >= 2");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a * std::pow(b / a, double(i) / (n - 1)));
  return out;
}

}  // namespace detail

/// Checks that do not need any computation: admissible parameters and sane
/// numeric options.  Errors name the offending key.
inline void validate(const RunConfig& c) {
  try {
    critlab::validate(c.problem);
  } catch (const InvalidArgument& e) {
    const bool dim = c.problem.d < 3;
    throw ConfigError(dim ? "problem.d" : "problem.p", e.what());
  }
  if (c.grid.n < 16) throw ConfigError("grid.n", "need at least 16 nodes");
  if (!(c.grid.core_fraction > 0.0)) throw ConfigError("grid.core_fraction", "must be positive");
  if (!(c.grid.decay_lengths > 0.0)) throw ConfigError("grid.decay_lengths", "must be positive");
  if (!(c.tol.bracket > 0.0 && c.tol.residual > 0.0 && c.tol.ode_rtol > 0.0))
    throw ConfigError("tolerances", "tolerances must be positive");
  if (c.spectrum.n < 16) throw ConfigError("spectrum.n", "need at least 16 nodes");
  if (c.spectrum.k < 1) throw ConfigError("spectrum.k", "must be at least 1");
  if (c.omegas.empty()) throw ConfigError("sweep", "empty frequency list");
  for (std::size_t i = 0; i < c.omegas.size(); ++i) {
    if (!(c.omegas[i] > 0.0)) throw ConfigError("sweep.omegas", "frequencies must be positive");
    if (i > 0 && !(c.omegas[i] > c.omegas[i - 1])) throw ConfigError("sweep.omegas", "must increase");
  }
  if (!(c.mass.rel_step > 0.0 && c.mass.rel_step < 0.1)) throw ConfigError("mass.rel_step", "must lie in (0, 0.1)");
  if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
}

inline RunConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  check_keys(j, "", {"problem", "grid", "tolerances", "sweep", "spectrum", "mass", "resolvent",
                     "output", "cache", "workers"});
  if (j.contains("problem")) {
    const auto& s = j["problem"];
    check_keys(s, "problem", {"d", "p", "omega", "epsilon", "critical_on"});
    read(s, "problem", "d", c.problem.d);
    read(s, "problem", "p", c.problem.p);
    read(s, "problem", "omega", c.problem.omega);
    read(s, "problem", "epsilon", c.problem.epsilon);
    read(s, "problem", "critical_on", c.problem.critical_on);
  }
  if (j.contains("grid")) {
    const auto& s = j["grid"];
    check_keys(s, "grid", {"n", "spacing", "core_fraction", "decay_lengths", "r_cap"});
    read(s, "grid", "n", c.grid.n);
    if (s.contains("spacing")) {
      const auto sp = s["spacing"].get<std::string>();
      if (sp == "uniform") c.grid.spacing = Spacing::uniform;
      else if (sp == "graded") c.grid.spacing = Spacing::graded;
      else throw ConfigError("grid.spacing", "must be uniform or graded");
    }
    read(s, "grid", "core_fraction", c.grid.core_fraction);
    read(s, "grid", "decay_lengths", c.grid.decay_lengths);
    read(s, "grid", "r_cap", c.grid.r_cap);
  }
  if (j.contains("tolerances")) {
    const auto& s = j["tolerances"];
    check_keys(s, "tolerances", {"bracket", "residual", "ode_rtol", "eigen"});
    read(s, "tolerances", "bracket", c.tol.bracket);
    read(s, "tolerances", "residual", c.tol.residual);
    read(s, "tolerances", "ode_rtol", c.tol.ode_rtol);
    read(s, "tolerances", "eigen", c.spectrum.eigen_tol);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_keys(s, "sweep", {"omegas", "range", "q"});
    if (s.contains("omegas") && s.contains("range"))
      throw ConfigError("sweep", "give either omegas or range, not both");
    read(s, "sweep", "omegas", c.omegas);
    if (s.contains("range")) c.omegas = detail::geometric(s["range"], "sweep.range");
    if (s.contains("q")) {
      c.q_list.clear();
      for (const auto& v : s["q"]) c.q_list.push_back(detail::exponent_value(v, "sweep.q"));
    }
  }
  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    check_keys(s, "spectrum", {"n", "core_fraction", "k", "witness_radius"});
    read(s, "spectrum", "n", c.spectrum.n);
    read(s, "spectrum", "core_fraction", c.spectrum.core_fraction);
    read(s, "spectrum", "k", c.spectrum.k);
    read(s, "spectrum", "witness_radius", c.spectrum.witness_radius);
  }
  if (j.contains("mass")) {
    const auto& s = j["mass"];
    check_keys(s, "mass", {"rel_step"});
    read(s, "mass", "rel_step", c.mass.rel_step);
  }
  if (j.contains("resolvent")) {
    const auto& s = j["resolvent"];
    check_keys(s, "resolvent", {"s", "q", "lambdas", "expansion_lambdas", "probe_width"});
    read(s, "resolvent", "s", c.resolvent.s);
    if (s.contains("q")) c.resolvent.q = detail::exponent_value(s["q"], "resolvent.q");
    read(s, "resolvent", "lambdas", c.resolvent.lambdas);
    read(s, "resolvent", "expansion_lambdas", c.resolvent.expansion_lambdas);
    read(s, "resolvent", "probe_width", c.resolvent.probe_width);
  }
  if (j.contains("output")) {
    const auto& s = j["output"];
    check_keys(s, "output", {"directory", "format"});
    read(s, "output", "directory", c.out_dir);
    if (s.contains("format")) c.format = parse_format(s["format"].get<std::string>());
  }
  if (j.contains("cache")) {
    const auto& s = j["cache"];
    check_keys(s, "cache", {"enabled", "directory"});
    read(s, "cache", "enabled", c.cache_enabled);
    read(s, "cache", "directory", c.cache_dir);
  }
  read(j, "", "workers", c.workers);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
  return parse_config(j);
}

inline json exponent_json(double q) { return std::isinf(q) ? json("inf") : json(q); }

/// The configuration as it drives computation (output and cache locations
/// are left out so that they do not perturb report payloads).
inline json config_echo(const RunConfig& c) {
  json q = json::array();
  for (double v : c.q_list) q.push_back(exponent_json(v));
  return {
      {"problem", {{"d", c.problem.d}, {"p", c.problem.p}, {"omega", c.problem.omega},
                   {"epsilon", c.problem.epsilon}, {"critical_on", c.problem.critical_on}}},
      {"grid", {{"n", c.grid.n}, {"spacing", to_string(c.grid.spacing)},
                {"core_fraction", c.grid.core_fraction}, {"decay_lengths", c.grid.decay_lengths},
                {"r_cap", c.grid.r_cap}}},
      {"tolerances", {{"bracket", c.tol.bracket}, {"residual", c.tol.residual},
                      {"ode_rtol", c.tol.ode_rtol}, {"eigen", c.spectrum.eigen_tol}}},
      {"sweep", {{"omegas", c.omegas}, {"q", q}}},
      {"spectrum", {{"n", c.spectrum.n}, {"core_fraction", c.spectrum.core_fraction},
                    {"k", c.spectrum.k}, {"witness_radius", c.spectrum.witness_radius}}},
      {"mass", {{"rel_step", c.mass.rel_step}}},
      {"resolvent", {{"s", c.resolvent.s}, {"q", exponent_json(c.resolvent.q)},
                     {"lambdas", c.resolvent.lambdas},
                     {"expansion_lambdas", c.resolvent.expansion_lambdas},
                     {"probe_width", c.resolvent.probe_width}}},
  };
}

inline json grid_json(const GridOptions& g) {
  return {{"n", g.n}, {"spacing", to_string(g.spacing)}, {"core_fraction", g.core_fraction},
          {"decay_lengths", g.decay_lengths}, {"r_cap", g.r_cap}};
}

inline json tol_json(const ShootTolerances& t) {
  return {{"bracket", t.bracket}, {"residual", t.residual}, {"ode_rtol", t.ode_rtol}};
}

}  // namespace critlab::app
