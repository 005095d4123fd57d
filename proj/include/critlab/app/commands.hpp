#pragma once

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "critlab/app/acceptance.hpp"

namespace critlab::app {

inline constexpr const char* kSchemaVersion = "critlab.report/1";

struct CommandResult {
  json report;
  std::vector<std::pair<std::string, std::string>> csv;  // file name, content
  std::string summary;
  int exit_code = 0;
};

/// A compute failure tagged with the task and frequency it belongs to.
class TaskError : public Error {
 public:
  TaskError(const std::string& task, double omega, const std::string& what)
      : Error("task=" + task + " omega=" + num(omega) + ": " + what) {}
};

template <class F>
auto tagged(const std::string& task, double omega, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw TaskError(task, omega, e.what());
  }
}

inline json new_report(const std::string& command, const Context& ctx) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"config", config_echo(ctx.cfg)},
          {"provenance", {{"grid_hash", hash_of(grid_json(ctx.cfg.grid))},
                          {"tolerance_hash", hash_of(tol_json(ctx.cfg.tol))}}},
          {"results", json::object()},
          {"checks", json::array()}};
}

inline CommandResult start(const std::string& command, const Context& ctx) {
  CommandResult r;
  r.report = new_report(command, ctx);
  return r;
}

/// Report without its run section (wall time, timestamps, cache counters).
inline json payload(const json& report) {
  json p = report;
  p.erase("run");
  return p;
}

inline std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void finish(CommandResult& r, const Context& ctx, double seconds, json extra = json::object()) {
  bool ok = true;
  for (const auto& c : r.report["checks"]) ok = ok && c.at("passed").get<bool>();
  r.exit_code = ok ? 0 : 2;
  json run{{"wall_time", seconds}, {"timestamp", utc_timestamp()},
           {"cache", {{"enabled", ctx.cache->enabled()}, {"hits", ctx.cache->hits()},
                      {"misses", ctx.cache->misses()}, {"corrupt_dropped", ctx.cache->corrupt()}}}};
  for (auto& [k, v] : extra.items()) run[k] = v;
  r.report["run"] = run;
  std::ostringstream os;
  for (const auto& c : r.report["checks"]) {
    os << (c.at("passed").get<bool>() ? "[PASS] " : "[FAIL] ") << c.at("name").get<std::string>()
       << ": measured " << c.at("measured").dump() << ", required " << c.at("required").get<std::string>()
       << "\n";
  }
  r.summary = os.str() + r.summary;
}

inline void add_checks(json& report, const std::vector<Check>& checks) {
  for (const auto& c : checks) report["checks"].push_back(c);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline CommandResult cmd_solve(Context& ctx) {
  Stopwatch sw;
  CommandResult r = start("solve", ctx);
  const auto& pp = ctx.cfg.problem;
  const auto gs = tagged("solve", pp.omega, [&] { return cached_shoot(ctx, pp); });
  r.report["results"]["solution"] = summary_json(gs);
  r.report["results"]["profile"] = {{"r", gs.field.grid->nodes()},
                                    {"u", std::vector<double>(gs.field.values.begin(), gs.field.values.end())}};
  add_checks(r.report, criteria::solution_checks(gs, "solution", ctx.cfg.tol.residual));
  std::ostringstream csv;
  csv << "r,u\n";
  for (std::size_t i = 0; i < gs.field.size(); ++i)
    csv << csv_number(gs.field.grid->r(i)) << "," << csv_number(gs.field[i]) << "\n";
  r.csv.push_back({"profile.csv", csv.str()});
  std::ostringstream os;
  os << "M = " << csv_number(gs.M) << "  residual = " << gs.residual << "  decay = " << gs.decay_rate << "\n";
  r.summary = os.str();
  finish(r, ctx, sw.seconds());
  return r;
}

/// Spectral properties per sampled frequency and the smallest frequency at
/// which each holds.  Observational only: nothing here is asserted.
inline json spectral_onset(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double et = cfg.spectrum.eigen_tol;
  struct Row {
    bool single_negative = false, minus_nonnegative = false, unstable = false;
  };
  std::vector<Row> rows(cfg.omegas.size());
  parallel_for(cfg.omegas.size(), cfg.workers, [&](std::size_t i) {
    ProblemParams pp = cfg.problem;
    pp.omega = cfg.omegas[i];
    const auto gs = tagged("onset", pp.omega, [&] { return cached_shoot(ctx, pp, spectral_options(cfg)); });
    const auto plus = eigs(assemble(OperatorKind::plus, gs), 2, et);
    const auto minus = eigs(assemble(OperatorKind::minus, gs), 1, et);
    rows[i].single_negative = plus.neg_count == 1;
    rows[i].minus_nonnegative = minus.eigenvalues[0] >= -minus.tol;
    if (pp.critical_on) rows[i].unstable = unstable_eigenvalue(minus_basis(rescale(gs)), false).nu < 0.0;
  });
  json per = json::array();
  json first{{"plus_single_negative", nullptr}, {"minus_nonnegative", nullptr}, {"unstable", nullptr}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json row{{"omega", cfg.omegas[i]},
                   {"plus_single_negative", rows[i].single_negative},
                   {"minus_nonnegative", rows[i].minus_nonnegative},
                   {"unstable", rows[i].unstable}};
    per.push_back(row);
    for (auto& [k, v] : first.items())
      if (v.is_null() && row.at(k).get<bool>()) v = cfg.omegas[i];
  }
  return {{"samples", per}, {"first_observed", first}};
}

inline CommandResult cmd_sweep(Context& ctx) {
  Stopwatch sw;
  CommandResult r = start("sweep", ctx);
  const auto& cfg = ctx.cfg;
  const double qmin = cfg.problem.d / (cfg.problem.d - 2.0);
  for (double q : cfg.q_list)
    if (!(q > qmin)) throw ConfigError("sweep.q", "exponents must exceed d/(d-2)");
  AsymptoticSweep sweep{cfg.problem, std::vector<SweepEntry>(cfg.omegas.size())};
  std::vector<GroundStateSolution> sols(cfg.omegas.size());
  parallel_for(cfg.omegas.size(), cfg.workers, [&](std::size_t i) {
    ProblemParams pp = cfg.problem;
    pp.omega = cfg.omegas[i];
    sols[i] = tagged("sweep", pp.omega, [&] { return cached_shoot(ctx, pp); });
    sweep.entries[i] = sweep_entry(sols[i], cfg.q_list);
  });
  r.report["results"]["sweep"] = sweep_json(sweep);
  std::vector<Check> checks;
  bool h1_dec = true, alpha_dec = true, beta_dec = true;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    checks.push_back(check_le("omega=" + num(cfg.omegas[i]) + " residual", sols[i].residual, cfg.tol.residual));
    if (i > 0) {
      h1_dec = h1_dec && sweep.entries[i].h1_dev < sweep.entries[i - 1].h1_dev;
      alpha_dec = alpha_dec && sweep.entries[i].alpha < sweep.entries[i - 1].alpha;
      beta_dec = beta_dec && sweep.entries[i].beta < sweep.entries[i - 1].beta;
    }
  }
  if (cfg.problem.critical_on) checks.push_back(check_true("Hdot1 deviation strictly decreasing", h1_dec));
  // Monotonicity of alpha and beta is reported, not asserted.
  r.report["results"]["monotone"] = {{"alpha", alpha_dec}, {"beta", beta_dec}, {"h1_dev", h1_dec}};
  try {
    const auto fit = cg_scaling_fit(sweep);
    r.report["results"]["cg_fit"] = cg_json(fit);
    checks.push_back(check_near("alpha vs beta slope", fit.alpha_beta.slope, 2.0, 0.1));
    checks.push_back(check_le("prefactor relative error", fit.prefactor_rel_error, 0.15));
  } catch (const InvalidArgument& e) {
    r.report["results"]["cg_fit"] = {{"skipped", e.what()}};
  }
  r.report["results"]["onset"] = spectral_onset(ctx);
  add_checks(r.report, checks);
  std::ostringstream csv;
  csv << "omega,M,alpha,beta,residual,h1_dev";
  for (double q : cfg.q_list) csv << ",l" << exponent_key(q) << "_dev";
  csv << ",c_dec\n";
  for (const auto& e : sweep.entries) {
    csv << csv_number(e.omega) << "," << csv_number(e.M) << "," << csv_number(e.alpha) << ","
        << csv_number(e.beta) << "," << csv_number(e.residual) << "," << csv_number(e.h1_dev);
    for (double q : cfg.q_list) csv << "," << csv_number(e.lq_dev.at(q));
    csv << "," << csv_number(e.c_dec) << "\n";
  }
  r.csv.push_back({"sweep.csv", csv.str()});
  finish(r, ctx, sw.seconds());
  return r;
}

inline CommandResult cmd_spectrum(Context& ctx) {
  Stopwatch sw;
  CommandResult r = start("spectrum", ctx);
  const auto& cfg = ctx.cfg;
  const auto& pp = cfg.problem;
  const double et = cfg.spectrum.eigen_tol;
  const auto gs = tagged("spectrum", pp.omega, [&] { return cached_shoot(ctx, pp, spectral_options(cfg)); });
  std::vector<Check> checks;
  auto& res = r.report["results"];
  res["solution"] = summary_json(gs);
  const auto minus = eigs(assemble(OperatorKind::minus, gs), cfg.spectrum.k, et);
  const auto plus = eigs(assemble(OperatorKind::plus, gs), cfg.spectrum.k, et);
  res["minus"] = spectrum_json(minus);
  res["plus"] = spectrum_json(plus);
  checks.push_back(check_ge("lowest L- eigenvalue", minus.eigenvalues[0], -minus.tol));
  checks.push_back(check_eq("negative eigenvalues of L+", plus.neg_count, 1));
  if (plus.neg_count == 1 && plus.eigenvalues.size() > 1)
    checks.push_back(check_gt("nondegeneracy gap", std::abs(plus.eigenvalues[1]), 0.0));
  std::ostringstream spec_csv;
  spec_csv << "operator,index,eigenvalue,residual\n";
  for (const auto& [name, rep] : {std::pair{"minus", &minus}, std::pair{"plus", &plus}})
    for (std::size_t i = 0; i < rep->eigenvalues.size(); ++i)
      spec_csv << name << "," << i << "," << csv_number(rep->eigenvalues[i]) << ","
               << csv_number(rep->residuals[i]) << "\n";
  r.csv.push_back({"spectrum.csv", spec_csv.str()});
  if (pp.critical_on) {
    const auto rp = rescale(gs);
    const auto mb = minus_basis(rp);
    const auto ir = tagged("instability", pp.omega, [&] { return unstable_eigenvalue(mb); });
    res["rescaled"] = {{"alpha", rp.alpha}, {"beta", rp.beta}, {"residual", rp.residual}};
    res["instability"] = instability_json(ir);
    checks.push_back(check_lt("nu", ir.nu, 0.0));
    checks.push_back(check_le("symmetrized vs block mu", ir.mu ? ir.cross_error : INFINITY, 1e-4));
    checks.push_back(check_le("block spectrum negation symmetry", ir.symmetry_error, 1e-8));
    try {
      const auto w = instability_witness(mb, rp, cfg.spectrum.witness_radius);
      res["witness"] = witness_json(w);
      checks.push_back(check_ge("witness Rayleigh quotient - nu", w.rayleigh - ir.nu, 0.0));
    } catch (const Error& e) {
      res["witness"] = {{"error", e.what()}};
      checks.push_back(Check{"witness construction", e.what(), "succeeds", false});
    }
    std::ostringstream block;
    block << "re,im\n";
    for (const auto& z : ir.block_eigs) block << csv_number(z.real()) << "," << csv_number(z.imag()) << "\n";
    r.csv.push_back({"block.csv", block.str()});
    if (ir.mu) {
      std::ostringstream prof;
      prof << "r,f_min,g_re,g_im\n";
      for (std::size_t i = 0; i < rp.field.size(); ++i)
        prof << csv_number(rp.field.grid->r(i)) << "," << csv_number(ir.f_min[i]) << ","
             << csv_number(ir.g_re[i]) << "," << csv_number(ir.g_im[i]) << "\n";
      r.csv.push_back({"instability.csv", prof.str()});
    }
  }
  const auto ix = tagged("gss", pp.omega, [&] { return gss_index(gs, et); });
  res["index"] = index_json(ix);
  checks.push_back(check_true("N(R) equals I(-iL)", ix.match));
  add_checks(r.report, checks);
  finish(r, ctx, sw.seconds());
  return r;
}

inline CommandResult cmd_mass(Context& ctx) {
  Stopwatch sw;
  CommandResult r = start("mass", ctx);
  const auto& cfg = ctx.cfg;
  MassCurve mc{cfg.problem, std::vector<MassSample>(cfg.omegas.size()), cfg.problem.d == 4};
  parallel_for(cfg.omegas.size(), cfg.workers, [&](std::size_t i) {
    ProblemParams pp = cfg.problem;
    pp.omega = cfg.omegas[i];
    mc.samples[i] = tagged("mass", pp.omega, [&] { return cached_mass_sample(ctx, pp); });
  });
  json rows = json::array();
  std::vector<Check> checks;
  std::ostringstream csv;
  csv << "omega,mass,dmass_fd,dmass_lin,rel_agreement\n";
  for (const auto& s : mc.samples) {
    rows.push_back(mass_json(s));
    csv << csv_number(s.omega) << "," << csv_number(s.mass) << "," << csv_number(s.dmass_fd) << ","
        << csv_number(s.dmass_lin) << "," << csv_number(s.rel_agreement) << "\n";
    if (mc.exploratory) continue;
    const std::string tag = "omega=" + num(s.omega);
    checks.push_back(check_true(tag + " sign agreement", s.sign_match));
    checks.push_back(check_le(tag + " relative agreement", s.rel_agreement, 0.01));
    if (cfg.problem.critical_on) checks.push_back(check_lt(tag + " mass slope", s.dmass_lin, 0.0));
  }
  r.report["results"]["mass"] = rows;
  r.report["results"]["exploratory"] = mc.exploratory;
  r.csv.push_back({"mass.csv", csv.str()});
  add_checks(r.report, checks);
  finish(r, ctx, sw.seconds());
  return r;
}

inline CommandResult cmd_resolvent(Context& ctx) {
  Stopwatch sw;
  CommandResult r = start("resolvent", ctx);
  const auto& ro = ctx.cfg.resolvent;
  try {
    resolvent_exponent(ro.s, ro.q);
  } catch (const InvalidArgument& e) {
    throw ConfigError("resolvent.q", e.what());
  }
  const auto gi = make_grid(3, 20.0, 8000, Spacing::graded, 1e-4);
  const double ident = resolvent_identity_residual(1.0, sample(gi, [](double x) { return std::exp(-x * x); }));
  const auto gs = make_grid(3, 1e4, 20000, Spacing::graded, 1e-2);
  const auto lams = ro.lambdas.empty() ? criteria::geometric(0.01, 1.0, 9) : ro.lambdas;
  const auto sc = norm_scaling_check(ro.s, ro.q, lams, gaussian_family(gs, 0.25, 1000.0), ctx.cfg.workers);
  const auto ge = make_grid(3, 500.0, 1500, Spacing::graded, 1e-3);
  const double w = ro.probe_width;
  const auto el = ro.expansion_lambdas.empty() ? criteria::geometric(1e-2, 1e-3, 5) : ro.expansion_lambdas;
  const auto ef = expansion_fit(el, sample(ge, [w](double x) { return std::exp(-(x / w) * (x / w)); }),
                                ctx.cfg.workers);
  r.report["results"] = {{"identity_residual", ident}, {"scaling", scaling_json(sc)},
                         {"expansion", expansion_json(ef)}};
  add_checks(r.report, {check_le("resolvent identity residual", ident, 1e-6),
                        check_near("scaling slope", sc.fit.slope, sc.expected_slope, 0.05),
                        check_le("expansion coefficient relative error", ef.rel_error, 0.05),
                        check_le("bounded branch growth per decade", ef.branch_growth, 3.0)});
  std::ostringstream a, b;
  a << "lambda,norm_ratio\n";
  for (std::size_t i = 0; i < sc.lambdas.size(); ++i) a << csv_number(sc.lambdas[i]) << "," << csv_number(sc.ratios[i]) << "\n";
  b << "lambda,amplitude,branch_l4\n";
  for (std::size_t i = 0; i < ef.lambdas.size(); ++i)
    b << csv_number(ef.lambdas[i]) << "," << csv_number(ef.amplitudes[i]) << "," << csv_number(ef.bounded_branch[i]) << "\n";
  r.csv.push_back({"resolvent_scaling.csv", a.str()});
  r.csv.push_back({"resolvent_expansion.csv", b.str()});
  finish(r, ctx, sw.seconds());
  return r;
}

/// Line printed per criterion by the verify command and the acceptance binary.
inline std::string outcome_line(const Outcome& o) {
  std::ostringstream os;
  os << (o.passed ? "PASS " : "FAIL ") << std::setw(2) << o.id << " " << o.slug;
  os << " (" << std::fixed << std::setprecision(2) << o.compute_seconds << " s";
  if (o.budget_seconds > 0.0) os << ", budget " << std::setprecision(0) << o.budget_seconds << " s";
  os << ")";
  if (!o.error.empty()) os << " error: " << o.error;
  for (const auto& c : o.checks) {
    if (c.at("passed").get<bool>()) continue;
    os << "\n      " << c.at("name").get<std::string>() << ": measured " << c.at("measured").dump()
       << ", required " << c.at("required").get<std::string>();
  }
  return os.str();
}

inline std::vector<int> all_criteria() {
  std::vector<int> ids;
  for (const auto& c : criterion_list()) ids.push_back(c.id);
  return ids;
}

inline CommandResult cmd_verify(Context& ctx, const std::vector<int>& ids = all_criteria()) {
  Stopwatch sw;
  CommandResult r = start("verify", ctx);
  auto first = run_pass(ctx, ids);
  std::vector<Outcome> outcomes = first.outcomes;
  CacheTiming timing;
  const bool want_cache_check = std::find(ids.begin(), ids.end(), 10) != ids.end();
  if (want_cache_check) outcomes.push_back(determinism_check(ctx, first, timing));
  json crit = json::array(), runtime = json::array();
  std::ostringstream text, csv;
  csv << "id,slug,passed,seconds,budget\n";
  for (const auto& o : outcomes) {
    crit.push_back(o.payload());
    // Runtime budgets are part of the criteria but depend on the machine,
    // so they live in the run section.
    const bool timed = o.id != 10 && o.error.empty();
    runtime.push_back({{"id", o.id}, {"seconds", o.compute_seconds}, {"budget", o.budget_seconds},
                       {"within_budget", !timed || o.within_budget()}});
    json ck{{"name", "criterion " + std::to_string(o.id) + " " + o.slug},
            {"measured", o.passed}, {"required", "all checks pass"}, {"passed", o.passed}};
    r.report["checks"].push_back(ck);
    text << outcome_line(o) << "\n";
    csv << o.id << "," << o.slug << "," << (o.passed ? 1 : 0) << "," << csv_number(o.compute_seconds) << ","
        << csv_number(o.budget_seconds) << "\n";
  }
  r.report["results"]["criteria"] = crit;
  r.csv.push_back({"verify.csv", csv.str()});
  json extra{{"criteria_runtime", runtime}};
  if (want_cache_check)
    extra["cache_timing"] = {{"cold_seconds", timing.cold_seconds}, {"warm_seconds", timing.warm_seconds},
                             {"speedup", timing.speedup}};
  finish(r, ctx, sw.seconds(), extra);
  r.summary = text.str();
  bool budgets = true;
  for (const auto& x : runtime) budgets = budgets && x.at("within_budget").get<bool>();
  if (!budgets && r.exit_code == 0) {
    r.exit_code = 2;
    r.summary += "runtime budget exceeded (see run.criteria_runtime)\n";
  }
  return r;
}

inline std::string list_criteria() {
  std::ostringstream os;
  for (const auto& c : criterion_list()) os << std::setw(2) << c.id << "  " << c.slug << "  " << c.title << "\n";
  return os.str();
}

/// Writes the JSON report and CSV files per the format choice.
inline void write_outputs(const CommandResult& r, const RunConfig& cfg) {
  const fs::path dir = cfg.out_dir;
  const auto cmd = r.report.at("command").get<std::string>();
  if (cfg.format != Format::csv) atomic_write(dir / (cmd + ".json"), r.report.dump(2) + "\n");
  if (cfg.format != Format::json)
    for (const auto& [name, content] : r.csv) atomic_write(dir / name, content);
}

}  // namespace critlab::app
