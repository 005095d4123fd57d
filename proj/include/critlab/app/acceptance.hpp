#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "critlab/app/results.hpp"

namespace critlab::app {

/// One measured quantity against its requirement.
struct Check {
  std::string name;
  json measured;
  std::string required;
  bool passed = false;
};

inline void to_json(json& j, const Check& c) {
  j = {{"name", c.name}, {"measured", c.measured}, {"required", c.required}, {"passed", c.passed}};
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Check check_le(std::string name, double v, double bound) {
  return {std::move(name), finite_or_null(v), "<= " + num(bound), v <= bound};
}
inline Check check_lt(std::string name, double v, double bound) {
  return {std::move(name), finite_or_null(v), "< " + num(bound), v < bound};
}
inline Check check_ge(std::string name, double v, double bound) {
  return {std::move(name), finite_or_null(v), ">= " + num(bound), v >= bound};
}
inline Check check_gt(std::string name, double v, double bound) {
  return {std::move(name), finite_or_null(v), "> " + num(bound), v > bound};
}
inline Check check_near(std::string name, double v, double target, double tol) {
  return {std::move(name), finite_or_null(v), num(target) + " +- " + num(tol), std::abs(v - target) <= tol};
}
inline Check check_eq(std::string name, long v, long target) {
  return {std::move(name), v, "== " + std::to_string(target), v == target};
}
inline Check check_true(std::string name, bool v, std::string required = "true") {
  return {std::move(name), v, std::move(required), v};
}

struct CriterionDef {
  int id;
  std::string slug;
  std::string title;
  double budget_seconds;
  std::function<json(Context&)> run;  // {"checks": [...], "data": {...}}
};

struct Outcome {
  int id = 0;
  std::string slug, title;
  bool passed = false;
  json checks = json::array();
  json data = json::object();
  std::string error;
  double compute_seconds = 0.0;  // cold compute time, from the cache record when warm
  double budget_seconds = 0.0;
  bool cached = false;

  bool within_budget() const { return compute_seconds <= budget_seconds; }

  /// Deterministic part: everything except timings and cache state.
  json payload() const {
    json j{{"id", id}, {"slug", slug}, {"passed", passed}, {"checks", checks}, {"data", data}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace criteria {

inline json result(const std::vector<Check>& checks, json data = json::object()) {
  return {{"checks", checks}, {"data", std::move(data)}};
}

inline ProblemParams cubic_quartic(double omega) { return {3, 4.0, omega, 1.0, true}; }
inline ProblemParams quintic_quadratic(double omega) { return {5, 2.0, omega, 1.0, true}; }
inline ProblemParams single_power(double omega) { return {3, 2.0, omega, 1.0, false}; }

inline json talenti_self_consistency(Context&) {
  const auto g = make_grid(3, 100.0, 4000, Spacing::graded);
  const double res = talenti_residual(g);
  return result({check_le("weighted L2 residual of Delta W + W^5", res, 1e-5)},
                {{"residual", res}, {"first_step", g->r(1)}});
}

inline std::vector<Check> solution_checks(const GroundStateSolution& gs, const std::string& tag,
                                          double residual_tol) {
  const auto& v = gs.field.values;
  bool monotone = true;
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i)
    monotone = monotone && v[i] > 0.0 && (i == 0 || v[i] < v[i - 1]);
  const double rate = gs.decay_rate / std::sqrt(gs.params.omega);
  return {check_le(tag + " residual", gs.residual, residual_tol),
          check_true(tag + " positive and strictly decreasing", monotone),
          check_near(tag + " decay rate / sqrt(omega)", rate, 1.0, 0.02)};
}

inline json ground_state_solves(Context& ctx) {
  std::vector<Check> checks;
  json data = json::array();
  for (double w : {10.0, 100.0, 1000.0}) {
    const auto gs = cached_shoot(ctx, cubic_quartic(w));
    for (auto& c : solution_checks(gs, "omega=" + num(w), 1e-8)) checks.push_back(c);
    data.push_back(summary_json(gs));
  }
  return result(checks, data);
}

inline std::vector<SweepEntry> cached_sweep(Context& ctx, const std::vector<double>& omegas) {
  std::vector<SweepEntry> out(omegas.size());
  parallel_for(omegas.size(), ctx.cfg.workers, [&](std::size_t i) {
    out[i] = sweep_entry(cached_shoot(ctx, cubic_quartic(omegas[i])), {4.0, 6.0, INFINITY});
  });
  return out;
}

// sup (1 + r) W(r) in three dimensions, on a fine sample.
inline double talenti_decay_constant() {
  double c = 0.0;
  for (double r = 0.0; r <= 1e4; r += r < 10 ? 1e-3 : 1.0) c = std::max(c, (1.0 + r) * talenti_value(r, 3));
  return c;
}

inline json bubble_convergence(Context& ctx) {
  const std::vector<double> omegas{10.0, 100.0, 1000.0, 10000.0};
  const auto entries = cached_sweep(ctx, omegas);
  bool h1_dec = true, l4_dec = true;
  double cmax = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    cmax = std::max(cmax, entries[i].c_dec);
    if (i > 0) {
      h1_dec = h1_dec && entries[i].h1_dev < entries[i - 1].h1_dev;
      l4_dec = l4_dec && entries[i].lq_dev.at(4.0) < entries[i - 1].lq_dev.at(4.0);
    }
  }
  const double cw = talenti_decay_constant();
  AsymptoticSweep sw{cubic_quartic(0.0), entries};
  return result({check_true("Hdot1 deviation strictly decreasing", h1_dec),
                 check_le("Hdot1 deviation at omega=1e4", entries.back().h1_dev, 0.1),
                 check_le("max sup (1+r) rescaled profile", cmax, 2.0 * cw),
                 check_true("L4 deviation decreasing", l4_dec)},
                {{"sweep", sweep_json(sw)}, {"talenti_decay_constant", cw}});
}

inline json frequency_law(Context& ctx) {
  const std::vector<double> omegas{10.0, 100.0, 1000.0, 1e4, 1e5, 1e6};
  AsymptoticSweep sw{cubic_quartic(0.0), cached_sweep(ctx, omegas)};
  const auto fit = cg_scaling_fit(sw);
  const double p = 4.0;
  const double lhs = lambda_w_pairing(3, p);
  const double rhs = (0.5 - 3.0 / (p + 1.0)) *
                     radial_integral([&](double r) { return std::pow(talenti_value(r, 3), p + 1.0); }, 3);
  const double id_err = std::abs(lhs / rhs - 1.0);
  return result({check_near("alpha vs beta log-log slope", fit.alpha_beta.slope, 2.0, 0.1),
                 check_le("prefactor relative error against C1", fit.prefactor_rel_error, 0.15),
                 check_le("pairing identity relative error", id_err, 1e-6),
                 check_near("Hdot1 deviation vs beta slope", fit.h1_beta.slope, 0.5, 0.1)},
                {{"fit", cg_json(fit)}, {"pairing", lhs}, {"pairing_closed_form", rhs}});
}

inline double cosine(const RadialField& a, const RadialField& b) {
  return std::abs(inner_product(a, b)) / std::sqrt(inner_product(a, a) * inner_product(b, b));
}

inline GroundStateSolution spectral_solve(Context& ctx, const ProblemParams& pp, int n) {
  auto go = spectral_options(ctx.cfg);
  go.n = n;
  return cached_shoot(ctx, pp, go);
}

inline json spectral_picture(Context& ctx) {
  const double w = 1000.0;
  const int n = ctx.cfg.spectrum.n;
  const double et = ctx.cfg.spectrum.eigen_tol;
  const auto gs = spectral_solve(ctx, cubic_quartic(w), n);
  const auto gs2 = spectral_solve(ctx, cubic_quartic(w), 2 * n);
  const auto minus = eigs(assemble(OperatorKind::minus, gs), 2, et);
  const auto plus_op = assemble(OperatorKind::plus, gs);
  const auto plus = eigs(plus_op, 3, et);
  const double gap = plus.neg_count == 1 ? std::abs(plus.eigenvalues[1]) : 0.0;
  const auto plus2 = eigs(assemble(OperatorKind::plus, gs2), 3, et);
  const double gap2 = plus2.neg_count == 1 ? std::abs(plus2.eigenvalues[1]) : 0.0;
  const double cosv = cosine(minus.eigenfields[0], gs.field);
  // Closed form of <L+ phi, phi> from the equation: -(p-1) |phi|_{p+1}^{p+1} - 4/(d-2) |phi|_{2*}^{2*}.
  const auto& V = gs.field.grid->weights();
  double lp = 0.0, lc = 0.0;
  for (std::size_t i = 0; i + 1 < gs.field.size(); ++i) {
    lp += V[i] * std::pow(gs.field[i], 5.0);
    lc += V[i] * std::pow(gs.field[i], 6.0);
  }
  const double closed = -3.0 * lp - 4.0 * lc;
  const double form = quadratic_form(plus_op, gs.field);
  double worst_res = 0.0;
  for (double r : minus.residuals) worst_res = std::max(worst_res, r / minus.scale);
  for (double r : plus.residuals) worst_res = std::max(worst_res, r / plus.scale);
  return result(
      {check_le("|lowest L- eigenvalue| / omega", std::abs(minus.eigenvalues[0]) / w, 1e-6),
       check_ge("cosine of L- ground eigenfield with phi", cosv, 1.0 - 1e-8),
       check_eq("negative eigenvalues of L+", plus.neg_count, 1),
       check_gt("nondegeneracy gap", gap, 0.0),
       check_le("gap change under refinement", gap > 0 ? std::abs(gap2 / gap - 1.0) : INFINITY, 0.25),
       check_le("<L+ phi, phi> relative error", std::abs(form / closed - 1.0), 1e-6),
       check_le("eigenpair residual / ||S||", worst_res, 1e-8)},
      {{"minus", spectrum_json(minus)}, {"plus", spectrum_json(plus)}, {"gap", gap}, {"gap_refined", gap2},
       {"n", n}, {"form", form}, {"closed_form", closed}});
}

inline json instability(Context& ctx) {
  std::vector<Check> checks;
  json data = json::array();
  const int n = ctx.cfg.spectrum.n;
  const std::vector<ProblemParams> cases{cubic_quartic(100.0), cubic_quartic(1000.0), quintic_quadratic(1000.0)};
  for (const auto& pp : cases) {
    const std::string tag = "d=" + std::to_string(pp.d) + " p=" + num(pp.p) + " omega=" + num(pp.omega);
    const auto rp = rescale(spectral_solve(ctx, pp, n));
    const auto mb = minus_basis(rp);
    const auto ir = unstable_eigenvalue(mb);
    const auto w = instability_witness(mb, rp, ctx.cfg.spectrum.witness_radius);
    checks.push_back(check_lt(tag + " nu", ir.nu, 0.0));
    checks.push_back(check_gt(tag + " mu", ir.mu.value_or(0.0), 0.0));
    checks.push_back(check_le(tag + " symmetrized vs block mu", ir.mu ? ir.cross_error : INFINITY, 1e-4));
    checks.push_back(check_le(tag + " block spectrum negation symmetry", ir.symmetry_error, 1e-8));
    checks.push_back(check_ge(tag + " witness Rayleigh quotient - nu", w.rayleigh - ir.nu, 0.0));
    data.push_back({{"params", params_json(pp)}, {"alpha", rp.alpha}, {"beta", rp.beta},
                    {"instability", instability_json(ir)}, {"witness", witness_json(w)}});
  }
  return result(checks, data);
}

inline json gss(Context& ctx) {
  std::vector<Check> checks;
  json data = json::array();
  const int n = ctx.cfg.spectrum.n;
  for (double w : {100.0, 1000.0, 10000.0}) {
    const auto ix = gss_index(spectral_solve(ctx, cubic_quartic(w), n), ctx.cfg.spectrum.eigen_tol);
    checks.push_back(check_eq("omega=" + num(w) + " N(R)", ix.n_R, 1));
    checks.push_back(check_eq("omega=" + num(w) + " I(-iL)", ix.i_L, 1));
    data.push_back({{"omega", w}, {"index", index_json(ix)}});
  }
  const auto control = single_power(100.0);
  const auto ix = gss_index(spectral_solve(ctx, control, n), ctx.cfg.spectrum.eigen_tol);
  const auto ms = cached_mass_sample(ctx, control);
  checks.push_back(check_eq("control N(R)", ix.n_R, 0));
  checks.push_back(check_eq("control I(-iL)", ix.i_L, 0));
  checks.push_back(check_gt("control mass slope", ms.dmass_lin, 0.0));
  data.push_back({{"control", params_json(control)}, {"index", index_json(ix)}, {"mass", mass_json(ms)}});
  return result(checks, data);
}

inline json mass_slope(Context& ctx) {
  std::vector<Check> checks;
  json data = json::array();
  for (const auto& pp : {cubic_quartic(100.0), cubic_quartic(1000.0), quintic_quadratic(1000.0)}) {
    const std::string tag = "d=" + std::to_string(pp.d) + " p=" + num(pp.p) + " omega=" + num(pp.omega);
    const auto s = cached_mass_sample(ctx, pp);
    checks.push_back(check_lt(tag + " finite-difference slope", s.dmass_fd, 0.0));
    checks.push_back(check_lt(tag + " linearized slope", s.dmass_lin, 0.0));
    checks.push_back(check_le(tag + " relative agreement", s.rel_agreement, 0.01));
    data.push_back(mass_json(s));
  }
  const auto unit = cached_shoot(ctx, single_power(1.0));
  const auto ctl = cached_mass_sample(ctx, single_power(10.0));
  const double closed = single_power_slope(3, 2.0, 10.0, mass(unit.field));
  checks.push_back(check_le("single-power slope vs scaling closed form", std::abs(ctl.dmass_lin / closed - 1.0), 0.02));
  data.push_back({{"control", mass_json(ctl)}, {"closed_form", closed}});
  return result(checks, data);
}

inline std::vector<double> geometric(double a, double b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(a * std::pow(b / a, double(i) / (count - 1)));
  return out;
}

inline json resolvent(Context& ctx) {
  const auto& ro = ctx.cfg.resolvent;
  const int wk = ctx.cfg.workers;
  const auto gi = make_grid(3, 20.0, 8000, Spacing::graded, 1e-4);
  const auto bump = sample(gi, [](double r) { return std::exp(-r * r); });
  const double ident = resolvent_identity_residual(1.0, bump);
  const auto gs = make_grid(3, 1e4, 20000, Spacing::graded, 1e-2);
  const auto fam = gaussian_family(gs, 0.25, 1000.0);
  const auto lams = ro.lambdas.empty() ? geometric(0.01, 1.0, 9) : ro.lambdas;
  const auto a = norm_scaling_check(1.5, 3.0, lams, fam, wk);
  const auto b = norm_scaling_check(2.0, 2.0, lams, fam, wk);
  const auto ge = make_grid(3, 500.0, 1500, Spacing::graded, 1e-3);
  const double width = ro.probe_width;
  const auto f = sample(ge, [width](double r) { return std::exp(-(r / width) * (r / width)); });
  const auto el = ro.expansion_lambdas.empty() ? geometric(1e-2, 1e-3, 5) : ro.expansion_lambdas;
  const auto ef = expansion_fit(el, f, wk);
  return result({check_le("resolvent identity residual", ident, 1e-6),
                 check_near("(3/2,3) slope", a.fit.slope, -1.0, 0.05),
                 check_near("(2,2) slope", b.fit.slope, -2.0, 0.05),
                 check_le("expansion coefficient relative error", ef.rel_error, 0.05),
                 check_le("bounded branch growth per decade", ef.branch_growth, 3.0)},
                {{"identity_residual", ident}, {"scaling", {scaling_json(a), scaling_json(b)}},
                 {"expansion", expansion_json(ef)}});
}

}  // namespace criteria

inline const std::vector<CriterionDef>& criterion_list() {
  static const std::vector<CriterionDef> list{
      {1, "talenti-self-consistency", "discrete Talenti residual", 1.0, criteria::talenti_self_consistency},
      {2, "ground-state-solves", "ground states for d=3, p=4", 10.0, criteria::ground_state_solves},
      {3, "bubble-convergence", "rescaled profiles approach the bubble", 60.0, criteria::bubble_convergence},
      {4, "frequency-law", "alpha against beta squared", 60.0, criteria::frequency_law},
      {5, "spectral-picture", "L- kernel, L+ index and gap at omega=1e3", 30.0, criteria::spectral_picture},
      {6, "instability", "unstable eigenvalue two ways and the witness", 120.0, criteria::instability},
      {7, "gss-index", "constrained index against unstable count", 120.0, criteria::gss},
      {8, "mass-slope", "mass derivative two ways", 60.0, criteria::mass_slope},
      {9, "resolvent", "free resolvent scaling and expansion", 60.0, criteria::resolvent},
      {10, "determinism-cache", "warm rerun identical and faster", 0.0, nullptr},
  };
  return list;
}

inline std::string criterion_key(const Context& ctx, int id) {
  return hash_of({{"kind", "criterion"}, {"id", id}, {"config", config_echo(ctx.cfg)}});
}

inline Outcome run_criterion(Context& ctx, const CriterionDef& def) {
  Outcome o;
  o.id = def.id;
  o.slug = def.slug;
  o.title = def.title;
  o.budget_seconds = def.budget_seconds;
  const int before = ctx.cache->hits();
  try {
    const auto e = ctx.cache->get_or_compute(criterion_key(ctx, def.id), [&] { return def.run(ctx); });
    o.cached = ctx.cache->hits() > before;
    o.checks = e.payload.at("checks");
    o.data = e.payload.at("data");
    o.compute_seconds = e.meta.value("compute_seconds", 0.0);
    o.passed = !o.checks.empty();
    for (const auto& c : o.checks) o.passed = o.passed && c.at("passed").get<bool>();
  } catch (const std::exception& ex) {
    o.error = ex.what();
    o.passed = false;
  }
  return o;
}

struct VerifyPass {
  std::vector<Outcome> outcomes;
  double seconds = 0.0;
};

inline VerifyPass run_pass(Context& ctx, const std::vector<int>& ids) {
  VerifyPass p;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& def : criterion_list())
    if (def.run && std::find(ids.begin(), ids.end(), def.id) != ids.end())
      p.outcomes.push_back(run_criterion(ctx, def));
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

/// Timing side of the determinism check; kept out of report payloads.
struct CacheTiming {
  double cold_seconds = 0.0;
  double warm_seconds = 0.0;
  double speedup = 0.0;
};

/// Criterion 10: rerun the computed criteria against the now-warm cache and
/// compare payloads.  Cold time is the recorded compute time of each entry,
/// which is also what a first run pays.
inline Outcome determinism_check(Context& ctx, const VerifyPass& first, CacheTiming& timing) {
  Outcome o;
  const auto& def = criterion_list().back();
  o.id = def.id;
  o.slug = def.slug;
  o.title = def.title;
  if (!ctx.cache->enabled()) {
    o.error = "cache disabled";
    o.checks.push_back(check_true("cache enabled", false));
    return o;
  }
  std::vector<int> ids;
  for (const auto& x : first.outcomes) ids.push_back(x.id);
  const auto second = run_pass(ctx, ids);
  bool identical = second.outcomes.size() == first.outcomes.size();
  bool all_hits = true;
  for (std::size_t i = 0; identical && i < second.outcomes.size(); ++i) {
    identical = second.outcomes[i].payload().dump() == first.outcomes[i].payload().dump();
    all_hits = all_hits && (second.outcomes[i].cached || !second.outcomes[i].error.empty());
  }
  for (const auto& x : first.outcomes) timing.cold_seconds += x.compute_seconds;
  timing.warm_seconds = second.seconds;
  timing.speedup = timing.cold_seconds / std::max(timing.warm_seconds, 1e-9);
  o.checks.push_back(check_true("warm payload identical", identical));
  o.checks.push_back(check_true("warm pass served from cache", all_hits));
  o.checks.push_back(Check{"warm speedup", nullptr, ">= 5", timing.speedup >= 5.0});
  o.passed = identical && all_hits && timing.speedup >= 5.0;
  o.compute_seconds = timing.warm_seconds;
  o.budget_seconds = timing.cold_seconds;
  return o;
}

}  // namespace critlab::app
