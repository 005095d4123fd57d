#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "critlab/app/cache.hpp"
#include "critlab/app/config.hpp"
#include "critlab/instability.hpp"
#include "critlab/mass.hpp"
#include "critlab/resolvent.hpp"
#include "critlab/sweep.hpp"

namespace critlab::app {

inline json params_json(const ProblemParams& p) {
  return {{"d", p.d}, {"p", p.p}, {"omega", p.omega}, {"epsilon", p.epsilon},
          {"critical_on", p.critical_on}};
}

/// Cache plus configuration shared by the commands.
struct Context {
  RunConfig cfg;
  std::shared_ptr<Cache> cache;

  explicit Context(RunConfig c)
      : cfg(std::move(c)), cache(std::make_shared<Cache>(cfg.cache_enabled, cfg.cache_dir)) {}

  std::string solution_key(const ProblemParams& pp, const GridOptions& go) const {
    return hash_of({{"kind", "groundstate"}, {"params", params_json(pp)}, {"grid", grid_json(go)},
                    {"tol", tol_json(cfg.tol)}});
  }
};

inline json solution_record(const GroundStateSolution& gs) {
  return {{"params", params_json(gs.params)},
          {"d", gs.field.grid->d()},
          {"r", gs.field.grid->nodes()},
          {"u", std::vector<double>(gs.field.values.begin(), gs.field.values.end())},
          {"M", gs.M},
          {"residual", gs.residual},
          {"decay_rate", gs.decay_rate},
          {"decay_r2", gs.decay_r2},
          {"shoot_bracket", gs.shoot_bracket},
          {"m_shoot", gs.m_shoot},
          {"discretization_error", gs.discretization_error}};
}

inline GroundStateSolution solution_from(const json& j) {
  GroundStateSolution gs;
  const auto& p = j.at("params");
  gs.params = {p.at("d").get<int>(), p.at("p").get<double>(), p.at("omega").get<double>(),
               p.at("epsilon").get<double>(), p.at("critical_on").get<bool>()};
  auto g = std::make_shared<const RadialGrid>(j.at("d").get<int>(), j.at("r").get<std::vector<double>>());
  const auto u = j.at("u").get<std::vector<double>>();
  gs.field = RadialField(g, Eigen::Map<const Vec>(u.data(), static_cast<Eigen::Index>(u.size())));
  gs.M = j.at("M");
  gs.residual = j.at("residual");
  gs.decay_rate = j.at("decay_rate");
  gs.decay_r2 = j.at("decay_r2");
  gs.shoot_bracket = j.at("shoot_bracket");
  gs.m_shoot = j.at("m_shoot");
  gs.discretization_error = j.at("discretization_error");
  return gs;
}

/// Ground state through the solution cache.
inline GroundStateSolution cached_shoot(Context& ctx, const ProblemParams& pp, const GridOptions& go) {
  const auto e = ctx.cache->get_or_compute(ctx.solution_key(pp, go), [&] {
    return solution_record(shoot(pp, ctx.cfg.tol, go));
  });
  return solution_from(e.payload);
}

inline GroundStateSolution cached_shoot(Context& ctx, const ProblemParams& pp) {
  return cached_shoot(ctx, pp, ctx.cfg.grid);
}

inline GridOptions spectral_options(const RunConfig& c) {
  auto go = spectral_grid_options(c.spectrum.n);
  go.core_fraction = c.spectrum.core_fraction;
  return go;
}

inline json summary_json(const GroundStateSolution& gs) {
  return {{"params", params_json(gs.params)}, {"n", gs.field.size()}, {"R_max", gs.field.grid->r_max()},
          {"M", gs.M}, {"residual", gs.residual}, {"decay_rate", gs.decay_rate},
          {"decay_r2", gs.decay_r2}, {"shoot_bracket", gs.shoot_bracket}, {"m_shoot", gs.m_shoot},
          {"discretization_error", gs.discretization_error}};
}

inline std::string exponent_key(double q) { return std::isinf(q) ? "inf" : json(q).dump(); }

inline json sweep_json(const AsymptoticSweep& sw) {
  json rows = json::array();
  for (const auto& e : sw.entries) {
    json lq = json::object();
    for (const auto& [q, v] : e.lq_dev) lq[exponent_key(q)] = v;
    rows.push_back({{"omega", e.omega}, {"M", e.M}, {"alpha", e.alpha}, {"beta", e.beta},
                    {"residual", e.residual}, {"h1_dev", e.h1_dev}, {"lq_dev", lq}, {"c_dec", e.c_dec}});
  }
  return rows;
}

inline json line_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

inline json cg_json(const CGFit& f) {
  json lq = json::object();
  for (const auto& [q, l] : f.lq_beta) lq[exponent_key(q)] = line_json(l);
  return {{"alpha_beta", line_json(f.alpha_beta)}, {"prefactor", f.prefactor}, {"c1", f.c1},
          {"prefactor_rel_error", f.prefactor_rel_error}, {"h1_beta", line_json(f.h1_beta)},
          {"lq_beta", lq}, {"beta_decades", f.beta_decades}};
}

inline json spectrum_json(const SpectrumReport& r) {
  return {{"eigenvalues", r.eigenvalues}, {"residuals", r.residuals}, {"neg_count", r.neg_count},
          {"near_zero", r.near_zero}, {"tol", r.tol}, {"scale", r.scale}};
}

inline json instability_json(const InstabilityReport& r, std::size_t block_head = 6) {
  json head = json::array();
  for (std::size_t i = 0; i < std::min(block_head, r.block_eigs.size()); ++i)
    head.push_back({r.block_eigs[i].real(), r.block_eigs[i].imag()});
  return {{"nu", r.nu}, {"mu", r.mu ? json(*r.mu) : json(nullptr)}, {"block_mu", r.block_mu},
          {"cross_error", r.cross_error}, {"symmetry_error", r.symmetry_error},
          {"block_scale", r.block_scale}, {"clamped_min", r.clamped_min}, {"block_top", head}};
}

inline json witness_json(const WitnessReport& w) {
  return {{"value", w.value}, {"rayleigh", w.rayleigh}, {"E", w.E}, {"cut_form", w.cut_form},
          {"kappa", w.kappa}, {"kappa_bound", w.kappa_bound}};
}

inline json index_json(const IndexReport& r) {
  return {{"n_R", r.n_R}, {"i_L", r.i_L}, {"match", r.match}, {"tol", r.tol}, {"block_tol", r.block_tol}};
}

inline json mass_json(const MassSample& s) {
  return {{"omega", s.omega}, {"mass", s.mass}, {"fd_steps", s.fd_steps}, {"fd_central", s.fd_central},
          {"fd_richardson", s.fd_richardson}, {"dmass_fd", s.dmass_fd}, {"dmass_lin", s.dmass_lin},
          {"lin_residual", s.lin_residual}, {"rel_agreement", s.rel_agreement},
          {"richardson_converging", s.richardson_converging}, {"sign_match", s.sign_match}};
}

/// Mass sample through the cache, keyed like the solution it perturbs.
inline MassSample cached_mass_sample(Context& ctx, const ProblemParams& pp) {
  const auto key = hash_of({{"kind", "mass"}, {"params", params_json(pp)}, {"grid", grid_json(ctx.cfg.grid)},
                            {"tol", tol_json(ctx.cfg.tol)}, {"rel_step", ctx.cfg.mass.rel_step}});
  const auto e = ctx.cache->get_or_compute(key, [&] {
    return mass_json(mass_sample(pp, ctx.cfg.mass.rel_step, ctx.cfg.tol, ctx.cfg.grid));
  });
  const auto& j = e.payload;
  MassSample s;
  s.omega = j.at("omega");
  s.mass = j.at("mass");
  s.fd_steps = j.at("fd_steps").get<std::vector<double>>();
  s.fd_central = j.at("fd_central").get<std::vector<double>>();
  s.fd_richardson = j.at("fd_richardson").get<std::vector<double>>();
  s.dmass_fd = j.at("dmass_fd");
  s.dmass_lin = j.at("dmass_lin");
  s.lin_residual = j.at("lin_residual");
  s.rel_agreement = j.at("rel_agreement");
  s.richardson_converging = j.at("richardson_converging");
  s.sign_match = j.at("sign_match");
  return s;
}

inline json scaling_json(const ScalingFit& f) {
  return {{"s", f.s}, {"q", exponent_json(f.q)}, {"lambdas", f.lambdas}, {"ratios", f.ratios},
          {"fit", line_json(f.fit)}, {"expected_slope", f.expected_slope}};
}

inline json expansion_json(const ExpansionFit& f) {
  return {{"lambdas", f.lambdas}, {"amplitudes", f.amplitudes}, {"pairing", f.pairing},
          {"pairing_solution_error", f.pairing_solution_error}, {"fit", line_json(f.amplitude_fit)},
          {"coefficient_fit", f.coefficient_fit}, {"target", f.target}, {"rel_error", f.rel_error},
          {"cosine", f.cosine}, {"perturbed", f.perturbed}, {"bounded_branch", f.bounded_branch},
          {"branch_growth", f.branch_growth}};
}

}  // namespace critlab::app
