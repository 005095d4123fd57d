#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "critlab/groundstate.hpp"
#include "critlab/norms.hpp"
#include "critlab/parallel.hpp"
#include "critlab/talenti.hpp"

namespace critlab {

struct SweepEntry {
  double omega = 0.0;
  double M = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  double h1_dev = 0.0;               // ||rescaled profile - W|| in Hdot^1
  std::map<double, double> lq_dev;   // ||rescaled profile - W|| in L^q
  double c_dec = 0.0;                // sup (1+r)^{d-2} of the rescaled profile
};

struct AsymptoticSweep {
  ProblemParams params;  // omega unused
  std::vector<SweepEntry> entries;
};

/// A solve failure tagged with the frequency at which it happened.
class SweepError : public Error {
 public:
  SweepError(double omega, const std::string& what)
      : Error(tagged(omega, what)), omega_(omega) {}
  double omega() const noexcept { return omega_; }

 private:
  static std::string tagged(double omega, const std::string& what) {
    std::ostringstream os;
    os << "omega=" << omega << ": " << what;
    return os.str();
  }
  double omega_;
};

/// Diagnostics of one rescaled profile against the bubble.
inline SweepEntry sweep_entry(const GroundStateSolution& gs, const std::vector<double>& q_list) {
  const auto rp = rescale(gs);
  const auto& g = rp.field.grid;
  const int d = g->d();
  SweepEntry e;
  e.omega = gs.params.omega;
  e.M = gs.M;
  e.alpha = rp.alpha;
  e.beta = rp.beta;
  e.residual = rp.residual;
  RadialField diff(g, rp.field.values - talenti(g).values);
  const auto rep = norms(diff, q_list);
  e.h1_dev = rep.h1dot.value;
  for (double q : q_list) e.lq_dev[q] = rep.lq.at(q).value;
  for (std::size_t i = 0; i < g->size(); ++i)
    e.c_dec = std::max(e.c_dec, std::pow(1.0 + g->r(i), d - 2) * rp.field[i]);
  return e;
}

inline AsymptoticSweep asymptotic_sweep(const ProblemParams& base, const std::vector<double>& omegas,
                                        const std::vector<double>& q_list,
                                        const ShootTolerances& tol = {}, const GridOptions& go = {},
                                        int workers = 1) {
  const double qmin = base.d / (base.d - 2.0);
  for (double q : q_list)
    if (!(q > qmin)) throw InvalidArgument("sweep norm exponents must exceed d/(d-2)");
  for (std::size_t i = 1; i < omegas.size(); ++i)
    if (!(omegas[i] > omegas[i - 1])) throw InvalidArgument("sweep frequencies must increase");
  AsymptoticSweep sw;
  sw.params = base;
  sw.entries.resize(omegas.size());
  parallel_for(omegas.size(), workers, [&](std::size_t i) {
    ProblemParams pp = base;
    pp.omega = omegas[i];
    try {
      sw.entries[i] = sweep_entry(shoot(pp, tol, go), q_list);
    } catch (const std::exception& ex) {
      throw SweepError(omegas[i], ex.what());
    }
  });
  return sw;
}

struct CGFit {
  LineFit alpha_beta;     // log alpha against log beta
  double prefactor = 0.0; // alpha / beta^2 at the smallest beta
  double c1 = 0.0;        // <Lambda W, W^p>^2 / (36 pi^2)
  double prefactor_rel_error = 0.0;
  LineFit h1_beta;        // log ||.||_{Hdot^1} against log beta
  std::map<double, LineFit> lq_beta;
  double beta_decades = 0.0;
};

/// Frequency law fit along a sweep: alpha ~ C1 beta^2 for d = 3.
///
/// The prefactor is read off as alpha/beta^2 at the smallest beta, where the
/// beta^{1/2} correction is smallest; a free intercept of the log-log line
/// would mix the slope error into the prefactor.
inline CGFit cg_scaling_fit(const AsymptoticSweep& sw) {
  const auto& pp = sw.params;
  if (pp.d != 3 || !(pp.p > 3.0 && pp.p < 5.0) || !pp.critical_on)
    throw InvalidArgument("frequency law fit requires d = 3, 3 < p < 5 with the critical term");
  if (sw.entries.size() < 3) throw InvalidArgument("insufficient range: need at least 3 sweep points");
  std::vector<double> lb, la, lh;
  std::map<double, std::vector<double>> lq;
  double bmin = INFINITY, bmax = 0.0;
  const SweepEntry* smallest = nullptr;
  for (const auto& e : sw.entries) {
    lb.push_back(std::log(e.beta));
    la.push_back(std::log(e.alpha));
    lh.push_back(std::log(e.h1_dev));
    for (const auto& [q, v] : e.lq_dev) lq[q].push_back(std::log(v));
    if (e.beta < bmin) {
      bmin = e.beta;
      smallest = &e;
    }
    bmax = std::max(bmax, e.beta);
  }
  CGFit f;
  f.beta_decades = std::log10(bmax / bmin);
  if (f.beta_decades < 2.0) {
    std::ostringstream os;
    os << "insufficient range: beta spans " << f.beta_decades << " decades, need 2";
    throw InvalidArgument(os.str());
  }
  f.alpha_beta = fit_line(lb, la);
  f.h1_beta = fit_line(lb, lh);
  for (const auto& [q, v] : lq) f.lq_beta[q] = fit_line(lb, v);
  f.prefactor = smallest->alpha / (smallest->beta * smallest->beta);
  f.c1 = cg_constant(pp.p);
  f.prefactor_rel_error = std::abs(f.prefactor / f.c1 - 1.0);
  return f;
}

}  // namespace critlab
