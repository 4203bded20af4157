#include "gsflow/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

template <class F>
F scaled(const F& u0, double alpha) {
  F u = u0;
  for (double& x : u.v) x *= alpha;
  return u;
}

template <class F>
FlowState<F> classify(const F& u0, const Nonlinearity& nl, double alpha, FlowOptions fo,
                      bool keep_plateau, std::vector<Probe>& log, bool final_midpoint) {
  fo.track_plateau = keep_plateau;
  FlowState<F> s = run(scaled(u0, alpha), nl, fo);
  if (s.event == Event::running) {
    fo.T *= 2.0;
    advance(s, nl, fo);
  }
  log.push_back({alpha, s.event, s.event_time, fo.T, final_midpoint});
  if (s.event == Event::running) {
    throw Error("threshold probe at alpha = " + std::to_string(alpha) +
                " is still running at T = " + std::to_string(fo.T) + "; horizon too short");
  }
  if (s.event == Event::converged) {
    throw Error("threshold probe at alpha = " + std::to_string(alpha) +
                " converged to a stationary state; it cannot be classified");
  }
  return s;
}

std::vector<double> centroid(const Field& u) {
  std::vector<double> c(u.grid.n, 0.0);
  double mass = 0.0;
  u.grid.for_each_node([&](std::size_t k, std::span<const double> x) {
    mass += u.v[k];
    for (int a = 0; a < u.grid.n; ++a) c[a] += u.v[k] * x[a];
  });
  if (mass > 0.0) {
    for (double& x : c) x /= mass;
  }
  return c;
}

std::vector<double> centroid(const RadialField&) { return {}; }

}  // namespace

template <class F>
ThresholdResult<F> bisect_threshold(const F& u0, const Nonlinearity& nl, const ThresholdOptions& opt) {
  if (!(opt.lo > 0.0) || !(opt.hi > opt.lo)) {
    throw PreconditionError("threshold bracket needs 0 < lo < hi");
  }
  if (!(opt.tol_alpha > 0.0)) throw PreconditionError("tol_alpha must be positive");
  ThresholdResult<F> res;
  res.centroid = centroid(u0);
  double lo = opt.lo, hi = opt.hi;
  bool hi_known = false;

  // Settle the lower end, then the upper one, expanding geometrically.
  while (true) {
    const Event e = classify(u0, nl, lo, opt.flow, false, res.probes, false).event;
    if (e == Event::vanished) break;
    if (res.expansions >= opt.max_expansions) {
      throw Error("threshold: no vanishing probe down to alpha = " + std::to_string(lo) +
                  " after " + std::to_string(res.expansions) + " expansions");
    }
    ++res.expansions;
    if (e == Event::blown_up) {
      hi = lo;
      hi_known = true;
    }
    lo *= 0.5;
  }
  while (!hi_known) {
    const Event e = classify(u0, nl, hi, opt.flow, false, res.probes, false).event;
    if (e == Event::blown_up) break;
    if (res.expansions >= opt.max_expansions) {
      throw Error("threshold: no blow-up probe up to alpha = " + std::to_string(hi) +
                  " after " + std::to_string(res.expansions) + " expansions");
    }
    ++res.expansions;
    lo = hi;  // hi vanished
    hi *= 2.0;
  }

  auto done = [&] {
    const double w = hi - lo;
    return opt.relative ? w <= opt.tol_alpha * 0.5 * (lo + hi) : w <= opt.tol_alpha;
  };
  while (!done()) {
    const double mid = 0.5 * (lo + hi);
    const Event e = classify(u0, nl, mid, opt.flow, false, res.probes, false).event;
    (e == Event::vanished ? lo : hi) = mid;
  }
  res.alpha_lo = lo;
  res.alpha_hi = hi;
  res.near_threshold_run = classify(u0, nl, 0.5 * (lo + hi), opt.flow, true, res.probes, true);
  return res;
}

bool ordering_consistent(const std::vector<Probe>& probes) {
  double max_vanished = -std::numeric_limits<double>::infinity();
  double min_blown = std::numeric_limits<double>::infinity();
  for (const auto& p : probes) {
    if (p.event == Event::vanished) max_vanished = std::max(max_vanished, p.alpha);
    if (p.event == Event::blown_up) min_blown = std::min(min_blown, p.alpha);
  }
  return max_vanished < min_blown;
}

namespace {

template <class F>
ProfileCheck profile_check(const ThresholdResult<F>& res, const RadialProfile& p, double max_rate,
                           const std::function<FitResult(const F&)>& fit) {
  const auto& run = res.near_threshold_run;
  if (!run.plateau || !(run.plateau_rate <= max_rate)) {
    throw Error("no plateau: the near-threshold run never slowed below |du/dt|/|u| = " +
                std::to_string(max_rate));
  }
  (void)p;
  const FitResult fr = fit(*run.plateau);
  ProfileCheck pc;
  pc.plateau_time = run.plateau_time;
  pc.plateau_rate = run.plateau_rate;
  pc.gamma = fr.gamma;
  pc.u_norm = fr.u_norm;
  pc.relative_gamma = fr.u_norm > 0.0 ? fr.gamma / fr.u_norm : std::numeric_limits<double>::infinity();
  if (!fr.bubble.centers.empty()) pc.center = fr.bubble.centers.front();
  if (!res.centroid.empty() && !pc.center.empty()) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < pc.center.size(); ++a) {
      d2 += (pc.center[a] - res.centroid[a]) * (pc.center[a] - res.centroid[a]);
    }
    pc.center_drift = std::sqrt(d2);
  }
  pc.success = pc.relative_gamma <= 0.05;
  return pc;
}

}  // namespace

ProfileCheck near_threshold_profile_check(const ThresholdResult<RadialField>& res,
                                          const RadialProfile& p, double max_rate) {
  return profile_check<RadialField>(res, p, max_rate,
                                    [&p](const RadialField& u) { return best_match(u, p); });
}

ProfileCheck near_threshold_profile_check(const ThresholdResult<Field>& res,
                                          const RadialProfile& p, double max_rate) {
  return profile_check<Field>(res, p, max_rate, [&p](const Field& u) {
    MatchOptions mo;
    mo.solve_weights = false;
    return best_match(u, p, 1, std::nullopt, mo);
  });
}

template ThresholdResult<RadialField> bisect_threshold(const RadialField&, const Nonlinearity&,
                                                       const ThresholdOptions&);
template ThresholdResult<Field> bisect_threshold(const Field&, const Nonlinearity&,
                                                 const ThresholdOptions&);

}  // namespace gsflow
