#pragma once

// Bisection for the scaling alpha at which alpha u0 switches from vanishing to
// blowing up under the flow.

#include <optional>
#include <string>
#include <vector>

#include "gsflow/bubbles.hpp"
#include "gsflow/flow.hpp"

namespace gsflow {

struct Probe {
  double alpha = 0.0;
  Event event = Event::running;
  double event_time = 0.0;
  double horizon = 0.0;  // T actually used (2T after a re-run)
  bool final_midpoint = false;
};

template <class F>
struct ThresholdResult {
  double alpha_lo = 0.0;  // vanished
  double alpha_hi = 0.0;  // blew up
  std::vector<Probe> probes;
  int expansions = 0;
  std::vector<double> centroid;     // mass centroid of u0 (Cartesian only)
  FlowState<F> near_threshold_run;  // final midpoint, plateau tracked

  double width() const { return alpha_hi - alpha_lo; }
  double midpoint() const { return 0.5 * (alpha_lo + alpha_hi); }
};

struct ThresholdOptions {
  double lo = 0.5;
  double hi = 2.0;
  double tol_alpha = 1e-3;
  bool relative = true;     // width <= tol * midpoint, else width <= tol
  int max_expansions = 10;  // each one halves lo or doubles hi
  FlowOptions flow = [] {
    FlowOptions f;
    f.T = 30.0;
    return f;
  }();
};

// Probes that are still running at T are re-run once with 2T; a second
// 'running' outcome throws Error naming alpha. A probe that converges to a
// stationary state also throws: it cannot be placed on either side.
template <class F>
ThresholdResult<F> bisect_threshold(const F& u0, const Nonlinearity& nl,
                                    const ThresholdOptions& opt = {});

// True when no vanishing probe sits above a blow-up probe.
bool ordering_consistent(const std::vector<Probe>& probes);

struct ProfileCheck {
  double plateau_time = 0.0;
  double plateau_rate = 0.0;
  double gamma = 0.0;
  double u_norm = 0.0;
  double relative_gamma = 0.0;      // gamma / |u|
  std::vector<double> center;       // fitted centre (origin for radial runs)
  double center_drift = 0.0;        // from the mass centroid of u0
  bool success = false;             // relative_gamma <= 0.05
};

// Fits one bubble to the plateau snapshot. Throws Error("no plateau") when
// the run recorded no snapshot or never slowed below max_rate (|du/dt|/|u|).
ProfileCheck near_threshold_profile_check(const ThresholdResult<RadialField>& res,
                                          const RadialProfile& p, double max_rate = 0.1);
ProfileCheck near_threshold_profile_check(const ThresholdResult<Field>& res,
                                          const RadialProfile& p, double max_rate = 0.1);

}  // namespace gsflow
