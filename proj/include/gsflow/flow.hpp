#pragma once

// du/dt = Lap u - f(u) with f(u) = a0 u - sum a_l u^{p_l}.
//
// Scheme::euler solves (I - dt (Lap - a0)) u+ = u + dt sum a_l u^{p_l}: the
// convex part of the energy implicit, the concave power sink explicit. For
// u >= 0 this splitting gives J(u+) <= J(u) - |u+ - u|^2 / dt for any dt, but
// the energy ledger only closes to O(dt).
// Scheme::bdf2 is the second-order IMEX BDF2 variant
//   (3 u+ - 4 u + u-) / (2 dt) = (Lap - a0) u+ + 2 S(u) - S(u-),
// L-stable, started with one euler step; the ledger closes to O(dt^2).
// Both keep discrete stationary states fixed exactly.
// Radial systems are tridiagonal and solved directly; Cartesian systems by
// conjugate gradients to relative residual 1e-10.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gsflow/field.hpp"
#include "gsflow/reaction.hpp"

namespace gsflow {

enum class Scheme { euler, bdf2 };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

enum class Event { running, vanished, blown_up, converged };
std::string to_string(Event e);

struct Sample {
  double t = 0.0;
  double J = 0.0;
  double rate = 0.0;         // |du/dt|^2 of the step ending at t
  double dissipation = 0.0;  // cumulative sum of rate * dt since t = 0
  double sup = 0.0;
  double l2 = 0.0;
};

template <class F>
struct FlowState {
  double t = 0.0;
  F u;
  std::vector<Sample> history;
  Event event = Event::running;
  double event_time = 0.0;
  std::size_t steps = 0;
  double clamp_mass = 0.0;       // total L1 mass removed by clamping negatives
  double max_clamp_ratio = 0.0;  // max per step of clamped mass / |u|_1
  int solver_iterations = 0;     // last linear solve (0 for direct solves)

  // Previous level for the two-step scheme (empty until one step is taken).
  std::vector<double> previous;
  double previous_dt = 0.0;

  // Snapshot at the sample minimising |du/dt| / |u| (the slowest point).
  std::optional<F> plateau;
  double plateau_time = 0.0;
  double plateau_rate = 0.0;  // |du/dt| / |u| there
};

using RadialFlow = FlowState<RadialField>;
using CartesianFlow = FlowState<Field>;

struct FlowOptions {
  double dt = 1e-3;
  double T = 5.0;
  Scheme scheme = Scheme::bdf2;
  int sample_stride = 1;        // steps between history samples
  double blowup_cap = 1e6;
  double vanish_sup = 1e-8;
  double vanish_energy = 1e-10;
  double conv_tol = 0.0;        // 0 disables the converged event
  int conv_window = 50;         // consecutive samples below conv_tol
  bool track_plateau = false;
  double cg_tol = 1e-10;
  int cg_max_iter = 5000;
};

template <class F>
using Monitor = std::function<void(const FlowState<F>&)>;

// Throws PreconditionError for dt <= 0, dt > 0.1 / a0 or negative input.
template <class F>
FlowState<F> start(F u0, const Nonlinearity& nl);

// One step of opt.scheme in place; returns the step's |du/dt|^2 from the
// difference quotient. Throws SolverError on NaN/inf or linear-solver failure.
template <class F>
double step(FlowState<F>& s, const Nonlinearity& nl, double dt,
            const FlowOptions& opt = {});

// Integrates to opt.T or until an event. The monitor (if set) runs after
// every recorded sample.
template <class F>
FlowState<F> run(F u0, const Nonlinearity& nl, const FlowOptions& opt,
                 const Monitor<F>& monitor = {});

// Continue an existing state up to opt.T.
template <class F>
void advance(FlowState<F>& s, const Nonlinearity& nl, const FlowOptions& opt,
             const Monitor<F>& monitor = {});

// |J(t1) - J(t2) - int_{t1}^{t2} |du/dt|^2| / max(|J(t1) - J(t2)|, eps) using
// the recorded samples nearest to t1 and t2.
double dissipation_residual(const std::vector<Sample>& history, double t1, double t2,
                            double eps = 1e-300);

template <class F>
double dissipation_residual(const FlowState<F>& s, double t1, double t2) {
  return dissipation_residual(s.history, t1, t2);
}

// Largest relative increase of J between consecutive samples (<= 0 when J is
// monotone).
double max_energy_increase(const std::vector<Sample>& history);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gsflow
