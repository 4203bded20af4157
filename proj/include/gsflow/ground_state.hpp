#pragma once

// Radial ground state of  xi'' + (n-1)/r xi' = f(xi),  xi'(0) = 0,  xi -> 0.
//
// shoot() bisects on xi(0). A trajectory that reaches xi < 0 means xi(0) was
// too large; one that turns upward (xi' > 0 while xi > 0) means it was too
// small. Once the bracket is tight the forward solution is kept up to the
// radius where the two bracketing trajectories still agree, and the decaying
// tail beyond it is recovered by integrating the same ODE inward from r_max,
// starting on the linear decaying mode r^{-nu} K_nu(m r), nu = (n-2)/2, and
// matching the amplitude at the junction.

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gsflow/reaction.hpp"

namespace gsflow {

struct RadialProfile {
  explicit RadialProfile(Nonlinearity reaction) : nl(std::move(reaction)) {}

  Nonlinearity nl;
  int n = 3;
  double h = 0.0;
  double m = 1.0;  // tail decay rate sqrt(f'(0))
  double shoot_parameter = 0.0;
  double tolerance = 0.0;
  std::vector<double> r;    // r[i] = i h
  std::vector<double> xi;   // > 0, strictly decreasing
  std::vector<double> dxi;  // <= 0, dxi[0] = 0

  double match_radius = 0.0;       // junction of forward and inward solutions
  double match_derivative_gap = 0.0;
  double step_error_estimate = 0.0;
  double tail_amplitude = 0.0;     // xi(r) = A r^{-nu} K_nu(m r) past r_end()

  double r_end() const { return r.back(); }
  std::size_t size() const { return r.size(); }

  // Cubic Hermite interpolation on the grid, linear-mode tail past r_end().
  double value(double radius) const;
  double derivative(double radius) const;
  // Second derivative from the ODE itself.
  double second_derivative(double radius) const;

  // Copy whose grid continues to r_new with nodes taken from the tail law, so
  // that lookups far out stay on the cheap Hermite path.
  RadialProfile extended(double r_new) const;

  // max over interior nodes of |xi'' + (n-1)/r xi' - f(xi)|, with xi'' from a
  // central difference of xi'.
  double max_ode_residual() const;
};

// Decaying solution of the linearised radial equation, r^{-nu} K_nu(m r).
double linear_tail_mode(int n, double m, double radius);
double linear_tail_mode_derivative(int n, double m, double radius);

// Throws PreconditionError when r_max < 20/m, h > 1/(50 m) or tol <= 0,
// Error when no bracket exists and SolverError when the step-doubling error
// estimate exceeds 1e-6 xi(0).
RadialProfile shoot(const Nonlinearity& nl, int n, double r_max, double h, double tol);

struct DecayReport {
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::size_t nodes = 0;
  // xi(r) e^{m r} max{r^{(n-1)/2}, 1}
  double band_min = 0.0;
  double band_max = 0.0;
  // -xi'(r) / xi(r)
  double ratio_min = 0.0;
  double ratio_max = 0.0;

  double band_width() const { return band_max / band_min; }
};

// Tail bands over grid nodes in [r_lo, r_hi] (r_hi defaults to the grid end).
// Requires r_lo >= 2/m and at least 50 nodes in range.
DecayReport decay_report(const RadialProfile& p, double r_lo, double r_hi = -1.0);

// Emden-Fowler check on w = r^a xi, a = (n-1)/2: max over grid nodes with
// r >= r_tail of |w'' - w (a(a-1)/r^2 + f(xi)/xi)| using second differences.
// n = 1 is rejected. r_tail defaults to 2/m.
double emden_fowler_residual(const RadialProfile& p, double r_tail = -1.0);

// Same check for arbitrary samples on a uniform grid, with the reaction
// supplied as the ratio f(xi)/xi.
double emden_fowler_residual(std::span<const double> r, std::span<const double> xi,
                             int n, const std::function<double(double)>& f_over_xi,
                             double r_tail);

}  // namespace gsflow
