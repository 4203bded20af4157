#pragma once

// Multi-bubble decomposition of a field: best-matching centres, the weight
// system, interaction levels, and the energy-deficit diagnostics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsflow/field.hpp"
#include "gsflow/ground_state.hpp"
#include "gsflow/reaction.hpp"

namespace gsflow {

using Point = std::vector<double>;

struct MBubble {
  int M = 0;
  std::vector<Point> centers;
  std::vector<double> weights;
};

struct FitResult {
  MBubble bubble;
  double gamma = 0.0;           // |u - sum tau_i xi| with unit weights
  double u_norm = 0.0;
  double nu = 0.0;              // sum_{i<j} <tau_i xi, tau_j xi> on the grid
  double nu_from_g = 0.0;       // same from interaction_g
  std::vector<double> rho;      // u - sum alpha_i tau_i xi, on the field's grid
  double rho_l2 = 0.0;
  double rho_h1 = 0.0;
  // |<u - theta, d_a tau_i xi>| / (|u - theta| |d_a xi|), per centre and axis.
  std::vector<std::vector<double>> ortho_translation;
  // <T_i, u - eta> with T_i the xi'-type test fields; zero up to solver error.
  std::vector<double> ortho_xi;
  // <T_i, u> / Q_ii: weight each bubble would get without cross terms.
  std::vector<double> alpha_decoupled;
  double weight_condition = 0.0;
  double u_energy = 0.0;
  double reference_energy = 0.0;  // J of one sampled bubble on the same grid
  double deficit = 0.0;           // u_energy - M reference_energy
  int iterations = 0;
  int starts = 0;
  std::vector<std::string> warnings;
};

struct MatchOptions {
  int max_iter = 200;
  double opt_tol = 1e-3;     // stationarity tolerance, see ortho_translation
  double perturbation = 0.5; // restart noise in units of 1/m
  std::uint64_t seed = 1;
  bool solve_weights = true;
};

// Minimises |u - sum_i tau_{x_i} xi| over the centres by Levenberg-Marquardt
// from the M highest separated local maxima of u (or from init) plus one
// perturbed restart. Collapsed centres (closer than 2h) drop M by one with a
// warning. Throws Error when M local maxima are missing and SolverError when
// the descent stagnates.
FitResult best_match(const Field& u, const RadialProfile& p, int M,
                     const std::optional<std::vector<Point>>& init = std::nullopt,
                     const MatchOptions& opt = {});

// Radial fields: one bubble centred at the origin.
FitResult best_match(const RadialField& u, const RadialProfile& p);

struct WeightSolve {
  std::vector<double> alpha;
  std::vector<std::vector<double>> Q;  // Q_ij = <T_i, tau_j xi>
  std::vector<double> rhs;             // <T_i, u>
  double condition = 0.0;              // 1-norm estimate
};

// T_i = (-Lap_h + f'(tau_i xi)) xi'(|x - x_i|); solves Q alpha = rhs by
// elimination. Requires separations >= 4/m; throws SolverError when the
// condition estimate exceeds 1e8.
WeightSolve solve_weights(const Field& u, const std::vector<Point>& centers,
                          const RadialProfile& p);
double solve_weights(const RadialField& u, const RadialProfile& p);

struct InteractionValue {
  double value = 0.0;
  bool extrapolated = false;
};

// g(x) = int xi(|y|) xi(|y - x e|) dy. Past 2 r_end the ratio g/xi is frozen
// at its value there and the result is flagged.
InteractionValue interaction_g(const RadialProfile& p, double x);

// Share of g(x) carried outside B_r(0) and B_r(x e).
double tail_remainder_fraction(const RadialProfile& p, double x, double r);

struct DeficitReport {
  double deficit = 0.0;
  double dudt_norm = 0.0;
  double ratio_a = 0.0;          // deficit / |du/dt|^2
  double lhs_b = 0.0;            // sum |1 - alpha_i| + nu
  double alpha_term = 0.0;
  double nu_term = 0.0;
  double rho_l2 = 0.0;
  double rho_h1 = 0.0;
  double ratio_b_rho = 0.0;      // lhs_b / |rho|
  double ratio_b_dudt = 0.0;     // lhs_b / |du/dt|
  double quad_form = 0.0;        // int |grad rho|^2 + f'(eta) rho^2
  double ratio_c = 0.0;          // quad_form / |rho|_{H1}^2
  bool degenerate_a = false;
  bool degenerate_b = false;
  bool degenerate_c = false;
};

DeficitReport deficit_report(const Field& u, const FitResult& fit, const RadialProfile& p,
                             double dudt_norm);
DeficitReport deficit_report(const RadialField& u, const FitResult& fit,
                             const RadialProfile& p, double dudt_norm);

// F(sum x_i) - sum F(x_i) - sum_{i<j} f(x_i) x_j.
double tail_concavity_expression(const Nonlinearity& nl, const std::vector<double>& xs);
// Expression <= 1e-12. Rejects sum x_i >= delta or delta beyond the
// concavity radius of f.
bool tail_concavity_check(const Nonlinearity& nl, const std::vector<double>& xs, double delta);

}  // namespace gsflow
