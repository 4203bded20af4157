#pragma once

// The reaction term f(t) = a0 t - sum_l a_l t^{p_l} on [0, inf), together
// with its exact derivatives and antiderivative F, and the structural checks
// the convergence theory needs (KPP-type bound, concavity near zero,
// existence of a negative value of F, subcriticality).

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace gsflow {

struct PowerTerm {
  double coeff = 0.0;     // a_l >= 0
  double exponent = 2.0;  // p_l > 1
};

class Nonlinearity {
 public:
  // Throws PreconditionError unless a0 > 0, every a_l >= 0 with sum a_l > 0,
  // every p_l > 1 and holder_beta (when given) lies in (0, 1].
  Nonlinearity(double a0, std::vector<PowerTerm> terms,
               std::optional<double> holder_beta = std::nullopt);

  double a0() const { return a0_; }
  std::span<const PowerTerm> terms() const { return terms_; }
  double holder_beta() const { return holder_beta_; }

  // Linear decay rate of ground-state tails, sqrt(f'(0)).
  double decay_rate() const;
  // Natural length scale 1/decay_rate().
  double decay_length() const { return 1.0 / decay_rate(); }

  double f(double t) const;
  double df(double t) const;
  double d2f(double t) const;
  double F(double t) const;

  // sum_l a_l t^{p_l}: the part of -f that the flow treats explicitly.
  double sink(double t) const;

  // Radius delta such that f is strictly concave on (0, delta). For this
  // family f'' = -sum a_l p_l (p_l - 1) t^{p_l - 2} < 0 on all of (0, inf).
  double concavity_radius() const { return std::numeric_limits<double>::infinity(); }

  // Smallest positive zero of f (f > 0 below it, f < 0 above).
  double positive_zero() const;

  bool subcritical(int n) const;

 private:
  double a0_;
  std::vector<PowerTerm> terms_;
  double holder_beta_;
};

// Free-function spellings of the evaluators. All reject t < 0.
double eval_f(const Nonlinearity& nl, double t);
double eval_F(const Nonlinearity& nl, double t);

struct HypothesisReport {
  bool kpp = false;              // t f'(0) >= f(t) on the sample grid
  double kpp_min_margin = 0.0;   // min over samples of t f'(0) - f(t)
  bool concave_near_zero = false;
  bool concavity_analytic = false;
  double concavity_radius = 0.0;
  double max_second_difference = 0.0;  // sampled f'' proxy, must be < 0
  bool negative_F = false;
  double F_min = 0.0;
  double F_argmin = 0.0;
  bool subcritical = false;
  double critical_exponent = 0.0;  // n/(n-2), +inf for n <= 2

  bool all() const { return kpp && concave_near_zero && negative_F && subcritical; }
};

HypothesisReport check_hypotheses(const Nonlinearity& nl, int n, double t_max,
                                  int samples);

}  // namespace gsflow
