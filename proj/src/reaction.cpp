#include "gsflow/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

constexpr double kHypothesisTol = 1e-12;

// t^p with the common integer exponents done by multiplication.
inline double power(double t, double p) {
  if (p == 2.0) return t * t;
  if (p == 3.0) return t * t * t;
  if (p == 4.0) {
    const double t2 = t * t;
    return t2 * t2;
  }
  return std::pow(t, p);
}

void require_nonnegative(double t) {
  if (!(t >= 0.0)) {
    throw PreconditionError("reaction term evaluated at negative argument " +
                            std::to_string(t));
  }
}

}  // namespace

Nonlinearity::Nonlinearity(double a0, std::vector<PowerTerm> terms,
                           std::optional<double> holder_beta)
    : a0_(a0), terms_(std::move(terms)) {
  if (!(a0_ > 0.0)) throw PreconditionError("a0 must be positive");
  if (terms_.empty()) throw PreconditionError("at least one power term is required");
  double total = 0.0;
  double min_gap = 1.0;
  for (const auto& term : terms_) {
    if (!(term.coeff >= 0.0)) throw PreconditionError("power coefficients must be >= 0");
    if (!(term.exponent > 1.0)) throw PreconditionError("power exponents must exceed 1");
    total += term.coeff;
    min_gap = std::min(min_gap, term.exponent - 1.0);
  }
  if (!(total > 0.0)) throw PreconditionError("sum of power coefficients must be positive");
  holder_beta_ = holder_beta.value_or(std::min(1.0, min_gap));
  if (!(holder_beta_ > 0.0 && holder_beta_ <= 1.0)) {
    throw PreconditionError("holder_beta must lie in (0, 1]");
  }
}

double Nonlinearity::decay_rate() const { return std::sqrt(a0_); }

double Nonlinearity::sink(double t) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.coeff * power(t, term.exponent);
  return s;
}

double Nonlinearity::f(double t) const {
  require_nonnegative(t);
  return a0_ * t - sink(t);
}

double Nonlinearity::df(double t) const {
  require_nonnegative(t);
  double s = a0_;
  for (const auto& term : terms_) {
    s -= term.coeff * term.exponent * power(t, term.exponent - 1.0);
  }
  return s;
}

double Nonlinearity::d2f(double t) const {
  require_nonnegative(t);
  double s = 0.0;
  for (const auto& term : terms_) {
    if (term.coeff == 0.0) continue;
    s -= term.coeff * term.exponent * (term.exponent - 1.0) *
         power(t, term.exponent - 2.0);
  }
  return s;
}

double Nonlinearity::F(double t) const {
  require_nonnegative(t);
  double s = 0.5 * a0_ * t * t;
  for (const auto& term : terms_) {
    s -= term.coeff * power(t, term.exponent + 1.0) / (term.exponent + 1.0);
  }
  return s;
}

double Nonlinearity::positive_zero() const {
  // f(t)/t = a0 - sum a_l t^{p_l - 1} is strictly decreasing on (0, inf).
  auto g = [this](double t) { return a0_ - sink(t) / t; };
  double lo = 0.0;
  double hi = 1.0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool Nonlinearity::subcritical(int n) const {
  if (n <= 2) return true;
  const double crit = static_cast<double>(n) / (n - 2);
  return std::all_of(terms_.begin(), terms_.end(),
                     [crit](const PowerTerm& t) { return t.exponent < crit; });
}

double eval_f(const Nonlinearity& nl, double t) { return nl.f(t); }
double eval_F(const Nonlinearity& nl, double t) { return nl.F(t); }

HypothesisReport check_hypotheses(const Nonlinearity& nl, int n, double t_max,
                                  int samples) {
  if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
  if (samples < 2) throw PreconditionError("at least two samples are required");
  if (n < 1) throw PreconditionError("dimension must be >= 1");

  HypothesisReport rep;
  const double step = t_max / (samples - 1);
  const double fp0 = nl.df(0.0);

  rep.kpp_min_margin = std::numeric_limits<double>::infinity();
  rep.F_min = std::numeric_limits<double>::infinity();
  rep.max_second_difference = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double t = k * step;
    rep.kpp_min_margin = std::min(rep.kpp_min_margin, t * fp0 - nl.f(t));
    if (k > 0) {
      const double F = nl.F(t);
      if (F < rep.F_min) {
        rep.F_min = F;
        rep.F_argmin = t;
      }
    }
    if (k > 0 && k + 1 < samples) {
      const double d2 = nl.f(t + step) - 2.0 * nl.f(t) + nl.f(t - step);
      rep.max_second_difference = std::max(rep.max_second_difference, d2);
    }
  }
  rep.kpp = rep.kpp_min_margin >= -kHypothesisTol;

  rep.concavity_analytic = true;
  rep.concavity_radius = nl.concavity_radius();
  const bool sampled_concave = samples < 3 || rep.max_second_difference < 0.0;
  rep.concave_near_zero = rep.concavity_analytic && sampled_concave;

  rep.negative_F = rep.F_min < -kHypothesisTol;

  rep.critical_exponent =
      n <= 2 ? std::numeric_limits<double>::infinity() : static_cast<double>(n) / (n - 2);
  rep.subcritical = nl.subcritical(n);
  return rep;
}

}  // namespace gsflow
