#include "gsflow/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

enum class Outcome { crosses, turns, unresolved };

struct Trajectory {
  Outcome outcome = Outcome::unresolved;
  std::vector<double> xi;
  std::vector<double> dxi;
};

struct Rhs {
  const Nonlinearity& nl;
  int n;
  // RK4 stages may poke slightly below zero right at a crossing; extend f
  // linearly there so the step stays defined.
  double f(double t) const { return t >= 0.0 ? nl.f(t) : nl.a0() * t; }
  void operator()(double r, double x, double dx, double& ox, double& odx) const {
    ox = dx;
    odx = f(x) - (n - 1) * dx / r;
  }
};

void rk4(const Rhs& rhs, double r, double step, double& x, double& dx) {
  double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
  rhs(r, x, dx, k1x, k1v);
  rhs(r + 0.5 * step, x + 0.5 * step * k1x, dx + 0.5 * step * k1v, k2x, k2v);
  rhs(r + 0.5 * step, x + 0.5 * step * k2x, dx + 0.5 * step * k2v, k3x, k3v);
  rhs(r + step, x + step * k3x, dx + step * k3v, k4x, k4v);
  x += step / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  dx += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

// Regular-centre series xi = s + c2 r^2 + c4 r^4.
void series_start(const Nonlinearity& nl, int n, double s, double r, double& x,
                  double& dx) {
  const double c2 = nl.f(s) / (2.0 * n);
  const double c4 = nl.df(s) * c2 / (4.0 * (n + 2));
  const double r2 = r * r;
  x = s + c2 * r2 + c4 * r2 * r2;
  dx = 2.0 * c2 * r + 4.0 * c4 * r2 * r;
}

// Forward integration on r_i = i * step, i = 0..last. Stops at the first
// crossing or upturn.
Trajectory integrate(const Nonlinearity& nl, int n, double s, double step,
                     std::size_t last, bool record) {
  const Rhs rhs{nl, n};
  Trajectory tr;
  double x = s, dx = 0.0;
  if (record) {
    tr.xi.reserve(last + 1);
    tr.dxi.reserve(last + 1);
    tr.xi.push_back(x);
    tr.dxi.push_back(dx);
  }
  for (std::size_t i = 1; i <= last; ++i) {
    if (i == 1) {
      series_start(nl, n, s, step, x, dx);
    } else {
      rk4(rhs, (i - 1) * step, step, x, dx);
    }
    if (!std::isfinite(x) || x < 0.0) {
      tr.outcome = Outcome::crosses;
      return tr;
    }
    if (dx > 0.0) {
      tr.outcome = Outcome::turns;
      return tr;
    }
    if (record) {
      tr.xi.push_back(x);
      tr.dxi.push_back(dx);
    }
  }
  // Neither event on the grid: a decaying tail has xi' + (m + (n-1)/(2r)) xi
  // close to 0; a positive value means the growing mode is present.
  const double r = last * step;
  const double m = nl.decay_rate();
  tr.outcome = dx + (m + (n - 1) / (2.0 * r)) * x > 0.0 ? Outcome::turns : Outcome::crosses;
  return tr;
}

double tail_order(int n) { return std::abs(0.5 * (n - 2)); }

}  // namespace

double linear_tail_mode(int n, double m, double radius) {
  const double z = m * radius;
  if (z > 700.0) return 0.0;
  const double nu = 0.5 * (n - 2);
  return std::pow(radius, -nu) * std::cyl_bessel_k(tail_order(n), z);
}

double linear_tail_mode_derivative(int n, double m, double radius) {
  const double z = m * radius;
  if (z > 700.0) return 0.0;
  const double nu = 0.5 * (n - 2);
  return -m * std::pow(radius, -nu) * std::cyl_bessel_k(std::abs(nu + 1.0), z);
}

double RadialProfile::value(double radius) const {
  radius = std::abs(radius);
  const std::size_t last = r.size() - 1;
  if (radius >= r.back()) {
    return radius == r.back() ? xi[last] : tail_amplitude * linear_tail_mode(n, m, radius);
  }
  const std::size_t i = std::min(static_cast<std::size_t>(radius / h), last - 1);
  const double t = (radius - r[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * xi[i] + h10 * h * dxi[i] + h01 * xi[i + 1] + h11 * h * dxi[i + 1];
}

double RadialProfile::derivative(double radius) const {
  radius = std::abs(radius);
  const std::size_t last = r.size() - 1;
  if (radius >= r.back()) {
    return radius == r.back() ? dxi[last]
                              : tail_amplitude * linear_tail_mode_derivative(n, m, radius);
  }
  const std::size_t i = std::min(static_cast<std::size_t>(radius / h), last - 1);
  const double t = (radius - r[i]) / h;
  const double t2 = t * t;
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  return (d00 * xi[i] + d01 * xi[i + 1]) / h + d10 * dxi[i] + d11 * dxi[i + 1];
}

double RadialProfile::second_derivative(double radius) const {
  radius = std::abs(radius);
  const double x = std::max(value(radius), 0.0);
  if (radius == 0.0) return nl.f(x) / n;
  return nl.f(x) - (n - 1) * derivative(radius) / radius;
}

RadialProfile RadialProfile::extended(double r_new) const {
  RadialProfile out = *this;
  const auto last = static_cast<std::size_t>(std::ceil(r_new / h - 1e-9));
  for (std::size_t i = r.size(); i <= last; ++i) {
    const double ri = i * h;
    out.r.push_back(ri);
    out.xi.push_back(tail_amplitude * linear_tail_mode(n, m, ri));
    out.dxi.push_back(tail_amplitude * linear_tail_mode_derivative(n, m, ri));
  }
  return out;
}

double RadialProfile::max_ode_residual() const {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    const double d2 = (dxi[i + 1] - dxi[i - 1]) / (2.0 * h);
    const double res = d2 + (n - 1) * dxi[i] / r[i] - nl.f(xi[i]);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

RadialProfile shoot(const Nonlinearity& nl, int n, double r_max, double h, double tol) {
  const double m = nl.decay_rate();
  if (n < 1) throw PreconditionError("dimension must be >= 1");
  if (!(tol > 0.0)) throw PreconditionError("shooting tolerance must be positive");
  if (!(h > 0.0) || h > 1.0 / (50.0 * m) * (1.0 + 1e-12)) {
    throw PreconditionError("step h must satisfy 0 < h <= 1/(50 m)");
  }
  if (r_max < 20.0 / m * (1.0 - 1e-12)) {
    throw PreconditionError("r_max must be at least 20/m");
  }
  const auto last = static_cast<std::size_t>(std::llround(r_max / h));

  // Bracket: lo turns upward, hi crosses zero.
  const double zero = nl.positive_zero();
  double lo = 0.5 * zero;
  if (integrate(nl, n, lo, h, last, false).outcome != Outcome::turns) {
    throw Error("shooting: lower trial value does not turn upward");
  }
  double hi = 2.0 * zero;
  int expansions = 0;
  while (integrate(nl, n, hi, h, last, false).outcome != Outcome::crosses) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 60) {
      throw Error("shooting: no bracket found; f may have no ground state (F >= 0?)");
    }
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Outcome o = integrate(nl, n, mid, h, last, false).outcome;
    (o == Outcome::crosses ? hi : lo) = mid;
  }
  const double s = 0.5 * (lo + hi);

  const Trajectory tlo = integrate(nl, n, lo, h, last, true);
  const Trajectory thi = integrate(nl, n, hi, h, last, true);
  const Trajectory tmid = integrate(nl, n, s, h, last, true);

  // Keep the forward solution while the bracketing trajectories agree.
  std::size_t common = std::min({tlo.xi.size(), thi.xi.size(), tmid.xi.size()});
  std::size_t split = 1;
  for (std::size_t i = 1; i < common; ++i) {
    const double spread = std::abs(thi.xi[i] - tlo.xi[i]);
    if (spread > 1e-9 * tmid.xi[i] || !(tmid.dxi[i] < 0.0)) break;
    split = i;
  }
  if (split < 2) throw SolverError("shooting: bracket too wide to resolve the profile");

  RadialProfile p(nl);
  p.n = n;
  p.h = h;
  p.m = m;
  p.shoot_parameter = s;
  p.tolerance = tol;
  p.r.resize(last + 1);
  for (std::size_t i = 0; i <= last; ++i) p.r[i] = i * h;
  p.xi.assign(tmid.xi.begin(), tmid.xi.begin() + split + 1);
  p.dxi.assign(tmid.dxi.begin(), tmid.dxi.begin() + split + 1);
  p.xi.resize(last + 1);
  p.dxi.resize(last + 1);

  if (split < last) {
    // Inward integration from r_max on the decaying linear mode, amplitude
    // chosen so the value at the junction agrees.
    const Rhs rhs{nl, n};
    const double r_match = split * h;
    const double target = tmid.xi[split];
    std::vector<double> bx(last + 1), bdx(last + 1);
    auto inward = [&](double amp) {
      double x = amp * linear_tail_mode(n, m, last * h);
      double dx = amp * linear_tail_mode_derivative(n, m, last * h);
      bx[last] = x;
      bdx[last] = dx;
      for (std::size_t i = last; i > split; --i) {
        rk4(rhs, i * h, -h, x, dx);
        bx[i - 1] = x;
        bdx[i - 1] = dx;
      }
      return x - target;
    };
    double c0 = target / linear_tail_mode(n, m, r_match);
    if (!std::isfinite(c0) || c0 <= 0.0) {
      throw SolverError("shooting: tail mode underflows at the junction; reduce r_max");
    }
    double c1 = c0 * (1.0 + 1e-3);
    double g0 = inward(c0), g1 = inward(c1);
    for (int it = 0; it < 100 && std::abs(g1) > 1e-15 * target; ++it) {
      if (g1 == g0) break;
      const double c2 = c1 - g1 * (c1 - c0) / (g1 - g0);
      c0 = c1;
      g0 = g1;
      c1 = c2;
      g1 = inward(c1);
    }
    if (!(std::abs(g1) <= 1e-10 * target)) {
      throw SolverError("shooting: tail amplitude matching did not converge");
    }
    p.match_derivative_gap = std::abs(bdx[split] - tmid.dxi[split]);
    for (std::size_t i = split + 1; i <= last; ++i) {
      p.xi[i] = bx[i];
      p.dxi[i] = bdx[i];
    }
    p.match_radius = r_match;
  } else {
    p.match_radius = p.r.back();
  }
  p.tail_amplitude = p.xi[last] / linear_tail_mode(n, m, p.r[last]);

  for (std::size_t i = 1; i <= last; ++i) {
    if (!(p.xi[i] > 0.0) || !(p.xi[i] < p.xi[i - 1])) {
      throw SolverError("shooting: profile is not positive and decreasing at r = " +
                        std::to_string(p.r[i]));
    }
  }

  // Step doubling over the forward part.
  const std::size_t coarse_last = split / 2;
  if (coarse_last >= 2) {
    const Trajectory coarse = integrate(nl, n, s, 2.0 * h, coarse_last, true);
    double err = 0.0;
    for (std::size_t j = 0; j < coarse.xi.size(); ++j) {
      err = std::max(err, std::abs(coarse.xi[j] - p.xi[2 * j]));
    }
    p.step_error_estimate = err / 15.0;
    if (p.step_error_estimate > 1e-6 * s) {
      throw SolverError("shooting: step size too coarse (error estimate " +
                        std::to_string(p.step_error_estimate) + ")");
    }
  }
  return p;
}

DecayReport decay_report(const RadialProfile& p, double r_lo, double r_hi) {
  if (r_hi < 0.0) r_hi = p.r_end();
  if (r_lo < 2.0 / p.m * (1.0 - 1e-12)) {
    throw PreconditionError("decay_report: r_lo must be at least 2/m");
  }
  if (r_lo >= p.r_end() || r_hi <= r_lo) {
    throw PreconditionError("decay_report: window outside the profile grid");
  }
  DecayReport rep;
  rep.r_lo = r_lo;
  rep.r_hi = std::min(r_hi, p.r_end());
  rep.band_min = rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.band_max = rep.ratio_max = -std::numeric_limits<double>::infinity();
  const double a = 0.5 * (p.n - 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p.r[i];
    if (r < r_lo - 1e-12 || r > rep.r_hi + 1e-12) continue;
    ++rep.nodes;
    const double band = p.xi[i] * std::exp(p.m * r) * std::max(std::pow(r, a), 1.0);
    const double ratio = -p.dxi[i] / p.xi[i];
    rep.band_min = std::min(rep.band_min, band);
    rep.band_max = std::max(rep.band_max, band);
    rep.ratio_min = std::min(rep.ratio_min, ratio);
    rep.ratio_max = std::max(rep.ratio_max, ratio);
  }
  if (rep.nodes < 50) {
    throw PreconditionError("decay_report: fewer than 50 grid nodes in the tail window");
  }
  return rep;
}

double emden_fowler_residual(std::span<const double> r, std::span<const double> xi, int n,
                             const std::function<double(double)>& f_over_xi,
                             double r_tail) {
  if (n < 2) throw PreconditionError("Emden-Fowler transform needs n >= 2");
  if (r.size() != xi.size() || r.size() < 3) {
    throw PreconditionError("Emden-Fowler check needs matching samples");
  }
  const double a = 0.5 * (n - 1);
  const double h = r[1] - r[0];
  auto w = [&](std::size_t i) { return std::pow(r[i], a) * xi[i]; };
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] < r_tail) continue;
    const double d2 = (w(i + 1) - 2.0 * w(i) + w(i - 1)) / (h * h);
    const double res = d2 - w(i) * (a * (a - 1.0) / (r[i] * r[i]) + f_over_xi(xi[i]));
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

double emden_fowler_residual(const RadialProfile& p, double r_tail) {
  if (r_tail < 0.0) r_tail = 2.0 / p.m;
  const Nonlinearity& nl = p.nl;
  return emden_fowler_residual(p.r, p.xi, p.n,
                               [&nl](double x) { return nl.f(x) / x; }, r_tail);
}

}  // namespace gsflow
