#include "gsflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "gsflow/error.hpp"

namespace gsflow {

std::string to_string(Event e) {
  switch (e) {
    case Event::running: return "running";
    case Event::vanished: return "vanished";
    case Event::blown_up: return "blown_up";
    case Event::converged: return "converged";
  }
  return "unknown";
}

std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "bdf2"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler") return Scheme::euler;
  if (name == "bdf2") return Scheme::bdf2;
  throw PreconditionError("unknown time-stepping scheme '" + name + "'");
}

namespace {

const RadialStencil& stencil_for(const RadialGrid& g) {
  thread_local RadialGrid key;
  thread_local RadialStencil st;
  if (!key.same_as(g)) {
    st = radial_stencil(g);
    key = g;
  }
  return st;
}

bool interior(const RadialField& u, std::size_t i) { return i < u.grid.last; }
bool interior(const Field& u, std::size_t i) { return !u.grid.is_boundary(i); }

// Solves (1/dt + a0 - Lap_h) x = b; x holds the initial guess on entry.
int implicit_solve(const RadialField& u, double c0, std::span<const double> b,
                   std::span<double> x, const FlowOptions&) {
  solve_radial(u.grid, stencil_for(u.grid), c0, {}, b, x);
  return 0;
}

int implicit_solve(const Field& u, double c0, std::span<const double> b,
                   std::span<double> x, const FlowOptions& opt) {
  return solve_cartesian(u.grid, c0, {}, b, x, opt.cg_tol, opt.cg_max_iter);
}

template <class F>
Sample make_sample(const FlowState<F>& s, const Nonlinearity& nl, double rate,
                   double dissipation) {
  Sample smp;
  smp.t = s.t;
  smp.J = energy(s.u, nl);
  smp.rate = rate;
  smp.dissipation = dissipation;
  const Norms nm = norms(s.u);
  smp.sup = nm.sup;
  smp.l2 = nm.l2;
  return smp;
}

template <class F>
void check_initial(const F& u0) {
  for (std::size_t i = 0; i < u0.v.size(); ++i) {
    if (!std::isfinite(u0.v[i])) throw PreconditionError("initial field is not finite");
    if (u0.v[i] < 0.0) throw PreconditionError("initial field must be nonnegative");
  }
}

}  // namespace

template <class F>
FlowState<F> start(F u0, const Nonlinearity& nl) {
  check_initial(u0);
  FlowState<F> s;
  for (std::size_t i = 0; i < u0.v.size(); ++i) {
    if (!interior(u0, i)) u0.v[i] = 0.0;
  }
  s.u = std::move(u0);
  s.history.push_back(make_sample(s, nl, 0.0, 0.0));
  return s;
}

template <class F>
double step(FlowState<F>& s, const Nonlinearity& nl, double dt, const FlowOptions& opt) {
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  if (dt > 0.1 / nl.a0() * (1.0 + 1e-12)) {
    throw PreconditionError("time step must not exceed 0.1 / a0");
  }
  auto& u = s.u.v;
  const std::size_t N = u.size();
  thread_local std::vector<double> b, x;
  b.resize(N);
  x.assign(u.begin(), u.end());
  const double inv_dt = 1.0 / dt;
  const bool two_step =
      opt.scheme == Scheme::bdf2 && s.previous.size() == N && s.previous_dt == dt;
  if (two_step) {
    const auto& up = s.previous;
    for (std::size_t i = 0; i < N; ++i) {
      b[i] = interior(s.u, i) ? (2.0 * u[i] - 0.5 * up[i]) * inv_dt + 2.0 * nl.sink(u[i]) -
                                    nl.sink(up[i])
                              : 0.0;
    }
    s.solver_iterations = implicit_solve(s.u, 1.5 * inv_dt + nl.a0(), b, x, opt);
  } else {
    for (std::size_t i = 0; i < N; ++i) {
      b[i] = interior(s.u, i) ? (u[i] + dt * nl.sink(u[i])) * inv_dt : 0.0;
    }
    s.solver_iterations = implicit_solve(s.u, inv_dt + nl.a0(), b, x, opt);
  }

  F negative{s.u.grid, std::vector<double>(N, 0.0)};
  bool clamped = false;
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(x[i])) throw SolverError("flow step produced a non-finite value");
    if (x[i] < 0.0) {
      negative.v[i] = -x[i];
      x[i] = 0.0;
      clamped = true;
    }
  }
  F diff{s.u.grid, std::vector<double>(N)};
  for (std::size_t i = 0; i < N; ++i) diff.v[i] = (x[i] - u[i]) * inv_dt;
  const double rate = inner(diff, diff);
  if (opt.scheme == Scheme::bdf2) {
    s.previous.assign(u.begin(), u.end());
    s.previous_dt = dt;
  }
  u.swap(x);
  if (clamped) {
    const double mass = l1(negative);
    s.clamp_mass += mass;
    const double total = l1(s.u);
    if (total > 0.0) s.max_clamp_ratio = std::max(s.max_clamp_ratio, mass / total);
  }
  s.t += dt;
  ++s.steps;
  return rate;
}

template <class F>
void advance(FlowState<F>& s, const Nonlinearity& nl, const FlowOptions& opt,
             const Monitor<F>& monitor) {
  if (opt.sample_stride < 1) throw PreconditionError("sample stride must be >= 1");
  int below = 0;
  double dissipation = s.history.empty() ? 0.0 : s.history.back().dissipation;
  double best_plateau = s.plateau ? s.plateau_rate : std::numeric_limits<double>::infinity();
  int since_sample = 0;
  double pending = 0.0;  // dissipation accumulated since the last sample
  while (s.event == Event::running && s.t < opt.T - 0.5 * opt.dt) {
    const double rate = step(s, nl, opt.dt, opt);
    pending += rate * opt.dt;
    ++since_sample;
    const double sup = sup_abs(s.u.v);
    const bool blew = sup >= opt.blowup_cap;
    if (since_sample < opt.sample_stride && !blew) continue;

    dissipation += pending;
    pending = 0.0;
    since_sample = 0;
    s.history.push_back(make_sample(s, nl, rate, dissipation));
    const Sample& smp = s.history.back();

    if (opt.track_plateau && smp.l2 > 0.0) {
      const double ratio = std::sqrt(rate) / smp.l2;
      if (ratio < best_plateau) {
        best_plateau = ratio;
        s.plateau = s.u;
        s.plateau_time = s.t;
        s.plateau_rate = ratio;
      }
    }
    if (blew) {
      s.event = Event::blown_up;
    } else if (smp.sup <= opt.vanish_sup && smp.J <= opt.vanish_energy) {
      s.event = Event::vanished;
    } else if (opt.conv_tol > 0.0) {
      below = std::sqrt(rate) <= opt.conv_tol ? below + 1 : 0;
      if (below >= opt.conv_window) s.event = Event::converged;
    }
    if (s.event != Event::running) s.event_time = s.t;
    if (monitor) monitor(s);
  }
}

template <class F>
FlowState<F> run(F u0, const Nonlinearity& nl, const FlowOptions& opt,
                 const Monitor<F>& monitor) {
  if (!(opt.dt > 0.0) || !(opt.T > 0.0)) throw PreconditionError("dt and T must be positive");
  FlowState<F> s = start(std::move(u0), nl);
  if (monitor) monitor(s);
  advance(s, nl, opt, monitor);
  return s;
}

template FlowState<RadialField> start(RadialField, const Nonlinearity&);
template FlowState<Field> start(Field, const Nonlinearity&);
template double step(FlowState<RadialField>&, const Nonlinearity&, double, const FlowOptions&);
template double step(FlowState<Field>&, const Nonlinearity&, double, const FlowOptions&);
template void advance(FlowState<RadialField>&, const Nonlinearity&, const FlowOptions&,
                      const Monitor<RadialField>&);
template void advance(FlowState<Field>&, const Nonlinearity&, const FlowOptions&,
                      const Monitor<Field>&);
template FlowState<RadialField> run(RadialField, const Nonlinearity&, const FlowOptions&,
                                    const Monitor<RadialField>&);
template FlowState<Field> run(Field, const Nonlinearity&, const FlowOptions&,
                              const Monitor<Field>&);

double dissipation_residual(const std::vector<Sample>& history, double t1, double t2,
                            double eps) {
  if (history.empty()) throw PreconditionError("empty flow history");
  if (!(t1 < t2)) throw PreconditionError("dissipation window must satisfy t1 < t2");
  const double t_first = history.front().t, t_last = history.back().t;
  const double slack = history.size() > 1 ? history[1].t - history[0].t : 0.0;
  if (t1 < t_first - slack || t2 > t_last + slack) {
    throw PreconditionError("dissipation window outside the recorded history");
  }
  auto nearest = [&](double t) {
    auto it = std::lower_bound(history.begin(), history.end(), t,
                               [](const Sample& s, double v) { return s.t < v; });
    if (it == history.end()) return history.size() - 1;
    const std::size_t k = static_cast<std::size_t>(it - history.begin());
    if (k > 0 && std::abs(history[k - 1].t - t) <= std::abs(history[k].t - t)) return k - 1;
    return k;
  };
  const Sample& a = history[nearest(t1)];
  const Sample& b = history[nearest(t2)];
  const double drop = a.J - b.J;
  const double diss = b.dissipation - a.dissipation;
  return std::abs(drop - diss) / std::max(std::abs(drop), eps);
}

double max_energy_increase(const std::vector<Sample>& history) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < history.size(); ++k) {
    const double scale = std::max(std::abs(history[k - 1].J), 1e-300);
    worst = std::max(worst, (history[k].J - history[k - 1].J) / scale);
  }
  return history.size() < 2 ? 0.0 : worst;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw PreconditionError("line fit needs at least two matching points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace gsflow
