#include "gsflow/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/Dense>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double box_diameter(const CartesianGrid& g) {
  double s = 0.0;
  for (double R : g.half_width) s += 4.0 * R * R;
  return std::sqrt(s);
}

struct Objective {
  double sse = 0.0;  // h^n sum (theta - u)^2
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
};

// Residual theta - u with theta = sum_j xi(|x - c_j|), over interior nodes,
// and optionally the Gauss-Newton normal equations in the centre coordinates.
Objective evaluate(const Field& u, const RadialProfile& ext, const std::vector<Point>& c,
                   bool jacobian) {
  const auto& g = u.grid;
  const int n = g.n;
  const int M = static_cast<int>(c.size());
  const int P = M * n;
  Objective ob;
  if (jacobian) {
    ob.jtj = Eigen::MatrixXd::Zero(P, P);
    ob.jtr = Eigen::VectorXd::Zero(P);
  }
  Eigen::VectorXd row(P);
  double sse = 0.0;
  g.for_each_node([&](std::size_t flat, std::span<const double> x) {
    if (g.is_boundary(flat)) return;
    double theta = 0.0;
    for (int j = 0; j < M; ++j) {
      double d2 = 0.0;
      for (int a = 0; a < n; ++a) d2 += (x[a] - c[j][a]) * (x[a] - c[j][a]);
      const double d = std::sqrt(d2);
      theta += ext.value(d);
      if (jacobian) {
        const double dv = d > 0.0 ? ext.derivative(d) / d : 0.0;
        for (int a = 0; a < n; ++a) row[j * n + a] = -dv * (x[a] - c[j][a]);
      }
    }
    const double res = theta - u.v[flat];
    sse += res * res;
    if (jacobian) {
      ob.jtj.selfadjointView<Eigen::Lower>().rankUpdate(row);
      ob.jtr += res * row;
    }
  });
  const double w = g.cell_volume();
  ob.sse = w * sse;
  if (jacobian) {
    ob.jtj = w * Eigen::MatrixXd(ob.jtj.selfadjointView<Eigen::Lower>());
    ob.jtr *= w;
  }
  return ob;
}

std::vector<double> stationarity(const Objective& ob) {
  const double gamma = std::sqrt(ob.sse);
  std::vector<double> out(ob.jtr.size(), 0.0);
  for (Eigen::Index k = 0; k < ob.jtr.size(); ++k) {
    const double scale = gamma * std::sqrt(ob.jtj(k, k));
    out[k] = scale > 0.0 ? std::abs(ob.jtr[k]) / scale : 0.0;
  }
  return out;
}

struct Descent {
  std::vector<Point> centers;
  double sse = 0.0;
  int iterations = 0;
  std::vector<double> stationarity;
};

Descent levenberg_marquardt(const Field& u, const RadialProfile& ext, std::vector<Point> c,
                            int max_iter) {
  const int n = u.grid.n;
  const int M = static_cast<int>(c.size());
  double lambda = 1e-3;
  Objective ob = evaluate(u, ext, c, true);
  Descent out;
  int it = 0;
  for (; it < max_iter; ++it) {
    const auto st = stationarity(ob);
    if (ob.sse == 0.0 || *std::max_element(st.begin(), st.end()) <= 1e-9) break;
    Eigen::MatrixXd A = ob.jtj;
    A.diagonal() *= 1.0 + lambda;
    const Eigen::VectorXd delta = A.ldlt().solve(-ob.jtr);
    std::vector<Point> trial = c;
    for (int j = 0; j < M; ++j)
      for (int a = 0; a < n; ++a) trial[j][a] += delta[j * n + a];
    const Objective tob = evaluate(u, ext, trial, false);
    if (tob.sse < ob.sse) {
      c = std::move(trial);
      ob = evaluate(u, ext, c, true);
      lambda = std::max(lambda / 3.0, 1e-12);
      if (delta.norm() <= 1e-13 * (1.0 + ext.r_end())) break;
    } else {
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
  }
  out.centers = std::move(c);
  out.sse = ob.sse;
  out.iterations = it;
  out.stationarity = stationarity(ob);
  return out;
}

std::vector<Point> local_maxima(const Field& u, int M, double min_sep) {
  const auto& g = u.grid;
  std::vector<std::pair<double, std::size_t>> peaks;
  for (std::size_t k = 0; k < u.v.size(); ++k) {
    if (g.is_boundary(k) || !(u.v[k] > 0.0)) continue;
    bool is_max = true;
    for (int a = 0; a < g.n && is_max; ++a) {
      const std::size_t s = g.strides[a];
      if (u.v[k - s] > u.v[k] || u.v[k + s] > u.v[k]) is_max = false;
    }
    if (is_max) peaks.emplace_back(u.v[k], k);
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<Point> chosen;
  for (const auto& [value, k] : peaks) {
    Point x(g.n);
    for (int a = 0; a < g.n; ++a) x[a] = g.coord(a, (k / g.strides[a]) % g.nodes[a]);
    const bool far = std::all_of(chosen.begin(), chosen.end(),
                                 [&](const Point& y) { return distance(x, y) >= min_sep; });
    if (far) chosen.push_back(std::move(x));
    if (static_cast<int>(chosen.size()) == M) break;
  }
  if (static_cast<int>(chosen.size()) < M) {
    throw Error("best_match: found " + std::to_string(chosen.size()) +
                " separated local maxima, need " + std::to_string(M));
  }
  return chosen;
}

Field bubble_field(const CartesianGrid& g, const RadialProfile& ext, const Point& c) {
  return sample_radial_function(g, c, [&](double r) { return ext.value(r); });
}

std::vector<double> coef_of(const Field& tau, const Nonlinearity& nl) {
  std::vector<double> coef(tau.v.size());
  for (std::size_t k = 0; k < coef.size(); ++k) coef[k] = nl.df(std::max(tau.v[k], 0.0));
  return coef;
}

}  // namespace

WeightSolve solve_weights(const Field& u, const std::vector<Point>& centers,
                          const RadialProfile& p) {
  const auto& g = u.grid;
  const int M = static_cast<int>(centers.size());
  if (M < 1) throw PreconditionError("solve_weights needs at least one centre");
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j)
      if (distance(centers[i], centers[j]) < 4.0 / p.m) {
        throw PreconditionError("solve_weights: centres closer than 4/m");
      }
  const RadialProfile ext = p.extended(box_diameter(g) + 1.0);
  std::vector<Field> tau, test;
  for (const auto& c : centers) {
    tau.push_back(bubble_field(g, ext, c));
    const Field dxi = sample_radial_function(g, c, [&](double r) { return ext.derivative(r); });
    Field t = Field::zeros(g);
    apply_shifted_laplacian(g, dxi.v, t.v, coef_of(tau.back(), p.nl), 0.0);
    test.push_back(std::move(t));
  }
  WeightSolve ws;
  Eigen::MatrixXd Q(M, M);
  Eigen::VectorXd b(M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) Q(i, j) = inner(test[i], tau[j]);
    b[i] = inner(test[i], u);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Q);
  if (!lu.isInvertible()) throw SolverError("solve_weights: singular weight system");
  const Eigen::MatrixXd inv = lu.inverse();
  auto norm1 = [](const Eigen::MatrixXd& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); };
  ws.condition = norm1(Q) * norm1(inv);
  if (!(ws.condition <= 1e8)) {
    throw SolverError("solve_weights: condition estimate " + std::to_string(ws.condition) +
                      " exceeds 1e8");
  }
  const Eigen::VectorXd alpha = lu.solve(b);
  ws.alpha.assign(alpha.data(), alpha.data() + M);
  ws.rhs.assign(b.data(), b.data() + M);
  ws.Q.assign(M, std::vector<double>(M));
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) ws.Q[i][j] = Q(i, j);
  return ws;
}

namespace {

struct RadialTest {
  RadialField tau;
  RadialField test;
};

RadialTest radial_test(const RadialGrid& g, const RadialProfile& p) {
  RadialTest rt{sample_radial(p, g), RadialField::zeros(g)};
  RadialField dxi = RadialField::zeros(g);
  std::vector<double> coef(g.size(), 0.0);
  for (std::size_t i = 0; i < g.last; ++i) {
    dxi.v[i] = p.derivative(g.r[i]);
    coef[i] = p.nl.df(rt.tau.v[i]);
  }
  apply_shifted_laplacian(g, dxi.v, rt.test.v, coef, 0.0);
  return rt;
}

}  // namespace

double solve_weights(const RadialField& u, const RadialProfile& p) {
  const RadialTest rt = radial_test(u.grid, p);
  const double q = inner(rt.test, rt.tau);
  if (!(q > 0.0)) throw SolverError("solve_weights: Q(xi', xi) is not positive");
  return inner(rt.test, u) / q;
}

FitResult best_match(const Field& u, const RadialProfile& p, int M,
                     const std::optional<std::vector<Point>>& init, const MatchOptions& opt) {
  if (M < 1) throw PreconditionError("best_match needs M >= 1");
  for (double x : u.v) {
    if (!std::isfinite(x)) throw PreconditionError("best_match: field is not finite");
  }
  const auto& g = u.grid;
  if (p.n != g.n) throw PreconditionError("profile dimension does not match the grid");
  const RadialProfile ext = p.extended(box_diameter(g) + 1.0);

  std::vector<Point> start = init ? *init : local_maxima(u, M, 2.0 / p.m);
  if (static_cast<int>(start.size()) != M) {
    throw PreconditionError("best_match: need exactly M initial centres");
  }
  Descent best = levenberg_marquardt(u, ext, start, opt.max_iter);
  int starts = 1;
  {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, opt.perturbation / p.m);
    std::vector<Point> kicked = best.centers;
    for (auto& c : kicked)
      for (auto& x : c) x += noise(rng);
    Descent alt = levenberg_marquardt(u, ext, kicked, opt.max_iter);
    ++starts;
    if (alt.sse < best.sse) best = std::move(alt);
  }

  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      if (distance(best.centers[i], best.centers[j]) < 2.0 * g.h) {
        std::vector<Point> reduced = best.centers;
        reduced.erase(reduced.begin() + j);
        FitResult fr = best_match(u, p, M - 1, reduced, opt);
        fr.warnings.insert(fr.warnings.begin(),
                           "centres " + std::to_string(i) + " and " + std::to_string(j) +
                               " collapsed; refitted with M = " + std::to_string(M - 1));
        return fr;
      }
    }
  }

  const double worst = *std::max_element(best.stationarity.begin(), best.stationarity.end());
  if (worst > opt.opt_tol) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g > %.3g", worst, opt.opt_tol);
    throw SolverError(std::string("best_match: descent stagnated (stationarity ") + buf + ")");
  }

  FitResult fr;
  fr.bubble.M = M;
  fr.bubble.centers = best.centers;
  fr.bubble.weights.assign(M, 1.0);
  fr.gamma = std::sqrt(best.sse);
  fr.iterations = best.iterations;
  fr.starts = starts;
  fr.ortho_translation.assign(M, std::vector<double>(g.n));
  for (int i = 0; i < M; ++i)
    for (int a = 0; a < g.n; ++a) fr.ortho_translation[i][a] = best.stationarity[i * g.n + a];

  std::vector<Field> tau;
  for (const auto& c : best.centers) tau.push_back(bubble_field(g, ext, c));
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      fr.nu += inner(tau[i], tau[j]);
      fr.nu_from_g += interaction_g(p, distance(best.centers[i], best.centers[j])).value;
    }
  }

  if (opt.solve_weights) {
    try {
      const WeightSolve ws = solve_weights(u, best.centers, p);
      fr.bubble.weights = ws.alpha;
      fr.weight_condition = ws.condition;
      for (int i = 0; i < M; ++i) {
        double r = ws.rhs[i];
        for (int j = 0; j < M; ++j) r -= ws.Q[i][j] * ws.alpha[j];
        fr.ortho_xi.push_back(r);
        fr.alpha_decoupled.push_back(ws.rhs[i] / ws.Q[i][i]);
      }
    } catch (const PreconditionError& e) {
      fr.warnings.emplace_back(std::string("weights left at 1: ") + e.what());
    }
  }

  Field rho = u;
  for (int i = 0; i < M; ++i) {
    for (std::size_t k = 0; k < rho.v.size(); ++k) rho.v[k] -= fr.bubble.weights[i] * tau[i].v[k];
  }
  const Norms rn = norms(rho);
  fr.rho_l2 = rn.l2;
  fr.rho_h1 = rn.h1;
  fr.rho = std::move(rho.v);
  fr.u_norm = norms(u).l2;

  fr.u_energy = energy(u, p.nl);
  const Point origin(g.n, 0.0);
  fr.reference_energy = energy(bubble_field(g, ext, origin), p.nl);
  fr.deficit = fr.u_energy - M * fr.reference_energy;
  return fr;
}

FitResult best_match(const RadialField& u, const RadialProfile& p) {
  if (p.n != u.grid.n) throw PreconditionError("profile dimension does not match the grid");
  const RadialTest rt = radial_test(u.grid, p);
  FitResult fr;
  fr.bubble.M = 1;
  fr.bubble.centers = {Point(u.grid.n, 0.0)};
  RadialField diff = u;
  for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] -= rt.tau.v[i];
  fr.gamma = norms(diff).l2;
  const double q = inner(rt.test, rt.tau);
  const double b = inner(rt.test, u);
  const double alpha = b / q;
  fr.bubble.weights = {alpha};
  fr.alpha_decoupled = {alpha};
  fr.weight_condition = 1.0;
  RadialField rho = u;
  for (std::size_t i = 0; i < rho.v.size(); ++i) rho.v[i] -= alpha * rt.tau.v[i];
  fr.ortho_xi = {inner(rt.test, rho)};
  fr.ortho_translation = {std::vector<double>(u.grid.n, 0.0)};
  const Norms rn = norms(rho);
  fr.rho_l2 = rn.l2;
  fr.rho_h1 = rn.h1;
  fr.rho = std::move(rho.v);
  fr.u_norm = norms(u).l2;
  fr.u_energy = energy(u, p.nl);
  fr.reference_energy = energy(rt.tau, p.nl);
  fr.deficit = fr.u_energy - fr.reference_energy;
  fr.starts = 1;
  return fr;
}

namespace {

template <class F>
DeficitReport deficit_common(const F& u, const FitResult& fit, const RadialProfile& p,
                             double dudt_norm) {
  DeficitReport rep;
  rep.deficit = fit.deficit;
  rep.dudt_norm = dudt_norm;
  const double dd = dudt_norm * dudt_norm;
  const double scale = std::max(std::abs(fit.u_energy), 1.0);
  rep.degenerate_a = dd <= 1e-300 || std::abs(fit.deficit) <= 1e-12 * scale;
  rep.ratio_a = dd > 0.0 ? fit.deficit / dd : 0.0;

  for (double a : fit.bubble.weights) rep.alpha_term += std::abs(1.0 - a);
  rep.nu_term = fit.nu;
  rep.lhs_b = rep.alpha_term + rep.nu_term;
  rep.rho_l2 = fit.rho_l2;
  rep.rho_h1 = fit.rho_h1;
  rep.degenerate_b = fit.rho_l2 <= 1e-10 * std::max(fit.u_norm, 1e-300);
  rep.ratio_b_rho = fit.rho_l2 > 0.0 ? rep.lhs_b / fit.rho_l2 : 0.0;
  rep.ratio_b_dudt = dudt_norm > 0.0 ? rep.lhs_b / dudt_norm : 0.0;

  F rho{u.grid, fit.rho};
  std::vector<double> coef(u.v.size());
  for (std::size_t k = 0; k < coef.size(); ++k) {
    coef[k] = p.nl.df(std::max(u.v[k] - fit.rho[k], 0.0));
  }
  F q = F::zeros(u.grid);
  apply_shifted_laplacian(u.grid, rho.v, q.v, coef, 0.0);
  rep.quad_form = inner(q, rho);
  rep.degenerate_c = rep.degenerate_b;
  rep.ratio_c = fit.rho_h1 > 0.0 ? rep.quad_form / (fit.rho_h1 * fit.rho_h1) : 0.0;
  return rep;
}

}  // namespace

DeficitReport deficit_report(const Field& u, const FitResult& fit, const RadialProfile& p,
                             double dudt_norm) {
  return deficit_common(u, fit, p, dudt_norm);
}

DeficitReport deficit_report(const RadialField& u, const FitResult& fit,
                             const RadialProfile& p, double dudt_norm) {
  return deficit_common(u, fit, p, dudt_norm);
}

double tail_concavity_expression(const Nonlinearity& nl, const std::vector<double>& xs) {
  double sum = 0.0, parts = 0.0, cross = 0.0, prefix_f = 0.0;
  for (double x : xs) {
    cross += prefix_f * x;  // sum over i < j of f(x_i) x_j
    prefix_f += nl.f(x);
    parts += nl.F(x);
    sum += x;
  }
  return nl.F(sum) - parts - cross;
}

bool tail_concavity_check(const Nonlinearity& nl, const std::vector<double>& xs,
                          double delta) {
  if (!(delta > 0.0) || delta > nl.concavity_radius()) {
    throw PreconditionError("tail_concavity_check: delta must lie in (0, concavity radius]");
  }
  double sum = 0.0;
  for (double x : xs) {
    if (!(x >= 0.0)) throw PreconditionError("tail_concavity_check: entries must be >= 0");
    sum += x;
  }
  if (!(sum < delta)) throw PreconditionError("tail_concavity_check: sum must be below delta");
  return tail_concavity_expression(nl, xs) <= 1e-12;
}

}  // namespace gsflow
