#include "gsflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "gsflow/error.hpp"
#include "gsflow/kernels.hpp"

namespace gsflow {
namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  return kernels::active().dot(a.data(), b.data(), a.size());
}

double centrifugal(int n, int ell, double r) {
  return ell == 0 ? 0.0 : ell * (ell + n - 2) / (r * r);
}

RadialSector make_sector(const RadialGrid& g, int ell, const std::function<double(std::size_t)>& pot) {
  if (ell < 0) throw PreconditionError("angular momentum must be >= 0");
  RadialSector s;
  s.n = g.n;
  s.ell = ell;
  s.grid = g;
  s.first = ell == 0 ? 0 : 1;
  const RadialStencil st = radial_stencil(g);
  const std::size_t m = g.last - s.first;
  s.diag.resize(m);
  s.off.assign(m > 0 ? m - 1 : 0, 0.0);
  s.sqrt_volume.resize(m);
  s.potential.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = s.first + k;
    s.sqrt_volume[k] = std::sqrt(g.volume[i]);
    s.potential[k] = pot(i) + centrifugal(g.n, ell, g.r[i]);
    s.diag[k] = st.diag[i] + s.potential[k];
  }
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const std::size_t i = s.first + k;
    s.off[k] = st.upper[i] * s.sqrt_volume[k] / std::sqrt(g.volume[i + 1]);
  }
  return s;
}

// Solves (T - sigma) x = b for a symmetric tridiagonal T (no pivoting; tiny
// pivots are nudged, which is what inverse iteration wants).
void tridiag_solve(const Vec& d, const Vec& e, double sigma, const Vec& b, Vec& x) {
  const std::size_t m = d.size();
  Vec c(m), z(m);
  auto nudge = [](double v) {
    return std::abs(v) < 1e-300 ? (v < 0 ? -1e-300 : 1e-300) : v;
  };
  double den = nudge(d[0] - sigma);
  c[0] = m > 1 ? e[0] / den : 0.0;
  z[0] = b[0] / den;
  for (std::size_t i = 1; i < m; ++i) {
    den = nudge(d[i] - sigma - e[i - 1] * c[i - 1]);
    c[i] = i + 1 < m ? e[i] / den : 0.0;
    z[i] = (b[i] - e[i - 1] * z[i - 1]) / den;
  }
  x.resize(m);
  x[m - 1] = z[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = z[i] - c[i] * x[i + 1];
}

int harmonic_multiplicity(int n, int ell) {
  // dim of degree-l harmonic polynomials in n variables
  auto binom = [](int a, int b) -> long {
    if (b < 0 || a < b) return 0;
    long r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  if (n == 1) return ell <= 1 ? 1 : 0;
  return static_cast<int>(binom(n + ell - 1, ell) - binom(n + ell - 3, ell - 2));
}

Vec random_radial_trial(std::mt19937_64& rng, const RadialGrid& g, int ell) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), ctr(0.0, 10.0), wid(0.5, 4.0);
  Vec u(g.size(), 0.0);
  for (int j = 0; j < 4; ++j) {
    const double a = amp(rng), c = ctr(rng), w = wid(rng);
    for (std::size_t i = 0; i < g.last; ++i) {
      const double r = g.r[i];
      // even in r so the l = 0 trial is regular at the centre
      u[i] += a * (std::exp(-((r - c) / w) * ((r - c) / w)) +
                   std::exp(-((r + c) / w) * ((r + c) / w)));
    }
  }
  if (ell > 0) {
    for (std::size_t i = 0; i < g.last; ++i) u[i] *= std::pow(g.r[i], ell);
  }
  return u;
}

class Projector {
 public:
  explicit Projector(std::vector<Vec> cs) {
    for (auto& c : cs) {
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis_) {
          const double a = dot(q, c);
          kernels::active().axpy(-a, q.data(), c.data(), c.size());
        }
      const double nrm = std::sqrt(dot(c, c));
      if (nrm == 0.0) throw SolverError("projection: constraint vectors are rank deficient");
      for (double& x : c) x /= nrm;
      basis_.push_back(std::move(c));
    }
  }
  void apply(Vec& v) const {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis_) {
        const double a = dot(q, v);
        kernels::active().axpy(-a, q.data(), v.data(), v.size());
      }
  }
  bool empty() const { return basis_.empty(); }

 private:
  std::vector<Vec> basis_;
};

}  // namespace

// ------------------------------------------------------------- radial sectors

void RadialSector::apply(std::span<const double> y, std::span<double> out) const {
  const std::size_t m = diag.size();
  for (std::size_t k = 0; k < m; ++k) {
    double v = diag[k] * y[k];
    if (k > 0) v += off[k - 1] * y[k - 1];
    if (k + 1 < m) v += off[k] * y[k + 1];
    out[k] = v;
  }
}

std::vector<double> RadialSector::to_sector(std::span<const double> u) const {
  Vec y(diag.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = sqrt_volume[k] * u[first + k];
  return y;
}

std::vector<double> RadialSector::to_grid(std::span<const double> y) const {
  Vec u(grid.size(), 0.0);
  for (std::size_t k = 0; k < y.size(); ++k) u[first + k] = y[k] / sqrt_volume[k];
  return u;
}

RadialSector assemble_radial(const RadialProfile& p, const RadialGrid& g, int ell) {
  if (p.n != g.n) throw PreconditionError("profile dimension does not match the grid");
  if (g.R() > p.r_end() + 1e-9) {
    throw PreconditionError("radial grid extends past the profile");
  }
  return make_sector(g, ell, [&](std::size_t i) { return p.nl.df(p.value(g.r[i])); });
}

RadialSector laplacian_sector(const RadialGrid& g, int ell, double shift) {
  return make_sector(g, ell, [shift](std::size_t) { return shift; });
}

int sturm_count(const RadialSector& s, double x) {
  int count = 0;
  double q = s.diag[0] - x;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < s.diag.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = s.diag[i] - x - s.off[i - 1] * s.off[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

std::vector<double> sector_eigenvalues(const RadialSector& s, int k) {
  const std::size_t m = s.size();
  k = std::min<int>(k, static_cast<int>(m));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < m; ++i) {
    const double rad = (i > 0 ? std::abs(s.off[i - 1]) : 0.0) + (i + 1 < m ? std::abs(s.off[i]) : 0.0);
    lo = std::min(lo, s.diag[i] - rad);
    hi = std::max(hi, s.diag[i] + rad);
  }
  Vec out;
  for (int j = 0; j < k; ++j) {
    double a = out.empty() ? lo : out.back();
    double b = hi;
    const double tol = 1e-14 * std::max({std::abs(lo), std::abs(hi), 1.0});
    for (int it = 0; it < 200 && b - a > tol; ++it) {
      const double mid = 0.5 * (a + b);
      (sturm_count(s, mid) > j ? b : a) = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

std::vector<double> sector_eigenvector(const RadialSector& s, double lambda) {
  const std::size_t m = s.size();
  Vec y(m, 1.0), z;
  const double sigma = lambda + 1e-10 * std::max(1.0, std::abs(lambda));
  for (int it = 0; it < 4; ++it) {
    tridiag_solve(s.diag, s.off, sigma, y, z);
    const double nrm = std::sqrt(dot(z, z));
    for (std::size_t i = 0; i < m; ++i) y[i] = z[i] / nrm;
  }
  return y;
}

// ------------------------------------------------------------- pairings

double q_pairing(const RadialProfile& p, const RadialGrid& g, std::span<const double> phi,
                 std::span<const double> psi) {
  std::vector<double> coef(g.size(), 0.0), lphi(g.size());
  for (std::size_t i = 0; i < g.last; ++i) coef[i] = p.nl.df(p.value(g.r[i]));
  apply_shifted_laplacian(g, phi, lphi, coef, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) s += g.volume[i] * lphi[i] * psi[i];
  return unit_sphere_area(g.n) * s;
}

double svxi_quadrature(const RadialProfile& p, const RadialGrid& g, std::span<const double> psi) {
  const int n = g.n;
  if (n < 3) throw PreconditionError("the xi' identity quadrature needs n >= 3");
  double s = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) {
    const double hi = (i + 0.5) * g.h;
    const double lo = i == 0 ? 0.0 : (i - 0.5) * g.h;
    const double w = (std::pow(hi, n - 2) - std::pow(lo, n - 2)) / (n - 2);
    s += w * p.derivative(g.r[i]) * psi[i];
  }
  return -(n - 1) * unit_sphere_area(n) * s;
}

// ------------------------------------------------------------- LOBPCG

BlockEigenResult lobpcg(const BlockEigenProblem& prob, std::vector<std::vector<double>> X0,
                        double tol, int max_iter) {
  const std::size_t N = prob.dim;
  const int k = static_cast<int>(X0.size());
  if (k < 1) throw PreconditionError("lobpcg needs at least one start vector");
  const Projector proj(prob.constraints);
  auto applyB = [&](const Vec& x, Vec& y) {
    y.resize(N);
    if (prob.B) prob.B(x, y);
    else y = x;
  };
  auto applyA = [&](const Vec& x, Vec& y) {
    y.resize(N);
    prob.A(x, y);
  };

  std::vector<Vec> X = std::move(X0), P, AP, BP;
  for (auto& x : X) proj.apply(x);

  BlockEigenResult res;
  std::vector<Vec> AX(k), BX(k);
  for (int it = 0;; ++it) {
    // Rayleigh-Ritz on span{X, W, P}; on the first pass W is built from X.
    std::vector<Vec> basis = X;
    std::vector<Vec> Ab(k), Bb(k);
    for (int j = 0; j < k; ++j) {
      applyA(basis[j], Ab[j]);
      applyB(basis[j], Bb[j]);
    }
    if (it > 0) {
      // residuals of the current Ritz pairs
      double worst = 0.0;
      std::vector<Vec> W;
      for (int j = 0; j < k; ++j) {
        Vec r(N);
        const double theta = res.values[j];
        for (std::size_t i = 0; i < N; ++i) r[i] = Ab[j][i] - theta * Bb[j][i];
        proj.apply(r);  // the constraint multipliers live outside the subspace
        const double scale = std::sqrt(dot(Bb[j], Bb[j])) * std::max(1.0, std::abs(theta));
        const double rn = std::sqrt(dot(r, r)) / scale;
        if (prob.converge_count <= 0 || j < prob.converge_count) worst = std::max(worst, rn);
        Vec w(N);
        if (prob.T) prob.T(r, w);
        else w = r;
        proj.apply(w);
        W.push_back(std::move(w));
      }
      res.max_residual = worst;
      res.iterations = it;
      if (worst <= tol || it >= max_iter) break;
      for (auto& w : W) {
        Vec aw, bw;
        applyB(w, bw);
        const double wn = std::sqrt(std::abs(dot(w, bw)));
        if (!(wn > 0.0)) continue;
        for (std::size_t i = 0; i < N; ++i) {
          w[i] /= wn;
          bw[i] /= wn;
        }
        applyA(w, aw);
        basis.push_back(std::move(w));
        Ab.push_back(std::move(aw));
        Bb.push_back(std::move(bw));
      }
      // Columns are rescaled to unit B-norm so the Gram matrix does not
      // drop small but meaningful search directions.
      for (std::size_t j = 0; j < P.size(); ++j) {
        const double pn = std::sqrt(std::abs(dot(P[j], BP[j])));
        if (!(pn > 0.0)) continue;
        const double s = 1.0 / pn;
        for (std::size_t i = 0; i < N; ++i) {
          P[j][i] *= s;
          AP[j][i] *= s;
          BP[j][i] *= s;
        }
        basis.push_back(P[j]);
        Ab.push_back(AP[j]);
        Bb.push_back(BP[j]);
      }
    }
    const int m = static_cast<int>(basis.size());
    Eigen::MatrixXd GA(m, m), GB(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        GA(a, b) = GA(b, a) = 0.5 * (dot(basis[a], Ab[b]) + dot(basis[b], Ab[a]));
        GB(a, b) = GB(b, a) = 0.5 * (dot(basis[a], Bb[b]) + dot(basis[b], Bb[a]));
      }
    // Orthonormalise the basis against B, dropping near-dependent directions.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gb(GB);
    const double gmax = gb.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (int a = 0; a < m; ++a)
      if (gb.eigenvalues()[a] > 1e-13 * gmax) keep.push_back(a);
    if (static_cast<int>(keep.size()) < k) throw SolverError("lobpcg: basis collapsed");
    Eigen::MatrixXd Z(m, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c)
      Z.col(c) = gb.eigenvectors().col(keep[c]) / std::sqrt(gb.eigenvalues()[keep[c]]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ga(Z.transpose() * GA * Z);
    const Eigen::MatrixXd C = Z * ga.eigenvectors().leftCols(k);
    res.values.assign(ga.eigenvalues().data(), ga.eigenvalues().data() + k);

    auto combine = [&](const std::vector<Vec>& src, int from, int col) {
      Vec out(N, 0.0);
      for (int a = from; a < m; ++a) {
        if (C(a, col) != 0.0) kernels::active().axpy(C(a, col), src[a].data(), out.data(), N);
      }
      return out;
    };
    std::vector<Vec> Xn(k), Pn, APn, BPn;
    for (int j = 0; j < k; ++j) {
      Xn[j] = combine(basis, 0, j);
      if (m > k) {
        Pn.push_back(combine(basis, k, j));
        APn.push_back(combine(Ab, k, j));
        BPn.push_back(combine(Bb, k, j));
      }
    }
    // Round-off leaks back into the constrained directions; with a strongly
    // negative pencil there this grows, so project again every pass.
    for (auto& x : Xn) proj.apply(x);
    if (!prob.constraints.empty()) {
      for (std::size_t j = 0; j < Pn.size(); ++j) {
        proj.apply(Pn[j]);
        applyA(Pn[j], APn[j]);
        applyB(Pn[j], BPn[j]);
      }
    }
    X = std::move(Xn);
    P = std::move(Pn);
    AP = std::move(APn);
    BP = std::move(BPn);
    if (it == 0 && max_iter == 0) break;
  }
  res.vectors = std::move(X);
  if (res.max_residual > tol) {
    throw SolverError("lobpcg did not converge (residual " + std::to_string(res.max_residual) + ")");
  }
  return res;
}

// ------------------------------------------------------------- spectra

SpectralReport spectrum(const RadialProfile& p, const RadialGrid& g, int k, std::uint64_t seed,
                        int max_ell) {
  const int n = g.n;
  if (k < n + 2) throw PreconditionError("spectrum: k must be at least n + 2");
  SpectralReport rep;
  double fmax = 0.0;
  std::vector<double> xi(g.size(), 0.0), dxi(g.size(), 0.0);
  for (std::size_t i = 0; i < g.last; ++i) {
    xi[i] = p.value(g.r[i]);
    dxi[i] = p.derivative(g.r[i]);
    fmax = std::max(fmax, std::abs(p.nl.df(xi[i])));
  }
  rep.kernel_tol = 10.0 * g.h * g.h * fmax / 12.0;

  for (int ell = 0; ell <= max_ell; ++ell) {
    const int mult = harmonic_multiplicity(n, ell);
    if (mult == 0) continue;
    const RadialSector s = assemble_radial(p, g, ell);
    for (double lam : sector_eigenvalues(s, k)) rep.lines.push_back({lam, ell, mult});
    if (ell == 1) {
      const Vec y = s.to_sector(dxi);
      Vec ty(y.size());
      s.apply(y, ty);
      rep.kernel_residual = std::sqrt(dot(ty, ty) / dot(y, y));
    }
  }
  std::sort(rep.lines.begin(), rep.lines.end(),
            [](const SpectralLine& a, const SpectralLine& b) { return a.lambda < b.lambda; });
  for (const auto& line : rep.lines) {
    if (line.lambda < -rep.kernel_tol) rep.n_negative += line.multiplicity;
    else if (line.lambda <= rep.kernel_tol) rep.kernel_dim += line.multiplicity;
    for (int c = 0; c < line.multiplicity; ++c) rep.eigenvalues.push_back(line.lambda);
  }
  if (static_cast<int>(rep.eigenvalues.size()) > k) rep.eigenvalues.resize(k);

  rep.q_xi_prime_xi_prime = q_pairing(p, g, dxi, dxi);
  rep.q_xi_prime_xi = q_pairing(p, g, dxi, xi);
  if (n >= 3) {
    std::mt19937_64 rng(seed);
    for (int t = 0; t < 20; ++t) {
      const Vec psi = random_radial_trial(rng, g, 0);
      const double lhs = q_pairing(p, g, dxi, psi);
      const double rhs = svxi_quadrature(p, g, psi);
      rep.identity_max_rel_err = std::max(rep.identity_max_rel_err, std::abs(lhs - rhs) / std::abs(rhs));
    }
  }
  return rep;
}

// ------------------------------------------------------------- Cartesian

void CartesianQ::apply(std::span<const double> x, std::span<double> y) const {
  apply_shifted_laplacian(grid, x, y, coef, 0.0);
}

CartesianQ assemble_Q(const RadialProfile& p, const CartesianGrid& g) {
  if (p.n != g.n) throw PreconditionError("profile dimension does not match the grid");
  const Field xi = sample_bubble(p, {std::vector<double>(g.n, 0.0)}, {1.0}, g);
  CartesianQ q{g, std::vector<double>(g.size(), 0.0), 0.0};
  double fmax = 0.0;
  for (std::size_t k = 0; k < xi.v.size(); ++k) {
    if (g.is_boundary(k)) continue;
    q.coef[k] = p.nl.df(xi.v[k]);
    fmax = std::max(fmax, std::abs(q.coef[k]));
  }
  q.h_scale = g.h * g.h * fmax / 12.0;
  return q;
}

namespace {

std::vector<Vec> translation_modes(const RadialProfile& p, const CartesianGrid& g) {
  std::vector<Vec> modes(g.n, Vec(g.size(), 0.0));
  g.for_each_node([&](std::size_t flat, std::span<const double> x) {
    if (g.is_boundary(flat)) return;
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) r2 += x[a] * x[a];
    const double r = std::sqrt(r2);
    if (r == 0.0) return;
    const double d = p.derivative(r) / r;
    for (int a = 0; a < g.n; ++a) modes[a][flat] = d * x[a];
  });
  return modes;
}

Vec radial_derivative_field(const RadialProfile& p, const CartesianGrid& g) {
  const std::vector<double> origin(g.n, 0.0);
  return sample_radial_function(g, origin, [&](double r) { return p.derivative(r); }).v;
}

Vec random_box_trial(std::mt19937_64& rng, const CartesianGrid& g, double spread) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), pos(-spread, spread), wid(0.7, 3.0);
  Vec u(g.size(), 0.0);
  for (int j = 0; j < 4; ++j) {
    const double a = amp(rng), w = wid(rng);
    std::vector<double> c(g.n);
    for (auto& x : c) x = pos(rng);
    g.for_each_node([&](std::size_t flat, std::span<const double> x) {
      if (g.is_boundary(flat)) return;
      double d2 = 0.0;
      for (int ax = 0; ax < g.n; ++ax) d2 += (x[ax] - c[ax]) * (x[ax] - c[ax]);
      u[flat] += a * std::exp(-d2 / (w * w));
    });
  }
  return u;
}

}  // namespace

SpectralReport spectrum(const CartesianQ& q, const RadialProfile& p, int k, std::uint64_t seed) {
  const auto& g = q.grid;
  if (k < g.n + 2) throw PreconditionError("spectrum: k must be at least n + 2");
  SpectralReport rep;
  rep.kernel_tol = 10.0 * q.h_scale;

  BlockEigenProblem prob;
  prob.dim = g.size();
  prob.A = [&q](std::span<const double> x, std::span<double> y) { q.apply(x, y); };
  prob.T = [&g](std::span<const double> r, std::span<double> z) {
    std::fill(z.begin(), z.end(), 0.0);
    try {
      solve_cartesian(g, 1.0, {}, r, z, 1e-2, 60);
    } catch (const SolverError&) {
      // a rough preconditioner is still a preconditioner
    }
  };
  std::mt19937_64 rng(seed);
  const int block = k + 2;
  std::vector<Vec> X0;
  const double spread = 0.5 * *std::min_element(g.half_width.begin(), g.half_width.end());
  for (int j = 0; j < block; ++j) X0.push_back(random_box_trial(rng, g, spread));
  const BlockEigenResult er = lobpcg(prob, std::move(X0), 1e-7, 2000);
  rep.iterations = er.iterations;
  for (int j = 0; j < k; ++j) {
    rep.eigenvalues.push_back(er.values[j]);
    rep.lines.push_back({er.values[j], -1, 1});
    if (er.values[j] < -rep.kernel_tol) ++rep.n_negative;
    else if (er.values[j] <= rep.kernel_tol) ++rep.kernel_dim;
  }

  const double w = g.cell_volume();
  for (const Vec& mode : translation_modes(p, g)) {
    Vec qm(mode.size());
    q.apply(mode, qm);
    rep.kernel_residual = std::max(rep.kernel_residual, std::sqrt(dot(qm, qm) / dot(mode, mode)));
  }
  const Vec dxi = radial_derivative_field(p, g);
  const Vec xi = sample_bubble(p, {std::vector<double>(g.n, 0.0)}, {1.0}, g).v;
  Vec qd(dxi.size());
  q.apply(dxi, qd);
  rep.q_xi_prime_xi_prime = w * dot(qd, dxi);
  rep.q_xi_prime_xi = w * dot(qd, xi);
  return rep;
}

// ------------------------------------------------------------- coercivity

CoercivityReport constrained_coercivity(const RadialProfile& p, const RadialGrid& g, int trials,
                                        std::uint64_t seed, bool skip_xi_prime) {
  if (trials < 100) throw PreconditionError("constrained_coercivity needs >= 100 trials");
  CoercivityReport rep;
  rep.constant = rep.trial_min = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::vector<double> dxi(g.size(), 0.0);
  for (std::size_t i = 0; i < g.last; ++i) dxi[i] = p.derivative(g.r[i]);
  const int per_sector = (trials + 2) / 3;

  for (int ell = 0; ell <= 2; ++ell) {
    if (harmonic_multiplicity(g.n, ell) == 0) continue;
    const RadialSector K = assemble_radial(p, g, ell);
    const RadialSector H = laplacian_sector(g, ell, 1.0);
    std::vector<Vec> cons;
    const Vec ydxi = K.to_sector(dxi);
    if (ell == 0 && !skip_xi_prime) {
      Vec c(ydxi.size());
      K.apply(ydxi, c);
      cons.push_back(std::move(c));
    } else if (ell == 1) {
      cons.push_back(ydxi);
    }
    const Projector proj(cons);

    std::vector<std::pair<double, Vec>> best;
    for (int t = 0; t < per_sector; ++t) {
      Vec y = K.to_sector(random_radial_trial(rng, g, ell));
      const double before = std::sqrt(dot(y, y));
      proj.apply(y);
      ++rep.trials_used;
      if (std::sqrt(dot(y, y)) <= 1e-8 * before) {
        ++rep.trials_dropped;
        continue;
      }
      Vec ky(y.size()), hy(y.size());
      K.apply(y, ky);
      H.apply(y, hy);
      const double rq = dot(y, ky) / dot(y, hy);
      best.emplace_back(rq, std::move(y));
    }
    if (best.empty()) throw SolverError("constrained_coercivity: every trial was projected away");
    std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    rep.trial_min = std::min(rep.trial_min, best.front().first);

    BlockEigenProblem prob;
    prob.dim = K.size();
    prob.A = [&K](std::span<const double> x, std::span<double> y) { K.apply(x, y); };
    prob.B = [&H](std::span<const double> x, std::span<double> y) { H.apply(x, y); };
    prob.T = [&H](std::span<const double> r, std::span<double> z) {
      Vec rr(r.begin(), r.end()), zz;
      tridiag_solve(H.diag, H.off, 0.0, rr, zz);
      std::copy(zz.begin(), zz.end(), z.begin());
    };
    prob.constraints = cons;
    prob.converge_count = 1;
    std::vector<Vec> X0;
    for (std::size_t j = 0; j < std::min<std::size_t>(3, best.size()); ++j) X0.push_back(best[j].second);
    const BlockEigenResult er = lobpcg(prob, std::move(X0), 1e-8, 1000);
    const double sector_min = std::min(er.values.front(), best.front().first);
    rep.sector_min.push_back(sector_min);
    rep.constant = std::min(rep.constant, sector_min);
  }
  return rep;
}

CoercivityReport constrained_coercivity(const CartesianQ& q, const RadialProfile& p, int trials,
                                        std::uint64_t seed, bool skip_xi_prime) {
  if (trials < 100) throw PreconditionError("constrained_coercivity needs >= 100 trials");
  const auto& g = q.grid;
  CoercivityReport rep;
  std::vector<Vec> cons = translation_modes(p, g);
  if (!skip_xi_prime) {
    const Vec dxi = radial_derivative_field(p, g);
    Vec c(dxi.size());
    q.apply(dxi, c);
    cons.push_back(std::move(c));
  }
  const Projector proj(cons);
  auto applyH = [&g](std::span<const double> x, std::span<double> y) {
    apply_shifted_laplacian(g, x, y, {}, 1.0);
  };
  std::mt19937_64 rng(seed);
  const double spread = 0.5 * *std::min_element(g.half_width.begin(), g.half_width.end());
  std::vector<std::pair<double, Vec>> best;
  rep.trial_min = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Vec y = random_box_trial(rng, g, spread);
    const double before = std::sqrt(dot(y, y));
    proj.apply(y);
    ++rep.trials_used;
    if (std::sqrt(dot(y, y)) <= 1e-8 * before) {
      ++rep.trials_dropped;
      continue;
    }
    Vec ky(y.size()), hy(y.size());
    q.apply(y, ky);
    applyH(y, hy);
    const double rq = dot(y, ky) / dot(y, hy);
    rep.trial_min = std::min(rep.trial_min, rq);
    best.emplace_back(rq, std::move(y));
    std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (best.size() > 3) best.resize(3);
  }
  if (best.empty()) throw SolverError("constrained_coercivity: every trial was projected away");
  BlockEigenProblem prob;
  prob.dim = g.size();
  prob.A = [&q](std::span<const double> x, std::span<double> y) { q.apply(x, y); };
  prob.B = applyH;
  prob.T = [&g](std::span<const double> r, std::span<double> z) {
    std::fill(z.begin(), z.end(), 0.0);
    try {
      solve_cartesian(g, 1.0, {}, r, z, 1e-4, 500);
    } catch (const SolverError&) {
    }
  };
  prob.constraints = cons;
  prob.converge_count = 1;
  std::vector<Vec> X0;
  for (auto& b : best) X0.push_back(std::move(b.second));
  const BlockEigenResult er = lobpcg(prob, std::move(X0), 1e-7, 2000);
  rep.constant = std::min(er.values.front(), rep.trial_min);
  rep.sector_min.push_back(rep.constant);
  return rep;
}

}  // namespace gsflow
