#include "gsflow/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "gsflow/error.hpp"
#include "gsflow/kernels.hpp"

namespace gsflow {

static_assert(std::endian::native == std::endian::little,
              "binary field format assumes a little-endian host");

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

// ---------------------------------------------------------------- grids

CartesianGrid CartesianGrid::make(int n, std::vector<double> half_width, double h) {
  if (n < 1 || n > 3) throw PreconditionError("Cartesian grids support n = 1, 2, 3");
  if (static_cast<int>(half_width.size()) != n) {
    throw PreconditionError("one half-width per axis is required");
  }
  if (!(h > 0.0)) throw PreconditionError("grid spacing must be positive");
  CartesianGrid g;
  g.n = n;
  g.h = h;
  g.half_width = std::move(half_width);
  g.nodes.resize(n);
  g.strides.resize(n);
  for (int a = 0; a < n; ++a) {
    const double cells = 2.0 * g.half_width[a] / h;
    const double rounded = std::round(cells);
    if (rounded < 4 || std::abs(cells - rounded) > 1e-9 * cells) {
      throw PreconditionError("2 R / h must be an integer >= 4 on every axis");
    }
    g.nodes[a] = static_cast<std::size_t>(rounded) + 1;
  }
  std::size_t s = 1;
  for (int a = n - 1; a >= 0; --a) {
    g.strides[a] = s;
    s *= g.nodes[a];
  }
  return g;
}

std::size_t CartesianGrid::size() const {
  std::size_t s = 1;
  for (auto k : nodes) s *= k;
  return s;
}

double CartesianGrid::cell_volume() const { return std::pow(h, n); }

bool CartesianGrid::same_as(const CartesianGrid& o) const {
  return n == o.n && h == o.h && nodes == o.nodes && half_width == o.half_width;
}

void CartesianGrid::for_each_node(
    const std::function<void(std::size_t, std::span<const double>)>& fn) const {
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  const std::size_t total = size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (int a = 0; a < n; ++a) x[a] = coord(a, idx[a]);
    fn(flat, x);
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < nodes[a]) break;
      idx[a] = 0;
    }
  }
}

void CartesianGrid::for_each_interior_line(
    const std::function<void(std::size_t, std::size_t)>& fn) const {
  const std::size_t len = nodes[n - 1] - 2;
  std::vector<std::size_t> idx(n - 1, 1);
  while (true) {
    std::size_t base = 1;
    for (int a = 0; a < n - 1; ++a) base += idx[a] * strides[a];
    fn(base, len);
    int a = n - 2;
    for (; a >= 0; --a) {
      if (++idx[a] < nodes[a] - 1) break;
      idx[a] = 1;
    }
    if (a < 0) break;
  }
}

bool CartesianGrid::is_boundary(std::size_t flat) const {
  for (int a = 0; a < n; ++a) {
    const std::size_t k = (flat / strides[a]) % nodes[a];
    if (k == 0 || k + 1 == nodes[a]) return true;
  }
  return false;
}

RadialGrid RadialGrid::make(int n, double R, double h) {
  if (n < 1) throw PreconditionError("dimension must be >= 1");
  if (!(h > 0.0) || !(R > 0.0)) throw PreconditionError("radial grid needs R, h > 0");
  const double cells = R / h;
  const double rounded = std::round(cells);
  if (rounded < 4 || std::abs(cells - rounded) > 1e-9 * cells) {
    throw PreconditionError("R / h must be an integer >= 4");
  }
  RadialGrid g;
  g.n = n;
  g.h = h;
  g.last = static_cast<std::size_t>(rounded);
  g.r.resize(g.last + 1);
  g.face.resize(g.last);
  g.volume.resize(g.last + 1);
  for (std::size_t i = 0; i <= g.last; ++i) g.r[i] = i * h;
  for (std::size_t i = 0; i < g.last; ++i) g.face[i] = std::pow((i + 0.5) * h, n - 1);
  g.volume[0] = std::pow(0.5 * h, n) / n;
  for (std::size_t i = 1; i <= g.last; ++i) {
    g.volume[i] = (std::pow((i + 0.5) * h, n) - std::pow((i - 0.5) * h, n)) / n;
  }
  return g;
}

bool RadialGrid::same_as(const RadialGrid& o) const {
  return n == o.n && h == o.h && last == o.last;
}

// ---------------------------------------------------------------- sums

namespace {

double edge_sum(const CartesianGrid& g, const double* u) {
  const auto& k = kernels::active();
  double s = 0.0;
  for (int a = 0; a < g.n; ++a) {
    const std::size_t st = g.strides[a];
    const std::size_t block = g.nodes[a] * st;
    const std::size_t len = (g.nodes[a] - 1) * st;
    const std::size_t outer = g.size() / block;
    for (std::size_t o = 0; o < outer; ++o) {
      s += k.sum_sq_diff(u + o * block + st, u + o * block, len);
    }
  }
  return s;
}

double radial_edge_sum(const RadialGrid& g, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) {
    const double d = u[i + 1] - u[i];
    s += g.face[i] * d * d;
  }
  return s / g.h;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw PreconditionError("field size does not match its grid");
}

}  // namespace

double energy(const Field& u, const Nonlinearity& nl) {
  check_sizes(u.v.size(), u.grid.size());
  double pot = 0.0;
  for (double x : u.v) pot += nl.F(x);
  const double h2 = u.grid.h * u.grid.h;
  return u.grid.cell_volume() * (0.5 * edge_sum(u.grid, u.v.data()) / h2 + pot);
}

double energy(const RadialField& u, const Nonlinearity& nl) {
  const auto& g = u.grid;
  check_sizes(u.v.size(), g.size());
  double pot = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) pot += g.volume[i] * nl.F(u.v[i]);
  return unit_sphere_area(g.n) * (0.5 * radial_edge_sum(g, u.v) + pot);
}

double inner(const Field& a, const Field& b) {
  check_sizes(a.v.size(), b.v.size());
  return a.grid.cell_volume() * kernels::active().dot(a.v.data(), b.v.data(), a.v.size());
}

double inner(const RadialField& a, const RadialField& b) {
  check_sizes(a.v.size(), b.v.size());
  const auto& g = a.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) s += g.volume[i] * a.v[i] * b.v[i];
  return unit_sphere_area(g.n) * s;
}

double l1(const Field& u) {
  double s = 0.0;
  for (double x : u.v) s += std::abs(x);
  return u.grid.cell_volume() * s;
}

double l1(const RadialField& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.grid.last; ++i) s += u.grid.volume[i] * std::abs(u.v[i]);
  return unit_sphere_area(u.grid.n) * s;
}

double sup_abs(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

Norms norms(const Field& u) {
  Norms out;
  const double l2sq = inner(u, u);
  const double h2 = u.grid.h * u.grid.h;
  const double grad = u.grid.cell_volume() * edge_sum(u.grid, u.v.data()) / h2;
  out.l2 = std::sqrt(l2sq);
  out.h1 = std::sqrt(l2sq + grad);
  out.sup = sup_abs(u.v);
  Field lap = Field::zeros(u.grid);
  apply_shifted_laplacian(u.grid, u.v, lap.v, {}, 0.0);
  out.lap_l2 = std::sqrt(inner(lap, lap));
  return out;
}

Norms norms(const RadialField& u) {
  Norms out;
  const double l2sq = inner(u, u);
  const double grad = unit_sphere_area(u.grid.n) * radial_edge_sum(u.grid, u.v);
  out.l2 = std::sqrt(l2sq);
  out.h1 = std::sqrt(l2sq + grad);
  out.sup = sup_abs(u.v);
  RadialField lap = RadialField::zeros(u.grid);
  apply_shifted_laplacian(u.grid, u.v, lap.v, {}, 0.0);
  out.lap_l2 = std::sqrt(inner(lap, lap));
  return out;
}

// ---------------------------------------------------------------- operators

void apply_shifted_laplacian(const CartesianGrid& g, std::span<const double> x,
                             std::span<double> y, std::span<const double> coef,
                             double diag) {
  check_sizes(x.size(), g.size());
  check_sizes(y.size(), g.size());
  const auto& k = kernels::active();
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double d = diag + 2.0 * g.n * inv_h2;
  std::ptrdiff_t strides[3];
  for (int a = 0; a < g.n; ++a) strides[a] = static_cast<std::ptrdiff_t>(g.strides[a]);
  std::fill(y.begin(), y.end(), 0.0);
  const double* c = coef.empty() ? nullptr : coef.data();
  g.for_each_interior_line([&](std::size_t base, std::size_t len) {
    k.stencil_line(x.data() + base, y.data() + base, c ? c + base : nullptr, len, strides,
                   g.n, d, inv_h2);
  });
}

RadialStencil radial_stencil(const RadialGrid& g) {
  RadialStencil st;
  st.lower.assign(g.last, 0.0);
  st.diag.assign(g.last, 0.0);
  st.upper.assign(g.last, 0.0);
  for (std::size_t i = 0; i < g.last; ++i) {
    const double w = 1.0 / (g.h * g.volume[i]);
    const double left = i == 0 ? 0.0 : g.face[i - 1];
    const double right = g.face[i];
    st.lower[i] = -left * w;
    st.upper[i] = -right * w;
    st.diag[i] = (left + right) * w;
  }
  return st;
}

void apply_shifted_laplacian(const RadialGrid& g, std::span<const double> x,
                             std::span<double> y, std::span<const double> coef,
                             double diag) {
  check_sizes(x.size(), g.size());
  check_sizes(y.size(), g.size());
  // Faces and volumes are cheap to rebuild, but this is on hot paths; cache
  // per grid shape.
  thread_local RadialGrid cached_grid;
  thread_local RadialStencil st;
  if (!cached_grid.same_as(g)) {
    st = radial_stencil(g);
    cached_grid = g;
  }
  for (std::size_t i = 0; i < g.last; ++i) {
    double v = (st.diag[i] + diag + (coef.empty() ? 0.0 : coef[i])) * x[i] +
               st.upper[i] * x[i + 1];
    if (i > 0) v += st.lower[i] * x[i - 1];
    y[i] = v;
  }
  y[g.last] = 0.0;
}

void solve_radial(const RadialGrid& g, const RadialStencil& st, double c0,
                  std::span<const double> coef, std::span<const double> b,
                  std::span<double> x) {
  const std::size_t m = g.last;
  thread_local std::vector<double> cp, dp;
  cp.resize(m);
  dp.resize(m);
  auto diag_at = [&](std::size_t i) {
    return st.diag[i] + c0 + (coef.empty() ? 0.0 : coef[i]);
  };
  double den = diag_at(0);
  cp[0] = st.upper[0] / den;
  dp[0] = b[0] / den;
  for (std::size_t i = 1; i < m; ++i) {
    den = diag_at(i) - st.lower[i] * cp[i - 1];
    if (den == 0.0) throw SolverError("tridiagonal solve hit a zero pivot");
    cp[i] = st.upper[i] / den;
    dp[i] = (b[i] - st.lower[i] * dp[i - 1]) / den;
  }
  x[m] = 0.0;
  x[m - 1] = dp[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
}

int solve_cartesian(const CartesianGrid& g, double diag, std::span<const double> coef,
                    std::span<const double> b, std::span<double> x, double rel_tol,
                    int max_iter) {
  const auto& k = kernels::active();
  const std::size_t N = g.size();
  const double bnorm = std::sqrt(k.dot(b.data(), b.data(), N));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  std::vector<double> r(N), p(N), ap(N);
  apply_shifted_laplacian(g, x, ap, coef, diag);
  for (std::size_t i = 0; i < N; ++i) r[i] = g.is_boundary(i) ? 0.0 : b[i] - ap[i];
  p = r;
  double rr = k.dot(r.data(), r.data(), N);
  const double target = rel_tol * bnorm;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= target) return it;
    apply_shifted_laplacian(g, p, ap, coef, diag);
    const double pap = k.dot(p.data(), ap.data(), N);
    if (!(pap > 0.0)) throw SolverError("conjugate gradients: operator is not positive");
    const double alpha = rr / pap;
    k.axpy(alpha, p.data(), x.data(), N);
    k.axpy(-alpha, ap.data(), r.data(), N);
    const double rr_new = k.dot(r.data(), r.data(), N);
    k.xpby(r.data(), rr_new / rr, p.data(), N);
    rr = rr_new;
  }
  if (std::sqrt(rr) <= target) return max_iter;
  throw SolverError("conjugate gradients did not reach the residual tolerance");
}

// ---------------------------------------------------------------- sampling

Field sample_radial_function(const CartesianGrid& grid, std::span<const double> center,
                             const std::function<double(double)>& fn) {
  Field out = Field::zeros(grid);
  grid.for_each_node([&](std::size_t flat, std::span<const double> x) {
    if (grid.is_boundary(flat)) return;
    double d2 = 0.0;
    for (int a = 0; a < grid.n; ++a) d2 += (x[a] - center[a]) * (x[a] - center[a]);
    out.v[flat] = fn(std::sqrt(d2));
  });
  return out;
}

Field sample_bubble(const RadialProfile& p, const std::vector<std::vector<double>>& centers,
                    const std::vector<double>& weights, const CartesianGrid& g) {
  if (centers.size() != weights.size()) {
    throw PreconditionError("one weight per centre is required");
  }
  if (p.n != g.n) throw PreconditionError("profile dimension does not match the grid");
  const double clearance = 5.0 / p.m;
  for (const auto& c : centers) {
    if (static_cast<int>(c.size()) != g.n) throw PreconditionError("centre has wrong dimension");
    for (int a = 0; a < g.n; ++a) {
      if (std::abs(c[a]) + clearance > g.half_width[a] + 1e-12) {
        throw PreconditionError("centre closer than 5/m to the box boundary");
      }
    }
  }
  Field out = Field::zeros(g);
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const Field b = sample_radial_function(g, centers[j], [&](double r) { return p.value(r); });
    kernels::active().axpy(weights[j], b.v.data(), out.v.data(), out.v.size());
  }
  return out;
}

RadialField sample_radial(const RadialProfile& p, const RadialGrid& g, double weight) {
  if (p.n != g.n) throw PreconditionError("profile dimension does not match the grid");
  RadialField out = RadialField::zeros(g);
  for (std::size_t i = 0; i < g.last; ++i) out.v[i] = weight * p.value(g.r[i]);
  return out;
}

RadialField discrete_ground_state(const RadialProfile& p, const RadialGrid& g) {
  RadialField u = sample_radial(p, g);
  const Nonlinearity& nl = p.nl;
  const RadialStencil st = radial_stencil(g);
  std::vector<double> res(g.size()), jac(g.size()), delta(g.size());
  const double scale = sup_abs(u.v);
  double prev_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50; ++it) {
    apply_shifted_laplacian(g, u.v, res, {}, 0.0);
    for (std::size_t i = 0; i < g.last; ++i) {
      res[i] += nl.f(u.v[i]);
      jac[i] = nl.df(u.v[i]);
    }
    solve_radial(g, st, 0.0, jac, res, delta);
    double step = 0.0;
    for (std::size_t i = 0; i < g.last; ++i) {
      u.v[i] -= delta[i];
      step = std::max(step, std::abs(delta[i]));
      if (!(u.v[i] > 0.0)) {
        throw SolverError("discrete ground state lost positivity; grid too short");
      }
    }
    // Quadratic convergence ends at a rounding floor around 1e-13 scale.
    if (step <= 1e-12 * scale) return u;
    if (it >= 3 && step <= 1e-10 * scale && step >= 0.5 * prev_step) return u;
    prev_step = step;
  }
  throw SolverError("Newton iteration for the discrete ground state did not converge");
}

// ---------------------------------------------------------------- checks, io

double boundary_ratio(const Field& u) {
  const auto& g = u.grid;
  const double s = sup_abs(u.v);
  if (s == 0.0) return 0.0;
  double ring = 0.0;
  g.for_each_node([&](std::size_t flat, std::span<const double>) {
    if (g.is_boundary(flat)) return;
    for (int a = 0; a < g.n; ++a) {
      const std::size_t k = (flat / g.strides[a]) % g.nodes[a];
      if (k == 1 || k + 2 == g.nodes[a]) {
        ring = std::max(ring, std::abs(u.v[flat]));
        return;
      }
    }
  });
  return ring / s;
}

double boundary_ratio(const RadialField& u) {
  const double s = sup_abs(u.v);
  return s == 0.0 ? 0.0 : std::abs(u.v[u.grid.last - 1]) / s;
}

namespace {

template <class T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error("truncated field file");
  return value;
}

void write_meta(std::ostream& os, const std::string& meta) {
  if (meta.empty()) return;
  std::size_t start = 0;
  while (start < meta.size()) {
    const std::size_t end = meta.find('\n', start);
    os << "# " << meta.substr(start, end - start) << '\n';
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

}  // namespace

void write_binary(const Field& u, std::ostream& os) {
  put<std::int64_t>(os, u.grid.n);
  for (auto k : u.grid.nodes) put<std::int64_t>(os, static_cast<std::int64_t>(k));
  put<double>(os, u.grid.h);
  for (double R : u.grid.half_width) put<double>(os, R);
  os.write(reinterpret_cast<const char*>(u.v.data()),
           static_cast<std::streamsize>(u.v.size() * sizeof(double)));
}

Field read_binary(std::istream& is) {
  const auto n = get<std::int64_t>(is);
  if (n < 1 || n > 3) throw Error("field file: unsupported dimension");
  std::vector<std::int64_t> nodes(n);
  for (auto& k : nodes) k = get<std::int64_t>(is);
  const double h = get<double>(is);
  std::vector<double> R(n);
  for (auto& x : R) x = get<double>(is);
  Field u{CartesianGrid::make(static_cast<int>(n), R, h), {}};
  for (int a = 0; a < n; ++a) {
    if (static_cast<std::int64_t>(u.grid.nodes[a]) != nodes[a]) {
      throw Error("field file: node counts inconsistent with h and R");
    }
  }
  u.v.resize(u.grid.size());
  is.read(reinterpret_cast<char*>(u.v.data()),
          static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (!is) throw Error("truncated field file");
  return u;
}

void write_slice_csv(const Field& u, std::ostream& os, const std::string& meta) {
  const auto& g = u.grid;
  write_meta(os, meta);
  os << "x,u\n";
  std::size_t base = 0;
  for (int a = 1; a < g.n; ++a) base += (g.nodes[a] / 2) * g.strides[a];
  os.precision(17);
  for (std::size_t k = 0; k < g.nodes[0]; ++k) {
    os << g.coord(0, k) << ',' << u.v[base + k * g.strides[0]] << '\n';
  }
}

void write_csv(const RadialField& u, std::ostream& os, const std::string& meta) {
  write_meta(os, meta);
  os << "r,u\n";
  os.precision(17);
  for (std::size_t i = 0; i < u.grid.size(); ++i) os << u.grid.r[i] << ',' << u.v[i] << '\n';
}

}  // namespace gsflow
