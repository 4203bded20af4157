#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "gsflow/error.hpp"
#include "gsflow/field.hpp"

using namespace gsflow;

namespace {

const Nonlinearity quad(1.0, {{1.0, 2.0}});

template <class F>
void randomize(F& u, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : u.v) x = d(rng);
}

void zero_boundary(Field& u) {
  for (std::size_t i = 0; i < u.v.size(); ++i)
    if (u.grid.is_boundary(i)) u.v[i] = 0.0;
}
void zero_boundary(RadialField& u) { u.v[u.grid.last] = 0.0; }

// d/ds J(u + s w) at s = 0 against <-Lap_h u + f(u), w>.
template <class F>
void check_gradient(const F& u, const F& w) {
  const double e = 1e-6;
  F up = u, um = u;
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    up.v[i] += e * w.v[i];
    um.v[i] -= e * w.v[i];
  }
  const double fd = (energy(up, quad) - energy(um, quad)) / (2.0 * e);
  F grad = u;
  std::vector<double> coef;
  apply_shifted_laplacian(u.grid, u.v, grad.v, coef, 0.0);
  for (std::size_t i = 0; i < u.v.size(); ++i) grad.v[i] += quad.f(u.v[i]);
  zero_boundary(grad);
  CHECK(fd == doctest::Approx(inner(grad, w)).epsilon(1e-6));
}

}  // namespace

TEST_CASE("grid construction preconditions") {
  CHECK_THROWS_AS(CartesianGrid::cube(4, 2.0, 0.5), PreconditionError);
  CHECK_THROWS_AS(CartesianGrid::cube(2, 2.0, 0.3), PreconditionError);
  CHECK_THROWS_AS(CartesianGrid::make(2, {2.0}, 0.5), PreconditionError);
  CHECK_THROWS_AS(RadialGrid::make(3, 1.0, 0.3), PreconditionError);
  CHECK_THROWS_AS(RadialGrid::make(3, 1.0, -0.1), PreconditionError);
  const CartesianGrid g = CartesianGrid::make(2, {3.0, 2.0}, 0.5);
  CHECK(g.nodes[0] == 13);
  CHECK(g.nodes[1] == 9);
  CHECK(g.size() == 13 * 9);
  CHECK(g.cell_volume() == doctest::Approx(0.25));
}

TEST_CASE("radial shell volumes sum to the ball volume") {
  for (int n : {1, 2, 3}) {
    const RadialGrid g = RadialGrid::make(n, 5.0, 0.1);
    double v = 0.0;
    for (std::size_t i = 0; i < g.last; ++i) v += g.volume[i];
    const double rl = g.R() - 0.5 * g.h;
    CHECK(v == doctest::Approx(std::pow(rl, n) / n).epsilon(1e-12));
  }
  CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * M_PI));
  CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * M_PI));
  CHECK(unit_sphere_area(1) == doctest::Approx(2.0));
}

TEST_CASE("energy gradient is -Lap_h u + f(u) on Cartesian grids") {
  std::mt19937_64 rng(1);
  for (int n : {1, 2, 3}) {
    const CartesianGrid g = CartesianGrid::cube(n, 2.0, 0.5);
    Field u = Field::zeros(g), w = Field::zeros(g);
    randomize(u, rng, 0.0, 1.5);
    randomize(w, rng, -1.0, 1.0);
    zero_boundary(u);
    zero_boundary(w);
    check_gradient(u, w);
  }
}

TEST_CASE("energy gradient is -Lap_h u + f(u) on radial grids") {
  std::mt19937_64 rng(2);
  for (int n : {1, 2, 3}) {
    const RadialGrid g = RadialGrid::make(n, 3.0, 0.1);
    RadialField u = RadialField::zeros(g), w = RadialField::zeros(g);
    randomize(u, rng, 0.0, 1.5);
    randomize(w, rng, -1.0, 1.0);
    zero_boundary(u);
    zero_boundary(w);
    check_gradient(u, w);
  }
}

TEST_CASE("Cartesian Laplacian is exact on quadratics") {
  const CartesianGrid g = CartesianGrid::cube(3, 2.0, 0.25);
  Field u = Field::zeros(g);
  g.for_each_node([&](std::size_t i, std::span<const double> x) {
    u.v[i] = x[0] * x[0] + 2.0 * x[1] * x[1] - x[2] * x[2];
  });
  std::vector<double> y(u.v.size());
  apply_shifted_laplacian(g, u.v, y, {}, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (g.is_boundary(i)) CHECK(y[i] == 0.0);
    else CHECK(y[i] == doctest::Approx(-4.0));
  }
}

TEST_CASE("radial solve matches a dense solve") {
  std::mt19937_64 rng(3);
  const RadialGrid g = RadialGrid::make(3, 4.0, 0.1);
  const RadialStencil st = radial_stencil(g);
  const std::size_t N = g.last;
  std::vector<double> coef(g.size()), b(g.size(), 0.0), x(g.size(), 0.0);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (auto& c : coef) c = d(rng);
  for (std::size_t i = 0; i < N; ++i) b[i] = d(rng) - 0.5;
  solve_radial(g, st, 0.7, coef, b, x);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd rhs(N);
  for (std::size_t i = 0; i < N; ++i) {
    A(i, i) = st.diag[i] + 0.7 + coef[i];
    if (i > 0) A(i, i - 1) = st.lower[i];
    if (i + 1 < N) A(i, i + 1) = st.upper[i];
    rhs[i] = b[i];
  }
  const Eigen::VectorXd ref = A.partialPivLu().solve(rhs);
  for (std::size_t i = 0; i < N; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  CHECK(x[N] == 0.0);
}

TEST_CASE("conjugate gradients solves the shifted operator") {
  std::mt19937_64 rng(4);
  const CartesianGrid g = CartesianGrid::cube(2, 4.0, 0.25);
  std::vector<double> b(g.size(), 0.0), x(g.size(), 0.0), y(g.size(), 0.0);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!g.is_boundary(i)) b[i] = d(rng);
  const int its = solve_cartesian(g, 1.0, {}, b, x, 1e-12, 2000);
  CHECK(its > 0);
  apply_shifted_laplacian(g, x, y, {}, 1.0);
  double r = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    r += (y[i] - b[i]) * (y[i] - b[i]);
    bn += b[i] * b[i];
  }
  CHECK(std::sqrt(r / bn) <= 1e-11);
  CHECK_THROWS_AS(solve_cartesian(g, 1.0, {}, b, x, 1e-14, 2), SolverError);
}

TEST_CASE("discrete ground state is stationary and close to the profile") {
  const RadialProfile p = shoot(quad, 3, 40.0, 1e-3, 1e-13);
  const RadialGrid g = RadialGrid::make(3, 30.0, 1e-2);
  const RadialField xh = discrete_ground_state(p, g);
  std::vector<double> y(g.size()), coef;
  apply_shifted_laplacian(g, xh.v, y, coef, 0.0);
  double res = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < g.last; ++i) {
    res = std::max(res, std::abs(y[i] + quad.f(xh.v[i])));
    dev = std::max(dev, std::abs(xh.v[i] - p.value(g.r[i])));
  }
  CHECK(res <= 1e-10);
  CHECK(dev / p.xi[0] <= 1e-3);
}

TEST_CASE("bubble sampling respects boundary clearance") {
  const RadialProfile p = shoot(quad, 2, 40.0, 1e-3, 1e-13);
  const CartesianGrid g = CartesianGrid::cube(2, 8.0, 0.5);
  CHECK_THROWS_AS(sample_bubble(p, {{5.0, 0.0}}, {1.0}, g), PreconditionError);
  CHECK_THROWS_AS(sample_bubble(p, {{0.0, 0.0}}, {1.0, 1.0}, g), PreconditionError);
  const Field u = sample_bubble(p, {{0.0, 0.0}}, {2.0}, g);
  CHECK(sup_abs(u.v) == doctest::Approx(2.0 * p.xi[0]).epsilon(1e-12));
  CHECK(boundary_ratio(u) < 1e-2);
}

TEST_CASE("binary field files round-trip exactly") {
  std::mt19937_64 rng(6);
  const CartesianGrid g = CartesianGrid::make(3, {2.0, 1.5, 1.0}, 0.5);
  Field u = Field::zeros(g);
  randomize(u, rng, -3.0, 3.0);
  std::stringstream ss;
  write_binary(u, ss);
  const Field v = read_binary(ss);
  CHECK(v.grid.same_as(g));
  CHECK(v.v == u.v);
  std::stringstream bad(ss.str().substr(0, 20));
  CHECK_THROWS_AS(read_binary(bad), Error);
}

TEST_CASE("norms and inner products") {
  const CartesianGrid g = CartesianGrid::cube(2, 2.0, 0.5);
  Field u = Field::zeros(g);
  for (std::size_t i = 0; i < u.v.size(); ++i)
    if (!g.is_boundary(i)) u.v[i] = 1.0;
  const Norms nm = norms(u);
  // 7 x 7 interior nodes, cell volume 1/4
  CHECK(nm.l2 == doctest::Approx(std::sqrt(49 * 0.25)));
  CHECK(inner(u, u) == doctest::Approx(nm.l2 * nm.l2));
  CHECK(l1(u) == doctest::Approx(49 * 0.25));
  CHECK(nm.sup == 1.0);
  CHECK(nm.h1 > nm.l2);
}
