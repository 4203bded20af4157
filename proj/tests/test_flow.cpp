#include <doctest.h>

#include <cmath>

#include "gsflow/error.hpp"
#include "gsflow/field.hpp"
#include "gsflow/flow.hpp"

using namespace gsflow;

namespace {

const Nonlinearity quad(1.0, {{1.0, 2.0}});

struct Setup {
  RadialProfile p = shoot(quad, 3, 40.0, 1e-3, 1e-13);
  RadialGrid g = RadialGrid::make(3, 30.0, 2e-2);
  RadialField xh = discrete_ground_state(p, g);

  RadialField scaled(double s) const {
    RadialField u = xh;
    for (double& x : u.v) x *= s;
    return u;
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_CASE("preconditions") {
  const Setup& s = setup();
  FlowOptions o;
  o.dt = 0.2;
  CHECK_THROWS_AS(run(s.xh, quad, o), PreconditionError);
  o.dt = 0.0;
  CHECK_THROWS_AS(run(s.xh, quad, o), PreconditionError);
  RadialField neg = s.xh;
  neg.v[3] = -1e-3;
  CHECK_THROWS_AS(run(neg, quad, FlowOptions{}), PreconditionError);
  CHECK(scheme_from_string("euler") == Scheme::euler);
  CHECK_THROWS(scheme_from_string("rk4"));
}

TEST_CASE("discrete ground state is a fixed point of both schemes") {
  const Setup& s = setup();
  for (Scheme sc : {Scheme::euler, Scheme::bdf2}) {
    FlowOptions o;
    o.scheme = sc;
    o.T = 1.0;
    o.dt = 1e-2;
    const auto st = run(s.xh, quad, o);
    double drift = 0.0;
    for (std::size_t i = 0; i < s.g.size(); ++i) drift = std::max(drift, std::abs(st.u.v[i] - s.xh.v[i]));
    CHECK(drift <= 1e-10);
    CHECK(st.event == Event::running);
  }
}

TEST_CASE("energy is non-increasing and the dissipation ledger closes") {
  const Setup& s = setup();
  FlowOptions o;
  o.T = 4.0;
  o.dt = 2e-3;
  o.scheme = Scheme::bdf2;
  const auto a = run(s.scaled(0.9), quad, o);
  CHECK(max_energy_increase(a.history) <= 0.0);
  const double ra = dissipation_residual(a, 1.0, 4.0);
  o.dt = 1e-3;
  const auto b = run(s.scaled(0.9), quad, o);
  const double rb = dissipation_residual(b, 1.0, 4.0);
  CHECK(rb <= 1e-3);
  // second order in dt
  CHECK(ra / rb == doctest::Approx(4.0).epsilon(0.1));

  o.scheme = Scheme::euler;
  o.dt = 2e-3;
  const double ea = dissipation_residual(run(s.scaled(0.9), quad, o), 1.0, 4.0);
  o.dt = 1e-3;
  const double eb = dissipation_residual(run(s.scaled(0.9), quad, o), 1.0, 4.0);
  CHECK(ea / eb == doctest::Approx(2.0).epsilon(0.1));
  CHECK_THROWS_AS(dissipation_residual(b.history, 3.0, 1.0), PreconditionError);
}

TEST_CASE("dichotomy around the ground state") {
  const Setup& s = setup();
  FlowOptions o;
  o.T = 40.0;
  o.dt = 1e-2;
  const auto lo = run(s.scaled(0.5), quad, o);
  CHECK(lo.event == Event::vanished);
  const auto hi = run(s.scaled(1.5), quad, o);
  CHECK(hi.event == Event::blown_up);
  CHECK(hi.event_time < 40.0);
}

TEST_CASE("runs are bitwise reproducible") {
  const Setup& s = setup();
  FlowOptions o;
  o.T = 2.0;
  const auto a = run(s.scaled(0.95), quad, o);
  const auto b = run(s.scaled(0.95), quad, o);
  CHECK(a.u.v == b.u.v);
  CHECK(a.history.size() == b.history.size());
  CHECK(a.history.back().J == b.history.back().J);
}

TEST_CASE("radial n = 1 coincides with the symmetric 1D Cartesian flow") {
  const RadialGrid rg = RadialGrid::make(1, 10.0, 0.1);
  const CartesianGrid cg = CartesianGrid::cube(1, 10.0, 0.1);
  RadialField ur = RadialField::zeros(rg);
  Field uc = Field::zeros(cg);
  for (std::size_t i = 0; i < rg.last; ++i) ur.v[i] = 1.2 * std::exp(-rg.r[i] * rg.r[i] / 4.0);
  const std::size_t mid = cg.nodes[0] / 2;
  for (std::size_t k = 1; k + 1 < cg.nodes[0]; ++k) {
    const double x = cg.coord(0, k);
    uc.v[k] = 1.2 * std::exp(-x * x / 4.0);
  }
  FlowOptions o;
  o.T = 2.0;
  o.dt = 1e-2;
  o.cg_tol = 1e-14;
  const auto a = run(ur, quad, o);
  const auto b = run(uc, quad, o);
  double diff = 0.0;
  for (std::size_t i = 0; i <= rg.last; ++i) diff = std::max(diff, std::abs(a.u.v[i] - b.u.v[mid + i]));
  CHECK(diff <= 1e-10);
  CHECK(a.history.back().J == doctest::Approx(b.history.back().J).epsilon(1e-10));
}

TEST_CASE("Cartesian flow keeps energy monotone") {
  const RadialProfile p = shoot(quad, 2, 40.0, 1e-3, 1e-13);
  const CartesianGrid g = CartesianGrid::cube(2, 10.0, 0.25);
  Field u = sample_bubble(p, {{0.0, 0.0}}, {0.8}, g);
  FlowOptions o;
  o.T = 1.0;
  o.dt = 1e-2;
  const auto st = run(u, quad, o);
  CHECK(max_energy_increase(st.history) <= 0.0);
  CHECK(st.history.back().J < st.history.front().J);
  CHECK(st.clamp_mass >= 0.0);
}

TEST_CASE("linear fit is exact on a line") {
  const LinearFit f = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, -1.0, -3.0, -5.0});
  CHECK(f.slope == doctest::Approx(-2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.points == 4);
}
