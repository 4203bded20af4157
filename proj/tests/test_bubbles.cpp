#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gsflow/bubbles.hpp"
#include "gsflow/error.hpp"

using namespace gsflow;

namespace {

const Nonlinearity quad(1.0, {{1.0, 2.0}});

const RadialProfile& profile(int n) {
  static const RadialProfile p1 = shoot(quad, 1, 40.0, 1e-3, 1e-13);
  static const RadialProfile p2 = shoot(quad, 2, 40.0, 1e-3, 1e-13);
  static const RadialProfile p3 = shoot(quad, 3, 40.0, 1e-3, 1e-13);
  return n == 1 ? p1 : n == 2 ? p2 : p3;
}

// 3D overlap through the shell formula
//   g(x) = 2 pi / x int_0^inf s xi(s) [Phi(s + x) - Phi(|s - x|)] ds,
//   Phi(t) = int_0^t tau xi(tau) dtau,
// with trapezoid sums on a fine uniform grid.
double g3_oracle(const RadialProfile& p, double x) {
  const double dt = 2e-3, top = 90.0;
  const std::size_t N = static_cast<std::size_t>(top / dt);
  std::vector<double> phi(N + 1, 0.0), val(N + 1);
  for (std::size_t i = 0; i <= N; ++i) val[i] = p.value(i * dt);
  for (std::size_t i = 1; i <= N; ++i) {
    phi[i] = phi[i - 1] + 0.5 * dt * ((i - 1) * dt * val[i - 1] + i * dt * val[i]);
  }
  auto Phi = [&](double t) {
    const double k = t / dt;
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(k), N - 1);
    const double w = k - i;
    return (1.0 - w) * phi[i] + w * phi[i + 1];
  };
  double sum = 0.0;
  const std::size_t M = static_cast<std::size_t>(45.0 / dt);
  for (std::size_t i = 0; i <= M; ++i) {
    const double s = i * dt;
    const double w = (i == 0 || i == M) ? 0.5 : 1.0;
    sum += w * s * val[i] * (Phi(s + x) - Phi(std::abs(s - x)));
  }
  return 2.0 * std::numbers::pi / x * sum * dt;
}

}  // namespace

TEST_CASE("tail concavity expression for t - t^2 is -x y^2") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 0.5);
  for (int k = 0; k < 100; ++k) {
    const double x = d(rng), y = d(rng);
    CHECK(tail_concavity_expression(quad, {x, y}) == doctest::Approx(-x * y * y).epsilon(1e-9).scale(1e-14));
  }
}

TEST_CASE("tail concavity holds for random small tuples") {
  std::mt19937_64 rng(2);
  const Nonlinearity mixed(2.0, {{1.0, 1.5}, {1.0, 4.0}});
  for (const Nonlinearity* nl : {&quad, &mixed}) {
    const double delta = nl->positive_zero();
    for (int k = 0; k < 2000; ++k) {
      const int M = 2 + static_cast<int>(rng() % 5);
      std::vector<double> xs(M);
      std::uniform_real_distribution<double> d(0.0, 1.0);
      double s = 0.0;
      for (auto& x : xs) s += (x = d(rng));
      const double target = d(rng) * delta * 0.999;
      for (auto& x : xs) x *= target / s;
      CHECK(tail_concavity_check(*nl, xs, delta));
    }
  }
  CHECK_THROWS_AS(tail_concavity_check(quad, {0.6, 0.6}, 1.0), PreconditionError);
  CHECK_THROWS_AS(tail_concavity_check(quad, {-0.1, 0.2}, 1.0), PreconditionError);
  CHECK_THROWS_AS(tail_concavity_check(quad, {0.1, 0.2}, 0.0), PreconditionError);
}

TEST_CASE("interaction g in 3D agrees with the shell formula") {
  const RadialProfile& p = profile(3);
  for (double x : {1.0, 4.0, 10.0, 16.0}) {
    const InteractionValue g = interaction_g(p, x);
    CHECK_FALSE(g.extrapolated);
    CHECK(g.value == doctest::Approx(g3_oracle(p, x)).epsilon(1e-5));
  }
}

TEST_CASE("interaction g in 1D agrees with a trapezoid sum of sech^2 products") {
  const RadialProfile& p = profile(1);
  for (double x : {0.0, 3.0, 8.0}) {
    double sum = 0.0;
    const double dy = 1e-3;
    for (double y = -50.0; y <= 50.0 + x; y += dy) {
      const double a = 1.0 / std::cosh(0.5 * y), b = 1.0 / std::cosh(0.5 * (y - x));
      sum += 2.25 * a * a * b * b;
    }
    CHECK(interaction_g(p, x).value == doctest::Approx(sum * dy).epsilon(1e-6));
  }
}

TEST_CASE("interaction g is decreasing and the tail share shrinks with r") {
  const RadialProfile& p = profile(3);
  double prev = interaction_g(p, 10.0).value;
  for (double x = 11.0; x <= 20.0; x += 1.0) {
    const double g = interaction_g(p, x).value;
    CHECK(g < prev);
    CHECK(g > 0.0);
    prev = g;
  }
  const double f4 = tail_remainder_fraction(p, 10.0, 4.0);
  const double f8 = tail_remainder_fraction(p, 10.0, 8.0);
  CHECK(f4 > f8);
  CHECK(f8 > 0.0);
  CHECK(tail_remainder_fraction(p, 10.0, 0.0) == doctest::Approx(1.0));
  CHECK(interaction_g(p, 3.0 * p.r_end()).extrapolated);
  CHECK_THROWS_AS(interaction_g(p, -1.0), PreconditionError);
}

TEST_CASE("radial best match of the ground state") {
  const RadialProfile& p = profile(3);
  const RadialGrid g = RadialGrid::make(3, 30.0, 1e-2);
  const RadialField u = sample_radial(p, g, 1.0);
  const FitResult fr = best_match(u, p);
  CHECK(fr.gamma / fr.u_norm <= 1e-12);
  CHECK(fr.bubble.weights.at(0) == doctest::Approx(1.0).epsilon(1e-9));
  const RadialField w = sample_radial(p, g, 0.7);
  CHECK(solve_weights(w, p) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("two bubbles in 2D: centres and weights are recovered") {
  const RadialProfile& p = profile(2);
  const CartesianGrid g = CartesianGrid::make(2, {16.0, 10.0}, 0.25);
  const std::vector<Point> c = {{-4.0, 0.5}, {4.25, -0.25}};
  const Field u = sample_bubble(p, c, {1.2, 0.8}, g);
  MatchOptions mo;
  mo.opt_tol = 1e-8;
  const FitResult fr = best_match(u, p, 2, std::nullopt, mo);
  REQUIRE(fr.bubble.M == 2);
  // order may differ; pair each true centre with its nearest fit
  for (std::size_t i = 0; i < 2; ++i) {
    double best = 1e9, w = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      const double d = std::hypot(fr.bubble.centers[j][0] - c[i][0], fr.bubble.centers[j][1] - c[i][1]);
      if (d < best) {
        best = d;
        w = fr.bubble.weights[j];
      }
    }
    CHECK(best <= g.h);
    CHECK(std::abs(w - (i == 0 ? 1.2 : 0.8)) <= 1e-3);
  }
  CHECK(fr.nu > 0.0);
  CHECK(fr.nu == doctest::Approx(fr.nu_from_g).epsilon(1e-2));

  // the weight system is exact for samples of the model
  const WeightSolve ws = solve_weights(u, c, p);
  CHECK(ws.alpha[0] == doctest::Approx(1.2).epsilon(1e-10));
  CHECK(ws.alpha[1] == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(ws.condition >= 1.0);
}

TEST_CASE("best match needs M local maxima") {
  const RadialProfile& p = profile(2);
  const CartesianGrid g = CartesianGrid::cube(2, 10.0, 0.5);
  const Field u = sample_bubble(p, {{0.0, 0.0}}, {1.0}, g);
  CHECK_THROWS_AS(best_match(u, p, 2), Error);
}

TEST_CASE("deficit of the exact ground state vanishes") {
  const RadialProfile& p = profile(3);
  const RadialGrid g = RadialGrid::make(3, 30.0, 1e-2);
  const RadialField u = sample_radial(p, g, 1.0);
  const FitResult fr = best_match(u, p);
  const DeficitReport d = deficit_report(u, fr, p, 0.0);
  CHECK(std::abs(d.deficit) <= 1e-10);
  CHECK(d.rho_l2 <= 1e-10);
}
