#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gsflow/error.hpp"
#include "gsflow/geometry.hpp"

using namespace gsflow;

namespace {

double dotp(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<Point> random_points(std::mt19937_64& rng, int M, int n) {
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<Point> P(M, Point(n));
  for (auto& x : P)
    for (auto& c : x) c = g(rng);
  return P;
}

}  // namespace

TEST_CASE("two points") {
  const SeparationCert c = separate({{0.0, 0.0}, {3.0, 4.0}});
  CHECK(c.D == doctest::Approx(1.0));
  CHECK(c.L == doctest::Approx(5.0));
  CHECK(c.Lprime == doctest::Approx(2.5));
  CHECK(c.D2 == doctest::Approx(3.0));
  CHECK(a_priori_D(2) == 1.0);
  CHECK(a_priori_D(4) == 64.0);
  CHECK(verify_cert(c));
}

TEST_CASE("collinear points pick an endpoint") {
  const SeparationCert c = separate({{1.0}, {-2.0}, {0.5}, {4.0}});
  CHECK((c.y[0] == -2.0 || c.y[0] == 4.0));
  CHECK(c.D == doctest::Approx(1.0));
}

TEST_CASE("preconditions") {
  CHECK_THROWS_AS(separate({{1.0, 2.0}}), PreconditionError);
  CHECK_THROWS_AS(separate({{1.0, 2.0}, {1.0}}), PreconditionError);
  CHECK_THROWS_AS(separate({{1.0, 2.0}, {0.0, 0.0}, {1.0, 2.0}}), PreconditionError);
}

TEST_CASE("random certificates hold and y is extreme") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int M = 2 + static_cast<int>(rng() % 7);
    const auto P = random_points(rng, M, n);
    const SeparationCert c = separate(P);
    REQUIRE(verify_cert(c));
    CHECK(std::abs(dotp(c.e, c.e) - 1.0) <= 1e-12);
    CHECK(c.D >= 1.0);
    CHECK(c.D <= c.D_proof * (1.0 + 1e-12));
    CHECK(c.D_proof <= c.D_apriori);
    CHECK(c.D_apriori == a_priori_D(M));
    CHECK(c.y == P[c.y_index]);
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (i == c.y_index) continue;
      CHECK(dotp(c.e, P[i]) > dotp(c.e, c.y));
      CHECK(c.ratios[i] >= (1.0 / c.D) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("the certificate survives moving y inside B_{L'}(y)") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const auto P = random_points(rng, 5, n);
    const SeparationCert c = separate(P);
    for (int k = 0; k < 200; ++k) {
      Point dir(n);
      double len = 0.0;
      for (auto& d : dir) {
        d = g(rng);
        len += d * d;
      }
      len = std::sqrt(len);
      const double rad = c.Lprime * std::pow(u(rng), 1.0 / n);
      Point z = c.y;
      for (int a = 0; a < n; ++a) z[a] += rad * dir[a] / len;
      CHECK(neighborhood_cert(c, z));
    }
  }
}

TEST_CASE("sampled optimum stays within the a-priori factor") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int M = 3 + static_cast<int>(rng() % 4);
    const auto P = random_points(rng, M, 2);
    const SeparationCert c = separate(P);
    const double bf = brute_force_D(P, 2000, 7);
    CHECK(bf >= 1.0);
    CHECK(c.D / bf <= a_priori_D(M));
    CHECK(brute_force_D(P, 2000, 7) == bf);
  }
}

TEST_CASE("planar certificates choose a hull vertex") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto P = random_points(rng, 3 + static_cast<int>(rng() % 6), 2);
    const auto hull = convex_hull_2d(P);
    const SeparationCert c = separate(P);
    CHECK(std::find(hull.begin(), hull.end(), c.y_index) != hull.end());
  }
}

TEST_CASE("hull of a square with interior and edge points") {
  const std::vector<Point> P = {{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 0}, {0.5, 1.5}};
  auto h = convex_hull_2d(P);
  std::sort(h.begin(), h.end());
  CHECK(h == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("the constant D(M, n) is monotone in M and bounds nested families") {
  for (int M = 2; M < 10; ++M) CHECK(a_priori_D(M + 1) >= a_priori_D(M));
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int fam = 0; fam < 300; ++fam) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<Point> P;
    for (int M = 1; M <= 8; ++M) {
      Point x(n);
      for (auto& c : x) c = g(rng);
      P.push_back(x);
      if (M < 2) continue;
      // per-instance D may drop when a point is added (the insertion order
      // changes), so only the constant is monotone
      CHECK(separate(P).D <= a_priori_D(M));
    }
  }
}
