#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gsflow/bubbles.hpp"
#include "gsflow/error.hpp"

namespace gsflow {
namespace {

constexpr double kRelTol = 1e-11;

template <class Fn>
double gk(Fn&& fn, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fn, a, b, 12, kRelTol);
}

// Area of S^{n-2}, the measure of directions orthogonal to the axis.
double sub_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (n - 1)) / std::tgamma(0.5 * (n - 1));
}

// int xi(|y|) xi(|y - x e|) over {|y| >= r, |y - x e| >= r}; r = 0 gives g(x).
double overlap_outside(const RadialProfile& p, double x, double r) {
  const double reach = x + 40.0 / p.m;
  auto xi = [&p](double t) { return p.value(t); };

  if (p.n == 1) {
    auto integrand = [&](double y) {
      if (std::abs(y) < r || std::abs(y - x) < r) return 0.0;
      return xi(y) * xi(y - x);
    };
    std::vector<double> cuts = {-reach, 0.0, x, x + reach};
    if (r > 0.0) {
      for (double c : {-r, r, x - r, x + r}) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += gk(integrand, cuts[k], cuts[k + 1]);
    return total;
  }

  const int n = p.n;
  const double area = sub_sphere_area(n);
  // For fixed s = |y|, integrate over the polar angle to the axis; the
  // distance to x e is t(theta) = sqrt(s^2 + x^2 - 2 s x cos theta), which
  // increases with theta, so |y - x e| >= r is theta >= theta_min.
  auto shell = [&](double s) {
    if (s < r) return 0.0;
    double theta_min = 0.0;
    if (r > 0.0 && x > 0.0 && s > 0.0) {
      const double c = (s * s + x * x - r * r) / (2.0 * s * x);
      if (c <= -1.0) return 0.0;
      theta_min = c >= 1.0 ? 0.0 : std::acos(c);
    }
    auto angular = [&](double theta) {
      const double t2 = s * s + x * x - 2.0 * s * x * std::cos(theta);
      const double w = n == 2 ? 1.0 : std::pow(std::sin(theta), n - 2);
      return xi(std::sqrt(std::max(t2, 0.0))) * w;
    };
    double inner = 0.0;
    if (x == 0.0) {
      inner = xi(s) * gk([&](double th) {
        return n == 2 ? 1.0 : std::pow(std::sin(th), n - 2);
      }, 0.0, std::numbers::pi);
    } else {
      // The angular integrand peaks near theta = 0 when s is close to x.
      const double split = std::min(std::numbers::pi, std::max(theta_min, 0.0) + 4.0 / std::max(s, 1.0));
      inner = gk(angular, theta_min, split) + gk(angular, split, std::numbers::pi);
    }
    return area * std::pow(s, n - 1) * xi(s) * inner;
  };
  std::vector<double> cuts = {0.0, x, x + reach};
  for (double c : {x - 2.0, x + 2.0, 0.5 * x}) {
    if (c > 0.0) cuts.push_back(c);
  }
  if (r > 0.0) {
    for (double c : {r, std::abs(x - r), x + r}) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += gk(shell, cuts[k], cuts[k + 1]);
  return total;
}

}  // namespace

InteractionValue interaction_g(const RadialProfile& p, double x) {
  if (!(x >= 0.0)) throw PreconditionError("interaction_g: separation must be >= 0");
  const double x_max = 2.0 * p.r_end();
  if (x <= x_max) return {overlap_outside(p, x, 0.0), false};
  const double kappa = overlap_outside(p, x_max, 0.0) / p.value(x_max);
  return {kappa * p.value(x), true};
}

double tail_remainder_fraction(const RadialProfile& p, double x, double r) {
  if (!(x >= 0.0) || !(r >= 0.0)) {
    throw PreconditionError("tail remainder needs x >= 0 and r >= 0");
  }
  const double total = overlap_outside(p, x, 0.0);
  return overlap_outside(p, x, r) / total;
}

}  // namespace gsflow
