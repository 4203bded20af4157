#include "gsflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Point sub(const Point& a, const Point& b) {
  Point d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

struct Partial {
  std::size_t y = 0;  // index into the caller's point list
  Point e;
  double D = 1.0;     // per-instance worst ratio over inserted points
  double D_proof = 1.0;
};

double worst_ratio(const std::vector<Point>& P, const std::vector<std::size_t>& ids, std::size_t y,
                   const Point& e) {
  double worst = 1.0;
  for (std::size_t i : ids) {
    if (i == y) continue;
    const Point d = sub(P[i], P[y]);
    const double proj = dot(d, e);
    if (!(proj > 0.0)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, norm(d) / proj);
  }
  return worst;
}

}  // namespace

double a_priori_D(int M) {
  if (M < 2) throw PreconditionError("a_priori_D needs M >= 2");
  return std::pow(8.0, M - 2);
}

SeparationCert separate(const std::vector<Point>& P) {
  const std::size_t M = P.size();
  if (M < 2) throw PreconditionError("separate needs at least two points");
  const std::size_t n = P[0].size();
  if (n == 0) throw PreconditionError("separate: points must have positive dimension");
  for (const auto& x : P) {
    if (x.size() != n) throw PreconditionError("separate: points have mixed dimensions");
  }
  double L = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) L = std::min(L, norm(sub(P[i], P[j])));
  if (!(L > 0.0)) throw PreconditionError("separate: duplicate points");

  Point centroid(n, 0.0);
  for (const auto& x : P)
    for (std::size_t a = 0; a < n; ++a) centroid[a] += x[a] / M;
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(M);
  for (std::size_t i = 0; i < M; ++i) dist[i] = norm(sub(P[i], centroid));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });

  Partial cur;
  cur.y = order[0];
  cur.e = sub(P[order[1]], P[order[0]]);
  const double len = norm(cur.e);
  for (double& v : cur.e) v /= len;
  std::vector<std::size_t> inserted = {order[0], order[1]};

  for (std::size_t step = 2; step < M; ++step) {
    const std::size_t xm = order[step];
    const double K = std::max(4.0 * cur.D, 2.0);
    const Point d = sub(P[xm], P[cur.y]);
    const double c = dot(d, cur.e) / norm(d);
    inserted.push_back(xm);
    if (std::abs(c) >= 1.0 / K) {
      if (c < 0.0) cur.y = xm;  // the new point is further back along e
      cur.D_proof = K;
    } else {
      const double alpha = 2.0 / K;
      Point e(n);
      for (std::size_t a = 0; a < n; ++a) e[a] = cur.e[a] + alpha * d[a] / norm(d);
      const double en = norm(e);
      for (double& v : e) v /= en;
      cur.e = std::move(e);
      cur.D_proof = 2.0 * K;
    }
    cur.D = worst_ratio(P, inserted, cur.y, cur.e);
    if (!(cur.D <= cur.D_proof * (1.0 + 1e-9))) {
      throw SolverError("separate: inductive step produced ratio " + std::to_string(cur.D) +
                        " above its bound " + std::to_string(cur.D_proof));
    }
  }

  SeparationCert c;
  c.points = P;
  c.y_index = cur.y;
  c.y = P[cur.y];
  c.e = cur.e;
  c.D = cur.D;
  c.D_proof = cur.D_proof;
  c.D_apriori = a_priori_D(static_cast<int>(M));
  c.D2 = 2.0 * c.D * (1.0 + 1.0 / (2.0 * c.D));
  c.L = L;
  c.Lprime = L / (2.0 * c.D);
  c.ratios.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    if (i == c.y_index) continue;
    const Point d = sub(P[i], c.y);
    c.ratios[i] = dot(d, c.e) / norm(d);
  }
  return c;
}

bool verify_cert(const SeparationCert& c) {
  if (std::abs(norm(c.e) - 1.0) > 1e-12) return false;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (i == c.y_index) continue;
    const Point d = sub(c.points[i], c.y);
    if (dot(d, c.e) < norm(d) / c.D * (1.0 - 1e-12)) return false;
  }
  return true;
}

bool neighborhood_cert(const SeparationCert& c, const Point& z) {
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (i == c.y_index) continue;
    const Point d = sub(c.points[i], z);
    if (dot(d, c.e) < norm(d) / c.D2 * (1.0 - 1e-12)) return false;
  }
  return true;
}

double brute_force_D(const std::vector<Point>& P, int directions, std::uint64_t seed) {
  const std::size_t n = P.at(0).size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  // unit vectors towards every other point, per candidate y
  std::vector<std::vector<Point>> units(P.size());
  for (std::size_t y = 0; y < P.size(); ++y)
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (i == y) continue;
      Point d = sub(P[i], P[y]);
      const double len = norm(d);
      for (double& v : d) v /= len;
      units[y].push_back(std::move(d));
    }
  double best = -1.0;
  Point e(n);
  for (int k = 0; k < directions; ++k) {
    for (double& v : e) v = gauss(rng);
    const double len = norm(e);
    for (double& v : e) v /= len;
    for (const auto& us : units) {
      double worst = 1.0;
      for (const auto& u : us) worst = std::min(worst, dot(u, e));
      best = std::max(best, worst);
    }
  }
  return best > 0.0 ? 1.0 / best : std::numeric_limits<double>::infinity();
}

std::vector<std::size_t> convex_hull_2d(const std::vector<Point>& P) {
  std::vector<std::size_t> idx(P.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return P[a][0] < P[b][0] || (P[a][0] == P[b][0] && P[a][1] < P[b][1]);
  });
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (P[a][0] - P[o][0]) * (P[b][1] - P[o][1]) - (P[a][1] - P[o][1]) * (P[b][0] - P[o][0]);
  };
  if (idx.size() < 3) return idx;
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], idx[i]) <= 0) --k;
    hull[k++] = idx[i];
  }
  for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], idx[i]) <= 0) --k;
    hull[k++] = idx[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace gsflow
