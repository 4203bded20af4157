#pragma once

// Constructive separation of a finite point set: an extremal point y and a
// direction e with (x - y).e >= |x - y| / D for every other point x.

#include <cstdint>
#include <vector>

namespace gsflow {

using Point = std::vector<double>;

struct SeparationCert {
  std::vector<Point> points;   // input, in the caller's order
  std::size_t y_index = 0;
  Point y;
  Point e;                     // unit vector
  double D = 1.0;              // certified: max |x - y| / ((x - y).e)
  double D_proof = 1.0;        // what the inductive argument guarantees
  double D_apriori = 1.0;      // 8^{M-2}
  double D2 = 0.0;             // 2D (1 + 1/(2D)), valid on B_{L'}(y)
  double L = 0.0;              // minimum pairwise distance
  double Lprime = 0.0;         // L / (2D)
  std::vector<double> ratios;  // (x - y).e / |x - y| per point, 0 at y
};

// Worst-case constant of the induction: 1 for M = 2 and a factor 8 per point
// (Case 2 of the step can cost 2K = 8 D).
double a_priori_D(int M);

// Inserts points by decreasing distance from the centroid. Throws
// PreconditionError for M < 2, mixed dimensions or duplicate points.
SeparationCert separate(const std::vector<Point>& P);

// Exhaustive check of the certificate at ratio 1/D (with a relative slack of
// 1e-12 for rounding).
bool verify_cert(const SeparationCert& c);

// (x - z).e >= |x - z| / D2 for every x != y.
bool neighborhood_cert(const SeparationCert& c, const Point& z);

// Best 1/min_x cos over `directions` random unit vectors and every choice of
// y in P; the sampled optimum of the certificate's D. Deterministic in seed.
double brute_force_D(const std::vector<Point>& P, int directions, std::uint64_t seed);

// Indices of the convex hull vertices of planar points (monotone chain,
// collinear points excluded).
std::vector<std::size_t> convex_hull_2d(const std::vector<Point>& P);

}  // namespace gsflow
