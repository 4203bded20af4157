#pragma once

// Discrete fields on a Cartesian box (Dirichlet ring fixed at zero) and on a
// radial grid r_i = i h, i = 0..N with u_N = 0.
//
// Both discretisations derive -Laplacian and the energy from one quadratic
// form, so the gradient of the discrete energy (in the grid inner product) is
// exactly -Lap_h u + f(u). That makes the flow's energy ledger exact up to
// time-stepping error.
//
//   Cartesian: J = h^n [ sum_edges (u_a - u_b)^2 / (2 h^2) + sum_nodes F(u) ]
//   radial:    J = |S^{n-1}| [ sum_i A_{i+1/2} (u_{i+1} - u_i)^2 / (2h)
//                              + sum_i V_i F(u_i) ]
// with face areas A = r^{n-1} and shell volumes V_i = (r_{i+1/2}^n - r_{i-1/2}^n)/n.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gsflow/ground_state.hpp"
#include "gsflow/reaction.hpp"

namespace gsflow {

double unit_sphere_area(int n);

struct CartesianGrid {
  int n = 0;
  double h = 0.0;
  std::vector<double> half_width;     // per axis
  std::vector<std::size_t> nodes;     // per axis, including both boundary nodes
  std::vector<std::size_t> strides;   // row-major, last axis contiguous

  // half_width[a] / h must be (close to) an integer. n in {1, 2, 3}.
  static CartesianGrid make(int n, std::vector<double> half_width, double h);
  static CartesianGrid cube(int n, double half_width, double h) {
    return make(n, std::vector<double>(static_cast<std::size_t>(n), half_width), h);
  }

  std::size_t size() const;
  double coord(int axis, std::size_t k) const { return -half_width[axis] + k * h; }
  double cell_volume() const;
  bool same_as(const CartesianGrid& o) const;

  // Calls fn(flat_index, x) for every node, x being the node position.
  void for_each_node(const std::function<void(std::size_t, std::span<const double>)>& fn) const;
  // Calls fn(flat_begin, length) for every contiguous run of interior nodes
  // along the last axis.
  void for_each_interior_line(const std::function<void(std::size_t, std::size_t)>& fn) const;
  bool is_boundary(std::size_t flat) const;
};

struct RadialGrid {
  int n = 0;
  double h = 0.0;
  std::size_t last = 0;  // index of the Dirichlet node, r_last = R
  std::vector<double> r;
  std::vector<double> face;    // A_{i+1/2}, i = 0..last-1
  std::vector<double> volume;  // V_i, i = 0..last (V_last unused by sums)

  static RadialGrid make(int n, double R, double h);
  std::size_t size() const { return last + 1; }
  double R() const { return r.back(); }
  bool same_as(const RadialGrid& o) const;
};

struct Field {
  CartesianGrid grid;
  std::vector<double> v;

  static Field zeros(const CartesianGrid& g) { return {g, std::vector<double>(g.size(), 0.0)}; }
};

struct RadialField {
  RadialGrid grid;
  std::vector<double> v;

  static RadialField zeros(const RadialGrid& g) { return {g, std::vector<double>(g.size(), 0.0)}; }
};

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
  double sup = 0.0;
  double lap_l2 = 0.0;  // ||Lap_h u||, the W^{2,2} proxy
};

double energy(const Field& u, const Nonlinearity& nl);
double energy(const RadialField& u, const Nonlinearity& nl);

Norms norms(const Field& u);
Norms norms(const RadialField& u);

// Grid inner products (h^n sum, resp. |S| sum V_i).
double inner(const Field& a, const Field& b);
double inner(const RadialField& a, const RadialField& b);
double l1(const Field& u);
double l1(const RadialField& u);
double sup_abs(std::span<const double> v);

// y = (diag + coef) x - Lap_h x on interior nodes, zero on the Dirichlet ring.
// coef may be empty.
void apply_shifted_laplacian(const CartesianGrid& g, std::span<const double> x,
                             std::span<double> y, std::span<const double> coef,
                             double diag);
// Same on the radial grid (node `last` is left at zero).
void apply_shifted_laplacian(const RadialGrid& g, std::span<const double> x,
                             std::span<double> y, std::span<const double> coef,
                             double diag);

// Tridiagonal form of -Lap_h on the radial grid: row i has
//   lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1},  i = 0..last-1.
struct RadialStencil {
  std::vector<double> lower, diag, upper;
};
RadialStencil radial_stencil(const RadialGrid& g);

// Solves (c0 + coef - Lap_h) x = b on the radial grid by the Thomas algorithm.
void solve_radial(const RadialGrid& g, const RadialStencil& st, double c0,
                  std::span<const double> coef, std::span<const double> b,
                  std::span<double> x);

// Conjugate gradients for (diag + coef - Lap_h) x = b, which must be SPD.
// Returns the iteration count; throws SolverError without convergence.
int solve_cartesian(const CartesianGrid& g, double diag, std::span<const double> coef,
                    std::span<const double> b, std::span<double> x, double rel_tol,
                    int max_iter);

// Sum_i w_i xi(|x - c_i|). Centres need clearance >= 5/m from every face.
Field sample_bubble(const RadialProfile& p, const std::vector<std::vector<double>>& centers,
                    const std::vector<double>& weights, const CartesianGrid& g);
// Samples g(|x - c|) on interior nodes, without clearance checks.
Field sample_radial_function(const CartesianGrid& grid, std::span<const double> center,
                             const std::function<double(double)>& fn);
RadialField sample_radial(const RadialProfile& p, const RadialGrid& g, double weight = 1.0);

// Newton iteration for -Lap_h u + f(u) = 0 on the radial grid started from
// the sampled profile. The result is the exact stationary point of the
// discrete flow.
RadialField discrete_ground_state(const RadialProfile& p, const RadialGrid& g);

// Largest value on the ring next to the Dirichlet boundary relative to sup u.
double boundary_ratio(const Field& u);
double boundary_ratio(const RadialField& u);

// Flat binary: int64 n, int64 nodes[n], double h, double R[n], then values,
// all little-endian.
void write_binary(const Field& u, std::ostream& os);
Field read_binary(std::istream& is);

// Slice through the box centre along axis 0: columns x, u.
void write_slice_csv(const Field& u, std::ostream& os, const std::string& meta = {});
void write_csv(const RadialField& u, std::ostream& os, const std::string& meta = {});

}  // namespace gsflow
