#pragma once

// Second variation Q(phi, phi) = int |grad phi|^2 + f'(xi) phi^2 around the
// ground state, on radial angular-momentum sectors and on Cartesian boxes.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsflow/field.hpp"
#include "gsflow/ground_state.hpp"

namespace gsflow {

// -u'' - (n-1)/r u' + (l(l+n-2)/r^2 + f'(xi)) u on the radial grid, written
// as a symmetric tridiagonal matrix in the basis y_i = sqrt(V_i) u_i. For
// l >= 1 the centre node is dropped (u_0 = 0).
struct RadialSector {
  int n = 0;
  int ell = 0;
  RadialGrid grid;
  std::size_t first = 0;            // first grid node carried
  std::vector<double> diag, off;    // off[i] couples i and i+1
  std::vector<double> sqrt_volume;  // sqrt(V) for the carried nodes
  std::vector<double> potential;    // f'(xi) + l(l+n-2)/r^2

  std::size_t size() const { return diag.size(); }
  void apply(std::span<const double> y, std::span<double> out) const;
  // Grid values u -> sector coordinates y and back.
  std::vector<double> to_sector(std::span<const double> u) const;
  std::vector<double> to_grid(std::span<const double> y) const;
};

// xi is sampled from the profile on the grid. shift adds a constant to the
// potential (used for H = -Lap + 1 with the ground state removed).
RadialSector assemble_radial(const RadialProfile& p, const RadialGrid& g, int ell);
RadialSector laplacian_sector(const RadialGrid& g, int ell, double shift);

// Lowest k eigenvalues by Sturm bisection (ascending), and the eigenvector
// (sector coordinates, unit norm) for a computed eigenvalue.
std::vector<double> sector_eigenvalues(const RadialSector& s, int k);
std::vector<double> sector_eigenvector(const RadialSector& s, double lambda);
int sturm_count(const RadialSector& s, double x);  // eigenvalues < x

// Matrix-free -Lap_h + f'(xi) on a Cartesian box.
struct CartesianQ {
  CartesianGrid grid;
  std::vector<double> coef;  // f'(xi) per node
  double h_scale = 0.0;      // h^2 |f'(xi)|_inf / 12
  void apply(std::span<const double> x, std::span<double> y) const;
};
CartesianQ assemble_Q(const RadialProfile& p, const CartesianGrid& g);

struct SpectralLine {
  double lambda = 0.0;
  int ell = -1;           // -1 on Cartesian grids
  int multiplicity = 1;
};

struct SpectralReport {
  std::vector<double> eigenvalues;  // ascending, repeated by multiplicity
  std::vector<SpectralLine> lines;  // distinct computed values with sectors
  int n_negative = 0;
  int kernel_dim = 0;
  double kernel_tol = 0.0;
  double kernel_residual = 0.0;     // max |Q d_a xi| / |d_a xi|
  double q_xi_prime_xi_prime = 0.0;
  double q_xi_prime_xi = 0.0;
  double identity_max_rel_err = 0.0;  // Q(xi', psi) vs -(n-1) int xi' psi / r^2
  double coercivity_constant = 0.0;
  bool coercivity_computed = false;
  int iterations = 0;
};

// Radial: sectors l = 0..max_ell merged with multiplicities
// 1, n, (n+2)(n-1)/2, ...; k counts eigenvalues with multiplicity and must be
// >= n + 2. Fills the pairings and the identity check (n >= 3, 20 random psi).
SpectralReport spectrum(const RadialProfile& p, const RadialGrid& g, int k,
                        std::uint64_t seed = 1, int max_ell = 2);
// Cartesian: lowest k by LOBPCG with a (-Lap_h + 1)^{-1} preconditioner.
SpectralReport spectrum(const CartesianQ& q, const RadialProfile& p, int k,
                        std::uint64_t seed = 1);

// Radial pairings on the l = 0 sector in the grid inner product.
double q_pairing(const RadialProfile& p, const RadialGrid& g, std::span<const double> phi,
                 std::span<const double> psi);
// -(n-1) |S| sum_i W_i xi'(r_i) psi_i with W_i = int_{cell i} r^{n-3} dr.
double svxi_quadrature(const RadialProfile& p, const RadialGrid& g,
                       std::span<const double> psi);

struct CoercivityReport {
  double constant = 0.0;               // min over sectors after refinement
  std::vector<double> sector_min;      // per l = 0, 1, 2 (radial)
  double trial_min = 0.0;              // best raw trial before refinement
  int trials_used = 0;
  int trials_dropped = 0;              // projected to (near) zero
};

// min Q(phi, phi) / |phi|_{H1}^2 over phi orthogonal to the translation modes
// and Q-orthogonal to xi'. Radial: l = 0 carries the xi' condition, l = 1 the
// translations, l = 2 is unconstrained. trials >= 100.
CoercivityReport constrained_coercivity(const RadialProfile& p, const RadialGrid& g,
                                        int trials, std::uint64_t seed = 1,
                                        bool skip_xi_prime = false);
CoercivityReport constrained_coercivity(const CartesianQ& q, const RadialProfile& p,
                                        int trials, std::uint64_t seed = 1,
                                        bool skip_xi_prime = false);

// Generic block eigen-solver (LOBPCG) for A x = lambda B x on the subspace
// orthogonal (Euclidean) to `constraints`.
struct BlockEigenProblem {
  std::size_t dim = 0;
  std::function<void(std::span<const double>, std::span<double>)> A;
  std::function<void(std::span<const double>, std::span<double>)> B;  // empty = I
  std::function<void(std::span<const double>, std::span<double>)> T;  // empty = I
  std::vector<std::vector<double>> constraints;
  int converge_count = 0;  // leading pairs that must meet tol; 0 = all
};
struct BlockEigenResult {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  int iterations = 0;
  double max_residual = 0.0;
};
BlockEigenResult lobpcg(const BlockEigenProblem& prob, std::vector<std::vector<double>> X0,
                        double tol, int max_iter);

}  // namespace gsflow
