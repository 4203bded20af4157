#pragma once

// Data-parallel inner loops shared by the Cartesian field code, the flow
// solver and the spectral iterations. Every routine has a scalar reference
// version; an AVX2/FMA version is compiled separately and chosen at runtime
// when the CPU supports it. Set GSFLOW_SIMD=scalar to force the reference.

#include <cstddef>
#include <string_view>

namespace gsflow::kernels {

struct Table {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = x + beta * y
  void (*xpby)(const double* x, double beta, double* y, std::size_t n);
  // sum_k (a[k] - b[k])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // One contiguous line of the constant-spacing Laplacian stencil:
  //   y[k] = (diag + coef[k]) x[k] - inv_h2 * sum_s (x[k - s] + x[k + s])
  // over the neighbour offsets s in strides[0..nstrides). coef may be null.
  void (*stencil_line)(const double* x, double* y, const double* coef,
                       std::size_t len, const std::ptrdiff_t* strides,
                       int nstrides, double diag, double inv_h2);
};

const Table& scalar();

// Null when the AVX2 variant was not built or the CPU lacks AVX2+FMA.
const Table* avx2();

// The table used by the library; resolved once on first use.
const Table& active();

}  // namespace gsflow::kernels
