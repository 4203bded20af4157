#include "gsflow/kernels.hpp"

namespace gsflow::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void xpby_scalar(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + beta * y[k];
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void stencil_line_scalar(const double* x, double* y, const double* coef,
                         std::size_t len, const std::ptrdiff_t* strides,
                         int nstrides, double diag, double inv_h2) {
  for (std::size_t k = 0; k < len; ++k) {
    double nb = 0.0;
    for (int s = 0; s < nstrides; ++s) {
      nb += x[static_cast<std::ptrdiff_t>(k) - strides[s]] +
            x[static_cast<std::ptrdiff_t>(k) + strides[s]];
    }
    const double d = coef ? diag + coef[k] : diag;
    y[k] = d * x[k] - inv_h2 * nb;
  }
}

}  // namespace

const Table& scalar() {
  static const Table table{"scalar",          dot_scalar,
                           axpy_scalar,       xpby_scalar,
                           sum_sq_diff_scalar, stencil_line_scalar};
  return table;
}

}  // namespace gsflow::kernels
