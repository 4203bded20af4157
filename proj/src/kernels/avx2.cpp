// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// runtime CPU check, so nothing here may be called from generic code.

#include <immintrin.h>

#include "gsflow/kernels.hpp"

namespace gsflow::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4),
                           acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k),
                                            _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void xpby_avx2(const double* x, double beta, double* y, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + k),
                                            _mm256_loadu_pd(x + k)));
  }
  for (; k < n; ++k) y[k] = x[k] + beta * y[k];
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void stencil_line_avx2(const double* x, double* y, const double* coef,
                       std::size_t len, const std::ptrdiff_t* strides,
                       int nstrides, double diag, double inv_h2) {
  const __m256d vdiag = _mm256_set1_pd(diag);
  const __m256d vih2 = _mm256_set1_pd(inv_h2);
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    const double* xc = x + k;
    __m256d nb = _mm256_setzero_pd();
    for (int s = 0; s < nstrides; ++s) {
      nb = _mm256_add_pd(nb, _mm256_loadu_pd(xc - strides[s]));
      nb = _mm256_add_pd(nb, _mm256_loadu_pd(xc + strides[s]));
    }
    __m256d d = vdiag;
    if (coef) d = _mm256_add_pd(d, _mm256_loadu_pd(coef + k));
    const __m256d r = _mm256_fnmadd_pd(vih2, nb, _mm256_mul_pd(d, _mm256_loadu_pd(xc)));
    _mm256_storeu_pd(y + k, r);
  }
  for (; k < len; ++k) {
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

const Table& avx2_table() {
  static const Table table{"avx2",          dot_avx2,         axpy_avx2,
                           xpby_avx2,       sum_sq_diff_avx2, stencil_line_avx2};
  return table;
}

}  // namespace gsflow::kernels
