#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gsflow/kernels.hpp"

using namespace gsflow;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Reductions are reassociated by the vector code; allow a few ulps of the
// absolute sum.
double reduction_tol(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return 1e-14 * (s + 1.0);
}

}  // namespace

TEST_CASE("scalar dot and sum_sq_diff agree with a naive loop") {
  std::mt19937_64 rng(3);
  const auto& k = kernels::scalar();
  for (std::size_t n : {0u, 1u, 5u, 64u, 1001u}) {
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    long double d = 0.0L, s = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      d += static_cast<long double>(a[i]) * b[i];
      s += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(static_cast<double>(d)).epsilon(1e-13));
    CHECK(k.sum_sq_diff(a.data(), b.data(), n) ==
          doctest::Approx(static_cast<double>(s)).epsilon(1e-13));
  }
}

TEST_CASE("active table is one of the two variants") {
  const auto& a = kernels::active();
  const bool known = a.name == kernels::scalar().name ||
                     (kernels::avx2() != nullptr && a.name == kernels::avx2()->name);
  CHECK(known);
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  const kernels::Table* v = kernels::avx2();
  if (v == nullptr) {
    MESSAGE("AVX2 variant unavailable on this machine; skipped");
    return;
  }
  const auto& s = kernels::scalar();
  std::mt19937_64 rng(11);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <=
          reduction_tol(a, b));
    CHECK(std::abs(v->sum_sq_diff(a.data(), b.data(), n) - s.sum_sq_diff(a.data(), b.data(), n)) <=
          1e-14 * (4.0 * n + 1.0));

    auto y1 = b, y2 = b;
    s.axpy(0.37, a.data(), y1.data(), n);
    v->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 4e-16);

    y1 = b;
    y2 = b;
    s.xpby(a.data(), -1.3, y1.data(), n);
    v->xpby(a.data(), -1.3, y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 8e-16);
  }
}

TEST_CASE("AVX2 stencil line matches scalar on a 3D block") {
  const kernels::Table* v = kernels::avx2();
  if (v == nullptr) return;
  const auto& s = kernels::scalar();
  std::mt19937_64 rng(5);
  // 9 x 9 x 37 block; run the interior line of every interior (i, j).
  const std::size_t nx = 9, ny = 9, nz = 37;
  const auto x = random_vec(rng, nx * ny * nz);
  const auto coef = random_vec(rng, nx * ny * nz);
  const std::ptrdiff_t strides[3] = {static_cast<std::ptrdiff_t>(ny * nz),
                                     static_cast<std::ptrdiff_t>(nz), 1};
  for (const double* c : {static_cast<const double*>(nullptr), coef.data()}) {
    std::vector<double> y1(x.size(), 0.0), y2(x.size(), 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i)
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        const std::size_t b = (i * ny + j) * nz + 1;
        const double* cb = c ? c + b : nullptr;
        s.stencil_line(x.data() + b, y1.data() + b, cb, nz - 2, strides, 3, 6.25 + 1.0, 6.25 / 6.0);
        v->stencil_line(x.data() + b, y2.data() + b, cb, nz - 2, strides, 3, 6.25 + 1.0, 6.25 / 6.0);
      }
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14);
  }
}

TEST_CASE("scalar stencil line reproduces the 1D second difference") {
  const auto& s = kernels::scalar();
  std::vector<double> x(12), y(12, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i * i);
  const std::ptrdiff_t stride = 1;
  // (2 + 0) x - (x- + x+) = -(second difference) = -2 for i^2
  s.stencil_line(x.data() + 1, y.data() + 1, nullptr, 10, &stride, 1, 2.0, 1.0);
  for (std::size_t i = 1; i <= 10; ++i) CHECK(y[i] == doctest::Approx(-2.0));
}
