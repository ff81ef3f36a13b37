// SPDX-License-Identifier: Apache-2.0
#include "greenmat/simd/kernels.hpp"

#include <atomic>
#include <cmath>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define GREENMAT_X86 1
#endif

namespace greenmat::simd {

namespace scalar {

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_abs_dev(const double* x, std::size_t n, double c) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - c);
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace scalar

#ifdef GREENMAT_X86
namespace avx2 {

namespace {
__attribute__((target("avx2"))) double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v), hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}
}  // namespace

__attribute__((target("avx2"))) double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

__attribute__((target("avx2"))) double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2"))) double sum_abs_dev(const double* x, std::size_t n, double c) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vc), mask));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(x[i] - c);
  return s;
}

__attribute__((target("avx2"))) void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace avx2
#else
namespace avx2 {
double sum(const double* x, std::size_t n) { return scalar::sum(x, n); }
double dot(const double* x, const double* y, std::size_t n) { return scalar::dot(x, y, n); }
double sum_abs_dev(const double* x, std::size_t n, double c) { return scalar::sum_abs_dev(x, n, c); }
void axpy(double a, const double* x, double* y, std::size_t n) { scalar::axpy(a, x, y, n); }
}  // namespace avx2
#endif

bool avx2_supported() {
#ifdef GREENMAT_X86
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
#else
  return false;
#endif
}

namespace {
std::atomic<Isa>& chosen() {
  static std::atomic<Isa> isa{avx2_supported() ? Isa::avx2 : Isa::scalar};
  return isa;
}
}  // namespace

Isa active_isa() { return chosen().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  chosen().store(isa == Isa::avx2 && !avx2_supported() ? Isa::scalar : isa, std::memory_order_relaxed);
}

const char* to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double sum(const double* x, std::size_t n) {
  return active_isa() == Isa::avx2 ? avx2::sum(x, n) : scalar::sum(x, n);
}
double dot(const double* x, const double* y, std::size_t n) {
  return active_isa() == Isa::avx2 ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}
double sum_abs_dev(const double* x, std::size_t n, double c) {
  return active_isa() == Isa::avx2 ? avx2::sum_abs_dev(x, n, c) : scalar::sum_abs_dev(x, n, c);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  if (active_isa() == Isa::avx2)
    avx2::axpy(a, x, y, n);
  else
    scalar::axpy(a, x, y, n);
}

}  // namespace greenmat::simd
