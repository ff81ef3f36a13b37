// SPDX-License-Identifier: Apache-2.0
//
// Contiguous double kernels with a scalar and an AVX2 variant. The public
// entry points dispatch at run time on CPU support; both variants stay
// callable so they can be compared directly.
#pragma once

#include <cstddef>

namespace greenmat::simd {

enum class Isa { scalar, avx2 };

/// Best variant the CPU supports, unless overridden by force_isa.
Isa active_isa();
/// Pins dispatch to a variant (avx2 falls back to scalar if unsupported).
void force_isa(Isa isa);
bool avx2_supported();
const char* to_string(Isa isa);

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_abs_dev(const double* x, std::size_t n, double c);
void axpy(double a, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_abs_dev(const double* x, std::size_t n, double c);
void axpy(double a, const double* x, double* y, std::size_t n);
}  // namespace avx2

double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
/// sum |x_i - c|
double sum_abs_dev(const double* x, std::size_t n, double c);
/// y += a x
void axpy(double a, const double* x, double* y, std::size_t n);

}  // namespace greenmat::simd
