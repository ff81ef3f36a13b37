// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "greenmat/simd/kernels.hpp"

using namespace greenmat;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Simd, VariantsAgreeOnAllTailLengths) {
  if (!simd::avx2_supported()) GTEST_SKIP() << "no AVX2 on this CPU";
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 63u, 1000u, 4097u}) {
    const auto x = random_vector(n, 11 + n), y = random_vector(n, 29 + n);
    double ax = 0.0;
    for (double v : x) ax += std::abs(v);
    const double tol = 1e-14 * (ax + 1.0) * 4;
    EXPECT_NEAR(simd::avx2::sum(x.data(), n), simd::scalar::sum(x.data(), n), tol) << n;
    EXPECT_NEAR(simd::avx2::dot(x.data(), y.data(), n), simd::scalar::dot(x.data(), y.data(), n), 8 * tol) << n;
    EXPECT_NEAR(simd::avx2::sum_abs_dev(x.data(), n, 0.3), simd::scalar::sum_abs_dev(x.data(), n, 0.3), 4 * tol) << n;
    // axpy is elementwise without fused multiply-add: bitwise equal
    auto y1 = y, y2 = y;
    simd::avx2::axpy(-1.7, x.data(), y1.data(), n);
    simd::scalar::axpy(-1.7, x.data(), y2.data(), n);
    EXPECT_EQ(y1, y2) << n;
  }
}

TEST(Simd, DispatchFollowsForcedIsa) {
  const simd::Isa before = simd::active_isa();
  simd::force_isa(simd::Isa::scalar);
  EXPECT_EQ(simd::active_isa(), simd::Isa::scalar);
  const auto x = random_vector(37, 5);
  EXPECT_EQ(simd::sum(x.data(), x.size()), simd::scalar::sum(x.data(), x.size()));
  simd::force_isa(simd::Isa::avx2);
  EXPECT_EQ(simd::active_isa(), simd::avx2_supported() ? simd::Isa::avx2 : simd::Isa::scalar);
  simd::force_isa(before);
}

TEST(Simd, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(simd::sum(x.data(), x.size()), 28.0);
  EXPECT_EQ(simd::dot(x.data(), x.data(), x.size()), 140.0);
  EXPECT_EQ(simd::sum_abs_dev(x.data(), x.size(), 4.0), 12.0);
}
