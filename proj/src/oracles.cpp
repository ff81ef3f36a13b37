// SPDX-License-Identifier: Apache-2.0
#include "greenmat/oracles.hpp"

#include <cmath>
#include <numbers>

#include "greenmat/error.hpp"

namespace greenmat {

namespace {

constexpr double kInv2Pi = 0.5 / std::numbers::pi;

void check_source(OracleGeometry g, Point y) {
  if (g == OracleGeometry::disk && !(norm(y) < 1.0))
    throw DomainError("disk oracle: source must lie inside the unit disk");
  if (g == OracleGeometry::halfplane && !(y.y > 0.0))
    throw DomainError("half-plane oracle: source must lie above the boundary");
}

}  // namespace

double oracle_green(OracleGeometry g, Point x, Point y) {
  check_source(g, y);
  const double r = distance(x, y);
  if (g == OracleGeometry::halfplane) return kInv2Pi * std::log(distance(x, {y.x, -y.y}) / r);
  const double ny = norm(y);
  if (ny == 0.0) return kInv2Pi * std::log(1.0 / r);
  const Point ystar = (1.0 / (ny * ny)) * y;
  return kInv2Pi * std::log(ny * distance(x, ystar) / r);
}

Point oracle_green_gradient(OracleGeometry g, Point x, Point y) {
  check_source(g, y);
  const Point d = x - y;
  Point grad = (-kInv2Pi / dot(d, d)) * d;
  Point image{0, 0};
  bool has_image = true;
  if (g == OracleGeometry::halfplane) {
    image = {y.x, -y.y};
  } else if (norm(y) > 0.0) {
    image = (1.0 / dot(y, y)) * y;
  } else {
    has_image = false;
  }
  if (has_image) {
    const Point e = x - image;
    grad = grad + (kInv2Pi / dot(e, e)) * e;
  }
  return grad;
}

OracleValidation validate_oracle(OracleGeometry g, Point y) {
  OracleValidation v;
  for (int k = 0; k < 720; ++k) {
    const double th = 2.0 * std::numbers::pi * k / 720.0;
    const Point b = g == OracleGeometry::disk ? Point{std::cos(th), std::sin(th)}
                                              : Point{y.x + 8.0 * std::tan(0.499 * (th - std::numbers::pi)), 0.0};
    v.boundary_max = std::max(v.boundary_max, std::abs(oracle_green(g, b, y)));
  }
  // Probe points at fixed offsets from y, well inside the domain.
  const double rho = g == OracleGeometry::disk ? 0.5 * (1.0 - norm(y)) : 0.5 * y.y;
  auto residual = [&](double s) {
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double th = 2.0 * std::numbers::pi * k / 8.0 + 0.1;
      const Point c = y + rho * Point{std::cos(th), std::sin(th)};
      const double lap = oracle_green(g, c + Point{s, 0}, y) + oracle_green(g, c - Point{s, 0}, y) +
                         oracle_green(g, c + Point{0, s}, y) + oracle_green(g, c - Point{0, s}, y) -
                         4.0 * oracle_green(g, c, y);
      worst = std::max(worst, std::abs(lap) / (s * s));
    }
    return worst;
  };
  const double s = 0.1 * rho;
  v.harmonic_residual_coarse = residual(s);
  v.harmonic_residual_fine = residual(0.25 * s);
  v.pass = v.boundary_max <= 1e-12 &&
           (v.harmonic_residual_fine <= 0.1 * v.harmonic_residual_coarse || v.harmonic_residual_fine < 1e-6);
  return v;
}

}  // namespace greenmat
