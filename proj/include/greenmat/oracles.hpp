// SPDX-License-Identifier: Apache-2.0
//
// Closed-form Green's functions of the Laplacian used to calibrate the
// numerical routes. Convention: -Delta G(., y) = delta_y, G = 0 on the boundary.
#pragma once

#include <string>

#include "greenmat/geometry.hpp"

namespace greenmat {

enum class OracleGeometry { disk, halfplane };

/// Unit disk centred at the origin, or the upper half-plane {x2 > 0}.
/// Throws DomainError for y on (or outside) the boundary.
double oracle_green(OracleGeometry g, Point x, Point y);

/// Analytic gradient in x of the oracle.
Point oracle_green_gradient(OracleGeometry g, Point x, Point y);

struct OracleValidation {
  double boundary_max = 0.0;         ///< max |G| sampled on the boundary
  double harmonic_residual_coarse = 0.0;  ///< 5-point residual, stencil s
  double harmonic_residual_fine = 0.0;    ///< same with stencil s / 4
  bool pass = false;
};

/// Boundary-zero and discrete-harmonicity checks away from y.
OracleValidation validate_oracle(OracleGeometry g, Point y);

}  // namespace greenmat
