// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "greenmat/mesh.hpp"

namespace greenmat {

/// Constant coefficient block of one region: a[alpha][beta] is the N x N
/// matrix (A^{alpha beta}_{ij})_{ij}, alpha, beta in {0, 1}.
struct Block {
  std::array<std::array<Eigen::MatrixXd, 2>, 2> a;

  int n() const { return static_cast<int>(a[0][0].rows()); }
  static Block identity(int n, double scale = 1.0);
  Block scaled(double c) const;
  Block transposed() const;
  bool is_symmetric(double tol = 0.0) const;
  /// Symmetrized 2N x 2N form Q[(i,alpha),(j,beta)], row index alpha*N + i.
  Eigen::MatrixXd form() const;
  double frobenius() const;
  bool operator==(const Block& o) const;
};

/// Piecewise-constant coefficient field: blocks per region id plus the rule
/// mapping points to region ids.
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(int n, std::map<int, Block> blocks, RegionMap regions, std::string name = "");

  int n() const { return n_; }
  const std::map<int, Block>& blocks() const { return blocks_; }
  const RegionMap& regions() const { return regions_; }
  const std::string& name() const { return name_; }

  const Block& sample_block(int region_id) const;
  int region_of(Point p) const { return regions_(p); }

  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  bool certified() const { return lambda_ > 0.0; }
  void set_certificate(double lambda, double Lambda) {
    lambda_ = lambda;
    Lambda_ = Lambda;
  }

  bool is_symmetric() const;
  CoefficientField scaled(double c) const;

 private:
  int n_ = 1;
  std::map<int, Block> blocks_;
  RegionMap regions_;
  std::string name_;
  double lambda_ = 0.0;
  double Lambda_ = 0.0;
};

struct EllipticityConstants {
  double lambda = 0.0;
  double Lambda = 0.0;
};

/// Smallest eigenvalue of the symmetrized form (lambda) and largest block
/// Frobenius norm (Lambda) over all regions; stores both in the field.
/// Throws CoefficientError if lambda <= 0.
EllipticityConstants validate_ellipticity(CoefficientField& field);

/// Field of the adjoint operator: A^{alpha beta}_{ij} -> A^{beta alpha}_{ji}.
CoefficientField transpose_field(const CoefficientField& field);

/// Brute-force A^{ab}_{ij} xi^j_b xi^i_a, xi laid out as (alpha*N + i).
double quadratic_form(const Block& b, const Eigen::VectorXd& xi);

/// Writes the field's region ids onto the mesh triangles (by centroid).
void assign_regions(Mesh& mesh, const CoefficientField& field);

// Generators. Cell-based fields tile `box` with n_cells x n_cells squares and
// repeat periodically outside it.
CoefficientField laplace(int n = 1);
CoefficientField checkerboard(double a_min, double a_max, int n_cells, const Rect& box);
CoefficientField random_spd(std::uint64_t seed, double lambda_target, double Lambda_target,
                            int n_cells, const Rect& box, int n = 1);
/// Identity plus an antisymmetric part +-drift (A^{12} = s drift, A^{21} = -s drift)
/// whose sign s alternates on a checkerboard. A spatially constant
/// antisymmetric part would be invisible to the operator.
CoefficientField skew(double drift, int n_cells, const Rect& box);

/// Coefficient file, one record per line ('#' comments):
///   N <n>
///   layout uniform | layout cells <n_cells> <xmin> <xmax> <ymin> <ymax>
///   region <id> <4 N^2 numbers: alpha, beta, i, j row-major>
/// With `layout cells`, the cell (ix, iy) has region id ix * n_cells + iy.
CoefficientField read_coefficients(std::istream& in);
CoefficientField read_coefficients_file(const std::string& path);

}  // namespace greenmat
