// SPDX-License-Identifier: Apache-2.0
#include "greenmat/coefficients.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "greenmat/error.hpp"

namespace greenmat {

Block Block::identity(int n, double scale) {
  Block b;
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      b.a[al][be] = (al == be ? scale : 0.0) * Eigen::MatrixXd::Identity(n, n);
  return b;
}

Block Block::scaled(double c) const {
  Block b = *this;
  for (auto& row : b.a)
    for (auto& m : row) m *= c;
  return b;
}

Block Block::transposed() const {
  Block b;
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be) b.a[al][be] = a[be][al].transpose();
  return b;
}

bool Block::is_symmetric(double tol) const {
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      if ((a[al][be] - a[be][al].transpose()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

Eigen::MatrixXd Block::form() const {
  const int N = n();
  Eigen::MatrixXd q(2 * N, 2 * N);
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be) q.block(al * N, be * N, N, N) = a[al][be];
  return 0.5 * (q + q.transpose());
}

double Block::frobenius() const {
  double s = 0.0;
  for (const auto& row : a)
    for (const auto& m : row) s += m.squaredNorm();
  return std::sqrt(s);
}

bool Block::operator==(const Block& o) const {
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      if (a[al][be] != o.a[al][be]) return false;
  return true;
}

CoefficientField::CoefficientField(int n, std::map<int, Block> blocks, RegionMap regions,
                                   std::string name)
    : n_(n), blocks_(std::move(blocks)), regions_(std::move(regions)), name_(std::move(name)) {
  if (n_ < 1) throw CoefficientError("system size must be positive");
  if (blocks_.empty()) throw CoefficientError("coefficient field has no regions");
  for (const auto& [id, b] : blocks_)
    if (b.n() != n_) throw CoefficientError("block size mismatch in region " + std::to_string(id));
  if (!regions_) regions_ = [](Point) { return 0; };
}

const Block& CoefficientField::sample_block(int region_id) const {
  auto it = blocks_.find(region_id);
  if (it == blocks_.end()) throw CoefficientError("unknown region id " + std::to_string(region_id));
  return it->second;
}

bool CoefficientField::is_symmetric() const {
  for (const auto& [id, b] : blocks_)
    if (!b.is_symmetric()) return false;
  return true;
}

CoefficientField CoefficientField::scaled(double c) const {
  std::map<int, Block> out;
  for (const auto& [id, b] : blocks_) out.emplace(id, b.scaled(c));
  CoefficientField f(n_, std::move(out), regions_, name_);
  if (certified()) f.set_certificate(c * lambda_, c * Lambda_);
  return f;
}

EllipticityConstants validate_ellipticity(CoefficientField& field) {
  EllipticityConstants c{kInf, 0.0};
  for (const auto& [id, b] : field.blocks()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.form(), Eigen::EigenvaluesOnly);
    c.lambda = std::min(c.lambda, es.eigenvalues().minCoeff());
    c.Lambda = std::max(c.Lambda, b.frobenius());
  }
  if (!(c.lambda > 0.0))
    throw CoefficientError("field is not strongly elliptic (lambda = " + std::to_string(c.lambda) + ")");
  field.set_certificate(c.lambda, c.Lambda);
  return c;
}

CoefficientField transpose_field(const CoefficientField& field) {
  std::map<int, Block> out;
  for (const auto& [id, b] : field.blocks()) out.emplace(id, b.transposed());
  CoefficientField t(field.n(), std::move(out), field.regions(), field.name() + "^T");
  if (field.certified()) t.set_certificate(field.lambda(), field.Lambda());
  return t;
}

double quadratic_form(const Block& b, const Eigen::VectorXd& xi) {
  const int N = b.n();
  double s = 0.0;
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) s += b.a[al][be](i, j) * xi(be * N + j) * xi(al * N + i);
  return s;
}

void assign_regions(Mesh& mesh, const CoefficientField& field) {
  assign_regions(mesh, field.regions());
}

namespace {

struct CellIndex {
  Rect box;
  int n;
  std::pair<int, int> operator()(Point p) const {
    const double cx = box.width() / n, cy = box.height() / n;
    auto wrap = [this](double v) {
      long k = static_cast<long>(std::floor(v)) % n;
      return static_cast<int>(k < 0 ? k + n : k);
    };
    return {wrap((p.x - box.xmin) / cx), wrap((p.y - box.ymin) / cy)};
  }
};

void check_cells(int n_cells, const Rect& box) {
  if (n_cells < 1) throw CoefficientError("n_cells must be positive");
  if (!(box.width() > 0 && box.height() > 0)) throw CoefficientError("cell box is empty");
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

CoefficientField laplace(int n) {
  return CoefficientField(n, {{0, Block::identity(n)}}, [](Point) { return 0; }, "laplace");
}

CoefficientField checkerboard(double a_min, double a_max, int n_cells, const Rect& box) {
  check_cells(n_cells, box);
  const CellIndex cell{box, n_cells};
  RegionMap rm = [cell](Point p) {
    auto [ix, iy] = cell(p);
    return (ix + iy) % 2;
  };
  return CoefficientField(1, {{0, Block::identity(1, a_min)}, {1, Block::identity(1, a_max)}},
                          std::move(rm), "checkerboard");
}

CoefficientField random_spd(std::uint64_t seed, double lambda_target, double Lambda_target,
                            int n_cells, const Rect& box, int n) {
  check_cells(n_cells, box);
  if (!(lambda_target > 0) || !(Lambda_target >= std::sqrt(2.0 * n) * lambda_target))
    throw CoefficientError("random_spd needs 0 < lambda and Lambda >= sqrt(2N) lambda");
  std::mt19937_64 rng(seed);
  std::map<int, Block> blocks;
  const int m = 2 * n;
  for (int id = 0; id < n_cells * n_cells; ++id) {
    Eigen::MatrixXd g(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) g(r, c) = 2.0 * uniform01(rng) - 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd qm = qr.householderQ();
    // Eigenvalues in [lambda, ...]; the smallest is pinned to lambda, the
    // rest are drawn and then shrunk until the Frobenius norm fits Lambda.
    Eigen::VectorXd ev(m);
    ev(0) = lambda_target;
    for (int k = 1; k < m; ++k) ev(k) = lambda_target * (1.0 + 9.0 * uniform01(rng));
    const double slack2 = Lambda_target * Lambda_target - lambda_target * lambda_target;
    const double extra2 = ev.tail(m - 1).squaredNorm();
    if (extra2 > slack2) {
      // scale the excess above lambda so the sum of squares fits
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eigen::VectorXd e = ev.tail(m - 1).array() - lambda_target;
        e = (lambda_target + mid * e.array()).matrix();
        (e.squaredNorm() > slack2 ? hi : lo) = mid;
      }
      ev.tail(m - 1) = (lambda_target + lo * (ev.tail(m - 1).array() - lambda_target)).matrix();
    }
    Eigen::MatrixXd q = qm * ev.asDiagonal() * qm.transpose();
    q = (0.5 * (q + q.transpose())).eval();
    Block b;
    for (int al = 0; al < 2; ++al)
      for (int be = 0; be < 2; ++be) b.a[al][be] = q.block(al * n, be * n, n, n);
    blocks.emplace(id, std::move(b));
  }
  const CellIndex cell{box, n_cells};
  RegionMap rm = [cell, n_cells](Point p) {
    auto [ix, iy] = cell(p);
    return ix * n_cells + iy;
  };
  return CoefficientField(n, std::move(blocks), std::move(rm), "random_spd");
}

CoefficientField skew(double drift, int n_cells, const Rect& box) {
  check_cells(n_cells, box);
  Block plus = Block::identity(1);
  plus.a[0][1](0, 0) = drift;
  plus.a[1][0](0, 0) = -drift;
  const Block minus = plus.transposed();
  const CellIndex cell{box, n_cells};
  RegionMap rm = [cell](Point p) {
    auto [ix, iy] = cell(p);
    return (ix + iy) % 2;
  };
  return CoefficientField(1, {{0, plus}, {1, minus}}, std::move(rm), "skew");
}

CoefficientField read_coefficients(std::istream& in) {
  int n = 0;
  std::map<int, Block> blocks;
  RegionMap rm = [](Point) { return 0; };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    const std::string where = "coefficient file line " + std::to_string(lineno);
    if (tag == "N") {
      if (!(ls >> n) || n < 1) throw CoefficientError(where + ": bad system size");
    } else if (tag == "layout") {
      std::string kind;
      ls >> kind;
      if (kind == "uniform") {
        rm = [](Point) { return 0; };
      } else if (kind == "cells") {
        int nc = 0;
        Rect box;
        if (!(ls >> nc >> box.xmin >> box.xmax >> box.ymin >> box.ymax))
          throw CoefficientError(where + ": layout cells needs n xmin xmax ymin ymax");
        check_cells(nc, box);
        const CellIndex cell{box, nc};
        rm = [cell, nc](Point p) {
          auto [ix, iy] = cell(p);
          return ix * nc + iy;
        };
      } else {
        throw CoefficientError(where + ": unknown layout '" + kind + "'");
      }
    } else if (tag == "region") {
      if (n < 1) throw CoefficientError(where + ": region before N");
      int id = 0;
      if (!(ls >> id)) throw CoefficientError(where + ": missing region id");
      Block b;
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) {
          b.a[al][be].resize(n, n);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (!(ls >> b.a[al][be](i, j)))
                throw CoefficientError(where + ": expected " + std::to_string(4 * n * n) + " entries");
        }
      blocks[id] = std::move(b);
    } else {
      throw CoefficientError(where + ": unknown record '" + tag + "'");
    }
  }
  if (n < 1) throw CoefficientError("coefficient file: missing N");
  return CoefficientField(n, std::move(blocks), std::move(rm), "file");
}

CoefficientField read_coefficients_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CoefficientError("cannot open coefficient file " + path);
  return read_coefficients(f);
}

}  // namespace greenmat
