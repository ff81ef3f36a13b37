// SPDX-License-Identifier: Apache-2.0
#include "greenmat/fundamental.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "greenmat/error.hpp"
#include "greenmat/simd/kernels.hpp"

namespace greenmat {

namespace {

CoefficientField certify(CoefficientField f) {
  if (!f.certified()) validate_ellipticity(f);
  return f;
}

// Consistent mass on every vertex, Dirichlet ones included.
SparseMatrix full_mass(const Mesh& mesh) {
  DofMap all;
  all.n = 1;
  all.free_index.resize(mesh.num_vertices());
  std::iota(all.free_index.begin(), all.free_index.end(), 0);
  all.num_free = static_cast<int>(mesh.num_vertices());
  return mass_matrix(mesh, all);
}

// M f per component over all vertices; checks int f = 0.
Vector weighted_source(const Mesh& mesh, int n, const Vector& f_nodal, double mean_tol) {
  const Eigen::Index nv = static_cast<Eigen::Index>(mesh.num_vertices());
  if (f_nodal.size() != nv * n) throw AnalysisError("source field has the wrong size");
  const SparseMatrix m = full_mass(mesh);
  Vector mf(nv * n);
  for (int k = 0; k < n; ++k) {
    Vector fk(nv);
    for (Eigen::Index v = 0; v < nv; ++v) fk(v) = f_nodal(v * n + k);
    const Vector w = m * fk;
    const double total = w.sum();
    if (std::abs(total) > mean_tol * std::max(1.0, w.cwiseAbs().sum())) {
      std::ostringstream os;
      os << "source must integrate to zero; component " << k << " integrates to " << total;
      throw AnalysisError(os.str());
    }
    for (Eigen::Index v = 0; v < nv; ++v) mf(v * n + k) = w(v);
  }
  return mf;
}

// Remaining integral of a decaying sup-integrand E(t), from a power law
// fitted against a node at least 20% earlier: E t / (p - 1). Power laws
// bound exponential decay from above, so the estimate is conservative.
class TailEstimator {
 public:
  double add(double t, double e) {
    hist_.emplace_back(t, e);
    const auto* ref = static_cast<const std::pair<double, double>*>(nullptr);
    for (const auto& h : hist_)
      if (h.first <= t / 1.2) ref = &h;
    if (!ref || !(ref->second > 0) || !(e > 0)) return e > 0 ? kInf : 0.0;
    const double p = std::log(ref->second / e) / std::log(t / ref->first);
    if (!(p > 1.0)) return kInf;
    return e * t / (p - 1.0);
  }

 private:
  std::vector<std::pair<double, double>> hist_;
};

}  // namespace

FundamentalSolver::FundamentalSolver(CoefficientField field, const FundamentalOptions& options)
    : opt_(options) {
  const double L = opt_.box_half_width;
  if (!(L > 0) || !(opt_.h > 0)) throw DomainError("box size and mesh size must be positive");
  if (!(opt_.split_time > 0)) throw DomainError("split time must be positive");
  if (!(opt_.epsilon > 0)) throw DomainError("tail tolerance must be positive");
  const Domain box = Domain::rectangle({-L, L, -L, L});
  MeshOptions mo;
  mo.h = opt_.h;
  mo.sizing = graded_sizing(opt_.h, opt_.grading, opt_.h_max, {Point{0.0, 0.0}}, opt_.core_radius);
  field = certify(std::move(field));
  CoefficientField ft = certify(transpose_field(field));
  mesh_ = std::make_shared<Mesh>(triangulate(box, mo));
  assign_regions(*mesh_, field);
  problem_ = std::make_unique<EllipticProblem>(mesh_, ft);
  forward_ = std::make_unique<EllipticProblem>(mesh_, field);
  stepper_ = std::make_unique<ParabolicStepper>(*problem_);
  gamma_ = compute_gamma(box);
}

std::vector<FundamentalColumn> FundamentalSolver::run(const std::vector<Point>& sources) const {
  const EllipticProblem& p = *problem_;
  const Mesh& mesh = p.mesh();
  const DofMap& dofs = p.dofs();
  const int n = p.field().n();
  const double L = opt_.box_half_width;
  const double s = opt_.split_time;
  const std::size_t ns = sources.size();
  for (const Point& x : sources)
    if (std::max(std::abs(x.x), std::abs(x.y)) > 0.5 * L)
      throw DomainError("fundamental source must lie within half the box");

  // Per source: interpolation weights at x per component, core vertices.
  std::vector<std::vector<Vector>> wx(ns);
  std::vector<std::vector<int>> core(ns);
  for (std::size_t a = 0; a < ns; ++a) {
    for (int k = 0; k < n; ++k) wx[a].push_back(p.delta(sources[a], k));
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
      if (dofs.free_index[v] >= 0 && distance(mesh.vertices[v], sources[a]) <= opt_.core_radius)
        core[a].push_back(dofs.free_index[v]);
  }

  TimeGrid grid = default_grid(mesh.h, gamma_, 2.0 * s);
  grid.insert_node(s);

  // u[a][i]: transposed kernel with source x_a in component i.
  std::vector<std::vector<Vector>> u(ns), acc(ns);
  std::vector<Eigen::MatrixXd> self(ns, Eigen::MatrixXd::Zero(n, n));
  for (std::size_t a = 0; a < ns; ++a)
    for (int i = 0; i < n; ++i) {
      u[a].push_back(stepper_->project(wx[a][static_cast<std::size_t>(i)]));
      acc[a].push_back(Vector::Zero(dofs.size()));
    }

  std::vector<TailEstimator> est(ns);
  std::vector<double> tail(ns, kInf);
  std::size_t step = 1;
  double t = 0.0;
  for (;; ++step) {
    if (step >= grid.t.size()) grid.extend_to(grid.T() * 1.5);
    const double dt = grid.dt(step);
    t = grid.t[step];
    bool all_done = t > s;
    for (std::size_t a = 0; a < ns; ++a) {
      double sup = 0.0;
      for (int i = 0; i < n; ++i) {
        Vector& ui = u[a][static_cast<std::size_t>(i)];
        ui = stepper_->step(ui, dt);
        Vector& ai = acc[a][static_cast<std::size_t>(i)];
        simd::axpy(dt, ui.data(), ai.data(), static_cast<std::size_t>(ai.size()));
        if (t > s) {
          for (int k = 0; k < n; ++k) {
            const double kxx = wx[a][static_cast<std::size_t>(k)].dot(ui);
            self[a](i, k) += dt * kxx;
            double m = 0.0;
            for (int f : core[a]) m = std::max(m, std::abs(ui(f * n + k) - kxx));
            sup = std::max(sup, m);
          }
        }
      }
      if (t > s) {
        tail[a] = est[a].add(t, sup);
        if (!(tail[a] <= opt_.epsilon)) all_done = false;
      }
    }
    if (all_done) break;
    if (t > opt_.max_time) throw SolverError("fundamental tail did not settle before max_time", {});
  }

  std::vector<FundamentalColumn> out(ns);
  for (std::size_t a = 0; a < ns; ++a) {
    FundamentalColumn& c = out[a];
    c.x = sources[a];
    c.n = n;
    for (int i = 0; i < n; ++i) c.values.push_back(expand(dofs, acc[a][static_cast<std::size_t>(i)], mesh.num_vertices()));
    c.self_integral = self[a];
    c.T = t;
    c.tail_estimate = tail[a];
    c.box_half_width = L;
    c.split_time = s;
  }
  return out;
}

Eigen::MatrixXd FundamentalSolver::evaluate(const FundamentalColumn& c, Point y) const {
  const Location loc = locator().locate(y);
  if (loc.triangle < 0) throw DomainError("evaluation point is outside the box mesh");
  const auto& tri = mesh().triangles[static_cast<std::size_t>(loc.triangle)];
  Eigen::MatrixXd g = -c.self_integral;
  for (int i = 0; i < c.n; ++i)
    for (int k = 0; k < c.n; ++k)
      for (int a = 0; a < 3; ++a)
        g(i, k) += loc.bary[static_cast<std::size_t>(a)] *
                   c.values[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(tri[static_cast<std::size_t>(a)]) * c.n + k);
  return g;
}

FundamentalEval renormalized_fundamental(const FundamentalSolver& solver, Point x, Point y) {
  const auto cols = solver.run({x});
  FundamentalEval e;
  e.x = x;
  e.y = y;
  e.value = solver.evaluate(cols.front(), y);
  e.box_size = 2.0 * solver.options().box_half_width;
  e.split_time = solver.options().split_time;
  return e;
}

SampleGrid sample_grid(Point origin, double side, int n, const std::function<double(Point)>& f) {
  if (n <= 0 || !(side > 0)) throw AnalysisError("sample grid needs positive size");
  SampleGrid g;
  g.origin = origin;
  g.n = n;
  g.spacing = side / n;
  g.values.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      g.values[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          f(origin + Point{g.spacing * (i + 0.5), g.spacing * (j + 0.5)});
  return g;
}

EstimateReport mean_oscillation_profile(const SampleGrid& grid, int levels, Point exclude) {
  if (levels < 2) throw AnalysisError("mean oscillation needs at least two scales");
  if (grid.n % (1 << (levels - 1)) != 0) throw AnalysisError("grid does not divide into the finest squares");
  EstimateReport r;
  r.id = "mean_oscillation";
  r.tolerance = 0.1;
  const double side = grid.spacing * grid.n;
  std::vector<double> ln_scale, sup;
  int excluded = 0;
  for (int j = 0; j < levels; ++j) {
    const int m = 1 << j;          // squares per side
    const int pts = grid.n / m;    // samples per square side
    const double s = side / m;
    double best = 0.0;
    int kept = 0;
    for (int qy = 0; qy < m; ++qy)
      for (int qx = 0; qx < m; ++qx) {
        const Rect q{grid.origin.x + qx * s, grid.origin.x + (qx + 1) * s, grid.origin.y + qy * s,
                     grid.origin.y + (qy + 1) * s};
        if (q.contains(exclude)) {
          ++excluded;
          continue;
        }
        const auto row = [&](int b) { return &grid.values[static_cast<std::size_t>(qy * pts + b) * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(qx * pts)]; };
        const std::size_t len = static_cast<std::size_t>(pts);
        double mean = 0.0;
        for (int b = 0; b < pts; ++b) mean += simd::sum(row(b), len);
        mean /= static_cast<double>(pts) * pts;
        double osc = 0.0;
        for (int b = 0; b < pts; ++b) osc += simd::sum_abs_dev(row(b), len, mean);
        best = std::max(best, osc / (static_cast<double>(pts) * pts));
        ++kept;
      }
    if (kept == 0) {
      r.warnings.push_back("scale " + std::to_string(s) + " has no admissible square");
      continue;
    }
    ln_scale.push_back(std::log(s));
    sup.push_back(best);
    r.set("sup_scale_" + std::to_string(j), best);
  }
  if (sup.size() < 2) throw AnalysisError("mean oscillation: fewer than two usable scales");
  if (excluded > 0)
    r.warnings.push_back(std::to_string(excluded) + " squares containing the singular point were excluded");
  const LinearFit fit = fit_line(ln_scale, sup);
  r.set("slope", fit.slope);
  r.set("sup_max", *std::max_element(sup.begin(), sup.end()));
  r.set("levels", levels);
  std::ostringstream os;
  os << "dyadic squares of side " << side << " / 2^j, j < " << levels << ", " << grid.n << "^2 samples";
  r.samples = os.str();
  r.pass = fit.slope <= r.tolerance;
  return r;
}

std::vector<Eigen::VectorXd> apply_fundamental(const FundamentalSolver& solver,
                                               const std::vector<FundamentalColumn>& columns,
                                               const Vector& f_nodal, double mean_tol) {
  const Mesh& mesh = solver.mesh();
  const int n = solver.problem().field().n();
  const Vector mf = weighted_source(mesh, n, f_nodal, mean_tol);
  std::vector<Eigen::VectorXd> out;
  for (const FundamentalColumn& c : columns) {
    Eigen::VectorXd tf(n);
    // The self term multiplies int f = 0 and is dropped: the result is gauge-free.
    for (int i = 0; i < n; ++i) tf(i) = c.values[static_cast<std::size_t>(i)].dot(mf);
    out.push_back(tf);
  }
  return out;
}

ApplyResult apply_fundamental_evolution(const FundamentalSolver& solver, const Vector& f_nodal,
                                        double mean_tol) {
  const EllipticProblem& p = solver.problem();
  const Mesh& mesh = p.mesh();
  const DofMap& dofs = p.dofs();
  const int n = p.field().n();
  weighted_source(mesh, n, f_nodal, mean_tol);
  const FundamentalOptions& opt = solver.options();
  ParabolicStepper stepper(p);
  Vector u = restrict_free(dofs, f_nodal);
  const Vector mf0 = p.mass() * u;
  Vector acc = Vector::Zero(dofs.size());
  std::vector<int> core;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (dofs.free_index[v] >= 0 && norm(mesh.vertices[v]) <= opt.core_radius) core.push_back(dofs.free_index[v]);

  TimeGrid grid = default_grid(mesh.h, solver.gamma(), 2.0 * opt.split_time);
  TailEstimator est;
  double t = 0.0;
  for (std::size_t step = 1;; ++step) {
    if (step >= grid.t.size()) grid.extend_to(grid.T() * 1.5);
    const double dt = grid.dt(step);
    t = grid.t[step];
    u = stepper.step(u, dt);
    simd::axpy(dt, u.data(), acc.data(), static_cast<std::size_t>(acc.size()));
    double m = 0.0;
    for (int f : core)
      for (int k = 0; k < n; ++k) m = std::max(m, std::abs(u(f * n + k)));
    const double tail = est.add(t, m);
    if (t > opt.split_time && tail <= opt.epsilon) break;
    if (t > opt.max_time) throw SolverError("evolution tail did not settle before max_time", {});
  }
  ApplyResult r;
  r.T = t;
  r.tf = expand(dofs, acc, mesh.num_vertices());
  const double denom = std::max(mf0.norm(), 1e-300);
  r.weak_residual = (p.stiffness().matrix * acc - mf0).norm() / denom;
  return r;
}

}  // namespace greenmat
