// SPDX-License-Identifier: Apache-2.0
#include "greenmat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "greenmat/error.hpp"

namespace greenmat {

double EstimateReport::value(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  throw AnalysisError("report " + id + " has no value '" + key + "'");
}

void EstimateReport::set(const std::string& key, double v) {
  for (auto& [k, old] : values)
    if (k == key) {
      old = v;
      return;
    }
  values.emplace_back(key, v);
}

std::string format_report(const EstimateReport& r) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(16);
  os << "[report " << r.id << "]\n";
  os << "samples = " << r.samples << "\n";
  for (const auto& [k, v] : r.values) os << k << " = " << v << "\n";
  os << "tolerance = " << r.tolerance << "\n";
  for (const auto& w : r.warnings) os << "warning = " << w << "\n";
  os << "pass = " << (r.pass ? "true" : "false") << "\n";
  return os.str();
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  f.n = x.size();
  if (x.size() != y.size() || x.size() < 2) throw AnalysisError("regression needs at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw AnalysisError("regression abscissae are all equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.slope_stderr = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

EstimateReport refinement_stability(const std::string& id, double coarse, double fine) {
  EstimateReport r;
  r.id = id;
  r.samples = "one halving of h";
  r.set("coarse", coarse);
  r.set("fine", fine);
  const double ratio = fine / coarse;
  r.set("ratio", ratio);
  r.tolerance = 0.25;
  r.pass = ratio >= 0.8 && ratio <= 1.25;
  return r;
}

double evaluate(const GreenColumn& g, const MeshLocator& locator, Point x, int i, int k) {
  const Location l = locator.locate(x);
  if (l.triangle < 0) throw AnalysisError("evaluation point outside the mesh");
  const auto& tr = g.mesh->triangles[static_cast<std::size_t>(l.triangle)];
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += l.bary[static_cast<std::size_t>(a)] * g.at(static_cast<std::size_t>(tr[static_cast<std::size_t>(a)]), i, k);
  return s;
}

std::vector<double> vertex_distances(const Mesh& mesh, const Domain& domain) {
  std::vector<double> d(mesh.num_vertices(), 0.0);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.boundary_mask[v] && domain.contains(mesh.vertices[v]))
      d[v] = dist_to_boundary(mesh.vertices[v], domain);
  return d;
}

namespace {

std::string format_number_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

EstimateReport relative_sup(const std::string& id, const GreenColumn& g, const std::vector<double>& d_x,
                            double tolerance, double factor,
                            const std::function<double(std::size_t, int, int)>& ref) {
  const Mesh& m = *g.mesh;
  const double cut = factor * m.h;
  double err = 0.0, scale = 0.0;
  std::size_t used = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (distance(m.vertices[v], g.y) < cut || d_x[v] < cut) continue;
    ++used;
    for (int i = 0; i < g.n; ++i)
      for (int k = 0; k < g.n; ++k) {
        const double r = ref(v, i, k);
        err = std::max(err, std::abs(g.at(v, i, k) - r));
        scale = std::max(scale, std::abs(r));
      }
  }
  if (used == 0 || !(scale > 0)) throw AnalysisError(id + ": empty sample set");
  EstimateReport r;
  r.id = id;
  r.samples = std::to_string(used) + " vertices with |x-y| >= " + format_number_short(factor) + "h, d_x >= " +
              format_number_short(factor) + "h";
  r.set("relative_sup_error", err / scale);
  r.set("max_abs_reference", scale);
  r.tolerance = tolerance;
  r.pass = err / scale <= tolerance;
  return r;
}

}  // namespace

EstimateReport oracle_agreement(const GreenColumn& g, OracleGeometry geometry, const std::vector<double>& d_x,
                                double tolerance, double factor) {
  if (g.n != 1) throw AnalysisError("oracle comparison needs a scalar field");
  const Mesh& m = *g.mesh;
  return relative_sup(geometry == OracleGeometry::disk ? "oracle_disk" : "oracle_halfplane", g, d_x, tolerance,
                      factor, [&](std::size_t v, int, int) { return oracle_green(geometry, m.vertices[v], g.y); });
}

EstimateReport column_agreement(const std::string& id, const GreenColumn& g, const GreenColumn& ref,
                                const std::vector<double>& d_x, double tolerance, double factor) {
  if (g.mesh != ref.mesh || g.n != ref.n) throw AnalysisError(id + ": columns live on different meshes");
  return relative_sup(id, g, d_x, tolerance, factor,
                      [&](std::size_t v, int i, int k) { return ref.at(v, i, k); });
}

EstimateReport symmetry_defect(const std::vector<GreenColumn>& g, const std::vector<GreenColumn>& gt,
                               double tolerance) {
  if (g.size() != gt.size() || g.empty()) throw AnalysisError("symmetry check needs matching column sets");
  const Mesh* mesh = g[0].mesh.get();
  for (std::size_t a = 0; a < g.size(); ++a)
    if (g[a].mesh.get() != mesh || gt[a].mesh.get() != mesh)
      throw AnalysisError("symmetry check: columns live on different meshes");
  const MeshLocator loc(*mesh);
  const int n = g[0].n;
  double defect = 0.0, naive = 0.0, scale = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = 0; b < g.size(); ++b) {
      if (a == b) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double gab = evaluate(g[b], loc, g[a].y, k, l);
          const double tba = evaluate(gt[a], loc, g[b].y, l, k);
          const double gba = evaluate(g[a], loc, g[b].y, k, l);
          defect = std::max(defect, std::abs(gab - tba));
          naive = std::max(naive, std::abs(gab - gba));
          scale = std::max(scale, std::abs(gab));
        }
    }
  EstimateReport r;
  r.id = "symmetry";
  r.samples = std::to_string(g.size()) + " sources, all ordered pairs";
  r.set("defect", defect);
  r.set("naive_defect", naive);
  r.set("max_abs_G", scale);
  r.tolerance = tolerance;
  r.pass = defect <= tolerance;
  return r;
}

double log_bound_shape(double gamma, double R, double r) { return 1.0 / (gamma * R * R) + std::log(R / r); }

EstimateReport verify_log_bound(const GreenColumn& g, const std::vector<double>& d_x, double gamma) {
  const Mesh& m = *g.mesh;
  const double h = m.h;
  double c_fit = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const double r = distance(m.vertices[v], g.y);
    const double R = 0.5 * std::max(d_x[v], g.d_y);
    if (r < 4 * h || r >= R || d_x[v] < 4 * h) continue;
    const double val = g.norm_at(v);
    c_fit = std::max(c_fit, val / log_bound_shape(gamma, R, r));
    lx.push_back(std::log(1.0 / r));
    ly.push_back(val);
  }
  if (lx.size() < 2) throw AnalysisError("log bound: no admissible samples");
  EstimateReport r;
  r.id = "log_bound";
  r.samples = std::to_string(lx.size()) + " vertices with 4h <= |x-y| < max(d_x,d_y)/2, d_x >= 4h";
  r.set("C_fit", c_fit);
  r.set("near_field_slope", fit_line(lx, ly).slope);
  r.set("gamma", gamma);
  r.pass = std::isfinite(c_fit);
  return r;
}

double min_form_bound(double d_xy, double r, double mu) {
  return std::min(1.0 + std::max(std::log(d_xy / r), 0.0), std::pow(d_xy / r, mu));
}

EstimateReport fit_decay_exponent(const std::vector<DecaySample>& s) {
  std::vector<double> lx, ly;
  double rmin = kInf, rmax = 0.0;
  for (const DecaySample& d : s) {
    if (!(d.r > 4.0 * d.d_xy) || !(d.g > 0)) continue;
    lx.push_back(std::log(d.d_xy / d.r));
    ly.push_back(std::log(d.g));
    rmin = std::min(rmin, d.r);
    rmax = std::max(rmax, d.r);
  }
  if (lx.size() < 3 || rmax / rmin < std::pow(10.0, 1.5))
    throw AnalysisError("decay fit: far-field samples span less than 1.5 decades");
  const LinearFit f = fit_line(lx, ly);
  double c = 0.0;
  for (const DecaySample& d : s) c = std::max(c, d.g / min_form_bound(d.d_xy, d.r, f.slope));
  EstimateReport r;
  r.id = "decay_exponent";
  r.samples = std::to_string(lx.size()) + " far-field samples (|x-y| > 4 d_xy), r in [" +
              std::to_string(rmin) + ", " + std::to_string(rmax) + "]";
  r.set("mu_hat", f.slope);
  r.set("mu_stderr", f.slope_stderr);
  r.set("C_min_form", c);
  r.set("far_samples", static_cast<double>(lx.size()));
  r.tolerance = 0.05;
  r.pass = f.slope >= 0.05;
  return r;
}

std::vector<DecaySample> ray_samples(const GreenColumn& g, const Domain& domain, const MeshLocator& locator,
                                     const std::vector<double>& angles, double r_min, double r_max,
                                     int per_decade) {
  std::vector<DecaySample> out;
  const int count = static_cast<int>(std::ceil(std::log10(r_max / r_min) * per_decade));
  for (double th : angles)
    for (int i = 0; i <= count; ++i) {
      const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / count);
      const Point x = g.y + r * Point{std::cos(th), std::sin(th)};
      if (!domain.contains(x)) continue;
      const double dx = dist_to_boundary(x, domain);
      if (!(domain.dist_to_artificial(x) > 4.0 * dx)) continue;
      if (locator.locate(x).triangle < 0) continue;
      double s = 0.0;
      for (int k = 0; k < g.n; ++k)
        for (int c = 0; c < g.n; ++c) s += std::pow(evaluate(g, locator, x, c, k), 2);
      out.push_back({r, std::min(dx, g.d_y), std::sqrt(s)});
    }
  return out;
}

ConvolutionResult convolution_check(const EllipticProblem& p, const Vector& f, double tolerance, int block) {
  const Mesh& m = p.mesh();
  const DofMap& dofs = p.dofs();
  // weights w_j f(y_j) as the consistent load
  Vector load = Vector::Zero(dofs.size());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.triangle_area(t);
    const auto& tr = m.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < dofs.n; ++c) {
        const int r = dofs.dof(tr[static_cast<std::size_t>(a)], c);
        if (r < 0) continue;
        for (int b = 0; b < 3; ++b)
          load(r) += area / 12.0 * (a == b ? 2.0 : 1.0) * f(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(b)]) * dofs.n + c);
      }
  }
  Vector u = Vector::Zero(dofs.size());
  const int n = dofs.size();
  for (int j0 = 0; j0 < n; j0 += block) {
    const int nb = std::min(block, n - j0);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, nb);
    for (int c = 0; c < nb; ++c) e(j0 + c, c) = 1.0;
    const Eigen::MatrixXd cols = p.solver().solve(e, p.tol());  // Green columns at vertices j0..j0+nb
    u += cols * load.segment(j0, nb);
  }
  ConvolutionResult res;
  res.u_conv = expand(dofs, u, m.num_vertices());
  res.u_ref = solve_source(p, f);
  const double diff = std::sqrt(l2_norm_squared(m, dofs.n, res.u_conv - res.u_ref));
  const double ref = std::sqrt(l2_norm_squared(m, dofs.n, res.u_ref));
  res.report.id = "convolution";
  res.report.samples = std::to_string(dofs.num_free) + " free vertices as sources";
  res.report.set("relative_l2_difference", ref > 0 ? diff / ref : diff);
  res.report.tolerance = tolerance;
  res.report.pass = (ref > 0 ? diff / ref : diff) <= tolerance;
  return res;
}

namespace {

double point_triangle_distance(Point c, const std::array<Point, 3>& p) {
  const double o0 = orient(p[0], p[1], c), o1 = orient(p[1], p[2], c), o2 = orient(p[2], p[0], c);
  if (o0 >= 0 && o1 >= 0 && o2 >= 0) return 0.0;
  return std::min({point_segment_distance(c, p[0], p[1]), point_segment_distance(c, p[1], p[2]),
                   point_segment_distance(c, p[2], p[0])});
}

// Integral over (sub)triangle b (barycentric corners in the parent) of
// |value|^p restricted to the ball, by recursive splitting.
template <class F>
double ball_integral(const std::array<Point, 3>& parent, const std::array<Eigen::Vector3d, 3>& b,
                     double parent_area, Point c, double r, int depth, const F& integrand) {
  auto to_xy = [&](const Eigen::Vector3d& w) {
    return Point{w(0) * parent[0].x + w(1) * parent[1].x + w(2) * parent[2].x,
                 w(0) * parent[0].y + w(1) * parent[1].y + w(2) * parent[2].y};
  };
  const std::array<Point, 3> q{to_xy(b[0]), to_xy(b[1]), to_xy(b[2])};
  const double area = 0.5 * std::abs(orient(q[0], q[1], q[2]));
  if (point_triangle_distance(c, q) >= r) return 0.0;
  const bool inside = distance(q[0], c) <= r && distance(q[1], c) <= r && distance(q[2], c) <= r;
  if (depth == 0 || (inside && depth <= 1)) {
    const Eigen::Vector3d w = (b[0] + b[1] + b[2]) / 3.0;
    if (!inside && distance(to_xy(w), c) > r) return 0.0;
    return area * integrand(w);
  }
  const Eigen::Vector3d m01 = 0.5 * (b[0] + b[1]), m12 = 0.5 * (b[1] + b[2]), m20 = 0.5 * (b[2] + b[0]);
  return ball_integral(parent, {b[0], m01, m20}, parent_area, c, r, depth - 1, integrand) +
         ball_integral(parent, {m01, b[1], m12}, parent_area, c, r, depth - 1, integrand) +
         ball_integral(parent, {m20, m12, b[2]}, parent_area, c, r, depth - 1, integrand) +
         ball_integral(parent, {m01, m12, m20}, parent_area, c, r, depth - 1, integrand);
}

}  // namespace

double ball_lp_norm(const Mesh& m, int n, const Vector& u, double p, Point center, double r, bool differentiate,
                    int depth) {
  if (!(p >= 1.0)) throw AnalysisError("ball norm needs p >= 1");
  std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> grads;
  if (differentiate) grads = triangle_gradients(m, n, u);
  const std::array<Eigen::Vector3d, 3> unit{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                            Eigen::Vector3d(0, 0, 1)};
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tr = m.triangles[t];
    const std::array<Point, 3> q{m.vertices[static_cast<std::size_t>(tr[0])], m.vertices[static_cast<std::size_t>(tr[1])],
                                 m.vertices[static_cast<std::size_t>(tr[2])]};
    if (point_triangle_distance(center, q) >= r) continue;
    if (differentiate) {
      const double gp = std::pow(grads[t].norm(), p);
      s += ball_integral(q, unit, 0.0, center, r, depth, [gp](const Eigen::Vector3d&) { return gp; });
    } else {
      s += ball_integral(q, unit, 0.0, center, r, depth, [&](const Eigen::Vector3d& w) {
        double v2 = 0.0;
        for (int c = 0; c < n; ++c) {
          double v = 0.0;
          for (int a = 0; a < 3; ++a) v += w(a) * u(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(a)]) * n + c);
          v2 += v * v;
        }
        return std::pow(std::sqrt(v2), p);
      });
    }
  }
  return std::pow(s, 1.0 / p);
}

EstimateReport gradient_weak_type_profile(const GreenColumn& g, const std::vector<double>& thresholds) {
  const Mesh& m = *g.mesh;
  std::vector<double> mag(m.num_triangles(), 0.0);
  for (int k = 0; k < g.n; ++k) {
    const auto grads = triangle_gradients(m, g.n, g.values[static_cast<std::size_t>(k)]);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) mag[t] += grads[t].squaredNorm();
  }
  for (double& v : mag) v = std::sqrt(v);
  const double total = m.total_area();
  auto area_above = [&](double t) {
    double a = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i)
      if (mag[i] > t) a += m.triangle_area(i);
    return a;
  };
  // t_0: where |A_t| first drops below 10% of the area
  std::vector<std::size_t> order(mag.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
  double acc = 0.0, t0 = 0.0;
  for (std::size_t i : order) {
    acc += m.triangle_area(i);
    if (acc >= 0.1 * total) {
      t0 = mag[i];
      break;
    }
  }
  EstimateReport r;
  r.id = "gradient_weak_type";
  const double lo = std::max(t0, std::numbers::e);
  double worst = 0.0, prev_area = kInf, tmin = kInf, tmax = 0.0;
  bool monotone = true;
  std::vector<double> sorted = thresholds;
  std::sort(sorted.begin(), sorted.end());
  int used = 0;
  for (double t : sorted) {
    const double a = area_above(t);
    if (a > prev_area) monotone = false;
    prev_area = a;
    if (t <= lo) {
      r.warnings.push_back("threshold " + std::to_string(t) + " below max(t0, e) excluded");
      continue;
    }
    ++used;
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    const double lt = std::log(t);
    worst = std::max(worst, a * t * t / (lt * lt));
  }
  r.samples = std::to_string(used) + " thresholds in [" + std::to_string(tmin) + ", " + std::to_string(tmax) + "]";
  r.set("t0", t0);
  r.set("profile_max", worst);
  r.set("decades", used > 0 ? std::log10(tmax / tmin) : 0.0);
  r.set("monotone", monotone ? 1.0 : 0.0);
  r.pass = monotone && used > 0 && tmax / tmin >= 10.0 * (1 - 1e-12) && std::isfinite(worst);
  return r;
}

double l2_window_slope(const HeatKernelRun& run, double t_lo, double t_hi) {
  std::vector<double> x, y;
  for (std::size_t i = 1; i < run.times.size(); ++i)
    if (run.times[i] > t_lo && run.times[i] < t_hi && run.l2_norms[i] > 0) {
      x.push_back(std::log(run.times[i]));
      y.push_back(std::log(run.l2_norms[i]));
    }
  return fit_line(x, y).slope;
}

double late_decay_rate(const HeatKernelRun& run, std::size_t steps) {
  if (run.times.size() < steps + 1) throw AnalysisError("run too short for a late-time rate");
  std::vector<double> x, y;
  for (std::size_t i = run.times.size() - steps; i < run.times.size(); ++i) {
    x.push_back(run.times[i]);
    y.push_back(std::log(run.l2_norms[i]));
  }
  return -fit_line(x, y).slope;
}

}  // namespace greenmat
