// SPDX-License-Identifier: Apache-2.0
//
// Measurable checks over computed Green columns and heat-kernel runs.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "greenmat/fem.hpp"
#include "greenmat/oracles.hpp"
#include "greenmat/parabolic.hpp"

namespace greenmat {

struct EstimateReport {
  std::string id;
  std::string samples;  ///< description of the sample set
  std::vector<std::pair<std::string, double>> values;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<std::string> warnings;

  /// Throws AnalysisError if the key is missing.
  double value(const std::string& key) const;
  void set(const std::string& key, double v);
};

/// Block text: "[report <id>]", samples, "key = value" lines, pass flag.
std::string format_report(const EstimateReport& r);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Passes iff fine / coarse lies in [0.8, 1.25].
EstimateReport refinement_stability(const std::string& id, double coarse, double fine);

/// P1 interpolation of component (i, k) of a column at an arbitrary point.
double evaluate(const GreenColumn& g, const MeshLocator& locator, Point x, int i, int k);

/// Relative sup error max |G - R| / max |R| of component (0, 0) over the
/// sample policy |x - y| >= factor h, d_x >= factor h.
EstimateReport oracle_agreement(const GreenColumn& g, OracleGeometry geometry, const std::vector<double>& d_x,
                                double tolerance, double factor = 4.0);
/// Same policy, all components, against a reference column on the same mesh.
EstimateReport column_agreement(const std::string& id, const GreenColumn& g, const GreenColumn& ref,
                                const std::vector<double>& d_x, double tolerance, double factor = 4.0);

/// dist_to_boundary for every mesh vertex (0 on vertices outside the
/// open domain, e.g. exactly on the boundary).
std::vector<double> vertex_distances(const Mesh& mesh, const Domain& domain);

/// max over pairs (y_a, y_b), a != b, and components of
/// |G_{kl}(y_a, y_b) - tG_{lk}(y_b, y_a)|, where columns[b] has source y_b.
/// Also records the naive defect |G(y_a, y_b) - G(y_b, y_a)|.
/// Pass: defect <= tolerance (callers choose 10 tol for direct columns,
/// 2 (epsilon + time error) for parabolic ones).
EstimateReport symmetry_defect(const std::vector<GreenColumn>& g, const std::vector<GreenColumn>& gt,
                               double tolerance);

/// C_fit = max |G(x,y)| / (1/(gamma R^2) + ln(R/|x-y|)), R = max(d_x, d_y)/2,
/// over vertices with 4h <= |x-y| < R and d_x >= 4h. Also fits the
/// near-field slope of |G| against ln(1/|x-y|).
EstimateReport verify_log_bound(const GreenColumn& g, const std::vector<double>& d_x, double gamma);

/// The bound's denominator; exposed for evaluator checks.
double log_bound_shape(double gamma, double R, double r);

struct DecaySample {
  double r = 0.0;     ///< |x - y|
  double d_xy = 0.0;  ///< min(d_x, d_y)
  double g = 0.0;     ///< |G(x, y)|
};

/// min{1 + ln_+(d/r), (d/r)^mu}.
double min_form_bound(double d_xy, double r, double mu);

/// Regression of ln|G| on ln(d_xy / r) over the far field r > 4 d_xy:
/// mu_hat with standard error, plus the min-form constant
/// C = max g / min_form_bound(d_xy, r, mu_hat) over all samples.
/// Pass: mu_hat >= 0.05. Throws if the far-field r span is under 1.5 decades.
EstimateReport fit_decay_exponent(const std::vector<DecaySample>& samples);

/// Samples G along rays from y; keeps points with |x-y| in [r_min, r_max],
/// inside the mesh, and whose distance to artificial walls exceeds 4 d_x.
std::vector<DecaySample> ray_samples(const GreenColumn& g, const Domain& domain,
                                     const MeshLocator& locator, const std::vector<double>& angles,
                                     double r_min, double r_max, int per_decade);

/// u_conv = sum_j G(., y_j) (M f)_j over all free vertices y_j, compared
/// with solve_source(f) in the L2 norm. Pass: relative difference <= tol.
struct ConvolutionResult {
  EstimateReport report;
  Vector u_conv;  ///< nodal
  Vector u_ref;   ///< nodal
};
ConvolutionResult convolution_check(const EllipticProblem& problem, const Vector& f_nodal,
                                    double tolerance = 1e-8, int block = 256);

/// (integral over B_r(center) of |u|^p or |Du|^p)^(1/p) for a nodal field.
/// Triangles cut by the circle are split 4^depth times.
double ball_lp_norm(const Mesh& mesh, int n, const Vector& nodal, double p, Point center, double r,
                    bool differentiate, int depth = 3);

/// |A_t| = area{|DG(., y)| > t} for each threshold, and the profile
/// |A_t| t^2 / (ln t)^2. Thresholds below max(t_0, e) are excluded with a
/// warning, t_0 being where |A_t| first drops below 10% of the area.
EstimateReport gradient_weak_type_profile(const GreenColumn& g, const std::vector<double>& thresholds);

/// Regression slope of ln ||K||^2 against ln t for t in (t_lo, t_hi).
double l2_window_slope(const HeatKernelRun& run, double t_lo, double t_hi);

/// Decay rate of ||K||^2, -d ln||K||^2 / dt, by regression over the last
/// `steps` nodes.
double late_decay_rate(const HeatKernelRun& run, std::size_t steps = 10);

}  // namespace greenmat
