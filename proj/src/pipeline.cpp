// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include "greenmat/error.hpp"
#include "greenmat/io.hpp"

namespace greenmat {

namespace {

namespace fs = std::filesystem;

// Runs job(i) for i < n on up to `threads` workers; results are written by
// index, so output order never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct Setup {
  Domain domain;
  CoefficientField field;
  std::vector<Point> sources;
  std::shared_ptr<Mesh> mesh;
  std::unique_ptr<EllipticProblem> problem;
  std::vector<double> d_x;
  std::vector<double> d_y;
  double gamma = 0.0;
};

Setup build_setup(const RunConfig& cfg, std::uint64_t seed, bool need_sources) {
  Setup s;
  s.domain = build_domain(cfg);
  s.field = build_field(cfg, s.domain, seed);
  if (need_sources) s.sources = cfg.points("sources.points");
  s.mesh = std::make_shared<Mesh>(triangulate(s.domain, build_mesh_options(cfg, s.sources)));
  assign_regions(*s.mesh, s.field);
  s.problem = std::make_unique<EllipticProblem>(s.mesh, s.field, cfg.positive("solver.tol", 1e-10));
  s.d_x = vertex_distances(*s.mesh, s.domain);
  for (Point y : s.sources) {
    if (!s.domain.contains(y)) throw DomainError("source point outside the domain");
    s.d_y.push_back(dist_to_boundary(y, s.domain));
  }
  // unbounded domains without a finite width have no gamma; only the
  // reports that need it fail
  try {
    s.gamma = compute_gamma(s.domain);
  } catch (const DomainError&) {
    s.gamma = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

double need_gamma(const Setup& s) {
  if (!std::isfinite(s.gamma)) throw DomainError("domain has neither finite area nor finite width; gamma undefined");
  return s.gamma;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

HeatKernelOptions heat_options(const RunConfig& cfg) {
  HeatKernelOptions o;
  o.epsilon = cfg.positive("time.epsilon", 1e-6);
  o.fixed_T = cfg.number("time.fixed_T", 0.0);
  if (o.fixed_T < 0) throw ConfigError("config key 'time.fixed_T' must be nonnegative");
  const std::string rule = cfg.text("time.rule", "right_endpoint");
  if (rule == "right_endpoint")
    o.rule = TimeRule::right_endpoint;
  else if (rule == "trapezoid")
    o.rule = TimeRule::trapezoid;
  else
    throw ConfigError("config key 'time.rule': unknown rule '" + rule + "'");
  return o;
}

TimeGrid heat_grid(const RunConfig& cfg, const Setup& s, double d_y, const HeatKernelOptions& o) {
  const double h = s.mesh->h;
  const double t1 = cfg.positive("time.t1", h * h / 8.0);
  const double ratio = cfg.positive("time.ratio", 1.3);
  if (!(ratio > 1)) throw ConfigError("config key 'time.ratio' must exceed 1");
  const double dt_max = cfg.has("time.dt_max") ? cfg.positive("time.dt_max") : 1.0 / (16.0 * need_gamma(s));
  const double T0 = o.fixed_T > 0 ? o.fixed_T : std::max(0.25 * d_y * d_y, t1);
  return TimeGrid::graded(t1, ratio, dt_max, T0);
}

HeatKernelRun run_heat(const RunConfig& cfg, const Setup& s, const ParabolicStepper& stepper, std::size_t k,
                       HeatKernelOptions o) {
  return heat_kernel_column(stepper, s.sources[k], s.d_y[k], heat_grid(cfg, s, s.d_y[k], o), need_gamma(s), o);
}

std::vector<GreenColumn> direct_columns(const Setup& s, const EllipticProblem& p, int threads) {
  std::vector<GreenColumn> g(s.sources.size());
  parallel_for(g.size(), threads, [&](std::size_t k) { g[k] = green_column_direct(p, s.sources[k], s.d_y[k]); });
  return g;
}

void write_reports(const std::vector<EstimateReport>& reports, const std::string& dir, std::ostream& log) {
  std::ofstream txt(path_in(dir, "reports.txt"), std::ios::binary);
  if (!txt) throw Error("cannot write " + path_in(dir, "reports.txt"));
  for (const EstimateReport& r : reports) {
    txt << format_report(r) << "\n";
    log << format_report(r) << "\n";
  }
  write_reports_csv(reports, path_in(dir, "reports.csv"));
}

// ---------------------------------------------------------------- commands

int cmd_solve(const RunConfig& cfg, const CommandOptions& opt, std::uint64_t seed, std::ostream& log) {
  const Setup s = build_setup(cfg, seed, false);
  const int n = s.field.n();
  std::vector<double> f = cfg.has("solve.f") ? cfg.numbers("solve.f") : std::vector<double>(static_cast<std::size_t>(n), 1.0);
  if (f.size() != static_cast<std::size_t>(n)) throw ConfigError("config key 'solve.f' needs one value per component");
  cfg.check_all_used();
  const Eigen::Index nv = static_cast<Eigen::Index>(s.mesh->num_vertices());
  Vector fn(nv * n);
  for (Eigen::Index v = 0; v < nv; ++v)
    for (int i = 0; i < n; ++i) fn(v * n + i) = f[static_cast<std::size_t>(i)];
  const Vector u = solve_source(*s.problem, fn);
  CsvTable t;
  t.header = {"x1", "x2", "dx"};
  for (int i = 0; i < n; ++i) t.header.push_back("u[" + std::to_string(i) + "]");
  for (Eigen::Index v = 0; v < nv; ++v) {
    const Point x = s.mesh->vertices[static_cast<std::size_t>(v)];
    std::vector<double> row{x.x, x.y, s.d_x[static_cast<std::size_t>(v)]};
    for (int i = 0; i < n; ++i) row.push_back(u(v * n + i));
    t.rows.push_back(std::move(row));
  }
  write_csv(t, path_in(opt.out_dir, "solution.csv"));
  log << "solve: " << nv << " vertices, solution.csv written\n";
  return 0;
}

int cmd_green(const RunConfig& cfg, const CommandOptions& opt, std::uint64_t seed, std::ostream& log) {
  const Setup s = build_setup(cfg, seed, true);
  const std::string route = cfg.text("solver.route", "direct");
  std::vector<GreenColumn> g;
  if (route == "direct") {
    cfg.check_all_used();
    g = direct_columns(s, *s.problem, opt.threads);
  } else if (route == "parabolic") {
    const HeatKernelOptions ho = heat_options(cfg);
    heat_grid(cfg, s, 1.0, ho);  // consume time keys before the unknown-key check
    cfg.check_all_used();
    const ParabolicStepper stepper(*s.problem);
    g.resize(s.sources.size());
    parallel_for(g.size(), opt.threads, [&](std::size_t k) { g[k] = run_heat(cfg, s, stepper, k, ho).green; });
  } else {
    throw ConfigError("config key 'solver.route': unknown route '" + route + "'");
  }
  for (std::size_t k = 0; k < g.size(); ++k)
    write_csv(green_table(g[k], s.d_x), path_in(opt.out_dir, "green_" + std::to_string(k) + ".csv"));
  log << "green: " << g.size() << " columns by the " << route << " route on " << s.mesh->num_vertices()
      << " vertices\n";
  return 0;
}

int cmd_heatkernel(const RunConfig& cfg, const CommandOptions& opt, std::uint64_t seed, std::ostream& log) {
  const Setup s = build_setup(cfg, seed, true);
  HeatKernelOptions ho = heat_options(cfg);
  heat_grid(cfg, s, 1.0, ho);
  std::vector<double> dump = cfg.has("time.dump") ? cfg.numbers("time.dump") : std::vector<double>{};
  std::sort(dump.begin(), dump.end());
  cfg.check_all_used();
  const ParabolicStepper stepper(*s.problem);
  const int n = s.field.n();
  std::vector<HeatKernelRun> runs(s.sources.size());
  std::vector<std::vector<KernelSlice>> slices(s.sources.size());
  parallel_for(runs.size(), opt.threads, [&](std::size_t k) {
    HeatKernelOptions o = ho;
    std::size_t next = 0;
    o.observer = [&](const KernelSlice& sl) {
      // first node at or after each requested time
      while (next < dump.size() && sl.t >= dump[next]) {
        if (slices[k].empty() || slices[k].back().t != sl.t) slices[k].push_back(sl);
        ++next;
      }
    };
    runs[k] = run_heat(cfg, s, stepper, k, o);
  });
  for (std::size_t k = 0; k < runs.size(); ++k) {
    CsvTable t;
    t.header = {"t", "l2_norm_squared"};
    for (std::size_t i = 0; i < runs[k].times.size(); ++i) t.rows.push_back({runs[k].times[i], runs[k].l2_norms[i]});
    write_csv(t, path_in(opt.out_dir, "heatkernel_" + std::to_string(k) + ".csv"));
    write_csv(green_table(runs[k].green, s.d_x), path_in(opt.out_dir, "green_" + std::to_string(k) + ".csv"));
    for (std::size_t j = 0; j < slices[k].size(); ++j) {
      const KernelSlice& sl = slices[k][j];
      CsvTable st;
      st.header = {"t", "x1", "x2"};
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) st.header.push_back("K[" + std::to_string(a) + "][" + std::to_string(b) + "]");
      std::vector<Vector> nodal;
      for (const Vector& v : sl.values) nodal.push_back(expand(s.problem->dofs(), v, s.mesh->num_vertices()));
      for (std::size_t v = 0; v < s.mesh->num_vertices(); ++v) {
        std::vector<double> row{sl.t, s.mesh->vertices[v].x, s.mesh->vertices[v].y};
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) row.push_back(nodal[static_cast<std::size_t>(b)](static_cast<Eigen::Index>(v) * n + a));
        st.rows.push_back(std::move(row));
      }
      write_csv(st, path_in(opt.out_dir, "slice_" + std::to_string(k) + "_" + std::to_string(j) + ".csv"));
    }
    log << "heatkernel: source " << k << " T = " << runs[k].T << " steps = " << runs[k].times.size() - 1
        << " A = " << runs[k].A << "\n";
  }
  return 0;
}

OracleGeometry oracle_geometry(const RunConfig& cfg) {
  const std::string g = cfg.text("verify.oracle", "disk");
  if (g == "disk") return OracleGeometry::disk;
  if (g == "halfplane") return OracleGeometry::halfplane;
  throw ConfigError("config key 'verify.oracle': unknown geometry '" + g + "'");
}

int cmd_verify(const RunConfig& cfg, const CommandOptions& opt, std::uint64_t seed, std::ostream& log) {
  const Setup s = build_setup(cfg, seed, true);
  const auto wanted = cfg.words("verify.reports", "oracle symmetry log_bound convolution");
  const double factor = cfg.positive("verify.sample_factor", 4.0);
  // read every key up front so a typo fails before any heavy work
  const OracleGeometry geom = oracle_geometry(cfg);
  const double oracle_tol = cfg.positive("verify.oracle_tol", 0.02);
  const double sym_tol = cfg.positive("verify.symmetry_tol", 10 * s.problem->tol());
  const double conv_tol = cfg.positive("verify.convolution_tol", 1e-8);
  const double conv_f = cfg.number("verify.convolution_f", 1.0);
  const double route_tol = cfg.positive("verify.route_tol", 0.01);
  const auto angles = cfg.has("verify.decay_angles") ? cfg.numbers("verify.decay_angles") : std::vector<double>{45, 135};
  const double r_min = cfg.positive("verify.decay_r_min", 0.41), r_max = cfg.positive("verify.decay_r_max", 13.0);
  const int per_decade = static_cast<int>(cfg.integer("verify.decay_per_decade", 10));
  const double g_lo = cfg.positive("verify.gradient_t_min", 1.0), g_hi = cfg.positive("verify.gradient_t_max", 1e3);
  const HeatKernelOptions ho = heat_options(cfg);
  const bool timed = std::any_of(wanted.begin(), wanted.end(), [](const std::string& w) { return w == "route" || w == "heat"; });
  if (timed) heat_grid(cfg, s, 1.0, ho);
  cfg.check_all_used();

  std::vector<EstimateReport> reports;
  std::vector<GreenColumn> direct;
  auto need_direct = [&]() -> const std::vector<GreenColumn>& {
    if (direct.empty()) direct = direct_columns(s, *s.problem, opt.threads);
    return direct;
  };
  for (const std::string& w : wanted) {
    if (w == "oracle") {
      const auto& g = need_direct();
      // sample policy for truncated domains: stay 4 d_x away from artificial walls
      std::vector<double> dx = s.d_x;
      for (std::size_t v = 0; v < dx.size(); ++v)
        if (s.domain.dist_to_artificial(s.mesh->vertices[v]) <= 4 * dx[v]) dx[v] = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const OracleValidation ov = validate_oracle(geom, s.sources[k]);
        EstimateReport vr;
        vr.id = "oracle_validation";
        vr.samples = "boundary points and 5-point stencils away from the source";
        vr.set("boundary_max", ov.boundary_max);
        vr.set("harmonic_residual_coarse", ov.harmonic_residual_coarse);
        vr.set("harmonic_residual_fine", ov.harmonic_residual_fine);
        vr.tolerance = 1e-12;
        vr.pass = ov.pass;
        reports.push_back(vr);
        EstimateReport r = oracle_agreement(g[k], geom, dx, oracle_tol, factor);
        if (!ov.pass) {
          r.pass = false;
          r.warnings.push_back("oracle failed self-validation");
        }
        reports.push_back(r);
      }
    } else if (w == "symmetry") {
      const EllipticProblem pt(s.mesh, transpose_field(s.field), s.problem->tol());
      reports.push_back(symmetry_defect(need_direct(), direct_columns(s, pt, opt.threads), sym_tol));
    } else if (w == "log_bound") {
      for (const GreenColumn& g : need_direct()) reports.push_back(verify_log_bound(g, s.d_x, need_gamma(s)));
    } else if (w == "convolution") {
      const Eigen::Index nv = static_cast<Eigen::Index>(s.mesh->num_vertices());
      reports.push_back(convolution_check(*s.problem, Vector::Constant(nv * s.field.n(), conv_f), conv_tol).report);
    } else if (w == "route") {
      const auto& g = need_direct();
      const ParabolicStepper stepper(*s.problem);
      std::vector<GreenColumn> gp(g.size());
      parallel_for(g.size(), opt.threads, [&](std::size_t k) { gp[k] = run_heat(cfg, s, stepper, k, ho).green; });
      for (std::size_t k = 0; k < g.size(); ++k)
        reports.push_back(column_agreement("route", gp[k], g[k], s.d_x, route_tol, factor));
    } else if (w == "decay") {
      std::vector<double> rad;
      for (double a : angles) rad.push_back(a * std::numbers::pi / 180.0);
      const MeshLocator& loc = s.problem->locator();
      for (const GreenColumn& g : need_direct())
        reports.push_back(fit_decay_exponent(ray_samples(g, s.domain, loc, rad, r_min, r_max, per_decade)));
    } else if (w == "gradient") {
      std::vector<double> th;
      for (double t = g_lo; t <= g_hi * (1 + 1e-12); t *= 1.5) th.push_back(t);
      for (const GreenColumn& g : need_direct()) reports.push_back(gradient_weak_type_profile(g, th));
    } else if (w == "heat") {
      const ParabolicStepper stepper(*s.problem);
      for (std::size_t k = 0; k < s.sources.size(); ++k) {
        const HeatKernelRun run = run_heat(cfg, s, stepper, k, ho);
        EstimateReport r;
        r.id = "heat_decay";
        r.samples = "all time nodes of the source's run";
        const double h = s.mesh->h;
        r.set("l2_window_slope", l2_window_slope(run, h * h, 0.25 * s.d_y[k] * s.d_y[k]));
        r.set("late_decay_rate", late_decay_rate(run));
        const double certified = 4.0 * s.field.lambda() * s.gamma;
        r.set("certified_rate", certified);
        r.set("mass_t1", run.mass_t1);
        r.tolerance = 0.8;
        r.pass = r.value("late_decay_rate") >= 0.8 * certified;
        reports.push_back(r);
      }
    } else {
      throw ConfigError("config key 'verify.reports': unknown report '" + w + "'");
    }
  }
  write_reports(reports, opt.out_dir, log);
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const EstimateReport& r) { return r.pass; });
  log << "verify: " << reports.size() << " reports, " << (ok ? "all pass" : "FAILURES") << "\n";
  return ok ? 0 : 1;
}

int cmd_fundamental(const RunConfig& cfg, const CommandOptions& opt, std::uint64_t seed, std::ostream& log) {
  const FundamentalOptions fo = build_fundamental_options(cfg);
  const double L = fo.box_half_width;
  Domain box = Domain::rectangle({-L, L, -L, L});
  const CoefficientField field = build_field(cfg, box, seed);
  const Point x = cfg.has("fundamental.x") ? cfg.points("fundamental.x").front() : Point{0.0, 0.0};
  const auto origin = cfg.has("fundamental.grid_origin") ? cfg.numbers("fundamental.grid_origin") : std::vector<double>{-1.6, -1.2};
  if (origin.size() != 2) throw ConfigError("config key 'fundamental.grid_origin' needs two coordinates");
  const double side = cfg.positive("fundamental.grid_side", 4.0);
  const int gn = static_cast<int>(cfg.integer("fundamental.grid_n", 128));
  const int levels = static_cast<int>(cfg.integer("fundamental.levels", 5));
  cfg.check_all_used();
  const FundamentalSolver solver(field, fo);
  const auto cols = solver.run({x});
  const FundamentalColumn& c = cols.front();
  const int n = field.n();
  std::vector<Eigen::MatrixXd> at;
  const SampleGrid grid = sample_grid({origin[0], origin[1]}, side, gn, [&](Point y) {
    at.push_back(solver.evaluate(c, y));
    return at.back()(0, 0);
  });
  CsvTable t;
  t.header = {"x1", "x2"};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t.header.push_back("Gamma[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  for (int j = 0; j < gn; ++j)
    for (int i = 0; i < gn; ++i) {
      const Point y{origin[0] + grid.spacing * (i + 0.5), origin[1] + grid.spacing * (j + 0.5)};
      std::vector<double> row{y.x, y.y};
      const Eigen::MatrixXd& m = at[static_cast<std::size_t>(j) * static_cast<std::size_t>(gn) + static_cast<std::size_t>(i)];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) row.push_back(m(a, b));
      t.rows.push_back(std::move(row));
    }
  write_csv(t, path_in(opt.out_dir, "fundamental_grid.csv"));
  EstimateReport r = mean_oscillation_profile(grid, levels, x);
  r.set("T", c.T);
  r.set("tail_estimate", c.tail_estimate);
  r.set("box_half_width", L);
  r.set("split_time", fo.split_time);
  write_reports({r}, opt.out_dir, log);
  log << "fundamental: " << solver.mesh().num_vertices() << " vertices, T = " << c.T << "\n";
  return r.pass ? 0 : 1;
}

}  // namespace

int run_command(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const std::uint64_t seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(cfg.integer("run.seed", 0));
    if (opt.threads < 1) throw ConfigError("--threads must be at least 1");
    fs::create_directories(opt.out_dir);
    if (opt.command == "solve") return cmd_solve(cfg, opt, seed, log);
    if (opt.command == "green") return cmd_green(cfg, opt, seed, log);
    if (opt.command == "heatkernel") return cmd_heatkernel(cfg, opt, seed, log);
    if (opt.command == "verify") return cmd_verify(cfg, opt, seed, log);
    if (opt.command == "fundamental") return cmd_fundamental(cfg, opt, seed, log);
    throw ConfigError("unknown command '" + opt.command + "'");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace greenmat
