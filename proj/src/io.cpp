// SPDX-License-Identifier: Apache-2.0
#include "greenmat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "greenmat/error.hpp"

namespace greenmat {

namespace pt = boost::property_tree;

// ---------------------------------------------------------------- config

RunConfig RunConfig::parse(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("malformed config (line " + std::to_string(e.line()) + "): " + e.message());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live in a [section]");
    for (const auto& [key, value] : body) c.values_[section + "." + key] = value.data();
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse(in);
}

bool RunConfig::has(const std::string& key) const {
  const bool h = values_.count(key) > 0;
  if (h) used_[key] = true;
  return h;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? values_.at(key) : fallback;
}

std::string RunConfig::text(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing config key '" + key + "'");
  return values_.at(key);
}

namespace {

double parse_double(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0.0;
  std::string rest;
  if (!(is >> v) || (is >> rest)) throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
  if (!std::isfinite(v)) throw ConfigError("config key '" + key + "' must be finite");
  return v;
}

}  // namespace

double RunConfig::number(const std::string& key, double fallback) const {
  return has(key) ? parse_double(key, values_.at(key)) : fallback;
}

double RunConfig::number(const std::string& key) const { return parse_double(key, text(key)); }

double RunConfig::positive(const std::string& key, double fallback) const {
  const double v = number(key, fallback);
  if (!(v > 0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

double RunConfig::positive(const std::string& key) const {
  const double v = number(key);
  if (!(v > 0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

long RunConfig::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double v = parse_double(key, values_.at(key));
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::istringstream is(text(key));
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_double(key, tok));
  return out;
}

std::vector<Point> RunConfig::points(const std::string& key) const {
  std::vector<Point> out;
  std::stringstream all(text(key));
  std::string item;
  while (std::getline(all, item, ';')) {
    std::istringstream is(item);
    std::vector<double> v;
    std::string tok;
    while (is >> tok) v.push_back(parse_double(key, tok));
    if (v.empty()) continue;
    if (v.size() != 2) throw ConfigError("config key '" + key + "': each point needs two coordinates");
    out.push_back({v[0], v[1]});
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' lists no points");
  return out;
}

std::vector<std::string> RunConfig::words(const std::string& key, const std::string& fallback) const {
  std::string s = text(key, fallback);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

void RunConfig::check_all_used() const {
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
}

// ---------------------------------------------------------------- CSV

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_csv(const CsvTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
  if (!out) throw Error("failed writing " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  {
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != t.header.size()) throw Error(path + ": row width does not match header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable green_table(const GreenColumn& g, const std::vector<double>& d_x, double min_dx) {
  CsvTable t;
  t.header = {"x1", "x2", "dx", "dist_xy"};
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) t.header.push_back("G[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  const Mesh& m = *g.mesh;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (d_x[v] < min_dx) continue;
    std::vector<double> row{m.vertices[v].x, m.vertices[v].y, d_x[v], distance(m.vertices[v], g.y)};
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) row.push_back(g.at(v, i, j));
    t.rows.push_back(std::move(row));
  }
  return t;
}

GreenColumn green_from_table(const CsvTable& t, std::shared_ptr<const Mesh> mesh, Point y) {
  const std::size_t w = t.header.size();
  if (w < 5) throw Error("green table needs at least one G column");
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(w - 4))));
  if (static_cast<std::size_t>(n * n) + 4 != w) throw Error("green table width is not 4 + N^2");
  if (t.rows.size() != mesh->num_vertices()) throw Error("green table does not cover every vertex");
  GreenColumn g;
  g.mesh = std::move(mesh);
  g.y = y;
  g.n = n;
  g.h = g.mesh->h;
  const Eigen::Index nv = static_cast<Eigen::Index>(g.mesh->num_vertices());
  g.values.assign(static_cast<std::size_t>(n), Vector::Zero(nv * n));
  for (Eigen::Index v = 0; v < nv; ++v) {
    const auto& row = t.rows[static_cast<std::size_t>(v)];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.values[static_cast<std::size_t>(j)](v * n + i) = row[4 + static_cast<std::size_t>(i * n + j)];
  }
  return g;
}

void write_reports_csv(const std::vector<EstimateReport>& reports, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "id,key,value,tolerance,pass\n";
  for (const EstimateReport& r : reports)
    for (const auto& [k, v] : r.values)
      out << r.id << "," << k << "," << format_number(v) << "," << format_number(r.tolerance) << ","
          << (r.pass ? 1 : 0) << "\n";
  if (!out) throw Error("failed writing " + path);
}

// ---------------------------------------------------------------- builders

Domain build_domain(const RunConfig& cfg) {
  const std::string kind = cfg.text("domain.kind");
  if (kind == "disk") {
    const auto c = cfg.has("domain.center") ? cfg.numbers("domain.center") : std::vector<double>{0.0, 0.0};
    if (c.size() != 2) throw ConfigError("config key 'domain.center' needs two coordinates");
    const double r = cfg.positive("domain.radius", 1.0);
    const double h = cfg.positive("mesh.h");
    const long seg = cfg.integer("domain.segments", static_cast<long>(std::ceil(2 * std::numbers::pi * r / h)));
    if (seg < 3) throw ConfigError("config key 'domain.segments' must be at least 3");
    return Domain::disk({c[0], c[1]}, r, static_cast<int>(seg));
  }
  if (kind == "rectangle") {
    const auto b = cfg.numbers("domain.box");
    if (b.size() != 4) throw ConfigError("config key 'domain.box' needs xmin xmax ymin ymax");
    return Domain::rectangle({b[0], b[1], b[2], b[3]});
  }
  if (kind == "strip") return Domain::strip(cfg.positive("domain.width"), cfg.positive("domain.half_length"));
  if (kind == "graph") {
    const auto s = cfg.numbers("domain.s"), phi = cfg.numbers("domain.phi"), b = cfg.numbers("domain.box");
    if (b.size() != 4) throw ConfigError("config key 'domain.box' needs xmin xmax ymin ymax");
    return build_graph_domain(s, phi, cfg.number("domain.lipschitz", 0.0), {b[0], b[1], b[2], b[3]});
  }
  if (kind == "file") return read_domain_file(cfg.text("domain.file"));
  throw ConfigError("config key 'domain.kind': unknown kind '" + kind + "'");
}

CoefficientField build_field(const RunConfig& cfg, const Domain& domain, std::uint64_t seed) {
  const std::string kind = cfg.text("coefficients.kind", "laplace");
  const Rect bb = domain.bounding_box();
  Rect box = bb;
  if (cfg.has("coefficients.box")) {
    const auto b = cfg.numbers("coefficients.box");
    if (b.size() != 4) throw ConfigError("config key 'coefficients.box' needs xmin xmax ymin ymax");
    box = {b[0], b[1], b[2], b[3]};
  }
  const int cells = static_cast<int>(cfg.integer("coefficients.cells", 16));
  if (cells <= 0) throw ConfigError("config key 'coefficients.cells' must be positive");
  CoefficientField f = [&] {
    if (kind == "laplace") return laplace(static_cast<int>(cfg.integer("coefficients.n", 1)));
    if (kind == "checkerboard")
      return checkerboard(cfg.positive("coefficients.a_min", 1.0), cfg.positive("coefficients.a_max", 10.0), cells, box);
    if (kind == "random_spd")
      return random_spd(seed, cfg.positive("coefficients.lambda", 0.5), cfg.positive("coefficients.Lambda", 2.0), cells,
                        box, static_cast<int>(cfg.integer("coefficients.n", 1)));
    if (kind == "skew") return skew(cfg.number("coefficients.drift", 0.5), cells, box);
    if (kind == "file") return read_coefficients_file(cfg.text("coefficients.file"));
    throw ConfigError("config key 'coefficients.kind': unknown kind '" + kind + "'");
  }();
  validate_ellipticity(f);
  return f;
}

MeshOptions build_mesh_options(const RunConfig& cfg, const std::vector<Point>& focus) {
  MeshOptions o;
  o.h = cfg.positive("mesh.h");
  o.min_angle_deg = cfg.positive("mesh.min_angle", 25.0);
  const double grading = cfg.number("mesh.grading", 0.0);
  if (grading < 0) throw ConfigError("config key 'mesh.grading' must be nonnegative");
  if (grading > 0)
    o.sizing = graded_sizing(o.h, grading, cfg.positive("mesh.h_max", 8 * o.h), focus,
                             cfg.number("mesh.focus_radius", 0.0));
  return o;
}

FundamentalOptions build_fundamental_options(const RunConfig& cfg) {
  FundamentalOptions o;
  o.box_half_width = cfg.positive("fundamental.box_half_width", o.box_half_width);
  o.h = cfg.positive("fundamental.h", o.h);
  o.core_radius = cfg.positive("fundamental.core_radius", o.core_radius);
  o.grading = cfg.positive("fundamental.grading", o.grading);
  o.h_max = cfg.positive("fundamental.h_max", o.h_max);
  o.split_time = cfg.positive("fundamental.split_time", o.split_time);
  o.epsilon = cfg.positive("fundamental.epsilon", o.epsilon);
  o.max_time = cfg.positive("fundamental.max_time", o.max_time);
  return o;
}

}  // namespace greenmat
