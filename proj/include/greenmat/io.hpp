// SPDX-License-Identifier: Apache-2.0
//
// Run configuration (INI sections, one level), CSV export/import and the
// command pipeline behind the CLI.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greenmat/analysis.hpp"
#include "greenmat/fundamental.hpp"

namespace greenmat {

/// Flat section.key -> value store with typed, key-naming accessors.
/// Every key read is recorded; keys never read are reported as unknown.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in);
  static RunConfig load(const std::string& path);

  bool has(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::string text(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  /// Like number, but the value must be > 0.
  double positive(const std::string& key, double fallback) const;
  double positive(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  /// "x y; x y; ..."
  std::vector<Point> points(const std::string& key) const;
  std::vector<std::string> words(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Throws ConfigError naming the first key that no accessor consumed.
  void check_all_used() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

/// Formats with 17 significant digits in exponent notation.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_csv(const CsvTable& t, const std::string& path);
CsvTable read_csv(const std::string& path);

/// Columns x1, x2, dx, dist_xy, G[i][j]; one row per vertex with d_x >= min_dx.
CsvTable green_table(const GreenColumn& g, const std::vector<double>& d_x, double min_dx = 0.0);
/// Rebuilds nodal values from a full table (min_dx = 0) on the same mesh.
GreenColumn green_from_table(const CsvTable& t, std::shared_ptr<const Mesh> mesh, Point y);

/// One row per reported value: id, key, value, tolerance, pass.
void write_reports_csv(const std::vector<EstimateReport>& reports, const std::string& path);

Domain build_domain(const RunConfig& cfg);
CoefficientField build_field(const RunConfig& cfg, const Domain& domain, std::uint64_t seed);
MeshOptions build_mesh_options(const RunConfig& cfg, const std::vector<Point>& focus);
FundamentalOptions build_fundamental_options(const RunConfig& cfg);

struct CommandOptions {
  std::string command;
  std::string out_dir = "out";
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Runs one command; writes artifacts under out_dir and a log to `log`.
/// Returns the process exit status: 0 iff the run succeeded and every
/// requested report passed. Module errors are printed to `err`.
int run_command(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace greenmat
