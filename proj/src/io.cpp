#include "skofbsde/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skofbsde/errors.hpp"

namespace skofbsde {

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

std::vector<double> parse_row(const std::string& line, std::size_t expect,
                              const std::string& where) {
  const auto cells = split(line);
  if (cells.size() != expect) {
    throw ConfigError(where + ": expected " + std::to_string(expect) + " columns, got " +
                      std::to_string(cells.size()));
  }
  std::vector<double> v(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    if (!parse_double(cells[i], v[i])) throw ConfigError(where + ": not a number '" + cells[i] + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  int columns) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(columns));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (lineno == 1) {
      double probe;
      if (!parse_double(split(line).front(), probe)) continue;  // header
    }
    const auto row = parse_row(line, static_cast<std::size_t>(columns), where);
    for (int c = 0; c < columns; ++c) cols[c].push_back(row[c]);
  }
  if (cols[0].empty()) throw ConfigError(path.string() + ": no data rows");
  return cols;
}

void write_field(const std::filesystem::path& csv, const DecouplingField& f,
                 const DiagnosticsReport& report) {
  auto out = open_out(csv);
  auto grid = [&](const char* name, const std::vector<double>& g) {
    out << "# " << name;
    for (double x : g) out << ',' << format_double(x);
    out << '\n';
  };
  out << "# skofbsde-field 1\n";
  out << "# T," << format_double(f.T()) << '\n';
  grid("t_grid", f.t_grid);
  grid("x1_grid", f.x1_grid);
  grid("x2_grid", f.x2_grid);
  out << "u,u1,u2\n";
  std::string row;
  for (std::size_t k = 0; k < f.u.size(); ++k) {
    row.clear();
    row += format_double(f.u[k]);
    row += ',';
    row += format_double(f.u1[k]);
    row += ',';
    row += format_double(f.u2[k]);
    row += '\n';
    out << row;
  }
  nlohmann::json side;
  side["solver"] = to_json(f.config);
  side["diagnostics"] = to_json(report);
  side["L_g"] = f.L_g;
  side["delta_prime_sup"] = f.delta_prime_sup;
  write_json(csv.string() + ".json", side);
}

DecouplingField read_field(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open field file " + csv.string());
  const std::string where = csv.string();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# skofbsde-field 1") {
    throw ConfigError(where + ": not a field file");
  }
  auto header = [&](const char* name) {
    if (!std::getline(in, line)) throw ConfigError(where + ": truncated header");
    const std::string prefix = std::string("# ") + name + ",";
    if (line.rfind(prefix, 0) != 0) throw ConfigError(where + ": expected header " + name);
    std::vector<double> v;
    for (const auto& cell : split(line.substr(prefix.size()))) {
      double x;
      if (!parse_double(cell, x)) throw ConfigError(where + ": bad value in " + name);
      v.push_back(x);
    }
    return v;
  };
  const auto T = header("T");
  DecouplingField f;
  f.t_grid = header("t_grid");
  f.x1_grid = header("x1_grid");
  f.x2_grid = header("x2_grid");
  if (T.size() != 1 || f.t_grid.size() < 2 || f.x1_grid.size() < 3 || f.x2_grid.size() < 3) {
    throw ConfigError(where + ": grid header too short");
  }
  if (!std::getline(in, line) || trim(line) != "u,u1,u2") {
    throw ConfigError(where + ": expected column header u,u1,u2");
  }
  const std::size_t n = f.t_grid.size() * f.x1_grid.size() * f.x2_grid.size();
  f.u.resize(n);
  f.u1.resize(n);
  f.u2.resize(n);
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (k >= n) throw ConfigError(where + ": more rows than grid nodes");
    const auto v = parse_row(line, 3, where + ": row " + std::to_string(k + 1));
    f.u[k] = v[0];
    f.u1[k] = v[1];
    f.u2[k] = v[2];
    ++k;
  }
  if (k != n) throw ConfigError(where + ": fewer rows than grid nodes");
  f.config.T = T[0];
  f.config.nt = static_cast<int>(f.t_grid.size()) - 1;
  f.config.nx1 = static_cast<int>(f.x1_grid.size());
  f.config.nx2 = static_cast<int>(f.x2_grid.size());
  f.config.x1_lo = f.x1_grid.front();
  f.config.x1_hi = f.x1_grid.back();
  f.config.x2_hi = f.x2_grid.back();
  return f;
}

nlohmann::json to_json(const SolverConfig& c) {
  nlohmann::json j;
  j["T"] = c.T;
  j["nt"] = c.nt;
  j["nx1"] = c.nx1;
  j["nx2"] = c.nx2;
  if (c.x1_lo) j["x1_lo"] = *c.x1_lo;
  if (c.x1_hi) j["x1_hi"] = *c.x1_hi;
  if (c.x2_hi) j["x2_hi"] = *c.x2_hi;
  if (c.cutoff_H) j["cutoff_H"] = *c.cutoff_H;
  j["fixpoint_tol"] = c.fixpoint_tol;
  j["fixpoint_max_iter"] = c.fixpoint_max_iter;
  j["deriv_floor_eps"] = c.deriv_floor_eps;
  j["cfl"] = c.cfl;
  j["derivative_method"] = to_string(c.derivative_method);
  return j;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  const auto& d = r.values;
  nlohmann::json j;
  j["L_ux"] = d.L_ux;
  j["z_sup"] = d.z_sup;
  j["u2_sup"] = d.u2_sup;
  j["min_u1_interior"] = d.min_u1_interior;
  j["time_lip_u1"] = d.time_lip_u1;
  j["u11_sup"] = d.u11_sup;
  j["u22_sup"] = d.u22_sup;
  j["utt_sup"] = d.utt_sup;
  j["grid_tolerance"] = d.grid_tolerance;
  j["interp_tolerance"] = d.interp_tolerance;
  j["max_fixpoint_iterations"] = d.max_fixpoint_iterations;
  j["cutoff_hits"] = d.cutoff_hits;
  j["derivative_discrepancy"] = d.derivative_discrepancy;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"measured", c.measured},
                      {"bound", c.bound},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  }
  j["checks"] = checks;
  j["all_pass"] = r.all_pass;
  return j;
}

nlohmann::json to_json(const LawReport& r) {
  return {{"n", r.n},
          {"ks", r.ks},
          {"ks_pass_threshold", r.ks_pass_threshold},
          {"w1", r.w1},
          {"mean", r.mean},
          {"var", r.var},
          {"target_mean", r.target_mean},
          {"target_var", r.target_var},
          {"pass", r.pass}};
}

nlohmann::json to_json(const MartingaleReport& r) {
  nlohmann::json cps = nlohmann::json::array();
  for (int c = 0; c < kCheckpoints; ++c) {
    cps.push_back({{"t", r.t[c]},
                   {"mean_Y", r.mean_Y[c]},
                   {"band", r.band[c]},
                   {"mean_int_Z2", r.mean_int_Z2[c]},
                   {"mean_qv_Y", r.mean_qv_Y[c]}});
  }
  return {{"n", r.n},
          {"Y0", r.Y0},
          {"checkpoints", cps},
          {"band_pass", r.band_pass},
          {"qv_pass", r.qv_pass},
          {"pass", r.pass}};
}

void write_results(const std::filesystem::path& csv, const EmbeddingResult& r) {
  auto out = open_out(csv);
  out << "seed,tau_weak,tau_strong,stopped_value\n";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    out << r.seeds[i] << ',' << (i < r.tau_weak.size() ? format_double(r.tau_weak[i]) : "")
        << ',' << format_double(r.tau_strong[i]) << ',' << format_double(r.stopped_value[i])
        << '\n';
  }
}

ResultsTable read_results(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open results file " + csv.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "seed,tau_weak,tau_strong,stopped_value") {
    throw ConfigError(csv.string() + ": expected header seed,tau_weak,tau_strong,stopped_value");
  }
  ResultsTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = csv.string() + ":" + std::to_string(lineno);
    const auto cells = split(line);
    if (cells.size() != 4) throw ConfigError(where + ": expected 4 columns");
    std::uint64_t s = 0;
    const std::string sc = trim(cells[0]);
    const auto r = std::from_chars(sc.data(), sc.data() + sc.size(), s);
    if (r.ec != std::errc() || r.ptr != sc.data() + sc.size()) {
      throw ConfigError(where + ": bad seed");
    }
    double tw = 0.0, ts, sv;
    if (!trim(cells[1]).empty() && !parse_double(cells[1], tw)) throw ConfigError(where + ": bad tau_weak");
    if (!parse_double(cells[2], ts) || !parse_double(cells[3], sv)) {
      throw ConfigError(where + ": bad value");
    }
    t.seed.push_back(s);
    t.tau_weak.push_back(tw);
    t.tau_strong.push_back(ts);
    t.stopped_value.push_back(sv);
  }
  if (t.seed.empty()) throw ConfigError(csv.string() + ": no result rows");
  return t;
}

void write_path(const std::filesystem::path& csv, const FbsdePath& p) {
  auto out = open_out(csv);
  out << "t,W,X1,X2,Y,Z\n";
  for (std::size_t k = 0; k < p.t_grid.size(); ++k) {
    out << format_double(p.t_grid[k]) << ',' << format_double(p.W[k]) << ','
        << format_double(p.X1[k]) << ',' << format_double(p.X2[k]) << ','
        << format_double(p.Y[k]) << ',' << format_double(p.Z[k]) << '\n';
  }
}

void write_histogram(const std::filesystem::path& csv, const std::vector<double>& samples,
                     int bins) {
  auto out = open_out(csv);
  out << "lo,hi,count\n";
  if (samples.empty() || bins < 1) return;
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn;
  const double w = (*mx > lo ? *mx - lo : 1.0) / bins;
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>((x - lo) / w);
    count[std::min(b, count.size() - 1)]++;
  }
  for (int b = 0; b < bins; ++b) {
    out << format_double(lo + b * w) << ',' << format_double(lo + (b + 1) * w) << ','
        << count[b] << '\n';
  }
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  auto out = open_out(file);
  out << j.dump(2) << '\n';
}

}  // namespace skofbsde
