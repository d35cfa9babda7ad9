#include "skofbsde/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "skofbsde/errors.hpp"
#include "skofbsde/io.hpp"

namespace skofbsde {

namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

const json& need(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

double pos(const json& v, const std::string& where) {
  const double x = num(v, where);
  if (!(x > 0.0)) throw ConfigError(where + ": must be positive");
  return x;
}

std::int64_t integer(const json& v, const std::string& where, std::int64_t lo) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo) throw ConfigError(where + ": must be >= " + std::to_string(lo));
  return x;
}

std::string str(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> num_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(num(x, where));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  const auto full = path.is_absolute() ? path : base / path;
  if (!std::filesystem::exists(full)) throw ConfigError("file not found: " + full.string());
  return full;
}

TargetMeasure parse_measure(const json& m, const std::filesystem::path& base) {
  const std::string w = "measure";
  if (!m.is_object()) throw ConfigError(w + ": expected an object");
  const std::string kind = str(need(m, w, "kind"), w + ".kind");
  if (kind == "normal") {
    only_keys(m, w, {"kind", "mean", "sd"});
    const double mean = m.contains("mean") ? num(m["mean"], w + ".mean") : 0.0;
    const double sd = m.contains("sd") ? num(m["sd"], w + ".sd") : 1.0;
    return TargetMeasure::normal(mean, sd);
  }
  if (kind == "uniform") {
    only_keys(m, w, {"kind", "lo", "hi"});
    return TargetMeasure::uniform(num(need(m, w, "lo"), w + ".lo"),
                                  num(need(m, w, "hi"), w + ".hi"));
  }
  if (kind == "piecewise_cdf") {
    only_keys(m, w, {"kind", "x", "F", "csv"});
    if (m.contains("csv")) {
      if (m.contains("x") || m.contains("F")) {
        throw ConfigError(w + ": give either 'csv' or 'x'/'F', not both");
      }
      auto cols = read_numeric_csv(resolve(base, str(m["csv"], w + ".csv")), 2);
      return TargetMeasure::piecewise_cdf(std::move(cols[0]), std::move(cols[1]));
    }
    return TargetMeasure::piecewise_cdf(num_array(need(m, w, "x"), w + ".x"),
                                        num_array(need(m, w, "F"), w + ".F"));
  }
  if (kind == "empirical") {
    only_keys(m, w, {"kind", "samples", "csv"});
    if (m.contains("csv")) {
      if (m.contains("samples")) throw ConfigError(w + ": give either 'csv' or 'samples'");
      auto cols = read_numeric_csv(resolve(base, str(m["csv"], w + ".csv")), 1);
      return TargetMeasure::empirical(std::move(cols[0]));
    }
    return TargetMeasure::empirical(num_array(need(m, w, "samples"), w + ".samples"));
  }
  throw ConfigError(w + ".kind: unknown measure kind '" + kind + "'");
}

TimeFunction parse_time_function(const json& v, const std::string& w,
                                 const std::filesystem::path& base) {
  if (v.is_number()) return TimeFunction::constant(v.get<double>());
  if (!v.is_object()) throw ConfigError(w + ": expected a number or an object");
  const std::string kind = str(need(v, w, "kind"), w + ".kind");
  if (kind == "const") {
    only_keys(v, w, {"kind", "value"});
    return TimeFunction::constant(num(need(v, w, "value"), w + ".value"));
  }
  if (kind == "table") {
    only_keys(v, w, {"kind", "csv", "t", "value"});
    if (v.contains("csv")) {
      auto cols = read_numeric_csv(resolve(base, str(v["csv"], w + ".csv")), 2);
      return TimeFunction::table(std::move(cols[0]), std::move(cols[1]));
    }
    return TimeFunction::table(num_array(need(v, w, "t"), w + ".t"),
                               num_array(need(v, w, "value"), w + ".value"));
  }
  if (kind == "expr") {
    only_keys(v, w, {"kind", "expr"});
    return TimeFunction::expression(str(need(v, w, "expr"), w + ".expr"));
  }
  throw ConfigError(w + ".kind: unknown coefficient kind '" + kind + "'");
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base) {
  only_keys(doc, "config",
            {"spec_version", "measure", "coefficients", "solver", "simulation", "embedding",
             "output"});
  const json& ver = need(doc, "config", "spec_version");
  if (!ver.is_number_integer() || ver.get<int>() != kSpecVersion) {
    throw ConfigError("config.spec_version: expected " + std::to_string(kSpecVersion));
  }
  RunConfig rc;
  rc.source = doc;
  rc.measure = parse_measure(need(doc, "config", "measure"), base);

  const json& c = need(doc, "config", "coefficients");
  only_keys(c, "coefficients", {"G0", "alpha", "beta", "beta_floor", "T_phys", "n_quad"});
  if (c.contains("G0")) rc.coefficients.G0 = num(c["G0"], "coefficients.G0");
  if (c.contains("alpha")) {
    rc.coefficients.alpha = parse_time_function(c["alpha"], "coefficients.alpha", base);
  }
  if (c.contains("beta")) {
    rc.coefficients.beta = parse_time_function(c["beta"], "coefficients.beta", base);
  }
  if (c.contains("beta_floor")) {
    rc.coefficients.beta_floor = pos(c["beta_floor"], "coefficients.beta_floor");
  }
  if (c.contains("T_phys")) rc.coefficients.T_phys = pos(c["T_phys"], "coefficients.T_phys");
  if (c.contains("n_quad")) {
    rc.coefficients.n_quad = static_cast<int>(integer(c["n_quad"], "coefficients.n_quad", 4096));
  }

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    const std::string w = "solver";
    only_keys(s, w,
              {"T", "nt", "nx1", "nx2", "x1_lo", "x1_hi", "x2_hi", "cutoff_H", "fixpoint_tol",
               "fixpoint_max_iter", "deriv_floor_eps", "cfl", "derivative_method",
               "compare_derivatives"});
    SolverConfig& sc = rc.solver;
    if (s.contains("T")) sc.T = pos(s["T"], w + ".T");
    if (s.contains("nt")) sc.nt = static_cast<int>(integer(s["nt"], w + ".nt", 2));
    if (s.contains("nx1")) sc.nx1 = static_cast<int>(integer(s["nx1"], w + ".nx1", 3));
    if (s.contains("nx2")) sc.nx2 = static_cast<int>(integer(s["nx2"], w + ".nx2", 3));
    if (s.contains("x1_lo")) sc.x1_lo = num(s["x1_lo"], w + ".x1_lo");
    if (s.contains("x1_hi")) sc.x1_hi = num(s["x1_hi"], w + ".x1_hi");
    if (s.contains("x2_hi")) sc.x2_hi = pos(s["x2_hi"], w + ".x2_hi");
    if (s.contains("cutoff_H")) sc.cutoff_H = pos(s["cutoff_H"], w + ".cutoff_H");
    if (s.contains("fixpoint_tol")) sc.fixpoint_tol = pos(s["fixpoint_tol"], w + ".fixpoint_tol");
    if (s.contains("fixpoint_max_iter")) {
      sc.fixpoint_max_iter = static_cast<int>(integer(s["fixpoint_max_iter"], w + ".fixpoint_max_iter", 1));
    }
    if (s.contains("deriv_floor_eps")) {
      sc.deriv_floor_eps = pos(s["deriv_floor_eps"], w + ".deriv_floor_eps");
    }
    if (s.contains("cfl")) sc.cfl = pos(s["cfl"], w + ".cfl");
    if (s.contains("derivative_method")) {
      try {
        sc.derivative_method =
            derivative_method_from_string(str(s["derivative_method"], w + ".derivative_method"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(w + ".derivative_method: ") + e.what());
      }
    }
    if (s.contains("compare_derivatives")) {
      if (!s["compare_derivatives"].is_boolean()) {
        throw ConfigError(w + ".compare_derivatives: expected true or false");
      }
      rc.compare_derivatives = s["compare_derivatives"].get<bool>();
    }
  }

  if (doc.contains("simulation")) {
    const json& s = doc["simulation"];
    only_keys(s, "simulation", {"n_paths", "n_steps", "seed"});
    if (s.contains("n_paths")) {
      rc.simulation.n_paths = static_cast<std::size_t>(integer(s["n_paths"], "simulation.n_paths", 2));
    }
    if (s.contains("n_steps")) {
      rc.simulation.n_steps = static_cast<int>(integer(s["n_steps"], "simulation.n_steps", 8));
      if (rc.simulation.n_steps % 8 != 0) {
        throw ConfigError("simulation.n_steps: must be a multiple of 8");
      }
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) {
        throw ConfigError("simulation.seed: expected a non-negative integer");
      }
      rc.simulation.seed = s["seed"].get<std::uint64_t>();
    }
  }

  if (doc.contains("embedding")) {
    const json& e = doc["embedding"];
    only_keys(e, "embedding", {"K1", "K2", "roundtrip_paths"});
    if (e.contains("K1")) rc.embedding.K1 = pos(e["K1"], "embedding.K1");
    if (e.contains("K2")) rc.embedding.K2 = pos(e["K2"], "embedding.K2");
    if (e.contains("roundtrip_paths")) {
      rc.embedding.roundtrip_paths =
          static_cast<std::size_t>(integer(e["roundtrip_paths"], "embedding.roundtrip_paths", 0));
    }
  }

  rc.output_dir = base / "out";
  if (doc.contains("output")) {
    const json& o = doc["output"];
    only_keys(o, "output", {"dir"});
    if (o.contains("dir")) {
      const std::filesystem::path d(str(o["dir"], "output.dir"));
      rc.output_dir = d.is_absolute() ? d : base / d;
    }
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, std::filesystem::absolute(path).parent_path());
}

ProcessCoefficients build_coefficients(const CoefficientSpec& spec, double L_g, double T) {
  if (spec.T_phys) {
    return ProcessCoefficients(spec.G0, spec.alpha, spec.beta, spec.beta_floor, *spec.T_phys,
                               spec.n_quad);
  }
  return ProcessCoefficients::with_default_horizon(spec.G0, spec.alpha, spec.beta,
                                                   spec.beta_floor, L_g, T, spec.n_quad);
}

}  // namespace skofbsde
