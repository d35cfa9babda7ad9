#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "skofbsde/config.hpp"
#include "skofbsde/embed.hpp"
#include "skofbsde/errors.hpp"
#include "skofbsde/fbsde.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/io.hpp"
#include "skofbsde/parallel.hpp"
#include "skofbsde/verify.hpp"

namespace fs = std::filesystem;
using namespace skofbsde;

namespace {

enum Exit : int { kPass = 0, kConfig = 1, kCheck = 2, kSolver = 3, kHorizon = 4 };

struct Options {
  std::string config;
  std::string out;
  std::string field;
  std::string results;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::size_t dump_paths = 0;
};

struct Problem {
  RunConfig cfg;
  QuantileTransform g;
  std::optional<ProcessCoefficients> coeffs;
  LipschitzMap delta;
  fs::path out;
};

// verify only needs the target law, so it also works for measures the
// solver rejects (empirical).
Problem load(const Options& o, bool law_only) {
  Problem p;
  p.cfg = load_config(o.config);
  if (o.paths) p.cfg.simulation.n_paths = *o.paths;
  if (o.seed) p.cfg.simulation.seed = *o.seed;
  p.out = o.out.empty() ? p.cfg.output_dir : fs::path(o.out);
  if (law_only) return p;
  p.g = make_g(p.cfg.measure);
  for (const auto& w : p.g.warnings) std::cerr << "warning: " << w << '\n';
  if (!p.g.map.lipschitz_finite) {
    throw NonLipschitzError("g = F^{-1} o Phi is not Lipschitz for this measure");
  }
  p.coeffs.emplace(build_coefficients(p.cfg.coefficients, p.g.map.lipschitz, p.cfg.solver.T));
  p.delta = p.coeffs->delta_map();
  return p;
}

void print_diagnostics(const DiagnosticsReport& r) {
  for (const auto& c : r.checks) {
    std::printf("  %-28s measured %-12.6g bound %-12.6g %s\n", c.name.c_str(), c.measured,
                c.bound, c.pass ? "pass" : "FAIL");
  }
}

int run_solve(const Problem& p, DecouplingField* keep = nullptr) {
  DecouplingField f = solve_field(p.g.map, p.delta, p.cfg.solver, p.coeffs->delta_prime_sup());
  if (p.cfg.compare_derivatives) {
    derivative_fields(f, p.cfg.solver.derivative_method, p.g.map, p.delta, true);
  }
  DiagnosticsReport r = field_diagnostics(f, p.g.map.lipschitz, p.coeffs->delta_prime_sup());
  const fs::path csv = p.out / "field.csv";
  write_field(csv, f, r);
  std::printf("solve: field written to %s\n", csv.string().c_str());
  std::printf("  u(0,0,0) = %.10g  z_sup = %.6g  L_g = %.6g\n",
              eval_field(f, 0.0, 0.0, 0.0, FieldComponent::u), f.diagnostics.z_sup,
              p.g.map.lipschitz);
  print_diagnostics(r);
  if (keep) *keep = std::move(f);
  return r.all_pass ? kPass : kCheck;
}

DecouplingField load_field(const Problem& p, const fs::path& csv) {
  DecouplingField f = read_field(csv);
  const SolverConfig want = p.cfg.solver.resolved(p.g.map.lipschitz);
  auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(b)); };
  if (f.config.nt != want.nt || f.config.nx1 != want.nx1 || f.config.nx2 != want.nx2 ||
      !close(f.T(), want.T) || !close(f.x1_grid.front(), *want.x1_lo) ||
      !close(f.x1_grid.back(), *want.x1_hi) || !close(f.x2_grid.back(), *want.x2_hi)) {
    throw ConfigError("field file " + csv.string() + " does not match the configured grid");
  }
  f.config = want;
  f.L_g = p.g.map.lipschitz;
  f.delta_prime_sup = p.coeffs->delta_prime_sup();
  field_diagnostics(f, f.L_g, f.delta_prime_sup);
  return f;
}

int run_embed(const Problem& p, const DecouplingField& f, std::size_t dump_paths) {
  const auto& sim = p.cfg.simulation;
  const double L_g = p.g.map.lipschitz;
  EmbedSpec es;
  es.n_paths = sim.n_paths;
  es.n_steps = sim.n_steps;
  es.seed = sim.seed;
  es.K1 = p.cfg.embedding.K1;
  es.K2 = p.cfg.embedding.K2;
  const EmbeddingResult r = run_embedding(f, *p.coeffs, p.g.map, L_g, es);

  BatchSpec bs;
  bs.n_paths = sim.n_paths;
  bs.n_steps = sim.n_steps;
  bs.seed = sim.seed;
  const auto summaries = simulate_batch(f, p.g.map, p.delta, bs, true,
                                        [&](std::size_t i, const FbsdePath& path) {
                                          if (i < dump_paths) {
                                            char name[32];
                                            std::snprintf(name, sizeof name, "path_%05zu.csv", i);
                                            write_path(p.out / "paths" / name, path);
                                          }
                                        });
  const MartingaleReport mart = martingale_check(summaries);
  const BatchStats stats = batch_stats(summaries);

  const std::size_t n_rt = std::min(p.cfg.embedding.roundtrip_paths, sim.n_paths);
  nlohmann::json rt_json = nullptr;
  if (n_rt > 0) {
    EmbedSpec rs = es;
    rs.n_paths = n_rt;
    const RoundTrip rt = round_trip(f, *p.coeffs, p.g.map, L_g, rs);
    rt_json = {{"n", n_rt}, {"mean_abs_diff", rt.mean_abs_diff}, {"max_abs_diff", rt.max_abs_diff}};
  }

  const LawReport law = law_report(r.stopped_value, p.cfg.measure);
  const fs::path csv = p.out / "embedding.csv";
  write_results(csv, r);

  double tw_max = 0.0, ts_max = 0.0;
  for (double t : r.tau_weak) tw_max = std::max(tw_max, t);
  for (double t : r.tau_strong) ts_max = std::max(ts_max, t);
  const bool z_ok = stats.z_max <= L_g + kBoundTolerance;
  const bool tau_ok = tw_max <= r.tau_bound + 1e-6 && ts_max <= r.tau_bound + r.dr;

  nlohmann::json j;
  j["c"] = r.c;
  j["tau_bound"] = r.tau_bound;
  j["tau_weak_max"] = tw_max;
  j["tau_strong_max"] = ts_max;
  j["tau_bound_pass"] = tau_ok;
  j["dr"] = r.dr;
  j["K1"] = r.guards.K1;
  j["K2"] = r.guards.K2;
  j["guard_K1_fired"] = r.guard_K1;
  j["guard_K2_fired"] = r.guard_K2;
  j["clamp_steps"] = r.clamp_steps;
  j["total_steps"] = r.total_steps;
  j["clamp_warning"] = r.clamp_warning;
  j["max_identity_residual"] = r.max_identity_residual;
  j["max_inverse_defect"] = r.max_inverse_defect;
  j["path_z_max"] = stats.z_max;
  j["path_z_bound_pass"] = z_ok;
  j["path_X2_T_max"] = stats.X2_T_max;
  j["mean_backward_residual"] = stats.mean_backward_residual;
  j["max_terminal_error"] = stats.max_terminal_error;
  j["clamped_queries"] = stats.clamped;
  j["round_trip"] = rt_json;
  j["martingale"] = to_json(mart);
  j["law"] = to_json(law);
  write_json(p.out / "embedding.json", j);

  std::printf("embed: %zu paths written to %s\n", r.seeds.size(), csv.string().c_str());
  std::printf("  c = %.10g  tau bound = %.6g  max tau_weak = %.6g  max tau_strong = %.6g\n", r.c,
              r.tau_bound, tw_max, ts_max);
  std::printf("  KS = %.5f (threshold %.5f)  W1 = %.5f  %s\n", law.ks, law.ks_pass_threshold,
              law.w1, law.pass ? "pass" : "FAIL");
  std::printf("  martingale band %s, quadratic variation %s\n", mart.band_pass ? "pass" : "FAIL",
              mart.qv_pass ? "pass" : "FAIL");
  if (r.clamp_warning) std::fprintf(stderr, "warning: u1 floor active on more than 0.1%% of steps\n");
  if (r.guard_K1 + r.guard_K2 > 0) {
    std::fprintf(stderr, "error: localization guards fired (K1: %zu, K2: %zu)\n", r.guard_K1,
                 r.guard_K2);
    return kHorizon;
  }
  return law.pass && z_ok && tau_ok && mart.band_pass ? kPass : kCheck;
}

int run_verify(const Problem& p, const fs::path& results) {
  const ResultsTable t = read_results(results);
  const LawReport law = law_report(t.stopped_value, p.cfg.measure);
  write_json(p.out / "verify.json", to_json(law));
  write_histogram(p.out / "histogram.csv", t.stopped_value);
  std::printf("verify: n = %zu  KS = %.5f (threshold %.5f)  W1 = %.5f  mean %.5f/%.5f  var %.5f/%.5f  %s\n",
              law.n, law.ks, law.ks_pass_threshold, law.w1, law.mean, law.target_mean, law.var,
              law.target_var, law.pass ? "pass" : "FAIL");
  return law.pass ? kPass : kCheck;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const HorizonError& e) {
    std::cerr << "horizon error: " << e.what() << " (required T_phys >= " << e.required_horizon()
              << ")\n";
    return kHorizon;
  } catch (const LocalizationBreach& e) {
    std::cerr << "guard error: " << e.what() << '\n';
    return kHorizon;
  } catch (const ContractionFailure& e) {
    std::cerr << "solver error: " << e.what() << " at layer " << e.layer() << '\n';
    return kSolver;
  } catch (const CutoffNotPassive& e) {
    std::cerr << "solver error: " << e.what() << " (z_sup " << e.z_sup() << ", cutoff "
              << e.cutoff() << ")\n";
    return kSolver;
  } catch (const DerivativeMismatch& e) {
    std::cerr << "solver error: " << e.what() << " (discrepancy " << e.discrepancy() << " at t="
              << e.t() << ", x1=" << e.x1() << ", x2=" << e.x2() << ")\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_workers_from_env();
  CLI::App app{"Skorokhod embedding via the FBSDE decoupling field"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--out", o.out, "output directory (default: output.dir of the config)");
  };
  auto sim = [&](CLI::App* sub) {
    sub->add_option("--paths", o.paths, "number of paths (overrides the config)");
    sub->add_option("--seed", o.seed, "base seed (overrides the config)");
    sub->add_option("--dump-paths", o.dump_paths, "write the first N FBSDE paths as CSV");
  };

  auto* solve = app.add_subcommand("solve", "solve the decoupling field");
  common(solve);
  auto* embed = app.add_subcommand("embed", "simulate paths and construct the embedding");
  common(embed);
  embed->add_option("--field", o.field, "field CSV (default: <out>/field.csv)");
  sim(embed);
  auto* verify = app.add_subcommand("verify", "compare stopped values with the target law");
  common(verify);
  verify->add_option("--results", o.results, "embedding CSV (default: <out>/embedding.csv)");
  auto* all = app.add_subcommand("all", "solve, embed and verify");
  common(all);
  sim(all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  return guarded([&]() -> int {
    const Problem p = load(o, verify->parsed());
    if (solve->parsed()) return run_solve(p);
    if (embed->parsed()) {
      const fs::path fcsv = o.field.empty() ? p.out / "field.csv" : fs::path(o.field);
      const DecouplingField f = load_field(p, fcsv);
      return run_embed(p, f, o.dump_paths);
    }
    if (verify->parsed()) {
      return run_verify(p, o.results.empty() ? p.out / "embedding.csv" : fs::path(o.results));
    }
    DecouplingField f;
    const int a = run_solve(p, &f);
    const int b = run_embed(p, f, o.dump_paths);
    const int c = run_verify(p, p.out / "embedding.csv");
    for (int code : {b, a, c}) {
      if (code == kHorizon) return code;
    }
    return std::max({a, b, c});
  });
}
