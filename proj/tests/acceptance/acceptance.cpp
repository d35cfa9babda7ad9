// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "skofbsde/coeffs.hpp"
#include "skofbsde/embed.hpp"
#include "skofbsde/fbsde.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/io.hpp"
#include "skofbsde/normal.hpp"
#include "skofbsde/parallel.hpp"
#include "skofbsde/verify.hpp"

using namespace skofbsde;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPaths = 10000;
constexpr int kSteps = 4096;
constexpr std::size_t kRoundTripPaths = 1000;
constexpr std::uint64_t kSeed = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

LipschitzMap affine(double slope) {
  return {[=](double x) { return slope * x; }, [=](double) { return slope; }, std::fabs(slope),
          true};
}

struct Case {
  std::string name;
  TargetMeasure measure;
  QuantileTransform g;
  ProcessCoefficients coeffs;
  LipschitzMap delta;
  DecouplingField field;
  double solve_seconds = 0.0;

  Case(std::string n, TargetMeasure m, TimeFunction alpha, TimeFunction beta, double floor,
       const SolverConfig& cfg = {})
      : name(std::move(n)),
        measure(m),
        g(make_g(m)),
        coeffs(ProcessCoefficients::with_default_horizon(0.0, std::move(alpha), std::move(beta),
                                                         floor, g.map.lipschitz)),
        delta(coeffs.delta_map()) {
    const auto t0 = Clock::now();
    field = solve_field(g.map, delta, cfg, coeffs.delta_prime_sup());
    solve_seconds = seconds_since(t0);
  }

  double L() const { return g.map.lipschitz; }
  double tau_bound() const { return coeffs.clock_H_inv(L() * L()); }

  EmbedSpec spec(std::size_t n = kPaths) const {
    EmbedSpec s;
    s.n_paths = n;
    s.n_steps = kSteps;
    s.seed = kSeed;
    return s;
  }
  BatchSpec batch(std::size_t n = kPaths) const {
    BatchSpec b;
    b.n_paths = n;
    b.n_steps = kSteps;
    b.seed = kSeed;
    return b;
  }
};

double max_over_nodes(const DecouplingField& f, FieldComponent c, bool interior_only,
                      const std::function<double(double, double, double)>& exact) {
  const auto& v = f.component(c);
  double e = 0.0;
  const int b = interior_only ? 1 : 0;
  for (int n = 0; n < f.layers(); ++n)
    for (int i = b; i < f.nx1() - b; ++i)
      for (int j = b; j < f.nx2() - b; ++j)
        e = std::max(e, std::fabs(v[f.index(n, i, j)] -
                                  exact(f.t_grid[n], f.x1_grid[i], f.x2_grid[j])));
  return e;
}

SolverConfig grid(int nt, int nx1, int nx2) {
  SolverConfig c;
  c.nt = nt;
  c.nx1 = nx1;
  c.nx2 = nx2;
  return c;
}

double cole_hopf_error(const DecouplingField& f, const QuantileTransform& g, double kappa) {
  const GaussHermite rule(64);
  double e = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double x1 = -2.0 + 0.01 * k;
    const double o = oracle_field(OracleKind::linear_drift, g.map.value, kappa, 1.0, 0.0, x1, 0.0, rule);
    e = std::max(e, std::fabs(eval_field(f, 0.0, x1, 0.0, FieldComponent::u) - o));
  }
  return e;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main() {
  configure_workers_from_env();
  std::printf("acceptance: N = %zu paths, n_steps = %d, seed = %llu, workers = %d\n", kPaths,
              kSteps, static_cast<unsigned long long>(kSeed), worker_count());

  // ---- 1. trivial embedding
  std::optional<Case> triv;
  EmbeddingResult triv_emb;
  {
    const auto t0 = Clock::now();
    triv.emplace("trivial", TargetMeasure::normal(0, 1), TimeFunction::constant(0),
                 TimeFunction::constant(1), 1.0);
    triv_emb = run_embedding(triv->field, triv->coeffs, triv->g.map, triv->L(), triv->spec());
    const double secs = seconds_since(t0);
    const double err = max_over_nodes(triv->field, FieldComponent::u, false,
                                      [](double, double x1, double) { return x1; });
    std::size_t ones = 0;
    for (std::size_t i = 0; i < kPaths; ++i) {
      if (std::fabs(triv_emb.tau_weak[i] - 1.0) <= 1e-9 &&
          std::fabs(triv_emb.tau_strong[i] - 1.0) <= 1e-9) {
        ++ones;
      }
    }
    report(1, "trivial embedding", err <= 1e-6 && ones == kPaths && secs < 10.0,
           fmt("sup grid error %.2e <= 1e-6; tau_weak = tau_strong = 1 (to 1e-9) on %zu/%zu "
               "paths; %.2f s < 10 s",
               err, ones, kPaths, secs));
  }

  // ---- 2. linear-drift closed form and grid convergence
  {
    const double kappa = 0.5;
    auto exact = [&](double t, double x1, double x2) { return x1 - kappa * x2 - kappa * (1 - t); };
    const auto fc = solve_field(affine(1), affine(kappa), grid(128, 129, 65), kappa);
    const auto fd = solve_field(affine(1), affine(kappa), grid(256, 257, 129), kappa);
    const double ec = max_over_nodes(fc, FieldComponent::u, true, exact);
    const double ed = max_over_nodes(fd, FieldComponent::u, true, exact);
    const bool exact_both = ec <= 1e-12 && ed <= 1e-12;
    const double lin_ratio = ed > 0 ? ec / ed : INFINITY;
    const bool lin_ok = ed <= 1e-3 && (exact_both || (lin_ratio >= 1.5 && lin_ratio <= 3.0));

    // The affine case is reproduced to rounding, so the halving is measured on the
    // Cole-Hopf field (uniform target, same kappa) as well.
    const auto g = make_g(TargetMeasure::uniform(0, 1));
    ProcessCoefficients c(0, TimeFunction::constant(kappa), TimeFunction::constant(1), 1.0, 2.0);
    const auto d = c.delta_map();
    const double e1 = cole_hopf_error(solve_field(g.map, d, grid(128, 129, 65), kappa), g, kappa);
    const double e2 = cole_hopf_error(solve_field(g.map, d, grid(256, 257, 129), kappa), g, kappa);
    const double e3 = cole_hopf_error(solve_field(g.map, d, grid(512, 513, 257), kappa), g, kappa);
    const double r1 = e1 / e2, r2 = e2 / e3;
    const bool ch_ok = r1 >= 1.5 && r1 <= 3.0 && r2 >= 1.5 && r2 <= 3.0;
    report(2, "linear-drift closed form", lin_ok && ch_ok,
           fmt("interior error %.2e at default grid (<= 1e-3), %.2e at half resolution "
               "(exact to rounding: %s); Cole-Hopf refinement ratios %.2f, %.2f in [1.5, 3]",
               ed, ec, exact_both ? "yes" : "no", r1, r2));
  }

  // ---- 3. Cole-Hopf oracle
  {
    const auto t0 = Clock::now();
    const double kappa = 0.5;
    const auto g = make_g(TargetMeasure::uniform(0, 1));
    const std::array<std::array<double, 3>, 3> probes = {{{0, 0, 0}, {0.5, 1, 0.1}, {0.9, -1.5, 0.05}}};
    const auto checks =
        validate_oracle(OracleKind::linear_drift, g.map.value, kappa, 1.0, probes, 1000000, kSeed);
    const bool oracle_ok = std::all_of(checks.begin(), checks.end(), [](auto& c) { return c.pass; });
    ProcessCoefficients c(0, TimeFunction::constant(kappa), TimeFunction::constant(1), 1.0, 2.0);
    const auto f = solve_field(g.map, c.delta_map(), SolverConfig{}, c.delta_prime_sup());
    const double err = cole_hopf_error(f, g, kappa);
    const double secs = seconds_since(t0);
    report(3, "Cole-Hopf oracle", oracle_ok && err <= 2e-3 && secs < 120.0,
           fmt("max |u(0,x1,0) - oracle| on [-2, 2] = %.2e <= 2e-3; oracle vs 1e6-sample MC "
               "within 3 s.e. on %zu probes: %s; %.2f s < 120 s",
               err, checks.size(), oracle_ok ? "yes" : "no", secs));
  }

  // ---- shared runs for the two law-transport cases
  std::optional<Case> ca, cb;
  EmbeddingResult ea, eb;
  std::vector<PathSummary> sa, sb;
  double secs_a = 0.0, secs_b = 0.0;
  {
    auto t0 = Clock::now();
    ca.emplace("uniform", TargetMeasure::uniform(0, 1), TimeFunction::constant(0.25),
               TimeFunction::constant(1.0), 1.0);
    ea = run_embedding(ca->field, ca->coeffs, ca->g.map, ca->L(), ca->spec());
    secs_a = seconds_since(t0);
    t0 = Clock::now();
    cb.emplace("normal", TargetMeasure::normal(0, 1), TimeFunction::expression("0.3*sin(t)"),
               TimeFunction::constant(1.2), 1.2);
    eb = run_embedding(cb->field, cb->coeffs, cb->g.map, cb->L(), cb->spec());
    secs_b = seconds_since(t0);
    sa = simulate_batch(ca->field, ca->g.map, ca->delta, ca->batch());
    sb = simulate_batch(cb->field, cb->g.map, cb->delta, cb->batch());
  }
  const auto st_triv = batch_stats(simulate_batch(triv->field, triv->g.map, triv->delta, triv->batch()));

  // ---- 4. Z bound
  {
    const auto g4 = make_g(TargetMeasure::normal(0, 2));
    ProcessCoefficients c4(0, TimeFunction::constant(0.3), TimeFunction::constant(1), 1.0, 5.0);
    SolverConfig cfg4;
    cfg4.nt = 512;
    const auto f4 = solve_field(g4.map, c4.delta_map(), cfg4, c4.delta_prime_sup());
    struct Row { const char* name; double z; double L; };
    const std::vector<Row> fields = {{"trivial", triv->field.diagnostics.z_sup, 1.0},
                                     {"uniform", ca->field.diagnostics.z_sup, ca->L()},
                                     {"normal/sin", cb->field.diagnostics.z_sup, cb->L()},
                                     {"N(0,4)", f4.diagnostics.z_sup, 2.0}};
    const BatchStats pa = batch_stats(sa), pb = batch_stats(sb);
    const std::vector<Row> paths = {{"trivial", st_triv.z_max, 1.0},
                                    {"uniform", pa.z_max, ca->L()},
                                    {"normal/sin", pb.z_max, cb->L()}};
    bool ok = true;
    std::string d = "z_sup - L_g:";
    for (const auto& r : fields) {
      ok = ok && r.z <= r.L + 1e-2;
      d += fmt(" %s %+.1e", r.name, r.z - r.L);
    }
    d += "; per-path max|Z| - L_g:";
    for (const auto& r : paths) {
      ok = ok && r.z <= r.L + 1e-2;
      d += fmt(" %s %+.1e", r.name, r.z - r.L);
    }
    report(4, "Z bound", ok, d + " (all <= 1e-2)");
  }

  // ---- 5. stopping-time bound
  {
    auto count = [](const EmbeddingResult& e, double bound) {
      std::size_t w = 0, s = 0;
      for (std::size_t i = 0; i < e.tau_weak.size(); ++i) {
        if (e.tau_weak[i] <= bound + 1e-6) ++w;
        if (e.tau_strong[i] <= bound + e.dr) ++s;
      }
      return std::pair{w, s};
    };
    const auto [wa, sa_] = count(ea, ca->tau_bound());
    const auto [wb, sb_] = count(eb, cb->tau_bound());
    const bool ok = wa == kPaths && sa_ == kPaths && wb == kPaths && sb_ == kPaths;
    report(5, "stopping-time bound", ok,
           fmt("uniform: weak %zu/%zu, strong %zu/%zu within H^-1(L_g^2) = %.6f; "
               "normal/sin: weak %zu/%zu, strong %zu/%zu within %.6f",
               wa, kPaths, sa_, kPaths, ca->tau_bound(), wb, kPaths, sb_, kPaths, cb->tau_bound()));
  }

  // ---- 6. law transport
  const LawReport la = law_report(ea.stopped_value, ca->measure);
  const LawReport lb = law_report(eb.stopped_value, cb->measure);
  {
    const bool ok = la.ks <= 0.02 && la.w1 <= 0.02 && lb.ks <= 0.02 && lb.w1 <= 0.02 &&
                    secs_a < 300.0 && secs_b < 300.0;
    report(6, "law transport", ok,
           fmt("uniform: KS %.4f, W1 %.4f, %.1f s; normal/sin: KS %.4f, W1 %.4f, %.1f s "
               "(limits 0.02, 0.02, 300 s)",
               la.ks, la.w1, secs_a, lb.ks, lb.w1, secs_b));
  }

  // ---- 7. weak/strong round trip
  {
    const auto ra = round_trip(ca->field, ca->coeffs, ca->g.map, ca->L(), ca->spec(kRoundTripPaths));
    const auto rb = round_trip(cb->field, cb->coeffs, cb->g.map, cb->L(), cb->spec(kRoundTripPaths));
    const bool ok = ra.mean_abs_diff <= 1e-2 && ra.max_abs_diff <= 5e-2 &&
                    rb.mean_abs_diff <= 1e-2 && rb.max_abs_diff <= 5e-2;
    report(7, "weak/strong round trip", ok,
           fmt("%zu coupled paths: uniform mean %.2e max %.2e; normal/sin mean %.2e max %.2e "
               "(limits 1e-2, 5e-2)",
               kRoundTripPaths, ra.mean_abs_diff, ra.max_abs_diff, rb.mean_abs_diff,
               rb.max_abs_diff));
  }

  // ---- 8. derivative bounds
  {
    bool ok = true;
    std::string d;
    for (Case* c : {&*ca, &*cb}) {
      const auto& fd = c->field.diagnostics;
      SolverConfig twice;
      twice.nt = 2 * c->field.config.nt;
      const auto f2 = solve_field(c->g.map, c->delta, twice, c->coeffs.delta_prime_sup());
      const double ratio = f2.diagnostics.time_lip_u1 / fd.time_lip_u1;
      const double dps = c->coeffs.delta_prime_sup();
      // u1 constant in time (g affine): both slopes are rounding noise.
      const bool flat = fd.time_lip_u1 <= 1e-9 && f2.diagnostics.time_lip_u1 <= 1e-9;
      const bool cok = fd.u2_sup <= dps + 1e-2 && fd.min_u1_interior > 0.0 &&
                       std::isfinite(fd.time_lip_u1) &&
                       (flat || (ratio <= 1.5 && ratio >= 1.0 / 1.5));
      ok = ok && cok;
      d += fmt("%s%s: u2_sup %.4f <= %.4f + 1e-2, min u1 %.2e > 0, time-Lip %.3g -> %.3g "
               "(ratio %.3f%s)",
               d.empty() ? "" : "; ", c->name.c_str(), fd.u2_sup, dps, fd.min_u1_interior,
               fd.time_lip_u1, f2.diagnostics.time_lip_u1, ratio, flat ? ", both below 1e-9" : "");
    }
    report(8, "derivative bounds", ok, d);
  }

  // ---- 9. martingale property and negative control
  {
    const auto mt = martingale_check(simulate_batch(triv->field, triv->g.map, triv->delta, triv->batch()));
    const auto ma = martingale_check(sa);
    const auto mb = martingale_check(sb);
    auto worst = [](const MartingaleReport& m) {
      double w = 0.0;
      for (int c = 0; c < kCheckpoints; ++c) {
        w = std::max(w, std::fabs(m.mean_Y[c] - m.Y0) / std::max(m.band[c], 1e-300));
      }
      return w;
    };
    DecouplingField bad = ca->field;
    for (int n = 0; n < bad.layers(); ++n) {
      for (std::size_t k = 0; k < bad.layer_size(); ++k) {
        bad.u[n * bad.layer_size() + k] += 0.05 * (bad.T() - bad.t_grid[n]);
      }
    }
    const auto eneg = strong_embed_on_W(bad, ca->coeffs, ca->L(), ca->spec());
    const LawReport ln = law_report(eneg.stopped_value, ca->measure);
    const bool neg_fails = !(ln.ks <= 0.02 && ln.w1 <= 0.02);
    const bool ok = mt.band_pass && ma.band_pass && mb.band_pass && neg_fails;
    report(9, "martingale property", ok,
           fmt("max |mean Y_t - Y_0| / band at 8 checkpoints: trivial %.2f, uniform %.2f, "
               "normal/sin %.2f (<= 1); perturbed field KS %.4f, W1 %.4f fails the law test: %s",
               worst(mt), worst(ma), worst(mb), ln.ks, ln.w1, neg_fails ? "yes" : "no"));
  }

  // ---- 10. determinism
  {
    const fs::path dir = fs::temp_directory_path() / "skofbsde_acceptance";
    fs::create_directories(dir);
    auto pipeline = [&](const fs::path& sub, int threads) {
      const int saved = omp_get_max_threads();
      omp_set_num_threads(threads);
      Case c("uniform", TargetMeasure::uniform(0, 1), TimeFunction::constant(0.25),
             TimeFunction::constant(1.0), 1.0, grid(128, 129, 65));
      const auto e = run_embedding(c.field, c.coeffs, c.g.map, c.L(), c.spec());
      auto f = c.field;
      write_field(dir / sub / "field.csv", f, field_diagnostics(f, c.L(), c.coeffs.delta_prime_sup()));
      write_results(dir / sub / "embedding.csv", e);
      omp_set_num_threads(saved);
    };
    pipeline("run1", 1);
    pipeline("run2", 1);
    pipeline("run3", 4);
    bool ok = true;
    for (const char* file : {"field.csv", "embedding.csv"}) {
      const auto a = read_all(dir / "run1" / file);
      ok = ok && !a.empty() && a == read_all(dir / "run2" / file) && a == read_all(dir / "run3" / file);
    }
    report(10, "determinism", ok,
           fmt("field.csv and embedding.csv byte-identical across 3 runs (1, 1 and 4 workers): %s",
               ok ? "yes" : "no"));
    fs::remove_all(dir);
  }

  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
