#include "skofbsde/embed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skofbsde/errors.hpp"
#include "skofbsde/rng.hpp"
#include "skofbsde/stats.hpp"

namespace skofbsde {

namespace {

constexpr std::uint64_t kStrongTag = 0x5354524f4e47ULL;
constexpr std::uint64_t kExtensionTag = 0x455854454e44ULL;

void require_unit_horizon(const DecouplingField& f) {
  if (std::fabs(f.T() - 1.0) > 1e-12) {
    throw ConfigError("embedding requires a field solved with T = 1");
  }
}

// Position of level h on the piecewise-linear path X2: returns (k, w) with
// X2 crossing h in [t_k, t_{k+1}] at fraction w. Levels above X2_T map to the end.
struct Crossing {
  std::size_t k;
  double w;
};

Crossing locate_level(const std::vector<double>& X2, double h, std::size_t from) {
  const std::size_t n = X2.size() - 1;
  if (h <= X2[0]) return {0, 0.0};
  std::size_t k = from;
  while (k < n && X2[k + 1] < h) ++k;
  if (k >= n) return {n - 1, 1.0};
  const double span = X2[k + 1] - X2[k];
  const double w = span > 0.0 ? std::clamp((h - X2[k]) / span, 0.0, 1.0) : 1.0;
  return {k, w};
}

double at(const std::vector<double>& v, Crossing c) {
  return v[c.k] + c.w * (v[c.k + 1] - v[c.k]);
}

}  // namespace

ClockGrid make_clock_grid(const ProcessCoefficients& c, double r_max, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("make_clock_grid: n_steps must be >= 1");
  if (!(r_max > 0.0)) throw std::invalid_argument("make_clock_grid: r_max must be positive");
  if (r_max > c.T_phys() * (1.0 + 1e-12)) {
    throw HorizonError("clock grid extends beyond the coefficient horizon", r_max);
  }
  ClockGrid g;
  g.dr = r_max / n_steps;
  const auto n = static_cast<std::size_t>(n_steps) + 1;
  g.r.resize(n);
  g.beta.resize(n);
  g.H.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.r[i] = i + 1 == n ? std::min(r_max, c.T_phys()) : static_cast<double>(i) * g.dr;
    g.beta[i] = c.beta(g.r[i]);
    g.H[i] = c.clock_H(g.r[i]);
  }
  return g;
}

Guards default_guards(const ProcessCoefficients& c, double L_g) {
  Guards gd;
  gd.K1 = std::min(2.0 * c.clock_H_inv(L_g * L_g), c.T_phys());
  double bmax = 0.0;
  const int probes = 4096;
  for (int i = 0; i <= probes; ++i) {
    bmax = std::max(bmax, std::fabs(c.beta(gd.K1 * i / probes)));
  }
  gd.K2 = 10.0 * std::sqrt(gd.K1) * bmax;
  return gd;
}

WeakEmbedding weak_embed(const FbsdePath& p, const ProcessCoefficients& c, const LipschitzMap& g,
                         const ClockGrid& grid, std::uint64_t extension_key, int inverse_stride) {
  if (std::fabs(p.t_grid.back() - 1.0) > 1e-12) {
    throw ConfigError("weak_embed: path must live on [0, 1]");
  }
  WeakEmbedding e;
  const double X2_0 = p.X2.front();
  std::vector<double> X2(p.X2.size());
  for (std::size_t k = 0; k < X2.size(); ++k) X2[k] = p.X2[k] - X2_0;
  e.tau_weak = c.clock_H_inv(X2.back());

  const int n = grid.n_steps();
  e.dB.assign(static_cast<std::size_t>(n), 0.0);
  NormalStream ext(extension_key);
  double beta_dB = 0.0;
  Crossing prev = locate_level(X2, 0.0, 0);
  double Y_prev = at(p.Y, prev);
  for (int i = 0; i < n; ++i) {
    const double r0 = grid.r[i], r1 = grid.r[i + 1];
    double inc = 0.0;
    if (r0 < e.tau_weak) {
      const double r_end = std::min(r1, e.tau_weak);
      const double h = r_end >= e.tau_weak ? X2.back() : c.clock_H(r_end);
      const Crossing cr = locate_level(X2, h, prev.k);
      const double Y1 = at(p.Y, cr);
      inc = (Y1 - Y_prev) / grid.beta[i];
      beta_dB += grid.beta[i] * inc;
      prev = cr;
      Y_prev = Y1;
    }
    const double beyond = r1 - std::max(r0, e.tau_weak);
    if (beyond > 0.0) inc += std::sqrt(beyond) * ext.next_normal();
    e.dB[i] = inc;
  }
  e.stopped_value = p.Y.front() + c.delta_hat(e.tau_weak) + beta_dB;
  e.identity_residual = std::fabs(e.stopped_value - g(p.X1.back()));

  const auto stride = static_cast<std::size_t>(std::max(1, inverse_stride));
  for (std::size_t k = 0; k < X2.size(); k += stride) {
    const double h = c.clock_H(c.clock_H_inv(X2[k]));
    const Crossing cr = locate_level(X2, h, 0);
    e.inverse_defect = std::max(e.inverse_defect, std::fabs(at(p.t_grid, cr) - p.t_grid[k]));
  }
  return e;
}

StrongStop strong_stopping_time(const DecouplingField& f, const ClockGrid& grid,
                                std::span<const double> dB, double K2, double eps, double x1_0,
                                bool keep_paths) {
  const int n = grid.n_steps();
  if (dB.size() < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("strong_stopping_time: fewer increments than grid steps");
  }
  StrongStop s;
  double sigma = 0.0, Sigma = x1_0;
  if (keep_paths) {
    s.sigma_path.push_back(sigma);
    s.Sigma_path.push_back(Sigma);
  }
  for (int i = 0; i < n; ++i) {
    ++s.steps;
    const FieldSample fs = eval_u_u1(f, std::min(sigma, f.T()), Sigma, grid.H[i]);
    if (fs.clamped) ++s.box_queries;
    double z = fs.u1;
    if (z < eps) {
      z = eps;
      ++s.clamp_steps;
    }
    const double b = grid.beta[i];
    const double rate = b * b / (z * z);
    const double dsig = rate * grid.dr;
    const double sig_new = sigma + dsig;
    const double Sig_new = Sigma + b / z * dB[i];
    if (sig_new >= 1.0) {
      const double theta = std::clamp((1.0 - sigma) / dsig, 0.0, 1.0);
      s.tau = grid.r[i] + theta * grid.dr;
      s.beta_dB += b * theta * dB[i];
      s.reached = true;
      if (keep_paths) {
        s.sigma_path.push_back(1.0);
        s.Sigma_path.push_back(Sigma + theta * (Sig_new - Sigma));
      }
      return s;
    }
    s.beta_dB += b * dB[i];
    sigma = sig_new;
    Sigma = Sig_new;
    if (keep_paths) {
      s.sigma_path.push_back(sigma);
      s.Sigma_path.push_back(Sigma);
    }
    if (std::fabs(Sigma) >= K2) {
      s.tau = grid.r[i + 1];
      s.guard = GuardFired::K2;
      return s;
    }
  }
  s.tau = grid.r_max();
  s.guard = GuardFired::K1;
  return s;
}

std::uint64_t strong_stream_key(std::uint64_t path_seed) noexcept {
  return splitmix64_mix(path_seed ^ kStrongTag);
}

std::uint64_t extension_stream_key(std::uint64_t path_seed) noexcept {
  return splitmix64_mix(path_seed ^ kExtensionTag);
}

namespace {

struct Prepared {
  Guards guards;
  ClockGrid grid;
  double c;
  double tau_bound;
};

Prepared prepare(const DecouplingField& f, const ProcessCoefficients& c, double L_g,
                 const EmbedSpec& spec) {
  require_unit_horizon(f);
  if (spec.n_steps < 1) throw ConfigError("embedding: n_steps must be >= 1");
  Prepared p;
  p.guards = default_guards(c, L_g);
  if (spec.K1) p.guards.K1 = *spec.K1;
  if (spec.K2) p.guards.K2 = *spec.K2;
  if (!(p.guards.K1 > 0.0) || !(p.guards.K2 > 0.0)) {
    throw ConfigError("embedding: guards K1, K2 must be positive");
  }
  p.grid = make_clock_grid(c, p.guards.K1, spec.n_steps);
  p.c = eval_field(f, 0.0, 0.0, 0.0, FieldComponent::u);
  p.tau_bound = c.clock_H_inv(L_g * L_g);
  return p;
}

template <class Body>
void for_paths(std::size_t n_paths, bool use_parallel, Body&& body) {
  const auto n = static_cast<long long>(n_paths);
  if (use_parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
}

struct StrongOutcome {
  double tau, value;
  GuardFired guard;
  std::size_t clamp_steps, steps;
};

StrongOutcome strong_on_fresh_W(const DecouplingField& f, const ProcessCoefficients& c,
                                const Prepared& pr, std::uint64_t path_seed) {
  const double sdr = std::sqrt(pr.grid.dr);
  std::vector<double> dW(static_cast<std::size_t>(pr.grid.n_steps()));
  NormalStream rng(strong_stream_key(path_seed));
  for (double& x : dW) x = sdr * rng.next_normal();
  const StrongStop s =
      strong_stopping_time(f, pr.grid, dW, pr.guards.K2, f.config.deriv_floor_eps);
  return {s.tau, pr.c + c.delta_hat(s.tau) + s.beta_dB, s.guard, s.clamp_steps, s.steps};
}

void finish(EmbeddingResult& r, const std::vector<StrongOutcome>& out) {
  r.tau_strong.resize(out.size());
  r.stopped_value.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    r.tau_strong[i] = out[i].tau;
    r.stopped_value[i] = out[i].value;
    if (out[i].guard == GuardFired::K1) ++r.guard_K1;
    if (out[i].guard == GuardFired::K2) ++r.guard_K2;
    r.clamp_steps += out[i].clamp_steps;
    r.total_steps += out[i].steps;
  }
  r.clamp_warning = r.total_steps > 0 &&
                    static_cast<double>(r.clamp_steps) >
                        kClampWarnShare * static_cast<double>(r.total_steps);
}

}  // namespace

EmbeddingResult strong_embed_on_W(const DecouplingField& f, const ProcessCoefficients& c,
                                  double L_g, const EmbedSpec& spec, bool use_parallel) {
  const Prepared pr = prepare(f, c, L_g, spec);
  EmbeddingResult r;
  r.c = pr.c;
  r.tau_bound = pr.tau_bound;
  r.dr = pr.grid.dr;
  r.guards = pr.guards;
  r.seeds.resize(spec.n_paths);
  std::vector<StrongOutcome> out(spec.n_paths);
  for_paths(spec.n_paths, use_parallel, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(spec.seed, i);
    r.seeds[i] = s;
    out[i] = strong_on_fresh_W(f, c, pr, s);
  });
  finish(r, out);
  return r;
}

EmbeddingResult run_embedding(const DecouplingField& f, const ProcessCoefficients& c,
                              const LipschitzMap& g, double L_g, const EmbedSpec& spec,
                              bool use_parallel) {
  const Prepared pr = prepare(f, c, L_g, spec);
  EmbeddingResult r;
  r.c = pr.c;
  r.tau_bound = pr.tau_bound;
  r.dr = pr.grid.dr;
  r.guards = pr.guards;
  r.seeds.resize(spec.n_paths);
  r.tau_weak.resize(spec.n_paths);
  std::vector<StrongOutcome> out(spec.n_paths);
  std::vector<double> ident(spec.n_paths), defect(spec.n_paths);
  for_paths(spec.n_paths, use_parallel, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(spec.seed, i);
    r.seeds[i] = s;
    const FbsdePath p = simulate_path(f, 0.0, 0.0, spec.n_steps, s);
    const WeakEmbedding w = weak_embed(p, c, g, pr.grid, extension_stream_key(s));
    r.tau_weak[i] = w.tau_weak;
    ident[i] = w.identity_residual;
    defect[i] = w.inverse_defect;
    out[i] = strong_on_fresh_W(f, c, pr, s);
  });
  finish(r, out);
  r.max_identity_residual = *std::max_element(ident.begin(), ident.end());
  r.max_inverse_defect = *std::max_element(defect.begin(), defect.end());
  return r;
}

RoundTrip round_trip(const DecouplingField& f, const ProcessCoefficients& c,
                     const LipschitzMap& g, double L_g, const EmbedSpec& spec,
                     bool use_parallel) {
  const Prepared pr = prepare(f, c, L_g, spec);
  RoundTrip rt;
  rt.tau_weak.resize(spec.n_paths);
  rt.tau_strong.resize(spec.n_paths);
  std::vector<double> diff(spec.n_paths);
  for_paths(spec.n_paths, use_parallel, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(spec.seed, i);
    const FbsdePath p = simulate_path(f, 0.0, 0.0, spec.n_steps, s);
    const WeakEmbedding w = weak_embed(p, c, g, pr.grid, extension_stream_key(s), 1 << 30);
    const StrongStop st =
        strong_stopping_time(f, pr.grid, w.dB, pr.guards.K2, f.config.deriv_floor_eps);
    rt.tau_weak[i] = w.tau_weak;
    rt.tau_strong[i] = st.tau;
    diff[i] = std::fabs(w.tau_weak - st.tau);
  });
  rt.mean_abs_diff = pairwise_mean(diff);
  rt.max_abs_diff = spec.n_paths ? *std::max_element(diff.begin(), diff.end()) : 0.0;
  return rt;
}

}  // namespace skofbsde
