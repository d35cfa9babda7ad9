#include "skofbsde/fbsde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skofbsde/rng.hpp"
#include "skofbsde/stats.hpp"

namespace skofbsde {

FbsdePath simulate_path(const DecouplingField& f, double x1_0, double x2_0, int n_steps,
                        std::uint64_t seed) {
  if (n_steps < 1) throw std::invalid_argument("simulate_path: n_steps must be >= 1");
  const double T = f.T();
  const double dt = T / n_steps;
  const double sdt = std::sqrt(dt);
  const auto n = static_cast<std::size_t>(n_steps) + 1;

  FbsdePath p;
  p.seed = seed;
  p.t_grid.resize(n);
  p.W.resize(n);
  p.X1.resize(n);
  p.X2.resize(n);
  p.Y.resize(n);
  p.Z.resize(n);

  NormalStream rng(seed);
  p.W[0] = 0.0;
  p.X1[0] = x1_0;
  p.X2[0] = x2_0;
  for (std::size_t k = 0; k < n; ++k) {
    p.t_grid[k] = k + 1 == n ? T : static_cast<double>(k) * dt;
    const FieldSample s = eval_u_u1(f, p.t_grid[k], p.X1[k], p.X2[k]);
    p.Y[k] = s.u;
    p.Z[k] = s.u1;
    if (s.clamped) ++p.clamped;
    if (k + 1 == n) break;
    const double dW = sdt * rng.next_normal();
    p.W[k + 1] = p.W[k] + dW;
    p.X1[k + 1] = x1_0 + p.W[k + 1];
    p.X2[k + 1] = p.X2[k] + s.u1 * s.u1 * dt;
  }
  return p;
}

double backward_residual(const FbsdePath& p) {
  const std::size_t n = p.t_grid.size();
  double tail = 0.0;  // sum_{j >= k} Z_j dW_j
  double r = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    tail += p.Z[k] * (p.W[k + 1] - p.W[k]);
    r = std::max(r, std::fabs(p.Y[k] - (p.Y[n - 1] - tail)));
  }
  return r;
}

double terminal_error(const FbsdePath& p, const LipschitzMap& g, const LipschitzMap& delta) {
  return std::fabs(p.Y.back() - (g(p.X1.back()) - delta(p.X2.back())));
}

PathSummary summarize(const FbsdePath& p, const LipschitzMap& g, const LipschitzMap& delta) {
  const int n = p.n_steps();
  if (n % kCheckpoints != 0) {
    throw std::invalid_argument("summarize: n_steps must be a multiple of 8");
  }
  PathSummary s;
  s.seed = p.seed;
  s.Y0 = p.Y[0];
  const int stride = n / kCheckpoints;
  double qv = 0.0;
  int c = 0;
  for (int k = 0; k < n; ++k) {
    const double dy = p.Y[k + 1] - p.Y[k];
    qv += dy * dy;
    if ((k + 1) % stride == 0) {
      s.t[c] = p.t_grid[k + 1];
      s.Y[c] = p.Y[k + 1];
      s.int_Z2[c] = p.X2[k + 1] - p.X2[0];
      s.qv_Y[c] = qv;
      ++c;
    }
  }
  for (double z : p.Z) s.z_max = std::max(s.z_max, std::fabs(z));
  s.X1_T = p.X1.back();
  s.X2_T = p.X2.back();
  s.Y_T = p.Y.back();
  s.backward_residual = backward_residual(p);
  s.terminal_error = terminal_error(p, g, delta);
  s.clamped = p.clamped;
  return s;
}

std::vector<PathSummary> simulate_batch(const DecouplingField& f, const LipschitzMap& g,
                                        const LipschitzMap& delta, const BatchSpec& spec,
                                        bool use_parallel,
                                        const std::function<void(std::size_t, const FbsdePath&)>&
                                            visit) {
  std::vector<PathSummary> out(spec.n_paths);
  const auto n = static_cast<long long>(spec.n_paths);
  auto one = [&](long long i) {
    const auto idx = static_cast<std::size_t>(i);
    const FbsdePath p =
        simulate_path(f, spec.x1_0, spec.x2_0, spec.n_steps, derive_seed(spec.seed, idx));
    out[idx] = summarize(p, g, delta);
    if (visit) visit(idx, p);
  };
  if (use_parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < n; ++i) one(i);
  } else {
    for (long long i = 0; i < n; ++i) one(i);
  }
  return out;
}

MartingaleReport martingale_check(std::span<const PathSummary> paths) {
  if (paths.size() < 2) throw std::invalid_argument("martingale_check: need at least two paths");
  MartingaleReport r;
  r.n = paths.size();
  r.Y0 = paths[0].Y0;
  r.t = paths[0].t;
  const double N = static_cast<double>(r.n);
  std::vector<double> buf(r.n);
  r.band_pass = true;
  r.qv_pass = true;
  for (int c = 0; c < kCheckpoints; ++c) {
    for (std::size_t i = 0; i < r.n; ++i) buf[i] = paths[i].Y[c];
    const double m = pairwise_mean(buf);
    for (std::size_t i = 0; i < r.n; ++i) buf[i] = (paths[i].Y[c] - m) * (paths[i].Y[c] - m);
    const double sd = std::sqrt(pairwise_sum(buf) / (N - 1.0));
    r.mean_Y[c] = m;
    r.band[c] = 3.0 * sd / std::sqrt(N);
    if (!(std::fabs(m - r.Y0) <= r.band[c])) r.band_pass = false;

    for (std::size_t i = 0; i < r.n; ++i) buf[i] = paths[i].int_Z2[c];
    r.mean_int_Z2[c] = pairwise_mean(buf);
    for (std::size_t i = 0; i < r.n; ++i) buf[i] = paths[i].qv_Y[c];
    r.mean_qv_Y[c] = pairwise_mean(buf);
    const double scale = std::max(r.mean_int_Z2[c], 1e-12);
    if (!(std::fabs(r.mean_qv_Y[c] - r.mean_int_Z2[c]) <= kQvRelTolerance * scale)) {
      r.qv_pass = false;
    }
  }
  r.pass = r.band_pass && r.qv_pass;
  return r;
}

BatchStats batch_stats(std::span<const PathSummary> paths) {
  BatchStats s;
  std::vector<double> res(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    s.z_max = std::max(s.z_max, paths[i].z_max);
    s.X2_T_max = std::max(s.X2_T_max, paths[i].X2_T);
    s.max_terminal_error = std::max(s.max_terminal_error, paths[i].terminal_error);
    s.clamped += paths[i].clamped;
    res[i] = paths[i].backward_residual;
  }
  s.mean_backward_residual = pairwise_mean(res);
  return s;
}

}  // namespace skofbsde
