#include "skofbsde/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skofbsde/errors.hpp"
#include "skofbsde/kernels.hpp"

namespace skofbsde {

namespace {

using kernels::LayerShape;

std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int k = 0; k < n; ++k) g[k] = lo + k * h;
  g.back() = hi;
  return g;
}

LayerShape shape_of(const DecouplingField& f) {
  return {f.nx1(), f.nx2(), f.dx1(), f.dx2()};
}

// Cell index and weight on a uniform grid. The weight is computed against the
// stored node so that queries at nodes give w == 0 (or w == 1 at the last node).
struct Cell {
  int k;
  double w;
};

Cell locate(const std::vector<double>& grid, double x) {
  const int n = static_cast<int>(grid.size());
  const double h = grid[1] - grid[0];
  int k = static_cast<int>(std::floor((x - grid[0]) / h));
  k = std::clamp(k, 0, n - 2);
  if (k + 1 < n - 1 && x >= grid[k + 1]) ++k;
  if (k > 0 && x < grid[k]) --k;
  return {k, (x - grid[k]) / (grid[k + 1] - grid[k])};
}

struct Stencil {
  std::size_t base;  // index of (n, i, j)
  std::size_t st, s1;  // strides for t and x1 (x2 stride is 1)
  double wt, w1, w2;
  bool clamped;
};

Stencil stencil(const DecouplingField& f, double t, double x1, double x2) {
  const double T = f.T();
  if (!(t >= -1e-12 * T) || t > T * (1.0 + 1e-12)) {
    throw DomainError("eval_field: t outside [0, T]");
  }
  t = std::clamp(t, 0.0, T);
  bool clamped = false;
  if (x2 < f.x2_grid.front()) {
    x2 = f.x2_grid.front();
    clamped = true;
  } else if (x2 > f.x2_grid.back()) {
    x2 = f.x2_grid.back();
    clamped = true;
  }
  if (x1 < f.x1_grid.front() || x1 > f.x1_grid.back()) clamped = true;
  const Cell ct = locate(f.t_grid, t);
  const Cell c1 = locate(f.x1_grid, x1);  // weight may leave [0, 1]: linear extrapolation
  const Cell c2 = locate(f.x2_grid, x2);
  const std::size_t s1 = static_cast<std::size_t>(f.nx2());
  const std::size_t st = s1 * static_cast<std::size_t>(f.nx1());
  return {f.index(ct.k, c1.k, c2.k), st, s1, ct.w, c1.w, c2.w, clamped};
}

double trilinear(const std::vector<double>& v, const Stencil& s) {
  const double* p = v.data() + s.base;
  auto bilinear = [&](const double* q) {
    const double a = (1.0 - s.w2) * q[0] + s.w2 * q[1];
    const double b = (1.0 - s.w2) * q[s.s1] + s.w2 * q[s.s1 + 1];
    return (1.0 - s.w1) * a + s.w1 * b;
  };
  const double lo = bilinear(p);
  if (s.wt == 0.0) return lo;
  return (1.0 - s.wt) * lo + s.wt * bilinear(p + s.st);
}

// Backward sweep of one linear derivative equation with frozen coefficients.
void solve_linear_backward(DecouplingField& f, std::vector<double>& v,
                           const std::vector<double>& c_all, const std::vector<double>& b_all,
                           bool use_parallel) {
  const LayerShape s = shape_of(f);
  const std::size_t L = f.layer_size();
  const double dt = f.dt();
  const kernels::DiffusionFactor factor(s.nx1, dt, s.dx1);
  for (int n = f.layers() - 2; n >= 0; --n) {
    const std::span<const double> prev(v.data() + (n + 1) * L, L);
    const std::span<const double> c(c_all.data() + (n + 1) * L, L);
    const std::span<const double> b(b_all.data() + (n + 1) * L, L);
    const std::span<double> out(v.data() + n * L, L);
    if (use_parallel) {
      kernels::parallel::derivative_rhs(s, prev, c, b, dt, out);
      kernels::parallel::diffusion_solve(s, factor, out);
    } else {
      kernels::serial::derivative_rhs(s, prev, c, b, dt, out);
      kernels::serial::diffusion_solve(s, factor, out);
    }
  }
}

void finite_difference_derivatives(DecouplingField& f, bool use_parallel) {
  const LayerShape s = shape_of(f);
  const std::size_t L = f.layer_size();
  for (int n = 0; n < f.layers(); ++n) {
    const std::span<const double> in(f.u.data() + n * L, L);
    const std::span<double> o1(f.u1.data() + n * L, L);
    const std::span<double> o2(f.u2.data() + n * L, L);
    if (use_parallel) {
      kernels::parallel::d1(s, in, o1);
      kernels::parallel::d2(s, in, o2);
    } else {
      kernels::serial::d1(s, in, o1);
      kernels::serial::d2(s, in, o2);
    }
  }
}

void coupled_derivatives(DecouplingField& f, const LipschitzMap& g, const LipschitzMap& delta,
                         std::vector<double>& v1, std::vector<double>& v2, bool use_parallel) {
  // Coefficients of the differentiated equation come from the FD derivatives of u.
  DecouplingField fd = f;
  finite_difference_derivatives(fd, use_parallel);
  const std::size_t total = f.u.size();
  std::vector<double> c(total), b(total);
  for (std::size_t k = 0; k < total; ++k) {
    c[k] = fd.u1[k] * fd.u1[k];
    b[k] = 2.0 * fd.u1[k] * fd.u2[k];
  }
  v1.assign(total, 0.0);
  v2.assign(total, 0.0);
  const int last = f.layers() - 1;
  std::vector<double> dg(f.x1_grid.size()), dd(f.x2_grid.size());
  for (std::size_t i = 0; i < dg.size(); ++i) dg[i] = g.derivative(f.x1_grid[i]);
  for (std::size_t j = 0; j < dd.size(); ++j) dd[j] = -delta.derivative(f.x2_grid[j]);
  for (int i = 0; i < f.nx1(); ++i) {
    for (int j = 0; j < f.nx2(); ++j) {
      v1[f.index(last, i, j)] = dg[i];
      v2[f.index(last, i, j)] = dd[j];
    }
  }
  solve_linear_backward(f, v1, c, b, use_parallel);
  solve_linear_backward(f, v2, c, b, use_parallel);
}

}  // namespace

std::string to_string(DerivativeMethod m) {
  return m == DerivativeMethod::finite_difference ? "finite_difference" : "coupled_system";
}

DerivativeMethod derivative_method_from_string(const std::string& s) {
  if (s == "finite_difference") return DerivativeMethod::finite_difference;
  if (s == "coupled_system") return DerivativeMethod::coupled_system;
  throw ConfigError("unknown derivative method '" + s +
                    "' (expected finite_difference or coupled_system)");
}

SolverConfig SolverConfig::resolved(double L_g) const {
  SolverConfig r = *this;
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("solver: T must be positive");
  if (nt < 2 || nx1 < 2 || nx2 < 2) throw ConfigError("solver: nt, nx1, nx2 must be >= 2");
  if (!(L_g > 0.0) || !std::isfinite(L_g)) {
    throw ConfigError("solver: L_g must be finite and positive");
  }
  const double sq = std::sqrt(T);
  r.x1_lo = x1_lo.value_or(-6.0 * sq);
  r.x1_hi = x1_hi.value_or(6.0 * sq);
  r.x2_hi = x2_hi.value_or(1.05 * L_g * L_g * T);
  r.cutoff_H = cutoff_H.value_or(4.0 * std::max(L_g, 1.0));
  if (!(*r.x1_lo < *r.x1_hi)) throw ConfigError("solver: need x1_lo < x1_hi");
  if (*r.x2_hi < L_g * L_g * T) {
    throw ConfigError("solver: x2_hi must be at least L_g^2 T = " +
                      std::to_string(L_g * L_g * T));
  }
  if (!(*r.cutoff_H > L_g)) throw ConfigError("solver: cutoff_H must exceed L_g");
  if (!(fixpoint_tol > 0.0)) throw ConfigError("solver: fixpoint_tol must be positive");
  if (fixpoint_max_iter < 1) throw ConfigError("solver: fixpoint_max_iter must be >= 1");
  if (!(deriv_floor_eps > 0.0)) throw ConfigError("solver: deriv_floor_eps must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("solver: cfl must lie in (0, 1]");
  const double dt = T / nt;
  const double dx2 = *r.x2_hi / (nx2 - 1);
  const double dt_max = cfl * dx2 / (L_g * L_g);
  if (dt > dt_max) {
    std::ostringstream os;
    os << "solver: time step " << dt << " violates the transport restriction dt <= " << cfl
       << " dx2 / L_g^2 = " << dt_max << "; use nt >= " << static_cast<int>(std::ceil(T / dt_max));
    throw ConfigError(os.str());
  }
  return r;
}

DecouplingField make_empty_field(const SolverConfig& cfg) {
  DecouplingField f;
  f.config = cfg;
  f.t_grid = uniform_grid(0.0, cfg.T, cfg.nt + 1);
  f.x1_grid = uniform_grid(*cfg.x1_lo, *cfg.x1_hi, cfg.nx1);
  f.x2_grid = uniform_grid(0.0, *cfg.x2_hi, cfg.nx2);
  const std::size_t total = static_cast<std::size_t>(cfg.nt + 1) * f.layer_size();
  f.u.assign(total, 0.0);
  f.u1.assign(total, 0.0);
  f.u2.assign(total, 0.0);
  return f;
}

DecouplingField solve_field(const LipschitzMap& g, const LipschitzMap& delta,
                            const SolverConfig& cfg, double delta_prime_sup, bool use_parallel) {
  if (!g.lipschitz_finite || !std::isfinite(g.lipschitz)) {
    throw NonLipschitzError("solve_field: g is not Lipschitz continuous");
  }
  if (!delta.lipschitz_finite || !std::isfinite(delta.lipschitz)) {
    throw NonLipschitzError("solve_field: delta is not Lipschitz continuous");
  }
  DecouplingField f = make_empty_field(cfg.resolved(g.lipschitz));
  f.L_g = g.lipschitz;
  f.delta_prime_sup = delta_prime_sup;
  const SolverConfig& rc = f.config;
  const LayerShape s = shape_of(f);
  const std::size_t L = f.layer_size();
  const double dt = f.dt();
  const double cutoff = *rc.cutoff_H;

  const int last = f.layers() - 1;
  std::vector<double> gx(s.nx1), dx(s.nx2);
  for (int i = 0; i < s.nx1; ++i) gx[i] = g(f.x1_grid[i]);
  for (int j = 0; j < s.nx2; ++j) dx[j] = delta(f.x2_grid[j]);
  for (int i = 0; i < s.nx1; ++i) {
    for (int j = 0; j < s.nx2; ++j) f.u[f.index(last, i, j)] = gx[i] - dx[j];
  }

  const kernels::DiffusionFactor factor(s.nx1, dt, s.dx1);
  std::vector<double> w(L), c(L), next(L);
  std::vector<double> residuals;
  for (int n = last - 1; n >= 0; --n) {
    const std::span<const double> prev(f.u.data() + (n + 1) * L, L);
    std::copy(prev.begin(), prev.end(), w.begin());
    residuals.clear();
    bool converged = false;
    std::size_t hits = 0;
    for (int it = 0; it < rc.fixpoint_max_iter; ++it) {
      if (use_parallel) {
        hits = kernels::parallel::coupling_coefficient(s, w, cutoff, c);
        kernels::parallel::transport_rhs(s, prev, c, dt, next);
        kernels::parallel::diffusion_solve(s, factor, next);
      } else {
        hits = kernels::serial::coupling_coefficient(s, w, cutoff, c);
        kernels::serial::transport_rhs(s, prev, c, dt, next);
        kernels::serial::diffusion_solve(s, factor, next);
      }
      const double res = kernels::max_abs_diff(next, w);
      residuals.push_back(res);
      w.swap(next);
      if (res < rc.fixpoint_tol) {
        converged = true;
        f.diagnostics.max_fixpoint_iterations =
            std::max(f.diagnostics.max_fixpoint_iterations, it + 1);
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "contraction failure: fixed point at layer " << n << " did not reach tolerance "
         << rc.fixpoint_tol << " in " << rc.fixpoint_max_iter << " iterations (last residual "
         << residuals.back() << ")";
      throw ContractionFailure(os.str(), n, residuals);
    }
    f.diagnostics.cutoff_hits += hits;
    std::copy(w.begin(), w.end(), f.u.begin() + static_cast<std::ptrdiff_t>(n * L));
  }

  derivative_fields(f, rc.derivative_method, g, delta, false, use_parallel);
  const std::size_t hits = f.diagnostics.cutoff_hits;
  const int iters = f.diagnostics.max_fixpoint_iterations;
  field_diagnostics(f, g.lipschitz, delta_prime_sup);
  f.diagnostics.cutoff_hits = hits;
  f.diagnostics.max_fixpoint_iterations = iters;
  if (f.diagnostics.z_sup >= cutoff || hits > 0) {
    std::ostringstream os;
    os << "cutoff not passive: sup |u1| = " << f.diagnostics.z_sup << " with cutoff_H = "
       << cutoff << " (" << hits << " active nodes)";
    throw CutoffNotPassive(os.str(), f.diagnostics.z_sup, cutoff);
  }
  return f;
}

void derivative_fields(DecouplingField& f, DerivativeMethod method, const LipschitzMap& g,
                       const LipschitzMap& delta, bool compare, bool use_parallel) {
  if (method == DerivativeMethod::finite_difference && !compare) {
    finite_difference_derivatives(f, use_parallel);
    return;
  }
  std::vector<double> v1, v2;
  coupled_derivatives(f, g, delta, v1, v2, use_parallel);
  if (compare) {
    DecouplingField fd = f;
    finite_difference_derivatives(fd, use_parallel);
    const double dx1 = f.dx1();
    const double tol = 10.0 * std::max(f.L_g, 1.0) * (f.dt() + dx1 * dx1 + f.dx2());
    double worst = 0.0;
    std::size_t where = 0;
    for (std::size_t k = 0; k < v1.size(); ++k) {
      const double d = std::max(std::fabs(v1[k] - fd.u1[k]), std::fabs(v2[k] - fd.u2[k]));
      if (d > worst) {
        worst = d;
        where = k;
      }
    }
    f.diagnostics.derivative_discrepancy = worst;
    if (worst > tol) {
      const std::size_t nx2 = static_cast<std::size_t>(f.nx2());
      const std::size_t nx1 = static_cast<std::size_t>(f.nx1());
      const double t = f.t_grid[where / (nx1 * nx2)];
      const double x1 = f.x1_grid[(where / nx2) % nx1];
      const double x2 = f.x2_grid[where % nx2];
      std::ostringstream os;
      os << "derivative methods disagree: max discrepancy " << worst << " > " << tol
         << " at (t, x1, x2) = (" << t << ", " << x1 << ", " << x2 << ")";
      throw DerivativeMismatch(os.str(), worst, t, x1, x2);
    }
    if (method == DerivativeMethod::finite_difference) {
      f.u1 = std::move(fd.u1);
      f.u2 = std::move(fd.u2);
      return;
    }
  }
  f.u1 = std::move(v1);
  f.u2 = std::move(v2);
}

double eval_field(const DecouplingField& f, double t, double x1, double x2,
                  FieldComponent which) {
  return trilinear(f.component(which), stencil(f, t, x1, x2));
}

FieldSample eval_u_u1(const DecouplingField& f, double t, double x1, double x2) {
  const Stencil s = stencil(f, t, x1, x2);
  return {trilinear(f.u, s), trilinear(f.u1, s), s.clamped};
}

DiagnosticsReport field_diagnostics(DecouplingField& f, double L_g, double delta_prime_sup,
                                    bool g_increasing) {
  FieldDiagnostics& d = f.diagnostics;
  const int nl = f.layers(), n1 = f.nx1(), n2 = f.nx2();
  const double dt = f.dt(), dx1 = f.dx1(), dx2 = f.dx2();
  d.L_ux = d.z_sup = d.u2_sup = d.time_lip_u1 = 0.0;
  d.u11_sup = d.u22_sup = d.utt_sup = 0.0;
  d.min_u1_interior = std::numeric_limits<double>::infinity();
  for (int n = 0; n < nl; ++n) {
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        const std::size_t k = f.index(n, i, j);
        const double a = f.u1[k], b = f.u2[k];
        d.z_sup = std::max(d.z_sup, std::fabs(a));
        d.u2_sup = std::max(d.u2_sup, std::fabs(b));
        d.L_ux = std::max(d.L_ux, std::hypot(a, b));
        const bool inner = i > 0 && i < n1 - 1 && j > 0 && j < n2 - 1;
        if (!inner) continue;
        if (n < nl - 1) {
          d.min_u1_interior = std::min(d.min_u1_interior, a);
          d.time_lip_u1 =
              std::max(d.time_lip_u1, std::fabs(f.u1[f.index(n + 1, i, j)] - a) / dt);
        }
        if (n > 0 && n < nl - 1) {
          const double utt =
              (f.u[f.index(n + 1, i, j)] - 2.0 * f.u[k] + f.u[f.index(n - 1, i, j)]) / (dt * dt);
          d.utt_sup = std::max(d.utt_sup, std::fabs(utt));
        }
        const double u11 =
            (f.u[f.index(n, i + 1, j)] - 2.0 * f.u[k] + f.u[f.index(n, i - 1, j)]) / (dx1 * dx1);
        const double u22 =
            (f.u[f.index(n, i, j + 1)] - 2.0 * f.u[k] + f.u[f.index(n, i, j - 1)]) / (dx2 * dx2);
        d.u11_sup = std::max(d.u11_sup, std::fabs(u11));
        d.u22_sup = std::max(d.u22_sup, std::fabs(u22));
      }
    }
  }
  if (!std::isfinite(d.min_u1_interior)) d.min_u1_interior = 0.0;
  d.grid_tolerance = std::max(L_g, 1.0) * (dt + dx1 * dx1 + dx2);
  d.interp_tolerance =
      0.125 * (dx1 * dx1 * d.u11_sup + dx2 * dx2 * d.u22_sup + dt * dt * d.utt_sup) + 1e-12;

  DiagnosticsReport r;
  const double cutoff = f.config.cutoff_H.value_or(std::numeric_limits<double>::infinity());
  auto add = [&r](std::string name, double measured, double bound, double tol, bool pass) {
    r.checks.push_back({std::move(name), measured, bound, tol, pass});
    r.all_pass = r.all_pass && pass;
  };
  add("z_sup <= L_g", d.z_sup, L_g, kBoundTolerance, d.z_sup <= L_g + kBoundTolerance);
  add("u2_sup <= sup|delta'|", d.u2_sup, delta_prime_sup, kBoundTolerance,
      d.u2_sup <= delta_prime_sup + kBoundTolerance);
  add("z_sup <= L_ux", d.z_sup, d.L_ux, 0.0, d.z_sup <= d.L_ux);
  add("cutoff passive", d.z_sup, cutoff, 0.0, d.z_sup < cutoff);
  add("time Lipschitz of u1 finite", d.time_lip_u1, std::numeric_limits<double>::infinity(), 0.0,
      std::isfinite(d.time_lip_u1));
  if (g_increasing) {
    add("min interior u1 > 0", d.min_u1_interior, 0.0, 0.0, d.min_u1_interior > 0.0);
  }
  r.values = d;
  return r;
}

}  // namespace skofbsde
