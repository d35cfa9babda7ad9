#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "skofbsde/measure.hpp"

namespace skofbsde {

enum class DerivativeMethod { finite_difference, coupled_system };
enum class FieldComponent { u, u1, u2 };

std::string to_string(DerivativeMethod m);
DerivativeMethod derivative_method_from_string(const std::string& s);

// Grid and fixed-point settings for the backward solve. Unset optionals take
// the defaults documented on resolved().
struct SolverConfig {
  double T = 1.0;
  int nt = 256;   // time steps; the time grid has nt + 1 layers
  int nx1 = 257;  // x1 nodes
  int nx2 = 129;  // x2 nodes
  std::optional<double> x1_lo;
  std::optional<double> x1_hi;
  std::optional<double> x2_hi;
  std::optional<double> cutoff_H;
  double fixpoint_tol = 1e-9;
  int fixpoint_max_iter = 200;
  double deriv_floor_eps = 1e-6;
  double cfl = 0.9;
  DerivativeMethod derivative_method = DerivativeMethod::finite_difference;

  /// Fills defaults: x1 in [-6 sqrt(T), 6 sqrt(T)], x2 in [0, 1.05 L_g^2 T],
  /// cutoff_H = 4 max(L_g, 1). Then validates; throws ConfigError.
  SolverConfig resolved(double L_g) const;
};

struct FieldDiagnostics {
  double L_ux = 0.0;             // sup |grad_x u|
  double z_sup = 0.0;            // sup |u1|
  double u2_sup = 0.0;           // sup |u2|
  double min_u1_interior = 0.0;  // min u1 over t < T, x strictly inside the box
  double time_lip_u1 = 0.0;      // max |u1(t_{n+1}) - u1(t_n)| / dt, interior nodes
  double u11_sup = 0.0;          // sup |d^2u/dx1^2|, stand-in smoothness diagnostic
  double u22_sup = 0.0;
  double utt_sup = 0.0;
  double grid_tolerance = 0.0;    // max(L_g, 1) (dt + dx1^2 + dx2)
  double interp_tolerance = 0.0;  // trilinear interpolation error bound
  int max_fixpoint_iterations = 0;
  std::size_t cutoff_hits = 0;
  double derivative_discrepancy = 0.0;  // FD vs coupled system, when compared
};

// Decoupling field u(t, x1, x2) with u1 = du/dx1, u2 = du/dx2 on a uniform
// grid. Storage is row-major: t outer, x1 middle, x2 inner.
struct DecouplingField {
  SolverConfig config;  // resolved
  std::vector<double> t_grid, x1_grid, x2_grid;
  std::vector<double> u, u1, u2;
  FieldDiagnostics diagnostics;
  double L_g = 0.0;
  double delta_prime_sup = 0.0;

  int layers() const noexcept { return static_cast<int>(t_grid.size()); }
  int nx1() const noexcept { return static_cast<int>(x1_grid.size()); }
  int nx2() const noexcept { return static_cast<int>(x2_grid.size()); }
  double T() const noexcept { return t_grid.back(); }
  double dt() const noexcept { return t_grid[1] - t_grid[0]; }
  double dx1() const noexcept { return x1_grid[1] - x1_grid[0]; }
  double dx2() const noexcept { return x2_grid[1] - x2_grid[0]; }
  std::size_t layer_size() const noexcept {
    return static_cast<std::size_t>(nx1()) * static_cast<std::size_t>(nx2());
  }
  std::size_t index(int n, int i, int j) const noexcept {
    return (static_cast<std::size_t>(n) * static_cast<std::size_t>(nx1()) +
            static_cast<std::size_t>(i)) * static_cast<std::size_t>(nx2()) +
           static_cast<std::size_t>(j);
  }
  const std::vector<double>& component(FieldComponent c) const noexcept {
    return c == FieldComponent::u ? u : (c == FieldComponent::u1 ? u1 : u2);
  }
};

/// Allocates grids and zeroed arrays for a resolved config.
DecouplingField make_empty_field(const SolverConfig& resolved_cfg);

/// Backward solve of u_t + 1/2 u_{x1x1} + chi_H(u_{x1})^2 u_{x2} = 0 with
/// u(T) = g(x1) - delta(x2).
///
/// Each step is implicit in the x1 diffusion and explicit (upwind) in the x2
/// transport; the transport speed chi_H(u_{x1})^2 is taken from the layer being
/// computed and iterated to a fixed point.
///
/// Throws NonLipschitzError, ConfigError (grid/CFL), ContractionFailure,
/// CutoffNotPassive.
DecouplingField solve_field(const LipschitzMap& g, const LipschitzMap& delta,
                            const SolverConfig& cfg, double delta_prime_sup,
                            bool use_parallel = true);

/// Recomputes u1, u2. finite_difference: central differences with one-sided
/// stencils at the box edges. coupled_system: the linear backward equations
/// for (du/dx1, du/dx2) with coefficients frozen from u, terminal data
/// (g', -delta'). With compare = true both are computed and a discrepancy above
/// 10 x grid tolerance throws DerivativeMismatch.
void derivative_fields(DecouplingField& f, DerivativeMethod method, const LipschitzMap& g,
                       const LipschitzMap& delta, bool compare = false,
                       bool use_parallel = true);

/// Trilinear interpolation, exact at nodes. x1 outside the box is linearly
/// extrapolated, x2 is clamped. Throws DomainError for t outside [0, T].
double eval_field(const DecouplingField& f, double t, double x1, double x2, FieldComponent which);

struct FieldSample {
  double u;
  double u1;
  bool clamped;
};

/// u and u1 at one point, sharing the cell lookup.
FieldSample eval_u_u1(const DecouplingField& f, double t, double x1, double x2);

struct BoundCheck {
  std::string name;
  double measured;
  double bound;
  double tolerance;
  bool pass;
};

struct DiagnosticsReport {
  FieldDiagnostics values;
  std::vector<BoundCheck> checks;
  bool all_pass = true;
};

inline constexpr double kBoundTolerance = 1e-2;

/// Recomputes the diagnostic constants and checks them against the certified
/// bounds: z_sup <= L_g, u2_sup <= ||delta'||, min interior u1 > 0 (when g is
/// increasing and non-constant), z_sup <= L_ux, cutoff passive. Never throws.
DiagnosticsReport field_diagnostics(DecouplingField& f, double L_g, double delta_prime_sup,
                                    bool g_increasing = true);

}  // namespace skofbsde
