#include "doctest.h"

#include <cmath>

#include "skofbsde/coeffs.hpp"
#include "skofbsde/errors.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/normal.hpp"
#include "skofbsde/verify.hpp"

using namespace skofbsde;

namespace {

LipschitzMap affine(double slope, double shift = 0.0) {
  return {[=](double x) { return shift + slope * x; }, [=](double) { return slope; },
          std::fabs(slope), true};
}

double max_err(const DecouplingField& f, FieldComponent which,
               const std::function<double(double, double, double)>& exact) {
  const auto& v = f.component(which);
  double e = 0.0;
  for (int n = 0; n < f.layers(); ++n)
    for (int i = 0; i < f.nx1(); ++i)
      for (int j = 0; j < f.nx2(); ++j)
        e = std::max(e, std::fabs(v[f.index(n, i, j)] -
                                  exact(f.t_grid[n], f.x1_grid[i], f.x2_grid[j])));
  return e;
}

}  // namespace

TEST_CASE("identity terminal data without drift") {
  SolverConfig cfg;
  cfg.nt = 64;
  cfg.nx1 = 65;
  cfg.nx2 = 33;
  const auto f = solve_field(affine(1.0), affine(0.0), cfg, 0.0);
  CHECK(max_err(f, FieldComponent::u, [](double, double x1, double) { return x1; }) < 1e-12);
  CHECK(max_err(f, FieldComponent::u1, [](double, double, double) { return 1.0; }) < 1e-12);
  CHECK(max_err(f, FieldComponent::u2, [](double, double, double) { return 0.0; }) < 1e-12);
  CHECK(f.diagnostics.z_sup == doctest::Approx(1.0));
}

TEST_CASE("linear drift closed form") {
  const double kappa = 0.5;
  SolverConfig cfg;
  const auto f = solve_field(affine(1.0), affine(kappa), cfg, kappa);
  auto exact = [&](double t, double x1, double x2) { return x1 - kappa * x2 - kappa * (1 - t); };
  CHECK(max_err(f, FieldComponent::u, exact) < 1e-10);
  CHECK(max_err(f, FieldComponent::u1, [](double, double, double) { return 1.0; }) < 1e-9);
  CHECK(max_err(f, FieldComponent::u2, [&](double, double, double) { return -kappa; }) < 1e-9);
  CHECK(eval_field(f, 0, 0, 0, FieldComponent::u) == doctest::Approx(-0.5));
  // Off-node queries of a linear field are exact up to rounding.
  for (double t : {0.013, 0.5, 0.97})
    for (double x1 : {-5.1, 0.33, 2.9})
      for (double x2 : {0.01, 0.61})
        CHECK(eval_field(f, t, x1, x2, FieldComponent::u) == doctest::Approx(exact(t, x1, x2)));
}

TEST_CASE("terminal layer is assigned exactly") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::constant(0.5), TimeFunction::constant(1.0), 1.0, 2.0);
  SolverConfig cfg;
  cfg.nt = 32;
  cfg.nx1 = 33;
  cfg.nx2 = 17;
  const auto d = c.delta_map();
  const auto f = solve_field(g.map, d, cfg, c.delta_prime_sup());
  const int N = f.layers() - 1;
  for (int i = 0; i < f.nx1(); ++i)
    for (int j = 0; j < f.nx2(); ++j)
      CHECK(f.u[f.index(N, i, j)] == g(f.x1_grid[i]) - d(f.x2_grid[j]));
}

TEST_CASE("convolution oracle without drift") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  SolverConfig cfg;
  const auto f = solve_field(g.map, affine(0.0), cfg, 0.0);
  double e = 0.0;
  for (int n = 0; n < f.layers() - 1; ++n)
    for (int i = 1; i < f.nx1() - 1; ++i)
      for (int j = 1; j < f.nx2() - 1; ++j) {
        const double exact = norm_cdf(f.x1_grid[i] / std::sqrt(1.0 + 1.0 - f.t_grid[n]));
        e = std::max(e, std::fabs(f.u[f.index(n, i, j)] - exact));
      }
  CHECK(e <= 1e-3);
  CHECK(eval_field(f, 0, 1, 0, FieldComponent::u) == doctest::Approx(0.7602499389065233).epsilon(1e-4));
}

TEST_CASE("Cole-Hopf oracle with linear drift") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::constant(0.5), TimeFunction::constant(1.0), 1.0, 2.0);
  SolverConfig cfg;
  const auto f = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup());
  CHECK(std::fabs(eval_field(f, 0, 0, 0, FieldComponent::u) - 0.4586751453870819) < 2e-3);
  CHECK(std::fabs(eval_field(f, 0.5, 0.7, 0.1, FieldComponent::u) - 0.6447094401743543) < 2e-3);
  CHECK(std::fabs(eval_field(f, 0, 0, 0, FieldComponent::u1) - 0.2780640267594353) < 2e-3);
  const GaussHermite rule(64);
  for (double x1 = -2; x1 <= 2; x1 += 0.125) {
    const double o = oracle_field(OracleKind::linear_drift, g.map.value, 0.5, 1, 0, x1, 0, rule);
    CHECK(std::fabs(eval_field(f, 0, x1, 0, FieldComponent::u) - o) <= 2e-3);
  }
  // u2 = -kappa exactly in the Cole-Hopf family.
  CHECK(f.diagnostics.u2_sup == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("coupled derivative system agrees with finite differences") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::expression("0.3*sin(4*t)"), TimeFunction::constant(1.0),
                        1.0, 2.0);
  SolverConfig cfg;
  cfg.nt = 128;
  cfg.nx1 = 129;
  cfg.nx2 = 65;
  const auto d = c.delta_map();
  auto f = solve_field(g.map, d, cfg, c.delta_prime_sup());
  const auto fd_u1 = f.u1;
  CHECK_NOTHROW(derivative_fields(f, DerivativeMethod::coupled_system, g.map, d, true));
  CHECK(f.diagnostics.derivative_discrepancy <= 10 * f.diagnostics.grid_tolerance);
  CHECK(f.diagnostics.derivative_discrepancy > 0.0);

  auto lin = solve_field(affine(1.0), affine(0.5), cfg, 0.5);
  derivative_fields(lin, DerivativeMethod::coupled_system, affine(1.0), affine(0.5));
  CHECK(max_err(lin, FieldComponent::u1, [](double, double, double) { return 1.0; }) < 1e-12);
  CHECK(max_err(lin, FieldComponent::u2, [](double, double, double) { return -0.5; }) < 1e-12);
}

TEST_CASE("bound suite for N(0, 4) with drift 0.3 x") {
  const auto g = make_g(TargetMeasure::normal(0, 2));
  ProcessCoefficients c(0, TimeFunction::constant(0.3), TimeFunction::constant(1.0), 1.0, 5.0);
  SolverConfig cfg;
  cfg.nt = 512;
  const auto f = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup());
  CHECK(f.diagnostics.z_sup <= 2.0 + kBoundTolerance);
  CHECK(f.diagnostics.u2_sup <= 0.3 + kBoundTolerance);
  auto ff = f;
  const auto rep = field_diagnostics(ff, 2.0, 0.3);
  CHECK(rep.all_pass);
}

TEST_CASE("positivity and time regularity of u1") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::constant(0.25), TimeFunction::constant(1.0), 1.0, 2.0);
  SolverConfig cfg;
  const auto f1 = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup());
  cfg.nt *= 2;
  const auto f2 = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup());
  CHECK(f1.diagnostics.min_u1_interior > 0.0);
  CHECK(std::isfinite(f1.diagnostics.time_lip_u1));
  const double ratio = f2.diagnostics.time_lip_u1 / f1.diagnostics.time_lip_u1;
  CHECK(ratio <= 1.5);
  CHECK(ratio >= 1.0 / 1.5);
}

TEST_CASE("interpolation") {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  SolverConfig cfg;
  cfg.nt = 16;
  cfg.nx1 = 17;
  cfg.nx2 = 9;
  const auto f = solve_field(g.map, affine(0.1), cfg, 0.1);
  for (int n : {0, 7, 16})
    for (int i : {0, 5, 16})
      for (int j : {0, 3, 8})
        CHECK(eval_field(f, f.t_grid[n], f.x1_grid[i], f.x2_grid[j], FieldComponent::u) ==
              f.u[f.index(n, i, j)]);
  const double xm = 0.5 * (f.x1_grid[4] + f.x1_grid[5]);
  CHECK(eval_field(f, f.t_grid[3], xm, f.x2_grid[2], FieldComponent::u) ==
        doctest::Approx(0.5 * (f.u[f.index(3, 4, 2)] + f.u[f.index(3, 5, 2)])));
  CHECK_THROWS_AS(eval_field(f, -0.01, 0, 0, FieldComponent::u), DomainError);
  CHECK_THROWS_AS(eval_field(f, 1.01, 0, 0, FieldComponent::u), DomainError);
  const auto s = eval_u_u1(f, 0.5, 100.0, 0.0);
  CHECK(s.clamped);
  CHECK_FALSE(eval_u_u1(f, 0.5, 0.0, 0.0).clamped);
}

TEST_CASE("solver errors") {
  SolverConfig cfg;
  cfg.nt = 32;
  cfg.nx1 = 33;
  cfg.nx2 = 17;
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  const auto emp = make_g(TargetMeasure::empirical({0, 1, 2}));
  CHECK_THROWS_AS(solve_field(emp.map, affine(0), cfg, 0), NonLipschitzError);

  auto bad = cfg;
  bad.nt = 2;
  CHECK_THROWS_AS(solve_field(affine(1), affine(0), bad, 0), ConfigError);
  bad = cfg;
  bad.x2_hi = 0.5;
  CHECK_THROWS_AS(solve_field(affine(1), affine(0), bad, 0), ConfigError);

  auto tight = cfg;
  tight.fixpoint_max_iter = 1;
  tight.fixpoint_tol = 1e-15;
  try {
    solve_field(g.map, affine(0.5), tight, 0.5);
    FAIL("expected contraction failure");
  } catch (const ContractionFailure& e) {
    CHECK(e.residuals().size() == 1);
    CHECK(e.layer() == 31);
  }

  // Declared Lipschitz constant smaller than the true slope: the cutoff bites.
  LipschitzMap liar = affine(2.0);
  liar.lipschitz = 1.0;
  auto cut = cfg;
  cut.cutoff_H = 1.5;
  cut.nt = 64;
  CHECK_THROWS_AS(solve_field(liar, affine(0.2), cut, 0.2), CutoffNotPassive);
}
