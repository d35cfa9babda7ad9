#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skofbsde/measure.hpp"

namespace skofbsde {

struct LawReport {
  std::size_t n = 0;
  double ks = 0.0;
  double ks_pass_threshold = 0.0;
  double w1 = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double target_mean = 0.0;
  double target_var = 0.0;
  bool pass = false;
};

// Kolmogorov asymptotic quantiles (times 1/sqrt(n)) and the additive allowance
// for Euler/interpolation bias in simulated stopped values.
inline constexpr double kKolmogorov5 = 1.358;
inline constexpr double kKolmogorov1 = 1.63;
inline constexpr double kDiscretizationAllowance = 0.01;

/// sup_x |F_n(x) - F(x)| over both one-sided gaps at the sorted samples.
/// Throws std::invalid_argument for an empty sample.
double ks_statistic(std::span<const double> sorted_samples, const TargetMeasure& m);

/// int_0^1 |F_n^{-1}(y) - F^{-1}(y)| dy, midpoint rule on `levels` levels.
double wasserstein1(std::span<const double> sorted_samples, const TargetMeasure& m,
                    int levels = 10000);

/// Sorts a copy of the samples and fills a LawReport. pass: ks below the 1%
/// Kolmogorov band plus the discretization allowance.
LawReport law_report(std::span<const double> samples, const TargetMeasure& m);

// Gauss-Hermite rule for E[f(xi)], xi ~ N(0, 1): sum_k w_k f(x_k).
// Nodes from Newton iteration on the Hermite recurrence (probabilists' scaling).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermite(int n = 64);
  double expect(const std::function<double(double)>& f) const;
  /// log E[exp(f(xi))] with max-shift, no overflow for large |f|.
  double log_expect_exp(const std::function<double(double)>& f) const;
};

enum class OracleKind { no_drift, linear_drift };

/// Closed-form representations of the decoupling field:
///   no_drift:     E[g(x1 + sqrt(T - t) xi)]
///   linear_drift: -1/(2 kappa) log E[exp(-2 kappa g(x1 + sqrt(T - t) xi))] - kappa x2
/// Throws std::invalid_argument for linear_drift with kappa == 0.
double oracle_field(OracleKind kind, const std::function<double(double)>& g, double kappa,
                    double T, double t, double x1, double x2, const GaussHermite& rule);

/// d/dx1 of the oracle (differentiated under the expectation, needs g').
double oracle_field_dx1(OracleKind kind, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime, double kappa, double T,
                        double t, double x1, const GaussHermite& rule);

struct OracleCheck {
  double t, x1, x2;
  double quadrature;
  double monte_carlo;
  double standard_error;
  bool pass;  // within 3 standard errors
};

/// Cross-checks the quadrature oracle against plain Monte Carlo at the probe points.
std::vector<OracleCheck> validate_oracle(OracleKind kind, const std::function<double(double)>& g,
                                         double kappa, double T,
                                         std::span<const std::array<double, 3>> probes,
                                         std::size_t samples, std::uint64_t seed);

}  // namespace skofbsde
