#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace skofbsde {

enum class MeasureKind { normal, uniform, piecewise_cdf, empirical };

std::string to_string(MeasureKind kind);

// Sup norms of g', g'' and g''' where they are known (declared for the
// parametric families, finite-difference estimates otherwise).
struct Smoothness {
  std::optional<double> L_g;
  std::optional<double> L_g1;
  std::optional<double> L_g2;
  bool estimated = false;
};

// Target law nu on the real line. Immutable after construction.
class TargetMeasure {
 public:
  static TargetMeasure normal(double mean, double sd);
  static TargetMeasure uniform(double lo, double hi);
  /// Breakpoints strictly increasing in x, F non-decreasing from 0 to 1.
  static TargetMeasure piecewise_cdf(std::vector<double> x, std::vector<double> F);
  static TargetMeasure empirical(std::vector<double> samples);

  MeasureKind kind() const noexcept { return kind_; }
  double support_lo() const noexcept { return support_lo_; }
  double support_hi() const noexcept { return support_hi_; }

  double cdf(double x) const noexcept;
  /// Generalized inverse inf{x : F(x) >= y}. Throws DomainError unless 0 < y < 1.
  double quantile(double y) const;

  double mean() const noexcept;
  double variance() const noexcept;
  bool is_dirac() const noexcept;

  // Parameters, for serialization.
  double param_a() const noexcept { return a_; }
  double param_b() const noexcept { return b_; }
  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& fs() const noexcept { return fs_; }

 private:
  TargetMeasure() = default;

  MeasureKind kind_ = MeasureKind::normal;
  double a_ = 0.0, b_ = 1.0;  // normal: mean/sd, uniform: lo/hi
  std::vector<double> xs_;    // breakpoints or sorted samples
  std::vector<double> fs_;    // CDF values at breakpoints
  double support_lo_ = 0.0, support_hi_ = 0.0;
};

// A real function with its derivative and a Lipschitz bound.
struct LipschitzMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double lipschitz = 0.0;
  bool lipschitz_finite = true;

  double operator()(double x) const { return value(x); }
};

// g = F^{-1} o Phi, mapping a standard normal to nu.
struct QuantileTransform {
  LipschitzMap map;
  bool monotone = true;
  Smoothness smoothness;
  std::vector<std::string> warnings;

  double operator()(double x) const { return map.value(x); }
};

inline constexpr double kProbeLo = -8.0;
inline constexpr double kProbeHi = 8.0;
inline constexpr int kProbePoints = 2001;
inline constexpr double kProbeStep = 1e-4;

/// Throws ConfigError for a Dirac measure. Non-Lipschitz g is flagged in
/// map.lipschitz_finite, not rejected.
QuantileTransform make_g(const TargetMeasure& m);

/// sup over the probe grid of |f(x + h) - f(x)| / h.
double probe_lipschitz(const std::function<double(double)>& f);

}  // namespace skofbsde
