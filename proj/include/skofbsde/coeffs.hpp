#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skofbsde/expr.hpp"
#include "skofbsde/measure.hpp"

namespace skofbsde {

// Deterministic coefficient t -> value: constant, piecewise-linear table or
// closed-form expression.
class TimeFunction {
 public:
  struct Table {
    std::vector<double> t;
    std::vector<double> v;
  };

  static TimeFunction constant(double value);
  /// t strictly increasing, at least two points.
  static TimeFunction table(std::vector<double> t, std::vector<double> v);
  static TimeFunction expression(const std::string& source);

  /// Throws DomainError outside a table's time range.
  double operator()(double t) const;

  /// Largest time the function is defined at (infinity unless tabulated).
  double defined_until() const noexcept;
  std::string describe() const;

 private:
  std::variant<double, Table, TimeExpression> repr_{0.0};
};

// G_t = G0 + int_0^t alpha ds + int_0^t beta dW on [0, T_phys], with the
// derived clock H(t) = int_0^t beta^2, drift delta_hat(t) = G0 + int_0^t alpha
// and the delayed drift delta = delta_hat o H^{-1}.
//
// Integrals use the trapezoid rule on a uniform grid of n_quad cells; between
// nodes the integrand is taken piecewise linear, so H is exactly the integral
// of the interpolated beta^2 and strictly increasing.
class ProcessCoefficients {
 public:
  static constexpr int kDefaultQuadrature = 4096;
  static constexpr int kBisectionIterations = 50;

  /// beta_floor: certified inf |beta|; if empty the grid minimum is used.
  /// Throws ConfigError if |beta| drops below the floor or the floor is not positive.
  ProcessCoefficients(double G0, TimeFunction alpha, TimeFunction beta,
                      std::optional<double> beta_floor, double T_phys,
                      int n_quad = kDefaultQuadrature);

  /// Horizon covering the clock range the embedding needs: H(T_phys) >= 1.05 L_g^2 T
  /// and T_phys >= 2 H^{-1}(L_g^2 T) (room for the K1 guard), capped at the end of
  /// tabulated data. Throws HorizonError if a table is too short.
  static ProcessCoefficients with_default_horizon(double G0, TimeFunction alpha,
                                                  TimeFunction beta,
                                                  std::optional<double> beta_floor,
                                                  double L_g, double T = 1.0,
                                                  int n_quad = kDefaultQuadrature);

  double G0() const noexcept { return G0_; }
  double T_phys() const noexcept { return T_phys_; }
  double beta_floor() const noexcept { return beta_floor_; }
  int quadrature_cells() const noexcept { return n_quad_; }
  const TimeFunction& alpha_fn() const noexcept { return alpha_; }
  const TimeFunction& beta_fn() const noexcept { return beta_; }

  double alpha(double t) const { return alpha_(t); }
  double beta(double t) const { return beta_(t); }

  double alpha_sup() const noexcept { return alpha_sup_; }
  double beta_sup() const noexcept { return beta_sup_; }

  /// H(t) for 0 <= t <= T_phys; DomainError otherwise.
  double clock_H(double t) const;
  /// H^{-1}(x) by monotone bisection. DomainError for x < 0,
  /// HorizonError for x > H(T_phys).
  double clock_H_inv(double x) const;
  double H_max() const noexcept { return H_.back(); }

  double delta_hat(double t) const;
  double delta(double x) const { return delta_hat(clock_H_inv(x)); }
  /// delta'(x) = alpha(s) / beta(s)^2 with s = H^{-1}(x).
  double delta_prime(double x) const;

  /// sup over the quadrature grid of |alpha| / beta^2.
  double delta_prime_sup() const noexcept { return delta_prime_sup_; }
  /// Analytic Lipschitz bound ||alpha||_inf / beta_floor^2.
  double delta_lipschitz_bound() const noexcept {
    return alpha_sup_ / (beta_floor_ * beta_floor_);
  }

  LipschitzMap delta_map() const;

 private:
  double interp_cumulative(const std::vector<double>& cum, const std::vector<double>& f,
                           double t) const;

  double G0_;
  TimeFunction alpha_, beta_;
  double beta_floor_ = 0.0;
  double T_phys_;
  int n_quad_;
  double h_;
  std::vector<double> a_, b2_;  // alpha and beta^2 on the grid
  std::vector<double> D_, H_;   // cumulative integrals
  double alpha_sup_ = 0.0, beta_sup_ = 0.0, delta_prime_sup_ = 0.0;
};

}  // namespace skofbsde
