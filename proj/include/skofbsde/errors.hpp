#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skofbsde {

// Argument outside the domain of a total-on-its-domain function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid user input (config, measure definition, coefficient tables).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The physical horizon T_phys does not cover a requested clock value.
class HorizonError : public std::runtime_error {
 public:
  HorizonError(const std::string& what, double required_horizon)
      : std::runtime_error(what), required_horizon_(required_horizon) {}

  double required_horizon() const noexcept { return required_horizon_; }

 private:
  double required_horizon_;
};

// g (or delta) is not Lipschitz, so the decoupling field cannot be solved.
class NonLipschitzError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-layer fixed point did not reach the tolerance.
class ContractionFailure : public std::runtime_error {
 public:
  ContractionFailure(const std::string& what, int layer, std::vector<double> residuals)
      : std::runtime_error(what), layer_(layer), residuals_(std::move(residuals)) {}

  int layer() const noexcept { return layer_; }
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  int layer_;
  std::vector<double> residuals_;
};

// The z-cutoff was active somewhere in the solved field.
class CutoffNotPassive : public std::runtime_error {
 public:
  CutoffNotPassive(const std::string& what, double z_sup, double cutoff)
      : std::runtime_error(what), z_sup_(z_sup), cutoff_(cutoff) {}

  double z_sup() const noexcept { return z_sup_; }
  double cutoff() const noexcept { return cutoff_; }

 private:
  double z_sup_;
  double cutoff_;
};

// Finite-difference and coupled-system derivative fields disagree.
class DerivativeMismatch : public std::runtime_error {
 public:
  DerivativeMismatch(const std::string& what, double discrepancy, double t, double x1, double x2)
      : std::runtime_error(what), discrepancy_(discrepancy), t_(t), x1_(x1), x2_(x2) {}

  double discrepancy() const noexcept { return discrepancy_; }
  double t() const noexcept { return t_; }
  double x1() const noexcept { return x1_; }
  double x2() const noexcept { return x2_; }

 private:
  double discrepancy_, t_, x1_, x2_;
};

// A localization guard of the strong time-change integration fired.
class LocalizationBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skofbsde
