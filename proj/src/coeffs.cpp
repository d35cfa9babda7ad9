#include "skofbsde/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "skofbsde/errors.hpp"

namespace skofbsde {

TimeFunction TimeFunction::constant(double value) {
  if (!std::isfinite(value)) throw ConfigError("constant coefficient must be finite");
  TimeFunction f;
  f.repr_ = value;
  return f;
}

TimeFunction TimeFunction::table(std::vector<double> t, std::vector<double> v) {
  if (t.size() < 2 || t.size() != v.size()) {
    throw ConfigError("coefficient table: need at least two (t, value) rows");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(v[i])) {
      throw ConfigError("coefficient table: non-finite entry");
    }
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw ConfigError("coefficient table: times must be strictly increasing");
    }
  }
  if (t.front() > 0.0) throw ConfigError("coefficient table must start at t <= 0");
  TimeFunction f;
  f.repr_ = Table{std::move(t), std::move(v)};
  return f;
}

TimeFunction TimeFunction::expression(const std::string& source) {
  TimeFunction f;
  f.repr_ = TimeExpression(source);
  return f;
}

double TimeFunction::operator()(double t) const {
  if (const auto* c = std::get_if<double>(&repr_)) return *c;
  if (const auto* e = std::get_if<TimeExpression>(&repr_)) return (*e)(t);
  const auto& tab = std::get<Table>(repr_);
  if (t < tab.t.front() || t > tab.t.back()) {
    throw DomainError("coefficient table queried outside its time range");
  }
  auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
  std::size_t i = static_cast<std::size_t>(it - tab.t.begin());
  if (i >= tab.t.size()) i = tab.t.size() - 1;
  const double w = (t - tab.t[i - 1]) / (tab.t[i] - tab.t[i - 1]);
  return tab.v[i - 1] + w * (tab.v[i] - tab.v[i - 1]);
}

double TimeFunction::defined_until() const noexcept {
  if (const auto* tab = std::get_if<Table>(&repr_)) return tab->t.back();
  return std::numeric_limits<double>::infinity();
}

std::string TimeFunction::describe() const {
  std::ostringstream os;
  if (const auto* c = std::get_if<double>(&repr_)) {
    os << "const(" << *c << ")";
  } else if (const auto* e = std::get_if<TimeExpression>(&repr_)) {
    os << "expr(" << e->source() << ")";
  } else {
    const auto& tab = std::get<Table>(repr_);
    os << "table(" << tab.t.size() << " rows on [" << tab.t.front() << ", " << tab.t.back()
       << "])";
  }
  return os.str();
}

ProcessCoefficients::ProcessCoefficients(double G0, TimeFunction alpha, TimeFunction beta,
                                         std::optional<double> beta_floor, double T_phys,
                                         int n_quad)
    : G0_(G0), alpha_(std::move(alpha)), beta_(std::move(beta)), T_phys_(T_phys),
      n_quad_(n_quad) {
  if (!std::isfinite(G0)) throw ConfigError("G0 must be finite");
  if (!(T_phys > 0.0) || !std::isfinite(T_phys)) throw ConfigError("T_phys must be positive");
  if (n_quad < 16) throw ConfigError("quadrature grid needs at least 16 cells");
  const double until = std::min(alpha_.defined_until(), beta_.defined_until());
  if (until < T_phys) {
    throw HorizonError("coefficient tables end before T_phys", until);
  }
  h_ = T_phys / n_quad;
  a_.resize(n_quad + 1);
  b2_.resize(n_quad + 1);
  double beta_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n_quad; ++k) {
    const double t = k == n_quad ? T_phys : k * h_;
    a_[k] = alpha_(t);
    const double b = beta_(t);
    if (!std::isfinite(a_[k]) || !std::isfinite(b)) {
      throw ConfigError("coefficient is not finite at t = " + std::to_string(t));
    }
    b2_[k] = b * b;
    beta_min = std::min(beta_min, std::fabs(b));
    alpha_sup_ = std::max(alpha_sup_, std::fabs(a_[k]));
    beta_sup_ = std::max(beta_sup_, std::fabs(b));
  }
  beta_floor_ = beta_floor.value_or(beta_min);
  if (!(beta_floor_ > 0.0)) throw ConfigError("beta must be bounded away from zero");
  if (beta_min < beta_floor_ * (1.0 - 1e-12)) {
    throw ConfigError("beta drops below beta_floor: inf |beta| on the grid is " +
                      std::to_string(beta_min));
  }
  D_.assign(n_quad + 1, 0.0);
  H_.assign(n_quad + 1, 0.0);
  for (int k = 1; k <= n_quad; ++k) {
    D_[k] = D_[k - 1] + 0.5 * h_ * (a_[k - 1] + a_[k]);
    H_[k] = H_[k - 1] + 0.5 * h_ * (b2_[k - 1] + b2_[k]);
  }
  for (int k = 0; k <= n_quad; ++k) {
    delta_prime_sup_ = std::max(delta_prime_sup_, std::fabs(a_[k]) / b2_[k]);
  }
}

ProcessCoefficients ProcessCoefficients::with_default_horizon(
    double G0, TimeFunction alpha, TimeFunction beta, std::optional<double> beta_floor,
    double L_g, double T, int n_quad) {
  if (!(L_g > 0.0) || !std::isfinite(L_g)) {
    throw ConfigError("default horizon needs a finite positive L_g");
  }
  const double until = std::min(alpha.defined_until(), beta.defined_until());
  const double need_clock = 1.05 * L_g * L_g * T;
  double trial = std::min(1.0, until);
  for (int guard = 0;; ++guard) {
    ProcessCoefficients c(G0, alpha, beta, beta_floor, trial, n_quad);
    if (c.H_max() >= need_clock) {
      const double t_bound = c.clock_H_inv(L_g * L_g * T);
      const double t_need = c.clock_H_inv(need_clock);
      const double horizon = std::min(std::max(t_need, 2.0 * t_bound) * 1.01, until);
      return ProcessCoefficients(G0, std::move(alpha), std::move(beta), beta_floor, horizon,
                                 n_quad);
    }
    if (trial >= until || guard > 60) {
      // beta >= floor gives an upper bound on the missing time.
      const double floor = c.beta_floor();
      throw HorizonError("coefficient data too short: H(T_phys) < 1.05 L_g^2 T",
                         trial + (need_clock - c.H_max()) / (floor * floor));
    }
    trial = std::min(2.0 * trial, until);
  }
}

double ProcessCoefficients::interp_cumulative(const std::vector<double>& cum,
                                              const std::vector<double>& f, double t) const {
  int k = static_cast<int>(t / h_);
  k = std::clamp(k, 0, n_quad_ - 1);
  const double s = t - k * h_;
  return cum[k] + s * (f[k] + 0.5 * s / h_ * (f[k + 1] - f[k]));
}

double ProcessCoefficients::clock_H(double t) const {
  if (!(t >= 0.0) || t > T_phys_ * (1.0 + 1e-12)) {
    throw DomainError("clock_H: t outside [0, T_phys]");
  }
  return interp_cumulative(H_, b2_, std::min(t, T_phys_));
}

double ProcessCoefficients::clock_H_inv(double x) const {
  if (!(x >= 0.0)) throw DomainError("clock_H_inv: negative clock value");
  const double top = H_.back();
  if (x > top * (1.0 + 1e-12)) {
    const double f2 = beta_floor_ * beta_floor_;
    throw HorizonError("horizon too short: clock value beyond H(T_phys)",
                       T_phys_ + (x - top) / f2);
  }
  double lo = 0.0, hi = T_phys_;
  for (int it = 0; it < kBisectionIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (interp_cumulative(H_, b2_, mid) < x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ProcessCoefficients::delta_hat(double t) const {
  if (!(t >= 0.0) || t > T_phys_ * (1.0 + 1e-12)) {
    throw DomainError("delta_hat: t outside [0, T_phys]");
  }
  return G0_ + interp_cumulative(D_, a_, std::min(t, T_phys_));
}

double ProcessCoefficients::delta_prime(double x) const {
  const double s = clock_H_inv(x);
  const double b = beta_(s);
  return alpha_(s) / (b * b);
}

LipschitzMap ProcessCoefficients::delta_map() const {
  auto self = std::make_shared<const ProcessCoefficients>(*this);
  LipschitzMap m;
  m.value = [self](double x) { return self->delta(x); };
  m.derivative = [self](double x) { return self->delta_prime(x); };
  m.lipschitz = delta_lipschitz_bound();
  return m;
}

}  // namespace skofbsde
