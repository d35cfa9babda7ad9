#include "skofbsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "skofbsde/rng.hpp"

namespace skofbsde {

double ks_statistic(std::span<const double> xs, const TargetMeasure& m) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = m.cdf(xs[i]);
    d = std::max(d, std::max((i + 1) / n - F, F - i / n));
  }
  return std::clamp(d, 0.0, 1.0);
}

double wasserstein1(std::span<const double> xs, const TargetMeasure& m, int levels) {
  if (xs.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  if (levels < 1) throw std::invalid_argument("wasserstein1: need at least one level");
  const std::size_t n = xs.size();
  double acc = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double y = (k + 0.5) / levels;
    auto idx = static_cast<std::size_t>(std::ceil(y * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    acc += std::fabs(xs[idx - 1] - m.quantile(y));
  }
  return acc / levels;
}

LawReport law_report(std::span<const double> samples, const TargetMeasure& m) {
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  LawReport r;
  r.n = s.size();
  r.ks = ks_statistic(s, m);
  r.ks_pass_threshold = kKolmogorov1 / std::sqrt(static_cast<double>(r.n)) +
                        kDiscretizationAllowance;
  r.w1 = wasserstein1(s, m);
  double sum = 0.0;
  for (double x : s) sum += x;
  r.mean = sum / static_cast<double>(r.n);
  double ss = 0.0;
  for (double x : s) ss += (x - r.mean) * (x - r.mean);
  r.var = r.n > 1 ? ss / static_cast<double>(r.n - 1) : 0.0;
  r.target_mean = m.mean();
  r.target_var = m.variance();
  r.pass = r.ks <= r.ks_pass_threshold;
  return r;
}

GaussHermite::GaussHermite(int n) : nodes(n), weights(n) {
  if (n < 1) throw std::invalid_argument("GaussHermite: need at least one node");
  // Physicists' Hermite roots by Newton iteration on the orthonormal recurrence
  // (Numerical Recipes gauher), then rescaled to the standard normal weight.
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int its = 0; its < 100; ++its) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  const double scale = 1.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    weights[i] = w[n - 1 - i] * scale;
  }
}

double GaussHermite::expect(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(nodes[k]);
  return s;
}

double GaussHermite::log_expect_exp(const std::function<double(double)>& f) const {
  std::vector<double> a(nodes.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    a[k] = f(nodes[k]);
    top = std::max(top, a[k]);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * std::exp(a[k] - top);
  return top + std::log(s);
}

double oracle_field(OracleKind kind, const std::function<double(double)>& g, double kappa,
                    double T, double t, double x1, double x2, const GaussHermite& rule) {
  const double sd = std::sqrt(std::max(T - t, 0.0));
  if (kind == OracleKind::no_drift) {
    return rule.expect([&](double z) { return g(x1 + sd * z); });
  }
  if (kappa == 0.0) throw std::invalid_argument("oracle_field: linear_drift needs kappa != 0");
  const double lse = rule.log_expect_exp([&](double z) { return -2.0 * kappa * g(x1 + sd * z); });
  return -lse / (2.0 * kappa) - kappa * x2;
}

double oracle_field_dx1(OracleKind kind, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime, double kappa, double T,
                        double t, double x1, const GaussHermite& rule) {
  const double sd = std::sqrt(std::max(T - t, 0.0));
  if (kind == OracleKind::no_drift) {
    return rule.expect([&](double z) { return g_prime(x1 + sd * z); });
  }
  if (kappa == 0.0) throw std::invalid_argument("oracle_field_dx1: linear_drift needs kappa != 0");
  // u1 = E[g' e^{-2 kappa g}] / E[e^{-2 kappa g}], both with the same max shift.
  double top = -std::numeric_limits<double>::infinity();
  for (double z : rule.nodes) top = std::max(top, -2.0 * kappa * g(x1 + sd * z));
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double x = x1 + sd * rule.nodes[k];
    const double e = rule.weights[k] * std::exp(-2.0 * kappa * g(x) - top);
    num += e * g_prime(x);
    den += e;
  }
  return num / den;
}

std::vector<OracleCheck> validate_oracle(OracleKind kind, const std::function<double(double)>& g,
                                         double kappa, double T,
                                         std::span<const std::array<double, 3>> probes,
                                         std::size_t samples, std::uint64_t seed) {
  const GaussHermite rule(64);
  std::vector<OracleCheck> out;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto [t, x1, x2] = probes[p];
    const double sd = std::sqrt(std::max(T - t, 0.0));
    NormalStream rng(derive_seed(seed, p));
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      const double x = x1 + sd * rng.next_normal();
      const double v = kind == OracleKind::no_drift ? g(x) : std::exp(-2.0 * kappa * g(x));
      const double d = v - mean;
      mean += d / static_cast<double>(k + 1);
      m2 += d * (v - mean);
    }
    const double se_raw = std::sqrt(m2 / static_cast<double>(samples - 1) /
                                    static_cast<double>(samples));
    OracleCheck c{t, x1, x2, oracle_field(kind, g, kappa, T, t, x1, x2, rule), 0.0, 0.0, false};
    if (kind == OracleKind::no_drift) {
      c.monte_carlo = mean;
      c.standard_error = se_raw;
    } else {
      // Delta method through -log(.)/(2 kappa).
      c.monte_carlo = -std::log(mean) / (2.0 * kappa) - kappa * x2;
      c.standard_error = se_raw / (mean * 2.0 * std::fabs(kappa));
    }
    c.pass = std::fabs(c.quadrature - c.monte_carlo) <= 3.0 * c.standard_error + 1e-14;
    out.push_back(c);
  }
  return out;
}

}  // namespace skofbsde
