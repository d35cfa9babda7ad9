#include "skofbsde/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "skofbsde/errors.hpp"
#include "skofbsde/normal.hpp"

namespace skofbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sup |x phi(x)| = phi(1); sup |(x^2 - 1) phi(x)| = phi(0).
constexpr double kSupPhiPrime = 0.24197072451914336;
constexpr double kSupPhiSecond = kInvSqrt2Pi;

double probe_sup_abs(const std::function<double(double)>& f) {
  double sup = 0.0;
  const double step = (kProbeHi - kProbeLo) / (kProbePoints - 1);
  for (int k = 0; k < kProbePoints; ++k) {
    sup = std::max(sup, std::fabs(f(kProbeLo + k * step)));
  }
  return sup;
}

}  // namespace

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::normal: return "normal";
    case MeasureKind::uniform: return "uniform";
    case MeasureKind::piecewise_cdf: return "piecewise_cdf";
    case MeasureKind::empirical: return "empirical";
  }
  return "unknown";
}

TargetMeasure TargetMeasure::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || sd < 0.0) {
    throw ConfigError("normal measure: need finite mean and sd >= 0");
  }
  TargetMeasure m;
  m.kind_ = MeasureKind::normal;
  m.a_ = mean;
  m.b_ = sd;
  m.support_lo_ = sd > 0.0 ? -kInf : mean;
  m.support_hi_ = sd > 0.0 ? kInf : mean;
  return m;
}

TargetMeasure TargetMeasure::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw ConfigError("uniform measure: need finite lo <= hi");
  }
  TargetMeasure m;
  m.kind_ = MeasureKind::uniform;
  m.a_ = lo;
  m.b_ = hi;
  m.support_lo_ = lo;
  m.support_hi_ = hi;
  return m;
}

TargetMeasure TargetMeasure::piecewise_cdf(std::vector<double> x, std::vector<double> F) {
  if (x.size() < 2 || x.size() != F.size()) {
    throw ConfigError("piecewise_cdf: need at least two breakpoints with matching F values");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(F[i])) {
      throw ConfigError("piecewise_cdf: non-finite breakpoint");
    }
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw ConfigError("piecewise_cdf: breakpoints must be strictly increasing in x");
    }
    if (i > 0 && F[i] < F[i - 1]) {
      throw ConfigError("piecewise_cdf: F must be non-decreasing");
    }
  }
  if (F.front() != 0.0 || F.back() != 1.0) {
    throw ConfigError("piecewise_cdf: F must start at 0 and end at 1");
  }
  TargetMeasure m;
  m.kind_ = MeasureKind::piecewise_cdf;
  m.xs_ = std::move(x);
  m.fs_ = std::move(F);
  // Essential support: first point where F leaves 0, last point before F hits 1.
  std::size_t lo = 0;
  while (lo + 1 < m.fs_.size() && m.fs_[lo + 1] == 0.0) ++lo;
  std::size_t hi = m.fs_.size() - 1;
  while (hi > 0 && m.fs_[hi - 1] == 1.0) --hi;
  m.support_lo_ = m.xs_[lo];
  m.support_hi_ = m.xs_[hi];
  return m;
}

TargetMeasure TargetMeasure::empirical(std::vector<double> samples) {
  if (samples.empty()) throw ConfigError("empirical measure: no samples");
  for (double s : samples) {
    if (!std::isfinite(s)) throw ConfigError("empirical measure: non-finite sample");
  }
  std::stable_sort(samples.begin(), samples.end());
  TargetMeasure m;
  m.kind_ = MeasureKind::empirical;
  m.xs_ = std::move(samples);
  m.support_lo_ = m.xs_.front();
  m.support_hi_ = m.xs_.back();
  return m;
}

double TargetMeasure::cdf(double x) const noexcept {
  switch (kind_) {
    case MeasureKind::normal:
      if (b_ == 0.0) return x >= a_ ? 1.0 : 0.0;
      return norm_cdf((x - a_) / b_);
    case MeasureKind::uniform:
      if (x >= b_) return 1.0;
      if (x < a_) return 0.0;
      return (x - a_) / (b_ - a_);
    case MeasureKind::piecewise_cdf: {
      if (x < xs_.front()) return 0.0;
      if (x >= xs_.back()) return 1.0;
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - xs_.begin());  // xs_[i-1] <= x < xs_[i]
      const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
      return fs_[i - 1] + w * (fs_[i] - fs_[i - 1]);
    }
    case MeasureKind::empirical: {
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      return static_cast<double>(it - xs_.begin()) / static_cast<double>(xs_.size());
    }
  }
  return 0.0;
}

double TargetMeasure::quantile(double y) const {
  if (!(y > 0.0 && y < 1.0)) throw DomainError("quantile: level must lie in (0, 1)");
  switch (kind_) {
    case MeasureKind::normal:
      return a_ + b_ * norm_quantile(y);
    case MeasureKind::uniform:
      return a_ + y * (b_ - a_);
    case MeasureKind::piecewise_cdf: {
      // First breakpoint with F >= y; F[i-1] < y there, so the segment has positive slope.
      const auto it = std::lower_bound(fs_.begin(), fs_.end(), y);
      const std::size_t i = static_cast<std::size_t>(it - fs_.begin());
      const double w = (y - fs_[i - 1]) / (fs_[i] - fs_[i - 1]);
      return xs_[i - 1] + w * (xs_[i] - xs_[i - 1]);
    }
    case MeasureKind::empirical: {
      // Smallest k with k / n >= y; the k-th order statistic (ties: smallest index).
      const std::size_t n = xs_.size();
      auto k = static_cast<std::size_t>(std::ceil(y * static_cast<double>(n)));
      k = std::clamp<std::size_t>(k, 1, n);
      while (k > 1 && static_cast<double>(k - 1) / static_cast<double>(n) >= y) --k;
      while (k < n && static_cast<double>(k) / static_cast<double>(n) < y) ++k;
      return xs_[k - 1];
    }
  }
  return 0.0;
}

double TargetMeasure::mean() const noexcept {
  switch (kind_) {
    case MeasureKind::normal: return a_;
    case MeasureKind::uniform: return 0.5 * (a_ + b_);
    case MeasureKind::piecewise_cdf: {
      double m = 0.0;
      for (std::size_t i = 1; i < xs_.size(); ++i) {
        m += (fs_[i] - fs_[i - 1]) * 0.5 * (xs_[i] + xs_[i - 1]);
      }
      return m;
    }
    case MeasureKind::empirical:
      return std::accumulate(xs_.begin(), xs_.end(), 0.0) / static_cast<double>(xs_.size());
  }
  return 0.0;
}

double TargetMeasure::variance() const noexcept {
  switch (kind_) {
    case MeasureKind::normal: return b_ * b_;
    case MeasureKind::uniform: return (b_ - a_) * (b_ - a_) / 12.0;
    case MeasureKind::piecewise_cdf: {
      // Uniform mass on each segment: E[X^2] = p (a^2 + ab + b^2) / 3.
      double m2 = 0.0;
      for (std::size_t i = 1; i < xs_.size(); ++i) {
        const double a = xs_[i - 1], b = xs_[i];
        m2 += (fs_[i] - fs_[i - 1]) * (a * a + a * b + b * b) / 3.0;
      }
      const double m = mean();
      return m2 - m * m;
    }
    case MeasureKind::empirical: {
      const double m = mean();
      double s = 0.0;
      for (double x : xs_) s += (x - m) * (x - m);
      return s / static_cast<double>(xs_.size());
    }
  }
  return 0.0;
}

bool TargetMeasure::is_dirac() const noexcept { return support_lo_ == support_hi_; }

double probe_lipschitz(const std::function<double(double)>& f) {
  double sup = 0.0;
  const double step = (kProbeHi - kProbeLo) / (kProbePoints - 1);
  for (int k = 0; k < kProbePoints; ++k) {
    const double x = kProbeLo + k * step;
    sup = std::max(sup, std::fabs(f(x + kProbeStep) - f(x)) / kProbeStep);
  }
  return sup;
}

QuantileTransform make_g(const TargetMeasure& m) {
  if (m.is_dirac()) {
    throw ConfigError("make_g: target is a Dirac measure, g would be identically constant");
  }
  QuantileTransform g;
  switch (m.kind()) {
    case MeasureKind::normal: {
      const double mu = m.param_a(), sd = m.param_b();
      g.map.value = [mu, sd](double x) { return mu + sd * x; };
      g.map.derivative = [sd](double) { return sd; };
      g.map.lipschitz = sd;
      g.smoothness = {sd, 0.0, 0.0, false};
      return g;
    }
    case MeasureKind::uniform: {
      const double lo = m.param_a(), width = m.param_b() - m.param_a();
      g.map.value = [lo, width](double x) { return lo + width * norm_cdf(x); };
      g.map.derivative = [width](double x) { return width * norm_pdf(x); };
      g.map.lipschitz = width * kInvSqrt2Pi;
      g.smoothness = {g.map.lipschitz, width * kSupPhiPrime, width * kSupPhiSecond, false};
      return g;
    }
    case MeasureKind::piecewise_cdf:
    case MeasureKind::empirical:
      break;
  }

  // Generic route through the quantile; copy the measure into the closure.
  g.map.value = [m](double x) {
    const double p = norm_cdf(x);
    if (p <= 0.0) return m.support_lo();
    if (p >= 1.0) return m.support_hi();
    return m.quantile(p);
  };
  const auto value = g.map.value;
  if (m.kind() == MeasureKind::empirical) {
    // Step function: derivative zero a.e., jumps at every atom.
    g.map.derivative = [](double) { return 0.0; };
    g.map.lipschitz = std::numeric_limits<double>::infinity();
    g.map.lipschitz_finite = false;
    g.warnings.push_back("empirical measure: g is a step function and not Lipschitz");
    return g;
  }

  // Piecewise-linear CDF: g' = phi(x) / f on the segment that contains Phi(x).
  const auto& xs = m.xs();
  const auto& fs = m.fs();
  bool jump = false;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (fs[i] == fs[i - 1] && fs[i] > 0.0 && fs[i] < 1.0) jump = true;
  }
  g.map.derivative = [xs, fs](double x) {
    const double p = norm_cdf(x);
    if (p <= 0.0 || p >= 1.0) return 0.0;
    const auto it = std::lower_bound(fs.begin(), fs.end(), p);
    const std::size_t i = static_cast<std::size_t>(it - fs.begin());
    if (i == 0 || i >= fs.size()) return 0.0;
    const double density = (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1]);
    return norm_pdf(x) / density;
  };
  if (jump) {
    g.map.lipschitz = std::numeric_limits<double>::infinity();
    g.map.lipschitz_finite = false;
    g.warnings.push_back("piecewise_cdf: flat CDF segment inside the support, quantile jumps");
  } else {
    g.map.lipschitz = probe_lipschitz(value);
  }
  g.monotone = true;
  const double h = 1e-3;
  const auto d = g.map.derivative;
  g.smoothness.L_g = g.map.lipschitz;
  g.smoothness.L_g1 = probe_sup_abs([d, h](double x) { return (d(x + h) - d(x - h)) / (2 * h); });
  g.smoothness.L_g2 = probe_sup_abs(
      [d, h](double x) { return (d(x + h) - 2 * d(x) + d(x - h)) / (h * h); });
  g.smoothness.estimated = true;
  g.warnings.push_back("smoothness bounds of g are finite-difference estimates");
  return g;
}

}  // namespace skofbsde
