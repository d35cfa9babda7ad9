#pragma once

namespace skofbsde {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Standard normal density, distribution function and quantile.
// norm_cdf goes through erfc, which keeps full relative accuracy in the
// lower tail. norm_quantile is Wichura's AS 241 (PPND16), relative error
// about 1e-16 on (0, 1).
double norm_pdf(double x) noexcept;
double norm_cdf(double x) noexcept;

/// Throws DomainError unless 0 < p < 1.
double norm_quantile(double p);

}  // namespace skofbsde
