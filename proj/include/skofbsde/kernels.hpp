#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace skofbsde::kernels {

// One (x1, x2) layer of a field, stored row-major with x2 innermost:
// value(i, j) = data[i * nx2 + j].
struct LayerShape {
  int nx1;
  int nx2;
  double dx1;
  double dx2;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(nx1) * static_cast<std::size_t>(nx2);
  }
};

// LU factors of (I - (dt/2) D11) with identity rows at both x1 edges
// (zero second derivative there). The matrix is the same for every x2 column.
struct DiffusionFactor {
  double a = 0.0;                  // dt / (2 dx1^2)
  std::vector<double> inv_denom;   // 1 / pivot per row
  std::vector<double> super;       // modified super-diagonal

  DiffusionFactor() = default;
  DiffusionFactor(int nx1, double dt, double dx1);
};

// The serial and parallel variants produce bit-identical results: every
// output node is computed by the same arithmetic, only the loop schedule
// differs. The serial versions are the reference used in tests.

namespace serial {

/// out = d/dx1 (central inside, second-order one-sided at the edges).
void d1(const LayerShape& s, std::span<const double> in, std::span<double> out);
/// out = d/dx2, same stencils.
void d2(const LayerShape& s, std::span<const double> in, std::span<double> out);

/// c = chi_H(d/dx1 w)^2 = min((d/dx1 w)^2, H^2). Returns the number of nodes
/// where the cutoff was active.
std::size_t coupling_coefficient(const LayerShape& s, std::span<const double> w, double cutoff,
                                 std::span<double> c);

/// rhs = prev + dt * c * D2+ prev, D2+ the forward (upwind) difference in x2,
/// backward at the top edge.
void transport_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                   double dt, std::span<double> rhs);

/// rhs = prev + dt * (c * D2+ prev + b * D1up prev), D1up upwind by the sign of b.
void derivative_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                    std::span<const double> b, double dt, std::span<double> rhs);

/// Solves (I - dt/2 D11) x = rhs column by column, in place.
void diffusion_solve(const LayerShape& s, const DiffusionFactor& f, std::span<double> rhs);

}  // namespace serial

namespace parallel {

void d1(const LayerShape& s, std::span<const double> in, std::span<double> out);
void d2(const LayerShape& s, std::span<const double> in, std::span<double> out);
std::size_t coupling_coefficient(const LayerShape& s, std::span<const double> w, double cutoff,
                                 std::span<double> c);
void transport_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                   double dt, std::span<double> rhs);
void derivative_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                    std::span<const double> b, double dt, std::span<double> rhs);
void diffusion_solve(const LayerShape& s, const DiffusionFactor& f, std::span<double> rhs);

}  // namespace parallel

/// max |a - b|; serial, used for fixed-point residuals.
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace skofbsde::kernels
