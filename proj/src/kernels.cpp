#include "skofbsde/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace skofbsde::kernels {

namespace {

inline std::size_t at(const LayerShape& s, int i, int j) {
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(s.nx2) +
         static_cast<std::size_t>(j);
}

inline double d1_node(const LayerShape& s, const double* v, int i, int j) {
  const int n = s.nx1;
  if (n == 2) return (v[at(s, 1, j)] - v[at(s, 0, j)]) / s.dx1;
  if (i == 0) {
    return (-3.0 * v[at(s, 0, j)] + 4.0 * v[at(s, 1, j)] - v[at(s, 2, j)]) / (2.0 * s.dx1);
  }
  if (i == n - 1) {
    return (3.0 * v[at(s, n - 1, j)] - 4.0 * v[at(s, n - 2, j)] + v[at(s, n - 3, j)]) /
           (2.0 * s.dx1);
  }
  return (v[at(s, i + 1, j)] - v[at(s, i - 1, j)]) / (2.0 * s.dx1);
}

inline double d2_node(const LayerShape& s, const double* v, int i, int j) {
  const int n = s.nx2;
  const double* row = v + at(s, i, 0);
  if (n == 2) return (row[1] - row[0]) / s.dx2;
  if (j == 0) return (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * s.dx2);
  if (j == n - 1) return (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * s.dx2);
  return (row[j + 1] - row[j - 1]) / (2.0 * s.dx2);
}

inline double upwind_x2(const LayerShape& s, const double* row, int j) {
  return j < s.nx2 - 1 ? (row[j + 1] - row[j]) / s.dx2 : (row[j] - row[j - 1]) / s.dx2;
}

inline double upwind_x1(const LayerShape& s, const double* v, int i, int j, double b) {
  if (b > 0.0) {
    return i < s.nx1 - 1 ? (v[at(s, i + 1, j)] - v[at(s, i, j)]) / s.dx1
                         : (v[at(s, i, j)] - v[at(s, i - 1, j)]) / s.dx1;
  }
  return i > 0 ? (v[at(s, i, j)] - v[at(s, i - 1, j)]) / s.dx1
               : (v[at(s, 1, j)] - v[at(s, 0, j)]) / s.dx1;
}

inline std::size_t coupling_row(const LayerShape& s, const double* w, double cutoff, double* c,
                                int i) {
  const double h2 = cutoff * cutoff;
  std::size_t hits = 0;
  for (int j = 0; j < s.nx2; ++j) {
    const double z = d1_node(s, w, i, j);
    const double z2 = z * z;
    if (z2 >= h2) ++hits;
    c[at(s, i, j)] = std::min(z2, h2);
  }
  return hits;
}

inline void transport_row(const LayerShape& s, const double* prev, const double* c, double dt,
                          double* rhs, int i) {
  const double* row = prev + at(s, i, 0);
  for (int j = 0; j < s.nx2; ++j) {
    const std::size_t k = at(s, i, j);
    rhs[k] = row[j] + dt * c[k] * upwind_x2(s, row, j);
  }
}

inline void derivative_row(const LayerShape& s, const double* prev, const double* c,
                           const double* b, double dt, double* rhs, int i) {
  const double* row = prev + at(s, i, 0);
  for (int j = 0; j < s.nx2; ++j) {
    const std::size_t k = at(s, i, j);
    rhs[k] = row[j] + dt * (c[k] * upwind_x2(s, row, j) + b[k] * upwind_x1(s, prev, i, j, b[k]));
  }
}

// Thomas sweep over columns [j0, j1), rows outer so the inner loop is contiguous.
inline void diffusion_block(const LayerShape& s, const DiffusionFactor& f, double* x, int j0,
                            int j1) {
  const int n = s.nx1;
  for (int i = 1; i < n - 1; ++i) {
    double* cur = x + at(s, i, 0);
    const double* above = x + at(s, i - 1, 0);
    for (int j = j0; j < j1; ++j) cur[j] = (cur[j] + f.a * above[j]) * f.inv_denom[i];
  }
  for (int i = n - 2; i >= 1; --i) {
    double* cur = x + at(s, i, 0);
    const double* below = x + at(s, i + 1, 0);
    for (int j = j0; j < j1; ++j) cur[j] = cur[j] - f.super[i] * below[j];
  }
}

constexpr int kColumnBlock = 32;

}  // namespace

DiffusionFactor::DiffusionFactor(int nx1, double dt, double dx1)
    : a(0.5 * dt / (dx1 * dx1)), inv_denom(nx1, 1.0), super(nx1, 0.0) {
  for (int i = 1; i < nx1 - 1; ++i) {
    const double denom = 1.0 + 2.0 * a + a * super[i - 1];
    inv_denom[i] = 1.0 / denom;
    super[i] = -a / denom;
  }
}

namespace serial {

void d1(const LayerShape& s, std::span<const double> in, std::span<double> out) {
  for (int i = 0; i < s.nx1; ++i) {
    for (int j = 0; j < s.nx2; ++j) out[at(s, i, j)] = d1_node(s, in.data(), i, j);
  }
}

void d2(const LayerShape& s, std::span<const double> in, std::span<double> out) {
  for (int i = 0; i < s.nx1; ++i) {
    for (int j = 0; j < s.nx2; ++j) out[at(s, i, j)] = d2_node(s, in.data(), i, j);
  }
}

std::size_t coupling_coefficient(const LayerShape& s, std::span<const double> w, double cutoff,
                                 std::span<double> c) {
  std::size_t hits = 0;
  for (int i = 0; i < s.nx1; ++i) hits += coupling_row(s, w.data(), cutoff, c.data(), i);
  return hits;
}

void transport_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                   double dt, std::span<double> rhs) {
  for (int i = 0; i < s.nx1; ++i) transport_row(s, prev.data(), c.data(), dt, rhs.data(), i);
}

void derivative_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                    std::span<const double> b, double dt, std::span<double> rhs) {
  for (int i = 0; i < s.nx1; ++i) {
    derivative_row(s, prev.data(), c.data(), b.data(), dt, rhs.data(), i);
  }
}

void diffusion_solve(const LayerShape& s, const DiffusionFactor& f, std::span<double> rhs) {
  // Textbook column-by-column Thomas algorithm.
  const int n = s.nx1;
  double* x = rhs.data();
  for (int j = 0; j < s.nx2; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      x[at(s, i, j)] = (x[at(s, i, j)] + f.a * x[at(s, i - 1, j)]) * f.inv_denom[i];
    }
    for (int i = n - 2; i >= 1; --i) {
      x[at(s, i, j)] = x[at(s, i, j)] - f.super[i] * x[at(s, i + 1, j)];
    }
  }
}

}  // namespace serial

namespace parallel {

void d1(const LayerShape& s, std::span<const double> in, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.nx1; ++i) {
    for (int j = 0; j < s.nx2; ++j) out[at(s, i, j)] = d1_node(s, in.data(), i, j);
  }
}

void d2(const LayerShape& s, std::span<const double> in, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.nx1; ++i) {
    for (int j = 0; j < s.nx2; ++j) out[at(s, i, j)] = d2_node(s, in.data(), i, j);
  }
}

std::size_t coupling_coefficient(const LayerShape& s, std::span<const double> w, double cutoff,
                                 std::span<double> c) {
  std::size_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (int i = 0; i < s.nx1; ++i) hits += coupling_row(s, w.data(), cutoff, c.data(), i);
  return hits;
}

void transport_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                   double dt, std::span<double> rhs) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.nx1; ++i) transport_row(s, prev.data(), c.data(), dt, rhs.data(), i);
}

void derivative_rhs(const LayerShape& s, std::span<const double> prev, std::span<const double> c,
                    std::span<const double> b, double dt, std::span<double> rhs) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.nx1; ++i) {
    derivative_row(s, prev.data(), c.data(), b.data(), dt, rhs.data(), i);
  }
}

void diffusion_solve(const LayerShape& s, const DiffusionFactor& f, std::span<double> rhs) {
  const int blocks = (s.nx2 + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int j0 = b * kColumnBlock;
    diffusion_block(s, f, rhs.data(), j0, std::min(s.nx2, j0 + kColumnBlock));
  }
}

}  // namespace parallel

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k] - b[k]));
  return m;
}

}  // namespace skofbsde::kernels
