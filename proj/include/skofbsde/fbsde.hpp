#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "skofbsde/field.hpp"
#include "skofbsde/measure.hpp"

namespace skofbsde {

// One Euler trajectory of dX1 = dW, dX2 = Z^2 dt with Y = u(t, X), Z = u1(t, X).
struct FbsdePath {
  std::vector<double> t_grid;
  std::vector<double> W, X1, X2, Y, Z;
  std::uint64_t seed = 0;
  std::size_t clamped = 0;  // field queries outside the grid box

  int n_steps() const noexcept { return static_cast<int>(t_grid.size()) - 1; }
};

/// Brownian increments sqrt(dt) xi_k with xi_k from NormalStream(seed).
/// Throws std::invalid_argument for n_steps < 1.
FbsdePath simulate_path(const DecouplingField& f, double x1_0, double x2_0, int n_steps,
                        std::uint64_t seed);

/// max_k |Y_k - (Y_n - sum_{j >= k} Z_j dW_j)|.
double backward_residual(const FbsdePath& p);

/// |Y_T - (g(X1_T) - delta(X2_T))|.
double terminal_error(const FbsdePath& p, const LipschitzMap& g, const LipschitzMap& delta);

inline constexpr int kCheckpoints = 8;

// What the batch statistics need from a path; kept so large runs never hold
// full trajectories.
struct PathSummary {
  std::uint64_t seed = 0;
  double Y0 = 0.0;
  std::array<double, kCheckpoints> t{};
  std::array<double, kCheckpoints> Y{};
  std::array<double, kCheckpoints> int_Z2{};   // X2_t - X2_0
  std::array<double, kCheckpoints> qv_Y{};     // sum of squared Y increments
  double z_max = 0.0;
  double X1_T = 0.0, X2_T = 0.0, Y_T = 0.0;
  double backward_residual = 0.0;
  double terminal_error = 0.0;
  std::size_t clamped = 0;
};

/// Checkpoints at t_{n j / 8}, j = 1..8; n_steps must be a multiple of 8.
PathSummary summarize(const FbsdePath& p, const LipschitzMap& g, const LipschitzMap& delta);

struct BatchSpec {
  std::size_t n_paths = 1000;
  int n_steps = 4096;
  std::uint64_t seed = 0;
  double x1_0 = 0.0;
  double x2_0 = 0.0;
};

/// Path i uses derive_seed(spec.seed, i). `visit`, when set, sees every full
/// path (called concurrently in the parallel variant).
std::vector<PathSummary> simulate_batch(const DecouplingField& f, const LipschitzMap& g,
                                        const LipschitzMap& delta, const BatchSpec& spec,
                                        bool use_parallel = true,
                                        const std::function<void(std::size_t, const FbsdePath&)>&
                                            visit = {});

struct MartingaleReport {
  std::size_t n = 0;
  double Y0 = 0.0;
  std::array<double, kCheckpoints> t{};
  std::array<double, kCheckpoints> mean_Y{};
  std::array<double, kCheckpoints> band{};  // 3 sd / sqrt(N)
  std::array<double, kCheckpoints> mean_int_Z2{};
  std::array<double, kCheckpoints> mean_qv_Y{};
  bool band_pass = false;
  bool qv_pass = false;
  bool pass = false;
};

// Relative tolerance between mean int Z^2 and mean realized variance of Y.
inline constexpr double kQvRelTolerance = 0.05;

/// Throws std::invalid_argument for fewer than two paths.
MartingaleReport martingale_check(std::span<const PathSummary> paths);

struct BatchStats {
  double z_max = 0.0;
  double X2_T_max = 0.0;
  double mean_backward_residual = 0.0;
  double max_terminal_error = 0.0;
  std::size_t clamped = 0;
};

BatchStats batch_stats(std::span<const PathSummary> paths);

}  // namespace skofbsde
