#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "skofbsde/coeffs.hpp"
#include "skofbsde/fbsde.hpp"
#include "skofbsde/field.hpp"

namespace skofbsde {

// Uniform r-grid r_i = i dr, i = 0..n, with beta and H tabulated on it.
struct ClockGrid {
  double dr = 0.0;
  std::vector<double> r, beta, H;

  int n_steps() const noexcept { return static_cast<int>(r.size()) - 1; }
  double r_max() const noexcept { return r.back(); }
};

/// Throws HorizonError if r_max exceeds the coefficient horizon.
ClockGrid make_clock_grid(const ProcessCoefficients& c, double r_max, int n_steps);

// Guards of the strong integration.
struct Guards {
  double K1 = 0.0;  // r horizon
  double K2 = 0.0;  // bound on |Sigma|
};

/// K1 = 2 H^{-1}(L_g^2), K2 = 10 sqrt(K1) max beta on [0, K1]. K1 is capped
/// at T_phys.
Guards default_guards(const ProcessCoefficients& c, double L_g);

struct WeakEmbedding {
  double tau_weak = 0.0;           // H^{-1}(X2_T - X2_0)
  double stopped_value = 0.0;      // Y_0 + delta_hat(tau) + int_0^tau beta dB
  double identity_residual = 0.0;  // |stopped_value - g(W_1)|
  double inverse_defect = 0.0;     // max over sampled k of |sigma(H^{-1}(X2_k)) - t_k|
  std::vector<double> dB;          // increments of B on the clock grid
};

/// Time change of the path: sigma(r) = first t with X2_t - X2_0 >= H(r) (X2
/// linear between steps), B_{r_{i+1}} - B_{r_i} = (Y_{sigma(r_{i+1})} - Y_{sigma(r_i)}) / beta(r_i).
/// After tau_weak, B continues with independent normals drawn from
/// NormalStream(extension_key). The inverse defect is sampled every
/// `inverse_stride` steps. Requires T = 1; throws HorizonError if tau_weak is
/// beyond the coefficient horizon.
WeakEmbedding weak_embed(const FbsdePath& p, const ProcessCoefficients& c, const LipschitzMap& g,
                         const ClockGrid& grid, std::uint64_t extension_key,
                         int inverse_stride = 64);

enum class GuardFired { none, K1, K2 };

struct StrongStop {
  double tau = 0.0;
  bool reached = false;      // sigma reached 1
  GuardFired guard = GuardFired::none;
  double beta_dB = 0.0;      // int_0^tau beta dB, B linear inside a step
  std::size_t clamp_steps = 0;   // steps with u1 below the floor
  std::size_t box_queries = 0;   // field queries outside the grid box
  std::size_t steps = 0;
  std::vector<double> sigma_path, Sigma_path;  // filled when requested
};

/// Euler integration of d sigma = beta^2 / u1^2 dr, d Sigma = beta / u1 dB with
/// u1 = u1(sigma, Sigma, H(r)) clamped below by eps. Stops at the first step
/// with sigma >= 1 (crossing interpolated linearly), or when |Sigma| >= K2, or
/// at the end of the grid (K1).
StrongStop strong_stopping_time(const DecouplingField& f, const ClockGrid& grid,
                                std::span<const double> dB, double K2, double eps,
                                double x1_0 = 0.0, bool keep_paths = false);

struct EmbedSpec {
  std::size_t n_paths = 10000;
  int n_steps = 4096;
  std::uint64_t seed = 0;
  std::optional<double> K1;
  std::optional<double> K2;
};

// Share of clamped steps above which a warning is raised.
inline constexpr double kClampWarnShare = 1e-3;

struct EmbeddingResult {
  double c = 0.0;          // Y_0 = u(0, 0, 0)
  double tau_bound = 0.0;  // H^{-1}(L_g^2)
  double dr = 0.0;
  Guards guards;
  std::vector<std::uint64_t> seeds;
  std::vector<double> tau_weak;
  std::vector<double> tau_strong;
  std::vector<double> stopped_value;  // c + delta_hat(tau) + int_0^tau beta dW, strong time
  std::size_t guard_K1 = 0;
  std::size_t guard_K2 = 0;
  std::size_t clamp_steps = 0;
  std::size_t total_steps = 0;
  bool clamp_warning = false;
  double max_identity_residual = 0.0;
  double max_inverse_defect = 0.0;
};

/// Key of the Brownian path driving the strong construction of path `seed`.
std::uint64_t strong_stream_key(std::uint64_t path_seed) noexcept;
/// Key of the normals extending B beyond tau_weak.
std::uint64_t extension_stream_key(std::uint64_t path_seed) noexcept;

/// Strong construction on fresh Brownian paths: path i draws its increments
/// from NormalStream(strong_stream_key(derive_seed(seed, i))). tau_weak is left empty.
EmbeddingResult strong_embed_on_W(const DecouplingField& f, const ProcessCoefficients& c,
                                  double L_g, const EmbedSpec& spec, bool use_parallel = true);

/// Per path i with seed s_i = derive_seed(seed, i): tau_weak from the FBSDE
/// path driven by NormalStream(s_i), tau_strong and stopped_value from the
/// strong construction on NormalStream(strong_stream_key(s_i)).
EmbeddingResult run_embedding(const DecouplingField& f, const ProcessCoefficients& c,
                              const LipschitzMap& g, double L_g, const EmbedSpec& spec,
                              bool use_parallel = true);

struct RoundTrip {
  std::vector<double> tau_weak, tau_strong;
  double mean_abs_diff = 0.0;
  double max_abs_diff = 0.0;
};

/// Feeds the B reconstructed by weak_embed into strong_stopping_time, path by path.
RoundTrip round_trip(const DecouplingField& f, const ProcessCoefficients& c,
                     const LipschitzMap& g, double L_g, const EmbedSpec& spec,
                     bool use_parallel = true);

}  // namespace skofbsde
