#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "skofbsde/coeffs.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/measure.hpp"

namespace skofbsde {

inline constexpr int kSpecVersion = 1;

struct CoefficientSpec {
  double G0 = 0.0;
  TimeFunction alpha = TimeFunction::constant(0.0);
  TimeFunction beta = TimeFunction::constant(1.0);
  std::optional<double> beta_floor;
  std::optional<double> T_phys;
  int n_quad = ProcessCoefficients::kDefaultQuadrature;
};

struct SimulationSpec {
  std::size_t n_paths = 10000;
  int n_steps = 4096;
  std::uint64_t seed = 1;
};

struct EmbeddingSpec {
  std::optional<double> K1;
  std::optional<double> K2;
  std::size_t roundtrip_paths = 1000;
};

// Parsed run configuration. Relative file references are resolved against
// the directory of the config file.
struct RunConfig {
  TargetMeasure measure = TargetMeasure::normal(0.0, 1.0);
  CoefficientSpec coefficients;
  SolverConfig solver;
  bool compare_derivatives = false;
  SimulationSpec simulation;
  EmbeddingSpec embedding;
  std::filesystem::path output_dir = "out";
  nlohmann::json source;  // the document as read
};

/// Strict parse: spec_version must be 1, unknown keys and wrong types are
/// rejected. Throws ConfigError with the offending key path.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Builds the process coefficients, using the default horizon unless T_phys is set.
ProcessCoefficients build_coefficients(const CoefficientSpec& spec, double L_g, double T);

}  // namespace skofbsde
