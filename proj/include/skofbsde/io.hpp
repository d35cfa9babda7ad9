#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "skofbsde/embed.hpp"
#include "skofbsde/fbsde.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/verify.hpp"

namespace skofbsde {

/// Reads `columns` numeric columns from a CSV; a non-numeric first line is
/// taken as a header. Throws ConfigError on unreadable or ragged input.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, int columns);

/// Shortest text that parses back to the same double.
std::string format_double(double x);

// Field file layout:
//   # skofbsde-field 1
//   # T,<T>
//   # t_grid,<values>
//   # x1_grid,<values>
//   # x2_grid,<values>
//   u,u1,u2
//   <one row per node: t outer, x1 middle, x2 inner>
// Diagnostics go to a JSON sidecar next to it (<file>.json).
void write_field(const std::filesystem::path& csv, const DecouplingField& f,
                 const DiagnosticsReport& report);
/// Restores grids and values. The solver settings are not stored; the
/// caller attaches them. Throws ConfigError on malformed files.
DecouplingField read_field(const std::filesystem::path& csv);

nlohmann::json to_json(const SolverConfig& c);
nlohmann::json to_json(const DiagnosticsReport& r);
nlohmann::json to_json(const LawReport& r);
nlohmann::json to_json(const MartingaleReport& r);

/// Columns seed, tau_weak, tau_strong, stopped_value.
void write_results(const std::filesystem::path& csv, const EmbeddingResult& r);

struct ResultsTable {
  std::vector<std::uint64_t> seed;
  std::vector<double> tau_weak, tau_strong, stopped_value;
};
ResultsTable read_results(const std::filesystem::path& csv);

/// Columns t, W, X1, X2, Y, Z.
void write_path(const std::filesystem::path& csv, const FbsdePath& p);

/// Equal-width histogram over the sample range: columns lo, hi, count.
void write_histogram(const std::filesystem::path& csv, const std::vector<double>& samples,
                     int bins = 50);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);

}  // namespace skofbsde
