#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "viscoflow/state_solver.hpp"

namespace viscoflow {

// Analytic space-time fields, all vanishing at t = 0:
//   sine  : t·sin(πx)
//   pulse : sin(πt/T)·exp(−50(x − ½)²)
//   zero  : 0

bool is_preset(std::string_view name);

/// Throws std::invalid_argument for unknown names.
double preset_value(std::string_view name, double t, double x, double T);

/// Nodal samples scale·preset(t_k, x_i) for k = 0..n_t.
TimeSeries preset_series(std::string_view name, double scale, const Mesh& mesh,
                         const TimeGrid& grid);

/// Reads a nodal space-time field from CSV. The header must name columns `k`
/// and `node` plus one value column (`value`, `g`, or `z`, first match wins).
/// Every (k, node) pair of the grid must be present. Throws std::runtime_error
/// on IO or format problems.
TimeSeries read_series_csv(const std::filesystem::path& path, const Mesh& mesh,
                           const TimeGrid& grid);

/// A preset name or a CSV path, scaled.
TimeSeries load_series(const std::string& source, double scale, const Mesh& mesh,
                       const TimeGrid& grid);

}  // namespace viscoflow
