#pragma once

#include <filesystem>

#include "binaria/grid.hpp"

namespace binaria {

/// Writes `<stem>.raw` (little-endian float64, x fastest) and `<stem>.json`
/// carrying origin, spacing and dims.
void write_field(const ScalarField& f, const std::filesystem::path& stem);
ScalarField read_field(const std::filesystem::path& stem);

enum class Axis { x, y, z };

/// CSV rows "x,y,z,value" for the cell layer of `axis` nearest to `position`.
void write_slice_csv(const ScalarField& f, Axis axis, double position, const std::filesystem::path& path);

}  // namespace binaria
