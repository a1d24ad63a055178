#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "nsgf/occupancy.hpp"

namespace nsgf {

// Binary occupancy grid, all little-endian:
//   "NSGF" | u16 version | u32 dims[3] | f64 bbox_min[3] | f64 bbox_max[3]
//   | f64 beta | f32 values[dims product], x fastest.
inline constexpr std::uint16_t kGridFormatVersion = 1;

void write_grid(const OccupancyField& field, std::ostream& os);
OccupancyField read_grid(std::istream& is);

void save_grid(const OccupancyField& field, const std::filesystem::path& path);
OccupancyField load_grid(const std::filesystem::path& path);

}  // namespace nsgf
