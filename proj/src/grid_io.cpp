#include "nsgf/grid_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nsgf {
namespace {

template <typename T>
void put(std::ostream& os, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T take(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), bytes.size())) throw InputError("occupancy grid file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_grid(const OccupancyField& field, std::ostream& os) {
  os.write("NSGF", 4);
  put<std::uint16_t>(os, kGridFormatVersion);
  for (int d : field.dims()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (int a = 0; a < 3; ++a) put<double>(os, field.bbox_min()[a]);
  for (int a = 0; a < 3; ++a) put<double>(os, field.bbox_max()[a]);
  put<double>(os, field.smoothing_beta());
  for (float v : field.data()) put<float>(os, v);
}

OccupancyField read_grid(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "NSGF", 4) != 0) {
    throw InputError("not an occupancy grid file (bad magic)");
  }
  const auto version = take<std::uint16_t>(is);
  if (version != kGridFormatVersion) {
    throw InputError("unsupported occupancy grid format version " + std::to_string(version));
  }
  GridSpec grid;
  for (int a = 0; a < 3; ++a) {
    const auto d = take<std::uint32_t>(is);
    if (d < 2 || d > 4096) throw InputError("occupancy grid dims out of range");
    grid.dims[a] = static_cast<int>(d);
  }
  for (int a = 0; a < 3; ++a) grid.bbox_min[a] = take<double>(is);
  for (int a = 0; a < 3; ++a) grid.bbox_max[a] = take<double>(is);
  const double beta = take<double>(is);
  const std::size_t n = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  std::vector<float> data(n);
  for (auto& v : data) v = take<float>(is);
  return OccupancyField(grid, beta, std::move(data));
}

void save_grid(const OccupancyField& field, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_grid(field, os);
  if (!os) throw InputError("failed writing " + path.string());
}

OccupancyField load_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  try {
    return read_grid(is);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace nsgf
