#pragma once

#include <array>
#include <cstdint>

namespace nsgf::detail {

extern const std::array<std::array<std::int8_t, 16>, 256> kMcTriTable;

}  // namespace nsgf::detail
