#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nsgf/occupancy.hpp"

namespace nsgf {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;  // unit, outward

  bool empty() const { return faces.empty(); }
  double area() const;
  void validate() const;
};

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;        // unit, outward
  double confidence;  // |grad O| at the point
};

// Marching cubes over every grid cell, vertices welded along shared edges.
// Normals come from the occupancy gradient (negated); faces wind outward.
// A field without crossings yields an empty mesh.
TriMesh extract_mesh(const OccupancyField& field, double iso = 0.5);

// Area-weighted uniform samples with interpolated normals and shape confidence.
std::vector<SurfaceSample> sample_surface(const TriMesh& mesh, const OccupancyField& field,
                                          std::size_t count, std::uint64_t seed);

// Fewer faces than this is too degenerate to fit primitives or fields to.
inline constexpr std::size_t kMinFittableFaces = 4;

void write_obj(const TriMesh& mesh, std::ostream& os);
TriMesh read_obj(std::istream& is);

}  // namespace nsgf
