#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsgf/occupancy.hpp"

namespace nsgf {

enum class Category { kBottle, kBowl, kBox };

std::string to_string(Category c);
Category category_from_string(const std::string& name);

// Similarity transform x -> scale * R x + t.
struct Sim3 {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
  Vec3 apply_inverse(const Vec3& x) const { return rotation.conjugate() * (x - translation) / scale; }
};

// Parametric object description. Parameter names per category:
//   bottle: height, r0..rK (radius knots, bottom to top, K >= 1)
//   bowl:   radius, thickness, cap_angle (radians from the bottom pole)
//   box:    hx, hy, hz (half extents)
// All lengths are canonical-frame units. The pose places the object in the
// grid frame; identity for canonical instances.
struct ShapeSpec {
  Category category = Category::kBottle;
  std::map<std::string, double> params;
  Sim3 pose;
  std::uint64_t seed = 0;

  void validate() const;  // throws InputError naming the offending parameter
};

// Exact signed distance of a ShapeSpec (negative inside). Only oracles and
// tests consult it; the pipeline works from the sampled occupancy grid.
class AnalyticShape {
 public:
  explicit AnalyticShape(const ShapeSpec& spec);

  double sdf(const Vec3& x) const;
  Vec3 normal(const Vec3& x) const;
  // sigma(-sdf / beta)
  double occupancy(const Vec3& x, double beta) const;

  const ShapeSpec& spec() const { return spec_; }

 private:
  double local_sdf(const Vec3& x) const;

  ShapeSpec spec_;
  std::vector<Eigen::Vector2d> profile_;  // bottle (rho, z) polygon, axis segment last
  double bowl_radius_ = 0, bowl_thickness_ = 0, bowl_cap_ = 0, bowl_center_z_ = 0;
  Vec3 box_half_ = Vec3::Zero();
};

struct GeneratedShape {
  OccupancyField field;
  AnalyticShape shape;
};

// Samples sigma(-sdf/beta) on the grid nodes; beta defaults to one voxel edge.
GeneratedShape generate_shape(const ShapeSpec& spec, const GridSpec& grid,
                              std::optional<double> beta = std::nullopt);

// Canonical shape of each family and seeded random instances.
ShapeSpec canonical_instance(Category c);
ShapeSpec random_instance(Category c, std::uint64_t seed);
ShapeSpec cylinder_spec(double radius, double height);

}  // namespace nsgf
