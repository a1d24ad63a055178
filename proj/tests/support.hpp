#pragma once

#include <numbers>
#include <random>

#include "nsgf/model.hpp"
#include "nsgf/shapes.hpp"
#include "nsgf/transfer.hpp"

namespace nsgf::test {

// Bowl with a full cap and solid wall: a ball of radius r.
inline ShapeSpec sphere_spec(double r, const Vec3& center = Vec3::Zero()) {
  ShapeSpec s;
  s.category = Category::kBowl;
  s.params = {{"radius", r}, {"thickness", r}, {"cap_angle", std::numbers::pi}};
  s.pose.translation = center;
  return s;
}

inline ShapeSpec box_spec(double hx, double hy, double hz) {
  ShapeSpec s;
  s.category = Category::kBox;
  s.params = {{"hx", hx}, {"hy", hy}, {"hz", hz}};
  return s;
}

inline GridSpec cube_grid(double half, int dims) {
  GridSpec g;
  g.dims = {dims, dims, dims};
  g.bbox_min = Vec3::Constant(-half);
  g.bbox_max = Vec3::Constant(half);
  return g;
}

inline Architecture small_arch(double max_width = 0.25) {
  Architecture a;
  a.feature_dim = 4;
  a.grid_res = 4;
  a.hidden = 16;
  a.backbone_layers = 3;
  a.head_layers = 2;
  a.max_width = max_width;
  return a;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v;
  do v = Vec3(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6);
  return v.normalized();
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

// Occupancy and mesh only; primitives and field are left empty.
inline ObjectRecord make_record(const std::string& id, const ShapeSpec& spec, const GridSpec& grid = {}) {
  auto gen = generate_shape(spec, grid);
  ObjectRecord rec;
  rec.id = id;
  rec.mesh = extract_mesh(gen.field);
  rec.occupancy = std::move(gen.field);
  return rec;
}

inline std::vector<Vec3> surface_points(const ObjectRecord& rec, std::size_t n, std::uint64_t seed) {
  return sample_points(sample_surface(rec.mesh, rec.occupancy, n, seed));
}

}  // namespace nsgf::test
