#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nsgf/types.hpp"

namespace nsgf {

// Axis-aligned node grid over [bbox_min, bbox_max].
struct GridSpec {
  std::array<int, 3> dims{64, 64, 64};
  Vec3 bbox_min{-0.6, -0.6, -0.6};
  Vec3 bbox_max{0.6, 0.6, 0.6};

  Vec3 spacing() const;
  // Voxel edge length; the smallest per-axis spacing.
  double voxel() const;
  void validate() const;
};

// Occupancy probabilities on grid nodes, x-fastest, with a continuous
// trilinear interpolant. Values are stored as f32 so the in-memory field and
// its file representation agree bit for bit.
class OccupancyField {
 public:
  OccupancyField() = default;
  OccupancyField(GridSpec grid, double smoothing_beta, std::vector<float> data);

  static OccupancyField constant(GridSpec grid, float value);

  const GridSpec& grid() const { return grid_; }
  const std::array<int, 3>& dims() const { return grid_.dims; }
  const Vec3& bbox_min() const { return grid_.bbox_min; }
  const Vec3& bbox_max() const { return grid_.bbox_max; }
  Vec3 spacing() const { return spacing_; }
  double voxel() const { return voxel_; }
  double smoothing_beta() const { return beta_; }
  std::span<const float> data() const { return data_; }
  bool empty() const { return data_.empty(); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * grid_.dims[1] + j) * grid_.dims[0] + i;
  }
  float node(int i, int j, int k) const { return data_[index(i, j, k)]; }
  Vec3 node_position(int i, int j, int k) const;
  bool contains(const Vec3& p) const;

  struct Sample {
    double value;
    bool clamped;  // point was outside the bbox and clamped onto it
  };
  Sample query(const Vec3& p) const;
  double occupancy(const Vec3& p) const { return query(p).value; }

  struct Gradient {
    Vec3 value;
    bool one_sided;  // within one voxel of the bbox: forward/backward differences
  };
  // Finite differences of the trilinear interpolant, step = half voxel.
  Gradient gradient(const Vec3& p) const;

 private:
  GridSpec grid_;
  Vec3 spacing_ = Vec3::Zero();
  double voxel_ = 0.0;
  double beta_ = 0.0;
  std::vector<float> data_;
};

// Free-function forms of the field queries.
inline OccupancyField::Sample query_occupancy(const OccupancyField& f, const Vec3& p) { return f.query(p); }
inline OccupancyField::Gradient occupancy_gradient(const OccupancyField& f, const Vec3& p) {
  return f.gradient(p);
}
// Norm of the occupancy gradient; sharper surfaces give larger values.
double shape_confidence(const OccupancyField& f, const Vec3& p);

// Outward unit normal (-grad / |grad|). Returns false where the gradient vanishes.
bool outward_normal(const OccupancyField& f, const Vec3& p, Vec3& normal);

// Position of the iso-crossing on the segment x0 -> x1 (values straddle iso),
// refined by bisection until the bracket is below `tol`.
Vec3 bisect_crossing(const OccupancyField& f, Vec3 x0, Vec3 x1, double iso, double tol);

}  // namespace nsgf
