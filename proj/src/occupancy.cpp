#include "nsgf/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsgf {

Vec3 GridSpec::spacing() const {
  Vec3 s;
  for (int a = 0; a < 3; ++a) s[a] = (bbox_max[a] - bbox_min[a]) / (dims[a] - 1);
  return s;
}

double GridSpec::voxel() const { return spacing().minCoeff(); }

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) throw InputError("grid dims must be >= 2 on every axis");
    if (!(bbox_max[a] > bbox_min[a])) throw InputError("grid bbox_max must exceed bbox_min on every axis");
  }
}

OccupancyField::OccupancyField(GridSpec grid, double smoothing_beta, std::vector<float> data)
    : grid_(grid), beta_(smoothing_beta), data_(std::move(data)) {
  grid_.validate();
  const std::size_t expected =
      static_cast<std::size_t>(grid_.dims[0]) * grid_.dims[1] * grid_.dims[2];
  if (data_.size() != expected) {
    std::ostringstream os;
    os << "occupancy data has " << data_.size() << " values, grid expects " << expected;
    throw InputError(os.str());
  }
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InputError("occupancy values must lie in [0,1]");
  }
  spacing_ = grid_.spacing();
  voxel_ = spacing_.minCoeff();
}

OccupancyField OccupancyField::constant(GridSpec grid, float value) {
  grid.validate();
  const std::size_t n = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  return OccupancyField(grid, grid.voxel(), std::vector<float>(n, value));
}

Vec3 OccupancyField::node_position(int i, int j, int k) const {
  return grid_.bbox_min + Vec3(i * spacing_.x(), j * spacing_.y(), k * spacing_.z());
}

bool OccupancyField::contains(const Vec3& p) const {
  return (p.array() >= grid_.bbox_min.array()).all() && (p.array() <= grid_.bbox_max.array()).all();
}

OccupancyField::Sample OccupancyField::query(const Vec3& p) const {
  bool clamped = false;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    double u = (p[a] - grid_.bbox_min[a]) / spacing_[a];
    const double hi = grid_.dims[a] - 1;
    if (u < 0.0) {
      u = 0.0;
      clamped = true;
    } else if (u > hi) {
      u = hi;
      clamped = true;
    }
    // Snap round-off so node queries return stored values exactly.
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) u = r;
    int i0 = static_cast<int>(std::floor(u));
    i0 = std::clamp(i0, 0, grid_.dims[a] - 2);
    base[a] = i0;
    frac[a] = u - i0;
  }
  const double fx = frac[0], fy = frac[1], fz = frac[2];
  const int i = base[0], j = base[1], k = base[2];
  auto lerp = [](double a, double b, double t) { return (1.0 - t) * a + t * b; };
  const double c00 = lerp(node(i, j, k), node(i + 1, j, k), fx);
  const double c10 = lerp(node(i, j + 1, k), node(i + 1, j + 1, k), fx);
  const double c01 = lerp(node(i, j, k + 1), node(i + 1, j, k + 1), fx);
  const double c11 = lerp(node(i, j + 1, k + 1), node(i + 1, j + 1, k + 1), fx);
  const double c0 = lerp(c00, c10, fy);
  const double c1 = lerp(c01, c11, fy);
  return {lerp(c0, c1, fz), clamped};
}

OccupancyField::Gradient OccupancyField::gradient(const Vec3& p) const {
  Gradient g{Vec3::Zero(), false};
  for (int a = 0; a < 3; ++a) {
    const double h = 0.5 * spacing_[a];
    Vec3 lo = p, hi = p;
    const bool near_min = p[a] - grid_.bbox_min[a] < spacing_[a];
    const bool near_max = grid_.bbox_max[a] - p[a] < spacing_[a];
    double denom = 2.0 * h;
    if (near_min && !near_max) {
      hi[a] += h;
      denom = h;
      g.one_sided = true;
    } else if (near_max && !near_min) {
      lo[a] -= h;
      denom = h;
      g.one_sided = true;
    } else {
      lo[a] -= h;
      hi[a] += h;
    }
    g.value[a] = (occupancy(hi) - occupancy(lo)) / denom;
  }
  return g;
}

double shape_confidence(const OccupancyField& f, const Vec3& p) { return f.gradient(p).value.norm(); }

bool outward_normal(const OccupancyField& f, const Vec3& p, Vec3& normal) {
  const Vec3 g = f.gradient(p).value;
  const double n = g.norm();
  if (!(n > 1e-12)) return false;
  normal = -g / n;
  return true;
}

Vec3 bisect_crossing(const OccupancyField& f, Vec3 x0, Vec3 x1, double iso, double tol) {
  double v0 = f.occupancy(x0) - iso;
  for (int it = 0; it < 64 && (x1 - x0).norm() > tol; ++it) {
    const Vec3 mid = 0.5 * (x0 + x1);
    const double vm = f.occupancy(mid) - iso;
    if ((vm >= 0.0) == (v0 >= 0.0)) {
      x0 = mid;
      v0 = vm;
    } else {
      x1 = mid;
    }
  }
  // Linear interpolation inside the final bracket.
  const double va = f.occupancy(x0) - iso, vb = f.occupancy(x1) - iso;
  const double t = (va == vb) ? 0.5 : std::clamp(va / (va - vb), 0.0, 1.0);
  return x0 + t * (x1 - x0);
}

}  // namespace nsgf
