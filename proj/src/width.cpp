#include "nsgf/width.hpp"

#include <algorithm>
#include <cmath>

namespace nsgf {
namespace {

bool matches(double v0, double v1, double iso, Crossing kind) {
  const bool in0 = v0 >= iso, in1 = v1 >= iso;
  if (in0 == in1) return false;
  switch (kind) {
    case Crossing::kEntry: return !in0 && in1;
    case Crossing::kExit: return in0 && !in1;
    case Crossing::kAny: return true;
  }
  return false;
}

// Bisects [s0, s1] where the field straddles iso; returns the crossing parameter.
double refine_bracket(const OccupancyField& f, const Vec3& o, const Vec3& d, double s0, double s1, double iso,
                      double tol) {
  double v0 = f.occupancy(o + s0 * d) - iso;
  while (std::abs(s1 - s0) > tol) {
    const double sm = 0.5 * (s0 + s1);
    const double vm = f.occupancy(o + sm * d) - iso;
    if ((vm >= 0) == (v0 >= 0)) {
      s0 = sm;
      v0 = vm;
    } else {
      s1 = sm;
    }
  }
  const double va = f.occupancy(o + s0 * d) - iso, vb = f.occupancy(o + s1 * d) - iso;
  const double t = (va == vb) ? 0.5 : std::clamp(va / (va - vb), 0.0, 1.0);
  return s0 + t * (s1 - s0);
}

}  // namespace

std::optional<double> find_crossing(const OccupancyField& field, const Vec3& origin, const Vec3& dir, double s_ref,
                                    double s_min, double s_max, Crossing kind, double iso, bool prefer_positive) {
  if (s_max < s_min) return std::nullopt;
  s_ref = std::clamp(s_ref, s_min, s_max);
  const double h = 0.5 * field.voxel();
  const double tol = 0.1 * field.voxel();
  auto value = [&](double s) { return field.occupancy(origin + s * dir); };

  auto scan = [&](double from, double to) -> std::optional<double> {
    const double step = to >= from ? h : -h;
    double s0 = from, v0 = value(from);
    while (s0 != to) {
      const double s1 = step > 0 ? std::min(s0 + step, to) : std::max(s0 + step, to);
      const double v1 = value(s1);
      const bool hit = step > 0 ? matches(v0, v1, iso, kind) : matches(v1, v0, iso, kind);
      if (hit) return refine_bracket(field, origin, dir, s0, s1, iso, tol);
      s0 = s1;
      v0 = v1;
    }
    return std::nullopt;
  };

  if (prefer_positive) {
    if (auto s = scan(s_ref, s_max)) return s;
    return scan(s_ref, s_min);
  }

  // Lockstep scan in both directions so the first bracket found is the nearest.
  double fwd_lo = s_ref, bwd_hi = s_ref;
  double fwd_v = value(s_ref), bwd_v = fwd_v;
  while (fwd_lo < s_max || bwd_hi > s_min) {
    std::optional<double> fwd, bwd;
    if (fwd_lo < s_max) {
      const double s1 = std::min(fwd_lo + h, s_max);
      const double v1 = value(s1);
      if (matches(fwd_v, v1, iso, kind)) fwd = refine_bracket(field, origin, dir, fwd_lo, s1, iso, tol);
      fwd_lo = s1;
      fwd_v = v1;
    }
    if (bwd_hi > s_min) {
      const double s0 = std::max(bwd_hi - h, s_min);
      const double v0 = value(s0);
      if (matches(v0, bwd_v, iso, kind)) bwd = refine_bracket(field, origin, dir, bwd_hi, s0, iso, tol);
      bwd_hi = s0;
      bwd_v = v0;
    }
    if (fwd && bwd) return std::abs(*bwd - s_ref) < std::abs(*fwd - s_ref) ? bwd : fwd;
    if (fwd) return fwd;
    if (bwd) return bwd;
  }
  return std::nullopt;
}

WidthRefinement refine_width(const OccupancyField& field, const Vec3& p, const Vec3& b, double w_coarse,
                             double max_width, const WidthRefineOptions& options) {
  const double w_min = options.min_width_voxels * field.voxel();
  const auto s = find_crossing(field, p, b, w_coarse, w_min, max_width, Crossing::kExit, options.iso,
                               options.outward_first);
  if (!s) return {w_coarse, false};
  return {*s, true};
}

std::optional<Vec3> project_to_surface(const OccupancyField& field, const Vec3& x, double limit, double iso) {
  Vec3 c = x;
  for (int it = 0; it < 4; ++it) {
    Vec3 n;
    if (!outward_normal(field, c, n)) return std::nullopt;
    const double reach = it == 0 ? limit : std::min(limit, 2.0 * field.voxel());
    const auto s = find_crossing(field, c, n, 0.0, -reach, reach, Crossing::kAny, iso);
    if (!s) return std::nullopt;
    const Vec3 next = c + *s * n;
    if ((next - x).norm() > limit) return std::nullopt;
    const double step = (next - c).norm();
    c = next;
    if (step < 0.05 * field.voxel()) break;
  }
  return c;
}

}  // namespace nsgf
