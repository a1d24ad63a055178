#pragma once

#include <optional>

#include "nsgf/occupancy.hpp"

namespace nsgf {

enum class Crossing {
  kEntry,  // occupancy rises through iso along the ray (outside -> inside)
  kExit,   // occupancy falls through iso along the ray (inside -> outside)
  kAny,
};

// Searches origin + s * dir for s in [s_min, s_max] and returns the
// parameter of the crossing nearest to `s_ref`, scanning outward from it in
// half-voxel steps and bisecting the bracket to a tenth of a voxel.
// `prefer_positive` breaks ties between the two scan directions (and, when
// set, takes any crossing with s > s_ref before one with s < s_ref).
std::optional<double> find_crossing(const OccupancyField& field, const Vec3& origin, const Vec3& dir, double s_ref,
                                    double s_min, double s_max, Crossing kind, double iso = 0.5,
                                    bool prefer_positive = false);

struct WidthRefineOptions {
  double iso = 0.5;
  // Crossings closer to the left contact than this are the left surface itself.
  double min_width_voxels = 2.0;
  // Take the nearest crossing beyond p' before any crossing short of it.
  bool outward_first = false;
};

struct WidthRefinement {
  double width;
  bool found;
};

// Moves the antipodal point p + w_coarse * b along b onto the nearest
// surface exit crossing within widths [0, max_width].
WidthRefinement refine_width(const OccupancyField& field, const Vec3& p, const Vec3& b, double w_coarse,
                             double max_width, const WidthRefineOptions& options = {});

// Closest point of the iso-surface to x: repeated crossing searches along
// the local normal line. nullopt when it lies farther than `limit` from x.
std::optional<Vec3> project_to_surface(const OccupancyField& field, const Vec3& x, double limit, double iso = 0.5);

}  // namespace nsgf
