#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "nsgf/grasp.hpp"
#include "nsgf/occupancy.hpp"

namespace nsgf {

inline constexpr double kDefaultFriction = 0.5;

struct OracleOptions {
  double iso = 0.5;
  double projection_limit_voxels = 2.0;
  // Gap between a finger's inner face and its contact, in voxels.
  double finger_clearance_voxels = 0.5;
  // Lattice spacing in voxels.
  double lattice_voxels = 0.5;
  // Optional support plane z = table_height; anything below it collides.
  std::optional<double> table_height;
};

struct GraspVerdict {
  bool antipodal_ok = false;
  bool collision_free = false;
  bool passed = false;
  std::array<double, 2> contact_angles{0.0, 0.0};  // radians
  bool outside_bbox = false;
  bool projection_failed = false;
};

struct AntipodalResult {
  bool ok;
  std::array<double, 2> angles;
};

// Two-contact friction-cone test for outward normals n1 (left) and n2
// (right) with the baseline b running from left to right.
AntipodalResult antipodal_test(const Vec3& n1, const Vec3& n2, const Vec3& b, double mu);

// Collision box in the wrist frame (x = baseline, y = tangential, z = approach).
struct GripperBox {
  Vec3 lo, hi;
};
// Left finger, right finger, palm. Contacts sit at z = finger_depth; each
// finger's inner face is `clearance` outside its contact.
std::array<GripperBox, 3> gripper_boxes(double width, const GripperModel& gripper, double clearance);

// World-space sample points of the finger and palm collision boxes.
std::vector<Vec3> gripper_lattice(const Grasp& g, const GripperModel& gripper, double spacing, double clearance);

GraspVerdict check_grasp(const Grasp& g, const OccupancyField& field, const GripperModel& gripper,
                         double mu = kDefaultFriction, const OracleOptions& options = {});

// Verdicts for a batch, evaluated in parallel, order-preserving.
std::vector<GraspVerdict> check_grasps(std::span<const Grasp> grasps, const OccupancyField& field,
                                       const GripperModel& gripper, double mu = kDefaultFriction,
                                       const OracleOptions& options = {});

}  // namespace nsgf
