#pragma once

#include "nsgf/rotation.hpp"

namespace nsgf {

// Parallel-jaw gripper in canonical units.
struct GripperModel {
  double max_width = 0.25;
  double finger_depth = 0.12;
  double finger_thickness = 0.03;
  Vec3 palm_extent{0.30, 0.06, 0.06};  // along (b, t, a)

  void validate() const;
  // Wider jaw used by the cylinder fixtures, whose 0.30 diameter exceeds the default stroke.
  static GripperModel wide();
};

struct Grasp {
  Vec3 point = Vec3::Zero();  // left contact p
  double validity = 1.0;      // logit q; valid iff q > 0
  Vec3 approach = Vec3::UnitZ();
  Vec3 tangential = Vec3::UnitY();
  Vec3 baseline = Vec3::UnitX();
  double width = 0.0;
  double confidence = 0.0;

  GraspFrame frame() const { return {approach, tangential, baseline}; }
  Vec3 right_contact() const { return point + width * baseline; }
  bool valid() const { return validity > 0.0; }
  // Throws InputError unless the frame is right-handed orthonormal with
  // b = t x a and 0 <= width <= max_width.
  void validate(double max_width) const;
};

// Builds a grasp with b derived from t x a.
Grasp make_grasp(const Vec3& point, const Vec3& approach, const Vec3& tangential, double width,
                 double validity = 1.0, double confidence = 0.0);

struct GraspLabel {
  Vec3 point = Vec3::Zero();
  Vec3 antipodal_point = Vec3::Zero();  // p'_gt
  Vec3 approach = Vec3::UnitZ();
  Vec3 tangential = Vec3::UnitY();
  bool is_positive = true;
};

// Wrist pose: rotation columns (b, t, a), origin at the contact midpoint
// backed off along the approach by the finger depth.
Eigen::Isometry3d assemble_pose(const Grasp& g, const GripperModel& gripper);

}  // namespace nsgf
