#include "nsgf/grasp.hpp"

#include <cmath>
#include <sstream>

namespace nsgf {
namespace {

constexpr double kFrameTol = 1e-6;

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

void GripperModel::validate() const {
  auto fail = [](const std::string& what) { throw InputError("gripper: " + what); };
  if (!(max_width > 0.0)) fail("max_width must be positive");
  if (!(max_width < 1.0)) fail("max_width must be below 1");
  if (!(finger_depth > 0.0)) fail("finger_depth must be positive");
  if (!(finger_thickness > 0.0)) fail("finger_thickness must be positive");
  if (!(palm_extent.minCoeff() > 0.0) || !finite(palm_extent)) fail("palm_extent must be positive");
}

GripperModel GripperModel::wide() {
  GripperModel g;
  g.max_width = 0.40;
  g.finger_depth = 0.20;
  g.finger_thickness = 0.03;
  g.palm_extent = Vec3(0.50, 0.06, 0.06);
  return g;
}

void Grasp::validate(double max_width) const {
  std::ostringstream err;
  if (!finite(point) || !finite(approach) || !finite(tangential) || !finite(baseline) || !std::isfinite(width) ||
      !std::isfinite(validity)) {
    throw InputError("grasp: non-finite field");
  }
  if (std::abs(approach.norm() - 1.0) > kFrameTol || std::abs(tangential.norm() - 1.0) > kFrameTol ||
      std::abs(baseline.norm() - 1.0) > kFrameTol) {
    throw InputError("grasp: frame axes are not unit length");
  }
  if (std::abs(approach.dot(tangential)) > kFrameTol) throw InputError("grasp: approach and tangential not orthogonal");
  if ((tangential.cross(approach) - baseline).norm() > kFrameTol) throw InputError("grasp: baseline != t x a");
  if (width < 0.0 || width > max_width + 1e-12) {
    err << "grasp: width " << width << " outside [0, " << max_width << "]";
    throw InputError(err.str());
  }
  if (confidence < 0.0) throw InputError("grasp: negative confidence");
}

Grasp make_grasp(const Vec3& point, const Vec3& approach, const Vec3& tangential, double width, double validity,
                 double confidence) {
  Grasp g;
  g.point = point;
  g.approach = approach;
  g.tangential = tangential;
  g.baseline = tangential.cross(approach);
  g.width = width;
  g.validity = validity;
  g.confidence = confidence;
  return g;
}

Eigen::Isometry3d assemble_pose(const Grasp& g, const GripperModel& gripper) {
  g.validate(gripper.max_width);
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.linear() = g.frame().matrix();
  pose.translation() = g.point + 0.5 * g.width * g.baseline - gripper.finger_depth * g.approach;
  return pose;
}

}  // namespace nsgf
