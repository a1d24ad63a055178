#include "nsgf/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "nsgf/parallel.hpp"
#include "nsgf/width.hpp"

namespace nsgf {
namespace {

double angle_between(const Vec3& u, const Vec3& v) {
  return std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
}

// Evenly spaced samples covering [lo, hi] with spacing at most `step`.
std::vector<double> axis_samples(double lo, double hi, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = lo + (hi - lo) * i / n;
  return out;
}

void add_box(std::vector<Vec3>& out, const Eigen::Isometry3d& pose, const Vec3& lo, const Vec3& hi, double step) {
  const auto xs = axis_samples(lo.x(), hi.x(), step);
  const auto ys = axis_samples(lo.y(), hi.y(), step);
  const auto zs = axis_samples(lo.z(), hi.z(), step);
  for (double z : zs)
    for (double y : ys)
      for (double x : xs) out.push_back(pose * Vec3(x, y, z));
}

}  // namespace

AntipodalResult antipodal_test(const Vec3& n1, const Vec3& n2, const Vec3& b, double mu) {
  const double cone = std::atan(mu);
  AntipodalResult r;
  r.angles = {angle_between(n1, -b), angle_between(n2, b)};
  r.ok = r.angles[0] <= cone && r.angles[1] <= cone;
  return r;
}

std::array<GripperBox, 3> gripper_boxes(double width, const GripperModel& gripper, double clearance) {
  const double half_w = 0.5 * width;
  const double th = gripper.finger_thickness;
  const double tip = gripper.finger_depth + 0.5 * th;
  const Vec3& palm = gripper.palm_extent;
  return {{
      {Vec3(-half_w - clearance - th, -0.5 * th, 0.0), Vec3(-half_w - clearance, 0.5 * th, tip)},
      {Vec3(half_w + clearance, -0.5 * th, 0.0), Vec3(half_w + clearance + th, 0.5 * th, tip)},
      {Vec3(-0.5 * palm.x(), -0.5 * palm.y(), -palm.z()), Vec3(0.5 * palm.x(), 0.5 * palm.y(), 0.0)},
  }};
}

std::vector<Vec3> gripper_lattice(const Grasp& g, const GripperModel& gripper, double spacing, double clearance) {
  const Eigen::Isometry3d pose = assemble_pose(g, gripper);
  std::vector<Vec3> pts;
  for (const GripperBox& box : gripper_boxes(g.width, gripper, clearance)) add_box(pts, pose, box.lo, box.hi, spacing);
  return pts;
}

GraspVerdict check_grasp(const Grasp& g, const OccupancyField& field, const GripperModel& gripper, double mu,
                         const OracleOptions& options) {
  g.validate(gripper.max_width);
  GraspVerdict v;
  const Vec3 c1 = g.point;
  const Vec3 c2 = g.right_contact();
  if (!field.contains(c1) || !field.contains(c2)) {
    v.outside_bbox = true;
    return v;
  }

  const double voxel = field.voxel();
  const double limit = options.projection_limit_voxels * voxel;
  const auto s1 = find_crossing(field, c1, g.baseline, 0.0, -limit, limit, Crossing::kEntry, options.iso);
  const auto s2 = find_crossing(field, c2, g.baseline, 0.0, -limit, limit, Crossing::kExit, options.iso);
  Vec3 n1, n2;
  if (!s1 || !s2 || !outward_normal(field, c1 + *s1 * g.baseline, n1) ||
      !outward_normal(field, c2 + *s2 * g.baseline, n2)) {
    v.projection_failed = true;
  } else {
    const AntipodalResult a = antipodal_test(n1, n2, g.baseline, mu);
    v.antipodal_ok = a.ok;
    v.contact_angles = a.angles;
  }

  v.collision_free = true;
  const auto lattice = gripper_lattice(g, gripper, options.lattice_voxels * voxel,
                                       options.finger_clearance_voxels * voxel);
  for (const Vec3& x : lattice) {
    if ((options.table_height && x.z() < *options.table_height) || field.occupancy(x) >= options.iso) {
      v.collision_free = false;
      break;
    }
  }
  v.passed = v.antipodal_ok && v.collision_free;
  return v;
}

std::vector<GraspVerdict> check_grasps(std::span<const Grasp> grasps, const OccupancyField& field,
                                       const GripperModel& gripper, double mu, const OracleOptions& options) {
  std::vector<GraspVerdict> out(grasps.size());
  parallel_for_chunks(grasps.size(), 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = check_grasp(grasps[i], field, gripper, mu, options);
  });
  return out;
}

}  // namespace nsgf
