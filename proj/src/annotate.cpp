#include "nsgf/annotate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nsgf/width.hpp"

namespace nsgf {

Annotation annotate_source(const OccupancyField& field, const TriMesh& mesh, const GripperModel& gripper, double mu,
                           int budget, std::uint64_t seed, const AnnotateOptions& options) {
  if (budget < 1) throw InputError("annotate: budget must be >= 1");
  gripper.validate();
  if (mesh.faces.size() < kMinFittableFaces) throw StageError("annotate: mesh has too few faces to sample");

  const std::size_t pool = std::max<std::size_t>(options.min_candidates,
                                                 static_cast<std::size_t>(budget) * options.candidates_per_grasp);
  const auto samples = sample_surface(mesh, field, pool, seed);

  const double voxel = field.voxel();
  const double w_min = options.min_width_voxels * voxel;
  const double snap = options.oracle.projection_limit_voxels * voxel;
  Annotation out;
  for (const SurfaceSample& s : samples) {
    if (static_cast<int>(out.grasps.size()) >= budget) break;
    const Vec3 b = -s.normal;
    const auto on_surface = find_crossing(field, s.point, b, 0.0, -snap, snap, Crossing::kEntry, options.oracle.iso);
    if (!on_surface) continue;
    const Vec3 p = s.point + *on_surface * b;
    const auto far = find_crossing(field, p, b, w_min, w_min, gripper.max_width, Crossing::kExit, options.oracle.iso,
                                   /*prefer_positive=*/true);
    if (!far) continue;
    ++out.contact_pairs;

    // Basis of the plane orthogonal to b, anchored on a top-down reference.
    Vec3 ref = -Vec3::UnitZ();
    if (std::abs(ref.dot(b)) > 0.95) ref = Vec3::UnitX();
    const Vec3 u = (ref - ref.dot(b) * b).normalized();
    const Vec3 v = b.cross(u);
    for (int k = 0; k < options.approach_directions; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / options.approach_directions;
      const Vec3 a = (std::cos(angle) * u + std::sin(angle) * v).normalized();
      const Vec3 t = a.cross(b).normalized();
      Grasp g = make_grasp(p, a, t, *far);
      g.confidence = std::min(shape_confidence(field, p), shape_confidence(field, g.right_contact()));
      if (!check_grasp(g, field, gripper, mu, options.oracle).passed) continue;
      out.grasps.push_back(g);
      out.labels.push_back({p, g.right_contact(), a, t, true});
      break;
    }
  }
  if (out.grasps.size() < kMinAnnotations) {
    std::ostringstream msg;
    msg << "annotate: only " << out.grasps.size() << " oracle-certified grasps from " << out.contact_pairs
        << " antipodal pairs (" << samples.size() << " surface samples, max width " << gripper.max_width
        << "); shape may be wider than the gripper";
    throw StageError(msg.str());
  }
  return out;
}

}  // namespace nsgf
