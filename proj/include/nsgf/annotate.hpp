#pragma once

#include <cstdint>
#include <vector>

#include "nsgf/mesh.hpp"
#include "nsgf/oracle.hpp"

namespace nsgf {

struct AnnotateOptions {
  int approach_directions = 8;
  // Surface samples drawn per requested grasp.
  int candidates_per_grasp = 10;
  std::size_t min_candidates = 2000;
  // Far-side crossings closer than this are the near surface itself.
  double min_width_voxels = 2.0;
  OracleOptions oracle;
};

struct Annotation {
  std::vector<Grasp> grasps;       // oracle-certified
  std::vector<GraspLabel> labels;  // one per grasp, same order
  std::size_t contact_pairs = 0;   // antipodal candidates examined
};

// Antipodal candidates from surface samples: cast along -n to the far
// surface, try evenly spaced approach directions around the baseline,
// starting from the one closest to top-down, and keep the first that passes
// the oracle. Stops at `budget` grasps. Throws
// StageError when fewer than 10 are found.
Annotation annotate_source(const OccupancyField& field, const TriMesh& mesh, const GripperModel& gripper, double mu,
                           int budget, std::uint64_t seed, const AnnotateOptions& options = {});

inline constexpr std::size_t kMinAnnotations = 10;

}  // namespace nsgf
