#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsgf/evaluate.hpp"
#include "nsgf/fit.hpp"
#include "nsgf/primitives.hpp"
#include "nsgf/shapes.hpp"
#include "nsgf/width.hpp"

namespace nsgf {

// Object-centric representation: pose, mesh, primitives, optional grasp
// field and the occupancy the pipeline works from.
struct ObjectRecord {
  std::string id;
  Sim3 pose;
  TriMesh mesh;
  SpherePrimitiveSet primitives;
  std::map<int, Vec3> modes;  // mean-shift center per primitive label
  std::optional<NsgfModel> field;
  OccupancyField occupancy;
};

// Labels `n_points` surface samples against the record's primitives
// and stores the per-label mean-shift modes.
void estimate_centers(ObjectRecord& record, std::size_t n_points, double bandwidth, std::uint64_t seed);

// Which per-primitive center drives the transfer offset.
enum class CenterSource {
  kPrimitive,  // fitted sphere centers
  kMeanShift,  // mean-shift modes, sphere centers where either object lacks one
};

// Corresponding primitive center on both objects for `label`.
std::pair<Vec3, Vec3> center_pair(const ObjectRecord& src, const ObjectRecord& tgt, int label,
                                  CenterSource source = CenterSource::kPrimitive);

struct DecodeOptions {
  bool width_refine = true;
  WidthRefineOptions refine;
  ConfidenceCombine combine = ConfidenceCombine::kMin;
};

// Samples the surface, queries the field, keeps q > 0, refines widths and
// returns the grasps ranked by confidence.
std::vector<Grasp> decode_grasps(const NsgfModel& model, const ObjectRecord& object, std::size_t n_points,
                                 std::uint64_t seed, const DecodeOptions& options = {});

inline constexpr std::size_t kMaxGraspsPerPrimitive = 5;

struct ApproxField {
  std::map<int, std::vector<Grasp>> buckets;  // primitive index -> grasps
  std::size_t size() const;
  std::vector<Grasp> all() const;
};

// Decodes the source field and keeps up to five diverse grasps per
// primitive, bucketed by the label of their left contact.
ApproxField approximate_field(const ObjectRecord& src, std::size_t samples, std::uint64_t seed,
                              const DecodeOptions& options = {});

enum class ProjectionMode {
  kBaseline,  // entry/exit crossing along the source baseline
  kClosest,   // closest point of the target iso-surface
  kBaselineThenClosest,
};

struct TransportOptions {
  bool width_refine = true;
  ProjectionMode projection = ProjectionMode::kBaseline;
  CenterSource centers = CenterSource::kPrimitive;
  double projection_limit_voxels = 5.0;
  WidthRefineOptions refine;
};

// Moves a source grasp onto the target: primitive-offset translation,
// projection onto the target surface, baseline re-alignment from the target
// normals, and width refinement. Returns nullopt when a contact projection
// exceeds the limit.
std::optional<Grasp> transport_grasp(const Grasp& g, const ObjectRecord& src, const ObjectRecord& tgt,
                                     double max_width, const TransportOptions& options = {});

struct LabelOptions {
  double radius = 0.015;
  // Negatives per positive; 0 keeps every non-positive sample as negative.
  double negative_ratio = 0.0;
  // Negatives must be farther than this multiple of the radius from every contact.
  double negative_exclusion = 1.0;
  std::uint64_t seed = 0;
};

// Surface points near a grasp's left contact inherit it (nearest wins);
// other points become negatives per the options. Points within the radius of
// a `forced_negative` contact (and nearer to it than to any grasp) are always
// kept as negatives.
std::vector<TrainingPoint> make_training_points(std::span<const SurfaceSample> samples,
                                                std::span<const Grasp> grasps, const LabelOptions& options,
                                                std::span<const Vec3> forced_negative = {});

struct TransferStats {
  std::size_t n_approx = 0;
  std::size_t n_transported = 0;
  std::size_t n_rejected_projection = 0;
  std::size_t n_filtered_out = 0;
  std::size_t n_survivors = 0;
  double refit_final_loss = 0.0;
};

struct TransferOptions {
  bool filter = true;
  bool cold_start = false;
  bool width_refine = true;
  std::size_t approx_samples = 2000;
  std::size_t label_samples = 20000;
  double negative_ratio = 4.0;
  // Filtered-out grasps label their contacts negative instead of being dropped.
  bool filtered_as_negative = false;
  CenterSource centers = CenterSource::kPrimitive;
  ProjectionMode projection = ProjectionMode::kBaseline;
  std::uint64_t seed = 0;
  LabelOptions labels;
};

struct TransferResult {
  NsgfModel model;
  TransferStats stats;
  std::vector<Grasp> survivors;
  std::vector<double> loss_trace;
};

// approximate -> transport -> oracle filter -> labels -> warm-started refit.
// Throws StageError when fewer than five grasps survive.
TransferResult transfer_field(const ObjectRecord& src, const ObjectRecord& tgt, const GripperModel& gripper,
                              double mu, const FitConfig& refit, const TransferOptions& options = {});

inline constexpr std::size_t kMinSurvivors = 5;

}  // namespace nsgf
