#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nsgf/mesh.hpp"

namespace nsgf {

// Index-aligned sphere abstraction. Two sets sharing a category_id have the
// same size and primitive i means the same part in both.
struct SpherePrimitiveSet {
  std::string category_id;
  std::vector<Vec3> centers;
  std::vector<double> radii;
  bool is_template = false;
  // Centroid and per-axis RMS spread of the samples the set was fitted to;
  // a zero spread means unknown.
  Vec3 sample_centroid = Vec3::Zero();
  Vec3 sample_spread = Vec3::Zero();

  std::size_t size() const { return centers.size(); }
  void validate() const;
};

struct PrimitiveFitConfig {
  int steps = 2000;
  double learning_rate = 0.01;
  double lambda_cov = 0.1;
  double init_radius = 0.05;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int stall_window = 100;
  // Cosine decay of the learning rate down to this fraction at the last step.
  double final_lr_fraction = 0.01;

  static PrimitiveFitConfig template_defaults() { return {}; }
  static PrimitiveFitConfig instance_defaults() {
    PrimitiveFitConfig c;
    c.steps = 200;
    c.learning_rate = 0.001;
    return c;
  }
};

struct PrimitiveFitResult {
  SpherePrimitiveSet primitives;
  double final_loss = 0.0;
  // Loss rose over the final stall window; the set is still returned.
  bool stalled = false;
  std::vector<double> loss_trace;
};

// mean_x min_j | |x - c_j| - r_j |  +  lambda_cov * mean_j min_x | |x - c_j| - r_j |
double primitive_loss(std::span<const Vec3> points, const SpherePrimitiveSet& prims, double lambda_cov);

// Adam from farthest-point-sampled centers; radii kept positive via r = exp(rho).
PrimitiveFitResult fit_template(std::span<const Vec3> points, int n_primitives,
                                const PrimitiveFitConfig& config, const std::string& category_id);

// Same loss, warm-started from the template so indices stay in correspondence.
// The template is first mapped onto the samples by matching centroid and
// per-axis spread (radii scale by the geometric mean), then refined.
PrimitiveFitResult fit_instance(std::span<const Vec3> points, const SpherePrimitiveSet& templ,
                                const PrimitiveFitConfig& config = PrimitiveFitConfig::instance_defaults());

enum class LabelDistance { kSphereSurface, kCenter };

struct LabeledPoint {
  Vec3 point;
  int label;
};

// Nearest primitive per point, ties to the lowest index.
int nearest_primitive(const Vec3& x, const SpherePrimitiveSet& prims,
                      LabelDistance metric = LabelDistance::kSphereSurface);
std::vector<LabeledPoint> label_points(std::span<const Vec3> points, const SpherePrimitiveSet& prims,
                                       LabelDistance metric = LabelDistance::kSphereSurface);

struct MeanShiftResult {
  std::map<int, Vec3> modes;
  std::vector<int> dropped;  // labels with fewer than 3 points
};

// Gaussian-kernel mean shift per label, started at the label centroid.
MeanShiftResult mean_shift_centers(std::span<const LabeledPoint> labeled, double bandwidth);

// Per-primitive centers for correspondence: mean-shift modes where available,
// sphere centers for dropped labels.
std::vector<Vec3> correspondence_centers(const SpherePrimitiveSet& prims, const MeanShiftResult& ms);

std::vector<Vec3> sample_points(std::span<const SurfaceSample> samples);

}  // namespace nsgf
