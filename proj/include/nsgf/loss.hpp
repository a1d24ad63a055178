#pragma once

#include <span>
#include <vector>

#include "nsgf/model.hpp"

namespace nsgf {

// One supervised surface point. Negative points only use `point`/`normal`.
struct TrainingPoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // outward surface normal
  bool positive = false;
  Vec3 approach = Vec3::UnitZ();
  Vec3 tangential = Vec3::UnitY();
  Vec3 contact_gt = Vec3::Zero();  // ground-truth antipodal contact p'_gt
};

struct LossBreakdown {
  double total = 0.0;
  double validity = 0.0;  // class-balanced BCE over all points
  double rotation = 0.0;  // (1 - a.a_gt) + (1 - t.t_gt), positives
  double width = 0.0;     // |p + w_coarse b - p'_gt|^2, positives
  double reg = 0.0;       // min_s |s n - b|_1 + |1 - s n.b|, positives
  std::size_t positives = 0;
  bool no_positives = false;  // positive-only terms are zero
};

struct HeadGradients {
  std::vector<double> rot6;         // batch x 6
  std::vector<double> width_logit;  // batch
  std::vector<double> validity;     // batch
};

// Loss of raw head outputs against targets. When `grads` is non-null it
// receives dL/d(head outputs).
LossBreakdown loss_from_outputs(std::span<const double> rot6, std::span<const double> width_logit,
                                std::span<const double> validity, std::span<const TrainingPoint> batch,
                                double lambda_reg, double max_width, HeadGradients* grads);

LossBreakdown fitting_loss(const NsgfModel& model, std::span<const TrainingPoint> batch, double lambda_reg);

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<double> gradient;  // dL/dparams
};
LossAndGradient loss_and_gradient(const NsgfModel& model, std::span<const TrainingPoint> batch,
                                  double lambda_reg);

}  // namespace nsgf
