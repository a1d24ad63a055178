#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsgf/loss.hpp"

namespace nsgf {

struct FitConfig {
  int iterations = 200;
  int points_per_iter = 2000;
  double learning_rate = 1e-4;
  double lambda_reg = 0.1;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 0;

  // Warm-started transfer refit: five times fewer iterations.
  static FitConfig refit_defaults() {
    FitConfig c;
    c.iterations = 40;
    return c;
  }
  void validate() const;
};

struct FitResult {
  NsgfModel model;
  std::vector<double> loss_trace;  // total loss per iteration, pre-update
  LossBreakdown final_breakdown;   // on the last batch
};

// Adam over every parameter (network weights and feature grid). Batches are
// drawn without replacement when the dataset is large enough, with
// replacement otherwise. Pass a pre-fitted model to warm start.
FitResult fit(NsgfModel model, std::span<const TrainingPoint> data, const FitConfig& config);

// Max relative error between reverse-mode and fourth-order central-difference (h = 1e-5)
// gradients over all parameters. Magnitudes below kGradCheckFloor are
// compared against the floor instead.
inline constexpr double kGradCheckFloor = 1e-5;
struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t parameters_checked = 0;
};
GradCheckReport grad_check(const NsgfModel& model, std::span<const TrainingPoint> batch, double lambda_reg,
                           double step = 1e-5);

// Mean of a trailing window ending at `index` (inclusive).
double smoothed_loss(std::span<const double> trace, std::size_t index, std::size_t window = 20);

}  // namespace nsgf
