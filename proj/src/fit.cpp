#include "nsgf/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace nsgf {

void FitConfig::validate() const {
  if (iterations < 1) throw InputError("fit iterations must be >= 1");
  if (points_per_iter < 1) throw InputError("fit points_per_iter must be >= 1");
  if (!(learning_rate > 0.0)) throw InputError("fit learning_rate must be positive");
  if (!(lambda_reg >= 0.0)) throw InputError("fit lambda_reg must be >= 0");
}

FitResult fit(NsgfModel model, std::span<const TrainingPoint> data, const FitConfig& config) {
  config.validate();
  if (data.empty()) throw InputError("fit needs labeled samples");
  std::mt19937_64 rng(config.seed);
  const std::size_t batch_size = static_cast<std::size_t>(config.points_per_iter);
  const bool with_replacement = data.size() < batch_size;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingPoint> batch(batch_size);

  auto params = model.parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  FitResult result;
  result.loss_trace.reserve(config.iterations);

  for (int it = 0; it < config.iterations; ++it) {
    if (with_replacement) {
      std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
      for (auto& b : batch) b = data[pick(rng)];
    } else {
      // Partial Fisher-Yates: first batch_size entries become the batch.
      for (std::size_t i = 0; i < batch_size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
        batch[i] = data[order[i]];
      }
    }
    const LossAndGradient lg = loss_and_gradient(model, batch, config.lambda_reg);
    if (!std::isfinite(lg.loss.total)) {
      throw StageError("NSGF fit diverged: non-finite loss at iteration " + std::to_string(it));
    }
    result.loss_trace.push_back(lg.loss.total);
    result.final_breakdown = lg.loss;
    const double t = it + 1;
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    const double lr_t = config.learning_rate * std::sqrt(bc2) / bc1;
    const double eps_t = config.eps * std::sqrt(bc2);
    for (std::size_t q = 0; q < params.size(); ++q) {
      const double g = lg.gradient[q];
      m[q] = config.beta1 * m[q] + (1.0 - config.beta1) * g;
      v[q] = config.beta2 * v[q] + (1.0 - config.beta2) * g * g;
      params[q] -= lr_t * m[q] / (std::sqrt(v[q]) + eps_t);
    }
  }
  if (!model.finite()) throw StageError("NSGF fit produced non-finite parameters");
  result.model = std::move(model);
  return result;
}

GradCheckReport grad_check(const NsgfModel& model, std::span<const TrainingPoint> batch, double lambda_reg,
                           double step) {
  const LossAndGradient analytic = loss_and_gradient(model, batch, lambda_reg);
  NsgfModel probe = model;
  auto params = probe.parameters();
  GradCheckReport report;
  auto loss_at = [&](std::size_t q, double value) {
    params[q] = value;
    return fitting_loss(probe, batch, lambda_reg).total;
  };
  for (std::size_t q = 0; q < params.size(); ++q) {
    const double saved = params[q];
    // Fourth-order central stencil; the sine layers make the O(h^2) error of
    // the two-point form visible at h = 1e-5.
    const double d1 = loss_at(q, saved + step) - loss_at(q, saved - step);
    const double d2 = loss_at(q, saved + 2.0 * step) - loss_at(q, saved - 2.0 * step);
    params[q] = saved;
    const double numeric = (8.0 * d1 - d2) / (12.0 * step);
    const double ga = analytic.gradient[q];
    // Below the floor the comparison is absolute: at h = 1e-5 the stencil's
    // roundoff is ~1e-10, so tiny gradients cannot be resolved relatively.
    const double denom = std::max({std::abs(ga), std::abs(numeric), kGradCheckFloor});
    const double rel = std::abs(ga - numeric) / denom;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = q;
    }
    ++report.parameters_checked;
  }
  return report;
}

double smoothed_loss(std::span<const double> trace, std::size_t index, std::size_t window) {
  if (trace.empty()) return 0.0;
  index = std::min(index, trace.size() - 1);
  const std::size_t begin = index + 1 >= window ? index + 1 - window : 0;
  double sum = 0.0;
  for (std::size_t i = begin; i <= index; ++i) sum += trace[i];
  return sum / static_cast<double>(index + 1 - begin);
}

}  // namespace nsgf
