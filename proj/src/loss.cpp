#include "nsgf/loss.hpp"

#include <cmath>

namespace nsgf {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double reg_term(const Vec3& n, const Vec3& b, double s) {
  return (s * n - b).lpNorm<1>() + std::abs(1.0 - s * n.dot(b));
}

}  // namespace

LossBreakdown loss_from_outputs(std::span<const double> rot6, std::span<const double> width_logit,
                                std::span<const double> validity, std::span<const TrainingPoint> batch,
                                double lambda_reg, double max_width, HeadGradients* grads) {
  const std::size_t n = batch.size();
  if (n == 0) throw InputError("fitting loss needs a non-empty batch");
  LossBreakdown out;
  for (const auto& tp : batch) out.positives += tp.positive ? 1 : 0;
  const std::size_t negatives = n - out.positives;
  out.no_positives = out.positives == 0;
  const double pos_weight =
      (out.positives > 0 && negatives > 0) ? static_cast<double>(negatives) / out.positives : 1.0;
  if (grads) {
    grads->rot6.assign(6 * n, 0.0);
    grads->width_logit.assign(n, 0.0);
    grads->validity.assign(n, 0.0);
  }
  const double inv_n = 1.0 / n;
  const double inv_p = out.positives > 0 ? 1.0 / out.positives : 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const TrainingPoint& tp = batch[i];
    const double q = validity[i];
    if (tp.positive) {
      out.validity += pos_weight * softplus(-q) * inv_n;
      if (grads) grads->validity[i] = pos_weight * (sigmoid(q) - 1.0) * inv_n;
    } else {
      out.validity += softplus(q) * inv_n;
      if (grads) grads->validity[i] = sigmoid(q) * inv_n;
    }
    if (!tp.positive) continue;

    Rot6 six;
    std::copy_n(rot6.data() + 6 * i, 6, six.begin());
    GraspFrame f;
    try {
      f = rot6d_to_frame(six);
    } catch (const InputError&) {
      continue;  // measure-zero degenerate output; contributes no gradient
    }
    const Vec3& a = f.approach;
    const Vec3& t = f.tangential;
    const Vec3& b = f.baseline;

    out.rotation += ((1.0 - a.dot(tp.approach)) + (1.0 - t.dot(tp.tangential))) * inv_p;

    const double sw = sigmoid(width_logit[i]);
    const double wc = sw * max_width;
    const Vec3 r = tp.point + wc * b - tp.contact_gt;
    out.width += r.squaredNorm() * inv_p;

    const double reg_pos = reg_term(tp.normal, b, 1.0);
    const double reg_neg = reg_term(tp.normal, b, -1.0);
    const double s = reg_neg < reg_pos ? -1.0 : 1.0;
    out.reg += std::min(reg_pos, reg_neg) * inv_p;

    if (grads) {
      const Vec3 ga = -tp.approach * inv_p;
      const Vec3 gt = -tp.tangential * inv_p;
      Vec3 gb = 2.0 * wc * r * inv_p;
      const Vec3 diff = s * tp.normal - b;
      Vec3 greg(-sgn(diff.x()), -sgn(diff.y()), -sgn(diff.z()));
      greg += -sgn(1.0 - s * tp.normal.dot(b)) * s * tp.normal;
      gb += lambda_reg * inv_p * greg;
      const Rot6 g6 = rot6d_to_frame_backward(six, ga, gt, gb);
      for (int k = 0; k < 6; ++k) grads->rot6[6 * i + k] = g6[k];
      const double d_wc = 2.0 * r.dot(b) * inv_p;
      grads->width_logit[i] = d_wc * max_width * sw * (1.0 - sw);
    }
  }
  out.total = out.validity + out.rotation + out.width + lambda_reg * out.reg;
  return out;
}

LossBreakdown fitting_loss(const NsgfModel& model, std::span<const TrainingPoint> batch, double lambda_reg) {
  std::vector<Vec3> pts;
  pts.reserve(batch.size());
  for (const auto& tp : batch) pts.push_back(tp.point);
  const ForwardPass pass(model, pts, false);
  return loss_from_outputs(pass.rot6(), pass.width_logit(), pass.validity(), batch, lambda_reg,
                           model.architecture().max_width, nullptr);
}

LossAndGradient loss_and_gradient(const NsgfModel& model, std::span<const TrainingPoint> batch,
                                  double lambda_reg) {
  std::vector<Vec3> pts;
  pts.reserve(batch.size());
  for (const auto& tp : batch) pts.push_back(tp.point);
  const ForwardPass pass(model, pts, true);
  HeadGradients hg;
  LossAndGradient out;
  out.loss = loss_from_outputs(pass.rot6(), pass.width_logit(), pass.validity(), batch, lambda_reg,
                               model.architecture().max_width, &hg);
  out.gradient.assign(model.parameter_count(), 0.0);
  pass.backward(hg.rot6, hg.width_logit, hg.validity, out.gradient);
  return out;
}

}  // namespace nsgf
