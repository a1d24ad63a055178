#include "nsgf/primitives.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace nsgf {
namespace {

struct Residual {
  double value;  // |x - c| - r
  Vec3 dir;      // (c - x) / |x - c|
};

Residual residual(const Vec3& x, const Vec3& c, double r) {
  const Vec3 diff = c - x;
  const double d = diff.norm();
  return {d - r, d > 1e-15 ? Vec3(diff / d) : Vec3::Zero()};
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Shared Adam loop over centers and log-radii.
PrimitiveFitResult run_fit(std::span<const Vec3> points, SpherePrimitiveSet set,
                           const PrimitiveFitConfig& cfg) {
  const std::size_t n = set.size();
  const std::size_t np = points.size();
  std::vector<double> params(4 * n), m(4 * n, 0.0), v(4 * n, 0.0), grad(4 * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int a = 0; a < 3; ++a) params[4 * j + a] = set.centers[j][a];
    params[4 * j + 3] = std::log(set.radii[j]);
  }
  PrimitiveFitResult result;
  result.loss_trace.reserve(cfg.steps);
  std::vector<double> best_for_prim(n);
  std::vector<std::size_t> best_point(n);

  auto unpack = [&](std::size_t j, Vec3& c, double& r) {
    c = Vec3(params[4 * j], params[4 * j + 1], params[4 * j + 2]);
    r = std::exp(params[4 * j + 3]);
  };

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(best_for_prim.begin(), best_for_prim.end(), std::numeric_limits<double>::infinity());
    double loss_fit = 0.0;
    std::vector<Vec3> centers(n);
    std::vector<double> radii(n);
    for (std::size_t j = 0; j < n; ++j) unpack(j, centers[j], radii[j]);

    for (std::size_t i = 0; i < np; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::abs((points[i] - centers[j]).norm() - radii[j]);
        if (e < best) {
          best = e;
          arg = j;
        }
        if (e < best_for_prim[j]) {
          best_for_prim[j] = e;
          best_point[j] = i;
        }
      }
      loss_fit += best;
      const Residual res = residual(points[i], centers[arg], radii[arg]);
      const double s = sgn(res.value) / static_cast<double>(np);
      for (int a = 0; a < 3; ++a) grad[4 * arg + a] += s * res.dir[a];
      grad[4 * arg + 3] += -s * radii[arg];
    }
    double loss_cov = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      loss_cov += best_for_prim[j];
      const Residual res = residual(points[best_point[j]], centers[j], radii[j]);
      const double s = cfg.lambda_cov * sgn(res.value) / static_cast<double>(n);
      for (int a = 0; a < 3; ++a) grad[4 * j + a] += s * res.dir[a];
      grad[4 * j + 3] += -s * radii[j];
    }
    const double loss = loss_fit / np + cfg.lambda_cov * loss_cov / n;
    if (!std::isfinite(loss)) throw StageError("primitive fit produced a non-finite loss at step " + std::to_string(step));
    result.loss_trace.push_back(loss);

    const double progress = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 1.0;
    const double lr = cfg.learning_rate * (cfg.final_lr_fraction +
                                           (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    const double t = step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t), bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t q = 0; q < params.size(); ++q) {
      m[q] = cfg.beta1 * m[q] + (1.0 - cfg.beta1) * grad[q];
      v[q] = cfg.beta2 * v[q] + (1.0 - cfg.beta2) * grad[q] * grad[q];
      params[q] -= lr * (m[q] / bc1) / (std::sqrt(v[q] / bc2) + cfg.eps);
    }
  }
  for (std::size_t j = 0; j < n; ++j) unpack(j, set.centers[j], set.radii[j]);
  result.final_loss = primitive_loss(points, set, cfg.lambda_cov);
  const auto& tr = result.loss_trace;
  const std::size_t w = static_cast<std::size_t>(std::max(cfg.stall_window, 1));
  result.stalled = tr.size() > w && result.final_loss > tr[tr.size() - 1 - w];
  result.primitives = std::move(set);
  return result;
}

void sample_moments(std::span<const Vec3> points, Vec3& centroid, Vec3& spread) {
  centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  spread = Vec3::Zero();
  for (const Vec3& p : points) spread += (p - centroid).cwiseAbs2();
  spread = (spread / static_cast<double>(points.size())).cwiseSqrt();
}

}  // namespace

void SpherePrimitiveSet::validate() const {
  if (centers.size() != radii.size()) throw InputError("primitive set: centers/radii size mismatch");
  if (centers.empty()) throw InputError("primitive set is empty");
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (!centers[j].allFinite()) throw InputError("primitive set: non-finite center");
    if (!(radii[j] > 0.0) || !std::isfinite(radii[j])) throw InputError("primitive set: radii must be positive");
  }
}

double primitive_loss(std::span<const Vec3> points, const SpherePrimitiveSet& prims, double lambda_cov) {
  const std::size_t n = prims.size();
  std::vector<double> best_for_prim(n, std::numeric_limits<double>::infinity());
  double fit = 0.0;
  for (const Vec3& x : points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::abs((x - prims.centers[j]).norm() - prims.radii[j]);
      best = std::min(best, e);
      best_for_prim[j] = std::min(best_for_prim[j], e);
    }
    fit += best;
  }
  double cov = 0.0;
  for (double b : best_for_prim) cov += b;
  return fit / points.size() + lambda_cov * cov / n;
}

PrimitiveFitResult fit_template(std::span<const Vec3> points, int n_primitives,
                                const PrimitiveFitConfig& config, const std::string& category_id) {
  if (n_primitives < 1) throw InputError("n_primitives must be >= 1");
  if (points.size() < 10 * static_cast<std::size_t>(n_primitives)) {
    throw InputError("fit_template needs at least 10 samples per primitive");
  }
  // Farthest-point sampling, seeded by the point farthest from the centroid.
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  std::size_t first = 0;
  double far = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (points[i] - centroid).squaredNorm();
    if (d > far) {
      far = d;
      first = i;
    }
  }
  SpherePrimitiveSet set;
  set.category_id = category_id;
  set.is_template = true;
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  std::size_t next = first;
  for (int j = 0; j < n_primitives; ++j) {
    set.centers.push_back(points[next]);
    set.radii.push_back(config.init_radius);
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      dist[i] = std::min(dist[i], (points[i] - points[next]).squaredNorm());
      if (dist[i] > best) {
        best = dist[i];
        next = i;
      }
    }
  }
  sample_moments(points, set.sample_centroid, set.sample_spread);
  return run_fit(points, std::move(set), config);
}

PrimitiveFitResult fit_instance(std::span<const Vec3> points, const SpherePrimitiveSet& templ,
                                const PrimitiveFitConfig& config) {
  templ.validate();
  if (points.size() < 10 * templ.size()) throw InputError("fit_instance needs at least 10 samples per primitive");
  SpherePrimitiveSet init = templ;
  init.is_template = false;
  sample_moments(points, init.sample_centroid, init.sample_spread);
  if ((templ.sample_spread.array() > 0.0).all() && (init.sample_spread.array() > 0.0).all()) {
    const Vec3 scale = init.sample_spread.cwiseQuotient(templ.sample_spread);
    const double radius_scale = std::cbrt(scale.prod());
    for (std::size_t j = 0; j < init.size(); ++j) {
      init.centers[j] = init.sample_centroid + scale.cwiseProduct(templ.centers[j] - templ.sample_centroid);
      init.radii[j] = templ.radii[j] * radius_scale;
    }
  }
  return run_fit(points, std::move(init), config);
}

int nearest_primitive(const Vec3& x, const SpherePrimitiveSet& prims, LabelDistance metric) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (std::size_t j = 0; j < prims.size(); ++j) {
    const double d = (x - prims.centers[j]).norm();
    const double e = metric == LabelDistance::kSphereSurface ? std::abs(d - prims.radii[j]) : d;
    if (e < best) {
      best = e;
      arg = static_cast<int>(j);
    }
  }
  return arg;
}

std::vector<LabeledPoint> label_points(std::span<const Vec3> points, const SpherePrimitiveSet& prims,
                                       LabelDistance metric) {
  if (points.empty() || prims.size() == 0) throw InputError("label_points needs points and primitives");
  std::vector<LabeledPoint> out;
  out.reserve(points.size());
  for (const Vec3& x : points) out.push_back({x, nearest_primitive(x, prims, metric)});
  return out;
}

MeanShiftResult mean_shift_centers(std::span<const LabeledPoint> labeled, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InputError("mean-shift bandwidth must be positive");
  std::map<int, std::vector<Vec3>> groups;
  for (const auto& lp : labeled) groups[lp.label].push_back(lp.point);
  MeanShiftResult out;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (const auto& [label, pts] : groups) {
    if (pts.size() < 3) {
      out.dropped.push_back(label);
      continue;
    }
    Vec3 y = Vec3::Zero();
    for (const Vec3& p : pts) y += p;
    y /= static_cast<double>(pts.size());
    for (int it = 0; it < 100; ++it) {
      Vec3 num = Vec3::Zero();
      double den = 0.0;
      for (const Vec3& p : pts) {
        const double w = std::exp(-(p - y).squaredNorm() * inv2h2);
        num += w * p;
        den += w;
      }
      if (!(den > 0.0)) break;
      const Vec3 next = num / den;
      const double shift = (next - y).norm();
      y = next;
      if (shift < 1e-6) break;
    }
    out.modes.emplace(label, y);
  }
  return out;
}

std::vector<Vec3> correspondence_centers(const SpherePrimitiveSet& prims, const MeanShiftResult& ms) {
  std::vector<Vec3> c = prims.centers;
  for (const auto& [label, mode] : ms.modes) {
    if (label >= 0 && static_cast<std::size_t>(label) < c.size()) c[label] = mode;
  }
  return c;
}

std::vector<Vec3> sample_points(std::span<const SurfaceSample> samples) {
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.point);
  return out;
}

}  // namespace nsgf
