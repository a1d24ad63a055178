#include "nsgf/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nsgf/parallel.hpp"

namespace nsgf {
namespace {

struct Nearest {
  std::size_t index;
  double distance;
};

Nearest nearest_of(const Vec3& x, std::span<const Vec3> pts) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (x - pts[i]).norm();
    if (d < best.distance) best = {i, d};
  }
  return best;
}

// Farthest-point selection over left contacts, seeded with the first grasp.
std::vector<Grasp> diverse_subset(const std::vector<Grasp>& grasps, std::size_t k) {
  if (grasps.size() <= k) return grasps;
  std::vector<std::size_t> chosen{0};
  std::vector<double> dist(grasps.size(), std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const Vec3& last = grasps[chosen.back()].point;
    std::size_t arg = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < grasps.size(); ++i) {
      dist[i] = std::min(dist[i], (grasps[i].point - last).norm());
      if (dist[i] > far) {
        far = dist[i];
        arg = i;
      }
    }
    chosen.push_back(arg);
  }
  std::vector<Grasp> out;
  for (std::size_t i : chosen) out.push_back(grasps[i]);
  return out;
}

}  // namespace

void estimate_centers(ObjectRecord& record, std::size_t n_points, double bandwidth, std::uint64_t seed) {
  record.primitives.validate();
  const auto samples = sample_surface(record.mesh, record.occupancy, n_points, seed);
  const auto pts = sample_points(samples);
  const auto labeled = label_points(pts, record.primitives);
  record.modes = mean_shift_centers(labeled, bandwidth).modes;
}

std::pair<Vec3, Vec3> center_pair(const ObjectRecord& src, const ObjectRecord& tgt, int label, CenterSource source) {
  const auto s = src.modes.find(label);
  const auto t = tgt.modes.find(label);
  if (source == CenterSource::kMeanShift && s != src.modes.end() && t != tgt.modes.end()) return {s->second, t->second};
  return {src.primitives.centers.at(label), tgt.primitives.centers.at(label)};
}

std::vector<Grasp> decode_grasps(const NsgfModel& model, const ObjectRecord& object, std::size_t n_points,
                                 std::uint64_t seed, const DecodeOptions& options) {
  if (object.mesh.faces.size() < kMinFittableFaces) return {};
  const auto samples = sample_surface(object.mesh, object.occupancy, n_points, seed);
  const auto pts = sample_points(samples);
  const auto preds = query(model, pts);
  const double max_width = model.architecture().max_width;
  std::vector<Grasp> grasps;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const RawPrediction& r = preds[i];
    if (!(r.validity > 0.0)) continue;
    Grasp g;
    g.point = pts[i];
    g.validity = r.validity;
    g.approach = r.frame.approach;
    g.tangential = r.frame.tangential;
    g.baseline = r.frame.baseline;
    g.width = r.width_coarse;
    if (options.width_refine)
      g.width = refine_width(object.occupancy, g.point, g.baseline, g.width, max_width, options.refine).width;
    grasps.push_back(g);
  }
  return rank_and_select(grasps, object.occupancy, options.combine);
}

std::size_t ApproxField::size() const {
  std::size_t n = 0;
  for (const auto& [j, list] : buckets) n += list.size();
  return n;
}

std::vector<Grasp> ApproxField::all() const {
  std::vector<Grasp> out;
  for (const auto& [j, list] : buckets) out.insert(out.end(), list.begin(), list.end());
  return out;
}

ApproxField approximate_field(const ObjectRecord& src, std::size_t samples, std::uint64_t seed,
                              const DecodeOptions& options) {
  if (!src.field) throw InputError("approximate_field: source '" + src.id + "' has no fitted field");
  const auto decoded = decode_grasps(*src.field, src, samples, seed, options);
  if (decoded.empty()) {
    std::ostringstream msg;
    msg << "approximate_field: source field '" << src.id << "' decoded no valid grasps from " << samples
        << " surface points";
    throw StageError(msg.str());
  }
  std::map<int, std::vector<Grasp>> groups;
  for (const Grasp& g : decoded) groups[nearest_primitive(g.point, src.primitives)].push_back(g);
  ApproxField approx;
  for (auto& [j, list] : groups) approx.buckets[j] = diverse_subset(list, kMaxGraspsPerPrimitive);
  return approx;
}

std::optional<Grasp> transport_grasp(const Grasp& g, const ObjectRecord& src, const ObjectRecord& tgt,
                                     double max_width, const TransportOptions& options) {
  if (src.primitives.category_id != tgt.primitives.category_id || src.primitives.size() != tgt.primitives.size())
    throw InputError("transport: '" + src.id + "' and '" + tgt.id + "' primitives are not in correspondence");

  const Vec3 p = g.point;
  const Vec3 p_right = g.right_contact();
  const int j = nearest_primitive(p, src.primitives);
  const int jr = nearest_primitive(p_right, src.primitives);
  const auto [s_j, t_j] = center_pair(src, tgt, j, options.centers);
  const auto [s_jr, t_jr] = center_pair(src, tgt, jr, options.centers);
  const Vec3 delta = 0.5 * ((t_j - s_j) + (t_jr - s_jr));

  const OccupancyField& field = tgt.occupancy;
  const double limit = options.projection_limit_voxels * field.voxel();
  const Vec3& b_old = g.baseline;
  const Vec3 q = p + delta;
  const Vec3 q_right = p_right + delta;
  std::optional<Vec3> c1, c2;
  if (options.projection != ProjectionMode::kClosest) {
    const auto s1 = find_crossing(field, q, b_old, 0.0, -limit, limit, Crossing::kEntry, options.refine.iso);
    const auto s2 = find_crossing(field, q_right, b_old, 0.0, -limit, limit, Crossing::kExit, options.refine.iso);
    if (s1 && s2) {
      c1 = q + *s1 * b_old;
      c2 = q_right + *s2 * b_old;
    }
  }
  if (!c1 && options.projection != ProjectionMode::kBaseline) {
    c1 = project_to_surface(field, q, limit, options.refine.iso);
    c2 = project_to_surface(field, q_right, limit, options.refine.iso);
  }
  if (!c1 || !c2) return std::nullopt;

  Vec3 n1, n2;
  Vec3 b_new = b_old;
  if (outward_normal(field, *c1, n1) && outward_normal(field, *c2, n2) && (n1 - n2).norm() > 1e-9) {
    b_new = (n1 - n2).normalized();
    if (b_new.dot(b_old) < 0.0) b_new = -b_new;
  }
  const Mat3 r = minimal_rotation(b_old, b_new);
  Grasp out = make_grasp(*c1, (r * g.approach).normalized(), (r * g.tangential).normalized(), 0.0, g.validity,
                         g.confidence);
  // Re-orthogonalize after the rotation so the frame invariants hold exactly.
  out.tangential = (out.tangential - out.tangential.dot(out.approach) * out.approach).normalized();
  out.baseline = out.tangential.cross(out.approach);

  if (options.width_refine) {
    const double w0 = std::clamp((*c2 - *c1).dot(out.baseline), 0.0, max_width);
    out.width = refine_width(field, out.point, out.baseline, w0, max_width, options.refine).width;
  } else {
    out.width = std::min(g.width, max_width);
  }
  return out;
}

std::vector<TrainingPoint> make_training_points(std::span<const SurfaceSample> samples,
                                                std::span<const Grasp> grasps, const LabelOptions& options,
                                                std::span<const Vec3> forced_negative) {
  std::vector<Vec3> contacts;
  for (const Grasp& g : grasps) contacts.push_back(g.point);
  const double exclusion = options.negative_exclusion * options.radius;

  std::vector<TrainingPoint> positives;
  std::vector<TrainingPoint> candidates, forced;
  for (const SurfaceSample& s : samples) {
    TrainingPoint tp;
    tp.point = s.point;
    tp.normal = s.normal;
    const Nearest pos = nearest_of(s.point, contacts);
    const Nearest neg = nearest_of(s.point, forced_negative);
    if (pos.distance <= options.radius && pos.distance <= neg.distance) {
      const Grasp& g = grasps[pos.index];
      tp.positive = true;
      tp.approach = g.approach;
      tp.tangential = g.tangential;
      tp.contact_gt = s.point + g.width * g.baseline;
      positives.push_back(tp);
    } else if (neg.distance <= options.radius) {
      forced.push_back(tp);
    } else if (pos.distance > exclusion) {
      candidates.push_back(tp);
    }
  }

  std::vector<TrainingPoint> negatives = std::move(candidates);
  if (options.negative_ratio > 0.0) {
    const auto want = static_cast<std::size_t>(std::llround(options.negative_ratio * positives.size()));
    if (negatives.size() > want) {
      std::mt19937_64 rng(options.seed);
      std::vector<std::size_t> idx(negatives.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      idx.resize(want);
      std::sort(idx.begin(), idx.end());
      std::vector<TrainingPoint> chosen;
      for (std::size_t i : idx) chosen.push_back(negatives[i]);
      negatives = std::move(chosen);
    }
  }
  std::vector<TrainingPoint> out = std::move(positives);
  out.insert(out.end(), forced.begin(), forced.end());
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

TransferResult transfer_field(const ObjectRecord& src, const ObjectRecord& tgt, const GripperModel& gripper,
                              double mu, const FitConfig& refit, const TransferOptions& options) {
  if (!src.field) throw InputError("transfer: source '" + src.id + "' has no fitted field");
  if (tgt.field) throw InputError("transfer: target '" + tgt.id + "' already has a field");
  gripper.validate();
  refit.validate();

  TransferResult result;
  TransferStats& stats = result.stats;
  DecodeOptions decode;
  decode.width_refine = options.width_refine;
  const ApproxField approx = approximate_field(src, options.approx_samples, options.seed, decode);
  const std::vector<Grasp> source = approx.all();
  stats.n_approx = source.size();

  const double max_width = src.field->architecture().max_width;
  TransportOptions transport;
  transport.width_refine = options.width_refine;
  transport.centers = options.centers;
  transport.projection = options.projection;
  std::vector<std::optional<Grasp>> moved(source.size());
  parallel_for_chunks(source.size(), 8, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) moved[i] = transport_grasp(source[i], src, tgt, max_width, transport);
  });
  std::vector<Grasp> transported;
  for (const auto& g : moved) {
    if (g) transported.push_back(*g);
    else ++stats.n_rejected_projection;
  }
  stats.n_transported = transported.size();

  std::vector<Vec3> rejected_contacts;
  if (options.filter) {
    const auto verdicts = check_grasps(transported, tgt.occupancy, gripper, mu);
    for (std::size_t i = 0; i < transported.size(); ++i) {
      if (verdicts[i].passed) result.survivors.push_back(transported[i]);
      else rejected_contacts.push_back(transported[i].point);
    }
  } else {
    result.survivors = transported;
  }
  stats.n_filtered_out = transported.size() - result.survivors.size();
  stats.n_survivors = result.survivors.size();
  if (stats.n_survivors < kMinSurvivors) {
    std::ostringstream msg;
    msg << "transfer " << src.id << " -> " << tgt.id << ": category transfer infeasible, " << stats.n_survivors
        << " grasps survive (" << stats.n_approx << " approximated, " << stats.n_rejected_projection
        << " rejected by projection, " << stats.n_filtered_out << " filtered)";
    throw StageError(msg.str());
  }

  const auto samples = sample_surface(tgt.mesh, tgt.occupancy, options.label_samples, options.seed + 1);
  LabelOptions labels = options.labels;
  labels.negative_ratio = options.negative_ratio;
  labels.negative_exclusion = 2.0;
  labels.seed = options.seed + 2;
  const std::span<const Vec3> forced =
      options.filtered_as_negative ? std::span<const Vec3>(rejected_contacts) : std::span<const Vec3>();
  const auto data = make_training_points(samples, result.survivors, labels, forced);

  NsgfModel start = options.cold_start ? NsgfModel(src.field->architecture(), refit.seed) : *src.field;
  FitResult fitted = fit(std::move(start), data, refit);
  stats.refit_final_loss = fitted.loss_trace.empty() ? 0.0 : fitted.loss_trace.back();
  result.model = std::move(fitted.model);
  result.loss_trace = std::move(fitted.loss_trace);
  return result;
}

}  // namespace nsgf
