#include <cmath>
#include <random>

#include "doctest.h"
#include "nsgf/annotate.hpp"
#include "nsgf/oracle.hpp"
#include "nsgf/transfer.hpp"
#include "support.hpp"

using namespace nsgf;
using doctest::Approx;

namespace {

ObjectRecord with_template(ObjectRecord rec, int n, std::uint64_t seed) {
  PrimitiveFitConfig cfg;
  cfg.steps = 600;
  rec.primitives = fit_template(test::surface_points(rec, 2048, seed), n, cfg, "t").primitives;
  return rec;
}

ObjectRecord shifted(const ObjectRecord& src, const std::string& id, const ShapeSpec& spec) {
  ObjectRecord tgt = test::make_record(id, spec);
  tgt.primitives = src.primitives;
  for (auto& c : tgt.primitives.centers) c += spec.pose.translation;
  return tgt;
}

double rotation_deg(const Grasp& a, const Grasp& b) {
  const Mat3 ra = a.frame().matrix(), rb = b.frame().matrix();
  const double c = std::clamp(((ra.transpose() * rb).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

// Ball source with an annotated, fitted small field.
struct BallSource {
  ObjectRecord rec;
  Annotation ann;
  BallSource() : rec(with_template(test::make_record("ball", test::sphere_spec(0.1)), 16, 3)) {
    ann = annotate_source(rec.occupancy, rec.mesh, GripperModel{}, kDefaultFriction, 100, 4);
    LabelOptions lo;
    lo.negative_ratio = 4.0;
    lo.negative_exclusion = 2.0;
    const auto data = make_training_points(sample_surface(rec.mesh, rec.occupancy, 8000, 5), ann.grasps, lo);
    FitConfig fc;
    fc.iterations = 300;
    fc.points_per_iter = 1000;
    fc.learning_rate = 3e-3;
    rec.field = fit(NsgfModel(test::small_arch(), 6), data, fc).model;
  }
};

const BallSource& ball_source() {
  static const BallSource s;
  return s;
}

}  // namespace

TEST_CASE("make_training_points: radius, nearest contact and negative ratio") {
  const ObjectRecord rec = test::make_record("ball", test::sphere_spec(0.1));
  const auto samples = sample_surface(rec.mesh, rec.occupancy, 6000, 1);
  const std::vector<Grasp> grasps{make_grasp(Vec3(-0.1, 0, 0), -Vec3::UnitZ(), -Vec3::UnitY(), 0.2),
                                  make_grasp(Vec3(0, -0.1, 0), -Vec3::UnitZ(), Vec3::UnitX(), 0.2)};
  LabelOptions lo;
  lo.radius = 0.02;
  const auto all = make_training_points(samples, grasps, lo);
  CHECK(all.size() == samples.size());
  std::size_t n_pos = 0;
  for (const auto& tp : all) {
    const double d0 = (tp.point - grasps[0].point).norm(), d1 = (tp.point - grasps[1].point).norm();
    const bool near = std::min(d0, d1) <= lo.radius;
    CHECK(tp.positive == near);
    if (!tp.positive) continue;
    ++n_pos;
    const Grasp& g = d0 <= d1 ? grasps[0] : grasps[1];
    CHECK(tp.approach == g.approach);
    CHECK(tp.tangential == g.tangential);
    CHECK((tp.contact_gt - (tp.point + g.width * g.baseline)).norm() < 1e-12);
  }
  CHECK(n_pos > 0);

  lo.negative_ratio = 4.0;
  lo.negative_exclusion = 2.0;
  const auto ratio = make_training_points(samples, grasps, lo);
  std::size_t pos = 0, neg = 0;
  for (const auto& tp : ratio) {
    if (tp.positive) {
      ++pos;
      continue;
    }
    ++neg;
    for (const auto& g : grasps) CHECK((tp.point - g.point).norm() > 2.0 * lo.radius);
  }
  CHECK(pos == n_pos);
  CHECK(neg == 4 * pos);

  // A forced negative wins over a grasp that is farther away.
  const std::vector<Vec3> forced{grasps[0].point + Vec3(0, 0, 0.005)};
  std::size_t flipped = 0;
  for (const auto& tp : make_training_points(samples, grasps, LabelOptions{0.02}, forced))
    flipped += !tp.positive && (tp.point - forced[0]).norm() < (tp.point - grasps[0].point).norm() &&
               (tp.point - forced[0]).norm() <= 0.02;
  CHECK(flipped > 0);
}

TEST_CASE("center_pair") {
  ObjectRecord a, b;
  a.primitives.category_id = b.primitives.category_id = "c";
  a.primitives.centers = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  b.primitives.centers = {Vec3(0, 1, 0), Vec3(1, 1, 0)};
  a.primitives.radii = b.primitives.radii = {0.1, 0.1};
  a.modes = {{1, Vec3(0.9, 0, 0)}};
  b.modes = {{1, Vec3(0.8, 1, 0)}};
  CHECK(center_pair(a, b, 1).first == Vec3(1, 0, 0));
  const auto [s, t] = center_pair(a, b, 1, CenterSource::kMeanShift);
  CHECK(s == Vec3(0.9, 0, 0));
  CHECK(t == Vec3(0.8, 1, 0));
  // Label 0 has no modes: sphere centers.
  CHECK(center_pair(a, b, 0, CenterSource::kMeanShift).second == Vec3(0, 1, 0));
}

TEST_CASE("transport onto a translated target") {
  const ObjectRecord src = with_template(test::make_record("src", test::sphere_spec(0.1)), 16, 1);
  const Vec3 d(0.07, -0.04, 0.1);
  const ObjectRecord tgt = shifted(src, "tgt", test::sphere_spec(0.1, d));
  const Annotation ann = annotate_source(src.occupancy, src.mesh, GripperModel{}, kDefaultFriction, 100, 2);
  const double voxel = tgt.occupancy.voxel();
  std::size_t close = 0;
  for (const Grasp& g : ann.grasps) {
    const auto out = transport_grasp(g, src, tgt, GripperModel{}.max_width);
    REQUIRE(out.has_value());
    CHECK_NOTHROW(out->validate(GripperModel{}.max_width));
    close += (out->point - (g.point + d)).norm() <= voxel && rotation_deg(*out, g) <= 1.0;
  }
  CHECK(close >= 0.95 * ann.grasps.size());

  const ObjectRecord same = shifted(src, "same", test::sphere_spec(0.1));
  for (const Grasp& g : ann.grasps) {
    const auto out = transport_grasp(g, src, same, GripperModel{}.max_width);
    REQUIRE(out.has_value());
    CHECK((out->point - g.point).norm() <= voxel);
    CHECK(std::abs(out->width - g.width) <= voxel);
  }
}

TEST_CASE("transport rejects contacts with no nearby surface and mismatched primitives") {
  const ObjectRecord src = with_template(test::make_record("src", test::sphere_spec(0.1)), 8, 1);
  ObjectRecord far = shifted(src, "far", test::sphere_spec(0.1));
  const Grasp g = make_grasp(Vec3(-0.1, 0, 0), -Vec3::UnitZ(), -Vec3::UnitY(), 0.2);
  // Target centers claim a shift the surface does not follow.
  for (auto& c : far.primitives.centers) c += Vec3(0, 0, 0.3);
  CHECK_FALSE(transport_grasp(g, src, far, 0.25).has_value());
  ObjectRecord other = far;
  other.primitives.category_id = "other";
  CHECK_THROWS_AS(transport_grasp(g, src, other, 0.25), InputError);
}

TEST_CASE("diametral cylinder grasp moves to the wider target") {
  const GripperModel gripper = GripperModel::wide();
  const ObjectRecord src = with_template(test::make_record("r010", cylinder_spec(0.10, 1.0)), 32, 1);
  ObjectRecord tgt = test::make_record("r015", cylinder_spec(0.15, 1.0));
  tgt.primitives = fit_instance(test::surface_points(tgt, 2048, 2), src.primitives).primitives;
  const Grasp g = make_grasp(Vec3(-0.1, 0, 0), -Vec3::UnitY(), Vec3::UnitZ(), 0.2);
  REQUIRE((g.baseline - Vec3::UnitX()).norm() < 1e-12);
  REQUIRE(check_grasp(g, src.occupancy, gripper).passed);
  CHECK_FALSE(check_grasp(g, tgt.occupancy, gripper).passed);
  const auto out = transport_grasp(g, src, tgt, gripper.max_width);
  REQUIRE(out.has_value());
  CHECK(std::abs(out->width - 0.30) <= tgt.occupancy.voxel());
  CHECK(check_grasp(*out, tgt.occupancy, gripper).passed);
}

TEST_CASE("decode_grasps and approximate_field") {
  const BallSource& s = ball_source();
  const auto decoded = decode_grasps(*s.rec.field, s.rec, 3000, 7);
  REQUIRE_FALSE(decoded.empty());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    CHECK(decoded[i].valid());
    if (i > 0) CHECK(decoded[i - 1].confidence >= decoded[i].confidence);
  }
  const ApproxField approx = approximate_field(s.rec, 3000, 7);
  CHECK(approx.size() == approx.all().size());
  for (const auto& [j, list] : approx.buckets) {
    CHECK(list.size() <= kMaxGraspsPerPrimitive);
    CHECK_FALSE(list.empty());
    for (const Grasp& g : list) CHECK(nearest_primitive(g.point, s.rec.primitives) == j);
  }
  ObjectRecord no_field = s.rec;
  no_field.field.reset();
  CHECK_THROWS_AS(approximate_field(no_field, 100, 1), InputError);
}

TEST_CASE("identity transfer keeps grasps valid") {
  const BallSource& s = ball_source();
  ObjectRecord tgt = s.rec;
  tgt.id = "copy";
  tgt.field.reset();
  FitConfig refit = FitConfig::refit_defaults();
  refit.points_per_iter = 1000;
  TransferOptions opts;
  opts.approx_samples = 3000;
  opts.label_samples = 8000;
  const TransferResult r = transfer_field(s.rec, tgt, GripperModel{}, kDefaultFriction, refit, opts);
  const TransferStats& st = r.stats;
  CHECK(st.n_transported + st.n_rejected_projection == st.n_approx);
  CHECK(st.n_survivors + st.n_filtered_out == st.n_transported);
  CHECK(st.n_survivors == r.survivors.size());
  CHECK(st.n_survivors >= kMinSurvivors);
  CHECK(r.loss_trace.size() == static_cast<std::size_t>(refit.iterations));

  const auto decoded = decode_grasps(r.model, tgt, 3000, 9);
  REQUIRE_FALSE(decoded.empty());
  std::size_t pass = 0;
  for (const auto& v : check_grasps(decoded, tgt.occupancy, GripperModel{})) pass += v.passed;
  MESSAGE("identity transfer: " << pass << " of " << decoded.size() << " decoded grasps pass");
  CHECK(pass >= 0.9 * decoded.size());
}

TEST_CASE("transfer aborts when too few grasps survive") {
  const BallSource& s = ball_source();
  // A much larger target: every transported grasp is too wide or collides.
  ObjectRecord tgt = test::make_record("big", test::sphere_spec(0.3));
  tgt.primitives = s.rec.primitives;
  for (auto& c : tgt.primitives.centers) c *= 3.0;
  TransferOptions opts;
  opts.approx_samples = 2000;
  CHECK_THROWS_AS(transfer_field(s.rec, tgt, GripperModel{}, kDefaultFriction, FitConfig::refit_defaults(), opts),
                  StageError);
}
