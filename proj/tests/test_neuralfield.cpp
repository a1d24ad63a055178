#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "nsgf/fit.hpp"
#include "nsgf/grasp.hpp"
#include "nsgf/loss.hpp"
#include "nsgf/model.hpp"
#include "nsgf/occupancy.hpp"
#include "nsgf/rotation.hpp"
#include "nsgf/width.hpp"
#include "support.hpp"

using namespace nsgf;
using doctest::Approx;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

// Mixed batch on a ball of radius 0.3: every third point positive.
std::vector<TrainingPoint> random_batch(std::size_t count, std::mt19937_64& rng) {
  std::vector<TrainingPoint> out;
  for (std::size_t i = 0; i < count; ++i) {
    TrainingPoint tp;
    tp.normal = test::random_unit(rng);
    tp.point = 0.3 * tp.normal;
    tp.positive = i % 3 == 0;
    if (tp.positive) {
      const Mat3 r = random_rotation(rng);
      tp.approach = r.col(2);
      tp.tangential = r.col(1);
      tp.contact_gt = tp.point - 0.2 * tp.normal;
    }
    out.push_back(tp);
  }
  return out;
}

Rot6 six_of(const Vec3& a, const Vec3& t) { return {a.x(), a.y(), a.z(), t.x(), t.y(), t.z()}; }

}  // namespace

TEST_CASE("6D rotation: worked examples") {
  const GraspFrame f = rot6d_to_frame({0, 0, 1, 0, 1, 0});
  CHECK(f.approach == Vec3(0, 0, 1));
  CHECK(f.tangential == Vec3(0, 1, 0));
  CHECK(f.baseline == Vec3(1, 0, 0));
  const GraspFrame g = rot6d_to_frame({0, 0, 2, 0, 3, 0});
  CHECK(g.approach == f.approach);
  CHECK(g.tangential == f.tangential);
  CHECK(g.baseline == f.baseline);
  CHECK_THROWS_AS(rot6d_to_frame({0, 0, 0, 0, 1, 0}), InputError);
  CHECK_THROWS_AS(rot6d_to_frame({0, 0, 1, 0, 0, -2}), InputError);
}

TEST_CASE("6D rotation: round trip over random rotations with scaled columns") {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    // Columns of a grasp frame matrix are (b, t, a).
    const GraspFrame f = rot6d_to_frame(six_of(1.7 * r.col(2), 1.7 * r.col(1)));
    worst = std::max({worst, (f.approach - r.col(2)).norm(), (f.tangential - r.col(1)).norm(),
                      (f.baseline - r.col(0)).norm()});
    const Rot6 back = frame_to_rot6d(f);
    const GraspFrame again = rot6d_to_frame(back);
    worst = std::max(worst, (again.matrix() - r).norm());
    CHECK((f.matrix() - GraspFrame::from_matrix(r).matrix()).norm() < 1e-9);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("6D rotation: backward matches finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Rot6 six;
    for (double& v : six) v = n(rng);
    const Vec3 ga(n(rng), n(rng), n(rng)), gt(n(rng), n(rng), n(rng)), gb(n(rng), n(rng), n(rng));
    auto objective = [&](const Rot6& s) {
      const GraspFrame f = rot6d_to_frame(s);
      return ga.dot(f.approach) + gt.dot(f.tangential) + gb.dot(f.baseline);
    };
    const Rot6 analytic = rot6d_to_frame_backward(six, ga, gt, gb);
    for (int k = 0; k < 6; ++k) {
      Rot6 hi = six, lo = six;
      hi[k] += 1e-6;
      lo[k] -= 1e-6;
      CHECK(analytic[k] == Approx((objective(hi) - objective(lo)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("minimal rotation") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = test::random_unit(rng), b = test::random_unit(rng);
    const Mat3 r = minimal_rotation(a, b);
    CHECK((r * a - b).norm() < 1e-12);
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == Approx(1.0));
    // Vectors orthogonal to both stay fixed.
    const Vec3 axis = a.cross(b);
    if (axis.norm() > 1e-6) CHECK((r * axis.normalized() - axis.normalized()).norm() < 1e-12);
  }
  CHECK((minimal_rotation(Vec3::UnitX(), Vec3::UnitX()) - Mat3::Identity()).norm() < 1e-15);
  const Mat3 flip = minimal_rotation(Vec3::UnitZ(), -Vec3::UnitZ());
  CHECK((flip * Vec3::UnitZ() + Vec3::UnitZ()).norm() < 1e-12);
  CHECK(flip.determinant() == Approx(1.0));
}

TEST_CASE("model construction and query") {
  const Architecture arch;
  const NsgfModel model(arch, 11);
  CHECK(model.finite());
  CHECK(model.backbone().input_dim() == 3 + arch.feature_dim);
  CHECK(model.rotation_head().output_dim() == 6);
  CHECK(model.width_head().output_dim() == 1);
  CHECK(model.validity_head().output_dim() == 1);
  CHECK(model.grid_size() == static_cast<std::size_t>(arch.feature_dim) * arch.grid_res * arch.grid_res * arch.grid_res);
  const NsgfModel same(arch, 11);
  CHECK(std::equal(model.parameters().begin(), model.parameters().end(), same.parameters().begin()));
  CHECK_THROWS_AS(NsgfModel(arch, std::vector<double>(5, 0.0)), InputError);

  std::mt19937_64 rng(4);
  std::vector<Vec3> pts;
  for (int i = 0; i < 5000; ++i) pts.push_back(0.5 * test::random_unit(rng));
  const auto preds = query(model, pts);
  CHECK(preds.size() == 5000);
  for (const auto& p : preds) {
    CHECK(p.width_coarse > 0.0);
    CHECK(p.width_coarse < arch.max_width);
    CHECK((p.frame.baseline - p.frame.tangential.cross(p.frame.approach)).norm() < 1e-9);
  }
  const std::vector<Vec3> twice{pts[7], pts[7]};
  const auto again = query(model, twice);
  CHECK(std::memcmp(&again[0].validity, &again[1].validity, sizeof(double)) == 0);
  CHECK(std::memcmp(again[0].rot6.data(), again[1].rot6.data(), 6 * sizeof(double)) == 0);
  CHECK(again[0].validity == preds[7].validity);
}

TEST_CASE("fit configuration defaults") {
  const FitConfig c;
  CHECK(c.iterations == 200);
  CHECK(c.points_per_iter == 2000);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.lambda_reg == 0.1);
  CHECK(FitConfig::refit_defaults().iterations == 40);
  FitConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("loss terms vanish at their optima") {
  const double max_width = 0.25;
  TrainingPoint tp;
  tp.positive = true;
  tp.point = Vec3(0.1, 0.0, 0.0);
  tp.approach = Vec3::UnitZ();
  tp.tangential = Vec3::UnitY();
  const Vec3 b = tp.tangential.cross(tp.approach);  // +x
  const std::vector<double> six{0, 0, 1, 0, 1, 0};
  const std::vector<double> logit{0.0}, q{3.0};
  const double wc = 0.5 * max_width;
  SUBCASE("b = n") {
    tp.normal = b;
    tp.contact_gt = tp.point + wc * b;
    const auto l = loss_from_outputs(six, logit, q, std::span(&tp, 1), 0.1, max_width, nullptr);
    CHECK(l.reg == Approx(0.0));
    CHECK(l.width == Approx(0.0));
    CHECK(l.rotation == Approx(0.0));
  }
  SUBCASE("b = -n") {
    tp.normal = -b;
    tp.contact_gt = tp.point + wc * b;
    const auto l = loss_from_outputs(six, logit, q, std::span(&tp, 1), 0.1, max_width, nullptr);
    CHECK(l.reg == Approx(0.0));
  }
  SUBCASE("p'_gt off the predicted contact") {
    tp.normal = b;
    tp.contact_gt = tp.point + (wc + 0.01) * b;
    const auto l = loss_from_outputs(six, logit, q, std::span(&tp, 1), 0.1, max_width, nullptr);
    CHECK(l.width == Approx(1e-4));
  }
  SUBCASE("negatives only") {
    tp.positive = false;
    const auto l = loss_from_outputs(six, logit, q, std::span(&tp, 1), 0.1, max_width, nullptr);
    CHECK(l.no_positives);
    CHECK(l.rotation == 0.0);
    CHECK(l.validity == Approx(std::log1p(std::exp(3.0))));
  }
}

TEST_CASE("gradient check on small random models") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const NsgfModel model(test::small_arch(), 100 + trial);
    const auto batch = random_batch(8, rng);
    const auto report = grad_check(model, batch, 0.1);
    CHECK(report.parameters_checked == model.parameter_count());
    CHECK(report.max_relative_error < 1e-4);
  }
}

TEST_CASE("zero validity head: gradient is the BCE derivative at logit 0") {
  NsgfModel model(test::small_arch(), 6);
  const LayerSpec& last = model.validity_head().layers.back();
  auto params = model.parameters();
  std::fill_n(params.begin() + last.weight_offset, last.in * last.out, 0.0);
  params[last.bias_offset] = 0.0;
  std::mt19937_64 rng(7);
  const auto batch = random_batch(12, rng);
  const auto lg = loss_and_gradient(model, batch, 0.1);
  const double n = batch.size(), pos = 4.0, neg = 8.0;
  // Positives weighted by neg/pos: d/dq softplus(-q) = -1/2, d/dq softplus(q) = 1/2.
  const double expected = (pos * (neg / pos) * -0.5 + neg * 0.5) / n;
  CHECK(lg.gradient[last.bias_offset] == Approx(expected).epsilon(1e-12));
  CHECK(lg.loss.validity == Approx(2.0 * neg * std::log(2.0) / n).epsilon(1e-12));
}

TEST_CASE("lambda only changes gradients through the regularizer") {
  const NsgfModel model(test::small_arch(), 8);
  std::mt19937_64 rng(9);
  const auto batch = random_batch(12, rng);
  const auto g0 = loss_and_gradient(model, batch, 0.0).gradient;
  const auto g1 = loss_and_gradient(model, batch, 0.1).gradient;
  auto untouched = [&](const Network& net) {
    for (const auto& layer : net.layers)
      for (std::size_t k = layer.weight_offset; k < layer.bias_offset + layer.out; ++k)
        if (g0[k] != g1[k]) return false;
    return true;
  };
  CHECK(untouched(model.validity_head()));
  CHECK(untouched(model.width_head()));
  CHECK_FALSE(untouched(model.rotation_head()));
}

TEST_CASE("overfitting a single labeled point") {
  TrainingPoint tp;
  tp.positive = true;
  tp.point = Vec3(0.12, -0.05, 0.2);
  tp.normal = Vec3::UnitX();
  tp.approach = -Vec3::UnitZ();
  tp.tangential = Vec3::UnitY();
  const Vec3 b = tp.tangential.cross(tp.approach);
  tp.contact_gt = tp.point + 0.1 * b;
  FitConfig cfg;
  cfg.iterations = 500;
  cfg.points_per_iter = 1;
  const auto result = fit(NsgfModel(Architecture{}, 12), std::span(&tp, 1), cfg);
  const auto pred = query(result.model, std::vector<Vec3>{tp.point});
  CHECK(pred[0].validity > 0.0);
  CHECK(fitting_loss(result.model, std::span(&tp, 1), 0.1).width < 1e-4);
  CHECK(result.loss_trace.size() == 500);
  CHECK(smoothed_loss(result.loss_trace, 499) < smoothed_loss(result.loss_trace, 19));
}

TEST_CASE("width refinement on a ball") {
  const double r = 0.2;
  const auto gen = generate_shape(test::sphere_spec(r), GridSpec{});
  const double voxel = gen.field.voxel();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.5 * r + 1e-3, 0.45);
  for (int i = 0; i < 50; ++i) {
    const Vec3 n = test::random_unit(rng);
    const auto res = refine_width(gen.field, r * n, -n, u(rng), 0.5);
    CHECK(res.found);
    CHECK(std::abs(res.width - 2 * r) <= voxel);
  }
  SUBCASE("antipodal point already on the iso-surface") {
    const Vec3 p(-r, 0, 0);
    const auto s = find_crossing(gen.field, p, Vec3::UnitX(), 2 * r, 0.0, 0.5, Crossing::kExit);
    REQUIRE(s);
    const auto res = refine_width(gen.field, p, Vec3::UnitX(), *s, 0.5);
    CHECK(res.found);
    CHECK(std::abs(res.width - *s) < 1e-9);
  }
  SUBCASE("no crossing in range keeps the coarse width") {
    const auto res = refine_width(gen.field, Vec3(r, 0, 0), Vec3::UnitX(), 0.1, 0.25);
    CHECK_FALSE(res.found);
    CHECK(res.width == 0.1);
  }
}

TEST_CASE("closest-point projection onto a ball") {
  const double r = 0.2;
  const auto gen = generate_shape(test::sphere_spec(r), GridSpec{});
  const double voxel = gen.field.voxel();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const Vec3 n = test::random_unit(rng);
    const Vec3 x = (r + u(rng) * voxel) * n;
    const auto c = project_to_surface(gen.field, x, 5 * voxel);
    REQUIRE(c);
    CHECK(std::abs(c->norm() - r) <= 0.5 * voxel);
    CHECK(test::angle_deg(c->normalized(), n) < 1.0);
  }
  CHECK_FALSE(project_to_surface(gen.field, Vec3(r + 8 * voxel, 0, 0), 5 * voxel));
}

TEST_CASE("assemble_pose") {
  GripperModel gripper;
  gripper.finger_depth = 0.04;
  const Grasp g = make_grasp(Vec3::Zero(), -Vec3::UnitZ(), Vec3::UnitY(), 0.08);
  CHECK((g.baseline - Vec3(-1, 0, 0)).norm() < 1e-15);
  const auto pose = assemble_pose(g, gripper);
  CHECK((pose.translation() - Vec3(-0.04, 0, 0.04)).norm() < 1e-15);
  CHECK((pose.linear().col(0) - g.baseline).norm() < 1e-15);
  CHECK((pose.linear().col(2) - g.approach).norm() < 1e-15);

  const Grasp closed = make_grasp(Vec3(0.1, 0.2, 0.3), Vec3::UnitX(), Vec3::UnitY(), 0.0);
  CHECK((assemble_pose(closed, gripper).translation() - (closed.point - 0.04 * closed.approach)).norm() < 1e-15);

  std::mt19937_64 rng(14);
  const Mat3 rot = random_rotation(rng);
  const Grasp turned = make_grasp(Vec3::Zero(), rot * g.approach, rot * g.tangential, 0.08);
  CHECK((assemble_pose(turned, gripper).linear() - rot * pose.linear()).norm() < 1e-12);
}

TEST_CASE("grasp validation") {
  Grasp g = make_grasp(Vec3::Zero(), Vec3::UnitZ(), Vec3::UnitY(), 0.1);
  CHECK_NOTHROW(g.validate(0.25));
  CHECK((g.right_contact() - 0.1 * g.baseline).norm() < 1e-15);
  g.width = 0.3;
  CHECK_THROWS_AS(g.validate(0.25), InputError);
  g.width = 0.1;
  g.baseline = -g.baseline;
  CHECK_THROWS_AS(g.validate(0.25), InputError);
}
