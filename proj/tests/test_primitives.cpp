#include <random>

#include "doctest.h"
#include "nsgf/mesh.hpp"
#include "nsgf/primitives.hpp"
#include "support.hpp"

using namespace nsgf;

namespace {

std::vector<Vec3> sphere_points(const Vec3& c, double r, std::size_t n, std::mt19937_64& rng) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(c + r * test::random_unit(rng));
  return pts;
}

std::vector<Vec3> bottle_points(std::size_t n, std::uint64_t seed) {
  const auto gen = generate_shape(canonical_instance(Category::kBottle), GridSpec{});
  return sample_points(sample_surface(extract_mesh(gen.field), gen.field, n, seed));
}

}  // namespace

TEST_CASE("primitive set validation") {
  SpherePrimitiveSet s{"bottle", {Vec3::Zero()}, {0.1}, true};
  CHECK_NOTHROW(s.validate());
  s.radii[0] = 0.0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.radii = {0.1, 0.2};
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("one primitive on unit-sphere samples recovers the sphere") {
  std::mt19937_64 rng(1);
  const auto pts = sphere_points(Vec3::Zero(), 1.0, 2000, rng);
  const auto r = fit_template(pts, 1, PrimitiveFitConfig::template_defaults(), "ball");
  CHECK(r.primitives.centers[0].norm() < 0.02);
  CHECK(std::abs(r.primitives.radii[0] - 1.0) < 0.02);
  CHECK(r.primitives.is_template);
}

TEST_CASE("one tiny sphere per point beats a single sphere on two clusters") {
  std::mt19937_64 rng(2);
  auto pts = sphere_points(Vec3(-1, 0, 0), 0.2, 20, rng);
  const auto right = sphere_points(Vec3(1, 0, 0), 0.2, 20, rng);
  pts.insert(pts.end(), right.begin(), right.end());
  SpherePrimitiveSet dense{"c", pts, std::vector<double>(pts.size(), 1e-6), false};
  const auto single = fit_template(pts, 1, PrimitiveFitConfig{}, "c");
  CHECK(primitive_loss(pts, dense, 0.1) <= primitive_loss(pts, single.primitives, 0.1));
  CHECK(primitive_loss(pts, dense, 0.1) < 1e-5);
}

TEST_CASE("two separated spheres get one primitive each") {
  std::mt19937_64 rng(3);
  auto pts = sphere_points(Vec3(-1.5, 0, 0), 1.0, 1500, rng);
  const auto b = sphere_points(Vec3(1.5, 0, 0), 1.0, 1500, rng);
  pts.insert(pts.end(), b.begin(), b.end());
  const auto r = fit_template(pts, 2, PrimitiveFitConfig::template_defaults(), "pair");
  const Vec3 c0 = r.primitives.centers[0], c1 = r.primitives.centers[1];
  const bool direct = (c0 - Vec3(-1.5, 0, 0)).norm() < 0.1 && (c1 - Vec3(1.5, 0, 0)).norm() < 0.1;
  const bool swapped = (c1 - Vec3(-1.5, 0, 0)).norm() < 0.1 && (c0 - Vec3(1.5, 0, 0)).norm() < 0.1;
  CHECK((direct || swapped));
}

TEST_CASE("instance fit on the template samples keeps every center within 1e-3") {
  const auto pts = bottle_points(2048, 4);
  const auto templ = fit_template(pts, 16, PrimitiveFitConfig::template_defaults(), "bottle").primitives;
  const auto inst = fit_instance(pts, templ).primitives;
  CHECK(inst.size() == templ.size());
  CHECK_FALSE(inst.is_template);
  for (std::size_t i = 0; i < templ.size(); ++i) CHECK((inst.centers[i] - templ.centers[i]).norm() < 1e-3);
}

TEST_CASE("instance fits are equivariant to scaling and translation") {
  const auto pts = bottle_points(2048, 4);
  const auto templ = fit_template(pts, 16, PrimitiveFitConfig::template_defaults(), "bottle").primitives;
  CHECK(templ.size() == 16);
  SUBCASE("scaled by 1.2") {
    std::vector<Vec3> scaled;
    for (const Vec3& p : pts) scaled.push_back(1.2 * p);
    const auto inst = fit_instance(scaled, templ).primitives;
    for (std::size_t i = 0; i < templ.size(); ++i) CHECK((inst.centers[i] - 1.2 * templ.centers[i]).norm() < 0.05);
  }
  SUBCASE("translated by d") {
    const Vec3 d(0.07, -0.04, 0.1);
    std::vector<Vec3> moved;
    for (const Vec3& p : pts) moved.push_back(p + d);
    const auto inst = fit_instance(moved, templ).primitives;
    for (std::size_t i = 0; i < templ.size(); ++i) CHECK((inst.centers[i] - (templ.centers[i] + d)).norm() < 0.05);
  }
}

TEST_CASE("every sample is covered after a template fit") {
  const auto pts = bottle_points(2048, 5);
  const auto templ = fit_template(pts, 64, PrimitiveFitConfig::template_defaults(), "bottle").primitives;
  for (const Vec3& p : pts) {
    const int j = nearest_primitive(p, templ);
    CHECK(std::abs((p - templ.centers[j]).norm() - templ.radii[j]) <= 0.1);
  }
}

TEST_CASE("nearest primitive labeling") {
  SpherePrimitiveSet s{"c", {}, {}, false};
  for (int i = 0; i < 6; ++i) {
    s.centers.push_back(Vec3(i, 0, 0));
    s.radii.push_back(0.1);
  }
  CHECK(nearest_primitive(Vec3(3, 0, 0), s) == 3);
  CHECK(nearest_primitive(Vec3(3.02, 0.01, 0), s, LabelDistance::kCenter) == 3);
  // Spheres 2 and 5 equidistant once the others move away.
  s.centers[2] = Vec3(0, 1, 0);
  s.centers[5] = Vec3(0, -1, 0);
  for (int i : {0, 1, 3, 4}) s.centers[i] = Vec3(50 + i, 0, 0);
  CHECK(nearest_primitive(Vec3::Zero(), s) == 2);
  std::mt19937_64 rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 2048; ++i) pts.push_back(test::random_unit(rng));
  const auto labels = label_points(pts, s);
  CHECK(labels.size() == 2048);
  std::vector<Vec3> reversed(pts.rbegin(), pts.rend());
  const auto relabeled = label_points(reversed, s);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(relabeled[pts.size() - 1 - i].label == labels[i].label);
}

TEST_CASE("mean shift") {
  const double bw = 0.05;
  SUBCASE("identical points are a fixed point") {
    std::vector<LabeledPoint> pts(20, LabeledPoint{Vec3(0.1, 0.2, 0.3), 4});
    const auto ms = mean_shift_centers(pts, bw);
    REQUIRE(ms.modes.count(4));
    CHECK((ms.modes.at(4) - Vec3(0.1, 0.2, 0.3)).norm() < 1e-12);
  }
  SUBCASE("Gaussian blob") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, bw / 2);
    const Vec3 mean(0.2, -0.1, 0.05);
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back({mean + Vec3(n(rng), n(rng), n(rng)), 0});
    CHECK((mean_shift_centers(pts, bw).modes.at(0) - mean).norm() < bw / 10);
  }
  SUBCASE("the mode's kernel density is at least the centroid's") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.03);
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({Vec3(n(rng), n(rng) + (i % 3 == 0 ? 0.1 : 0.0), n(rng)), 2});
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : pts) centroid += p.point;
    centroid /= pts.size();
    auto density = [&](const Vec3& y) {
      double d = 0.0;
      for (const auto& p : pts) d += std::exp(-(p.point - y).squaredNorm() / (2 * bw * bw));
      return d;
    };
    CHECK(density(mean_shift_centers(pts, bw).modes.at(2)) >= density(centroid));
  }
  SUBCASE("90/10 split lands in the majority cluster") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 0.01);
    const Vec3 big(0, 0, 0), small(0.3, 0, 0);
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 900; ++i) pts.push_back({big + Vec3(n(rng), n(rng), n(rng)), 1});
    for (int i = 0; i < 100; ++i) pts.push_back({small + Vec3(n(rng), n(rng), n(rng)), 1});
    CHECK((mean_shift_centers(pts, bw).modes.at(1) - big).norm() < 0.03);
  }
  SUBCASE("labels with fewer than 3 points fall back to sphere centers") {
    std::vector<LabeledPoint> pts{{Vec3(1, 1, 1), 0}, {Vec3(1, 1, 1), 0}};
    const auto ms = mean_shift_centers(pts, bw);
    CHECK(ms.modes.empty());
    REQUIRE(ms.dropped.size() == 1);
    SpherePrimitiveSet s{"c", {Vec3(0.5, 0, 0)}, {0.1}, false};
    CHECK(correspondence_centers(s, ms)[0] == Vec3(0.5, 0, 0));
  }
}
