#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "nsgf/grid_io.hpp"
#include "nsgf/mesh.hpp"
#include "nsgf/occupancy.hpp"
#include "nsgf/shapes.hpp"
#include "support.hpp"

using namespace nsgf;
using doctest::Approx;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Field f(x) = c + k * x over the unit-ish grid.
OccupancyField ramp_x(const GridSpec& g, double c, double k) {
  std::vector<float> data(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
  OccupancyField probe = OccupancyField::constant(g, 0.0f);
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        data[probe.index(x, y, z)] = static_cast<float>(c + k * probe.node_position(x, y, z).x());
  return OccupancyField(g, 1.0, std::move(data));
}

}  // namespace

TEST_CASE("grid spec validation") {
  GridSpec g;
  CHECK_NOTHROW(g.validate());
  g.bbox_max.x() = g.bbox_min.x();
  CHECK_THROWS_AS(g.validate(), InputError);
  GridSpec d;
  d.dims = {1, 4, 4};
  CHECK_THROWS_AS(d.validate(), InputError);
}

TEST_CASE("field values lie in [0, 1]") {
  const auto gen = generate_shape(canonical_instance(Category::kBottle), GridSpec{});
  for (float v : gen.field.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  CHECK_THROWS_AS(OccupancyField(GridSpec{}, 1.0, std::vector<float>(10, 0.5f)), InputError);
}

TEST_CASE("analytic ball: O = sigmoid(-(d - r) / beta)") {
  const double r = 0.25, beta = 0.02;
  const AnalyticShape ball(test::sphere_spec(r));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.55);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = u(rng) * test::random_unit(rng);
    CHECK(ball.occupancy(x, beta) == Approx(sigmoid(-(x.norm() - r) / beta)).epsilon(1e-12));
  }
}

TEST_CASE("box (0.2)^3 at dims 64: origin is solidly inside") {
  const auto gen = generate_shape(test::box_spec(0.2, 0.2, 0.2), GridSpec{});
  CHECK(gen.field.occupancy(Vec3::Zero()) > 0.99);
  // sdf(origin) = -0.2 with beta one voxel; the nearest nodes sit within a voxel of the origin.
  const double beta = gen.field.smoothing_beta();
  CHECK(beta == doctest::Approx(gen.field.voxel()));
  CHECK(gen.field.occupancy(Vec3::Zero()) >= sigmoid((0.2 - gen.field.voxel()) / beta));
}

TEST_CASE("query on the analytic surface is near 0.5") {
  const auto gen = generate_shape(test::sphere_spec(0.3), GridSpec{});
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = 0.3 * test::random_unit(rng);
    CHECK(std::abs(gen.field.occupancy(p) - 0.5) < 0.05);
  }
}

TEST_CASE("trilinear interpolation identities") {
  const GridSpec g = test::cube_grid(1.0, 9);
  const OccupancyField ramp = ramp_x(g, 0.5, 0.25);
  SUBCASE("grid node returns the stored value") {
    for (int i = 0; i < 9; ++i) CHECK(ramp.occupancy(ramp.node_position(i, 3, 5)) == ramp.node(i, 3, 5));
  }
  SUBCASE("cell center of a per-axis linear field is the corner mean") {
    double mean = 0.0;
    for (int c = 0; c < 8; ++c) mean += ramp.node(2 + (c & 1), 4 + ((c >> 1) & 1), 6 + ((c >> 2) & 1));
    const Vec3 center = 0.5 * (ramp.node_position(2, 4, 6) + ramp.node_position(3, 5, 7));
    CHECK(ramp.occupancy(center) == Approx(mean / 8.0).epsilon(1e-12));
  }
  SUBCASE("constant field") {
    const auto c = OccupancyField::constant(g, 0.7f);
    CHECK(c.occupancy(Vec3(0.123, -0.77, 0.4)) == Approx(0.7).epsilon(1e-7));
  }
  SUBCASE("outside the bbox clamps and reports it") {
    const auto s = ramp.query(Vec3(2.0, 0.0, 0.0));
    CHECK(s.clamped);
    CHECK(s.value == Approx(ramp.occupancy(Vec3(1.0, 0.0, 0.0))));
  }
}

TEST_CASE("occupancy gradient") {
  const GridSpec g = test::cube_grid(1.0, 17);
  SUBCASE("linear in x") {
    const double k = 0.375;  // exactly representable in f32 node values
    const auto ramp = ramp_x(g, 0.5, k);
    const auto grad = ramp.gradient(Vec3(0.11, -0.2, 0.33));
    CHECK_FALSE(grad.one_sided);
    CHECK((grad.value - Vec3(k, 0, 0)).norm() < 1e-9);
  }
  SUBCASE("constant") {
    CHECK(OccupancyField::constant(g, 0.3f).gradient(Vec3(0.1, 0.2, 0.3)).value.norm() == 0.0);
  }
  SUBCASE("near the bbox falls back to one-sided differences") {
    CHECK(ramp_x(g, 0.5, 0.375).gradient(Vec3(0.99, 0, 0)).one_sided);
  }
  SUBCASE("ball surface: gradient points inward") {
    const auto gen = generate_shape(test::sphere_spec(0.3), GridSpec{});
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
      const Vec3 n = test::random_unit(rng);
      CHECK(test::angle_deg(gen.field.gradient(0.3 * n).value, -n) < 5.0);
    }
  }
}

TEST_CASE("shape confidence") {
  const GridSpec g = test::cube_grid(1.0, 17);
  CHECK(shape_confidence(OccupancyField::constant(g, 0.4f), Vec3(0.2, 0.1, 0)) == 0.0);
  CHECK(shape_confidence(ramp_x(g, 0.5, -0.375), Vec3(0.2, 0.1, 0)) == Approx(0.375).epsilon(1e-9));
  const auto sharp = generate_shape(test::sphere_spec(0.3), GridSpec{}, 0.01);
  const auto blurred = generate_shape(test::sphere_spec(0.3), GridSpec{}, 0.05);
  const Vec3 p(0.3, 0, 0);
  CHECK(shape_confidence(sharp.field, p) > shape_confidence(blurred.field, p));
  Vec3 n;
  REQUIRE(outward_normal(sharp.field, p, n));
  CHECK(n.norm() == Approx(1.0).epsilon(1e-6));
  CHECK(test::angle_deg(n, Vec3::UnitX()) < 2.0);
  CHECK_FALSE(outward_normal(OccupancyField::constant(g, 0.4f), p, n));
}

TEST_CASE("marching cubes") {
  SUBCASE("ball r = 0.3, 64^3 over [-0.5, 0.5]^3") {
    const auto gen = generate_shape(test::sphere_spec(0.3), test::cube_grid(0.5, 64));
    const TriMesh mesh = extract_mesh(gen.field);
    REQUIRE_FALSE(mesh.empty());
    CHECK_NOTHROW(mesh.validate());
    const double diag = std::sqrt(3.0) * gen.field.voxel();
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.norm() - 0.3) <= diag);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      CHECK(mesh.vertex_normals[i].norm() == Approx(1.0).epsilon(1e-6));
      CHECK(mesh.vertex_normals[i].dot(mesh.vertices[i]) > 0.0);
    }
    CHECK(mesh.area() == Approx(4.0 * std::numbers::pi * 0.09).epsilon(0.03));
  }
  SUBCASE("all-zero field is empty") {
    CHECK(extract_mesh(OccupancyField::constant(GridSpec{}, 0.0f)).empty());
  }
  SUBCASE("cube area within 10%") {
    const double a = 0.25;
    const auto gen = generate_shape(test::box_spec(a, a, a), GridSpec{});
    CHECK(extract_mesh(gen.field).area() == Approx(6.0 * (2 * a) * (2 * a)).epsilon(0.10));
  }
}

TEST_CASE("surface sampling") {
  const auto gen = generate_shape(test::sphere_spec(0.3, Vec3(0.05, -0.02, 0.01)), GridSpec{});
  const TriMesh mesh = extract_mesh(gen.field);
  SUBCASE("exact count, unit normals, non-negative confidence") {
    const auto s = sample_surface(mesh, gen.field, 5000, 1);
    CHECK(s.size() == 5000);
    for (const auto& x : s) {
      CHECK(x.normal.norm() == Approx(1.0).epsilon(1e-6));
      CHECK(x.confidence >= 0.0);
    }
  }
  SUBCASE("centroid of 10k samples is the ball center") {
    const auto s = sample_surface(mesh, gen.field, 10000, 2);
    Vec3 c = Vec3::Zero();
    for (const auto& x : s) c += x.point;
    CHECK((c / s.size() - Vec3(0.05, -0.02, 0.01)).norm() < 0.01);
  }
  SUBCASE("single triangle: samples stay inside it") {
    TriMesh tri;
    tri.vertices = {Vec3(0.0, 0.0, 0.0), Vec3(0.2, 0.0, 0.0), Vec3(0.0, 0.1, 0.0)};
    tri.faces = {{0, 1, 2}};
    tri.vertex_normals = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()};
    for (const auto& x : sample_surface(tri, gen.field, 500, 3)) {
      const double u = x.point.x() / 0.2, v = x.point.y() / 0.1;
      CHECK(u >= -1e-12);
      CHECK(v >= -1e-12);
      CHECK(u + v <= 1.0 + 1e-12);
      CHECK(x.point.z() == 0.0);
    }
  }
  SUBCASE("same seed, same samples") {
    const auto a = sample_surface(mesh, gen.field, 100, 9), b = sample_surface(mesh, gen.field, 100, 9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].point == b[i].point);
  }
}

TEST_CASE("grid file round trip and payload size") {
  const auto gen = generate_shape(canonical_instance(Category::kBox), GridSpec{});
  std::stringstream ss;
  write_grid(gen.field, ss);
  const std::string bytes = ss.str();
  const std::size_t header = 4 + 2 + 3 * 4 + 3 * 8 + 3 * 8 + 8;
  CHECK(bytes.size() == header + 64u * 64u * 64u * 4u);
  CHECK(bytes.substr(0, 4) == "NSGF");
  std::stringstream in(bytes);
  const OccupancyField back = read_grid(in);
  CHECK(back.dims() == gen.field.dims());
  CHECK(back.smoothing_beta() == gen.field.smoothing_beta());
  CHECK(std::equal(back.data().begin(), back.data().end(), gen.field.data().begin()));
  std::stringstream truncated(bytes.substr(0, bytes.size() - 10));
  CHECK_THROWS_AS(read_grid(truncated), InputError);
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::stringstream bad(wrong);
  CHECK_THROWS_AS(read_grid(bad), InputError);
}

TEST_CASE("OBJ round trip") {
  const auto gen = generate_shape(test::sphere_spec(0.2), test::cube_grid(0.3, 24));
  const TriMesh mesh = extract_mesh(gen.field);
  std::stringstream ss;
  write_obj(mesh, ss);
  const TriMesh back = read_obj(ss);
  CHECK(back.faces == mesh.faces);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) CHECK((back.vertices[i] - mesh.vertices[i]).norm() < 1e-8);
}

TEST_CASE("shape validation names the parameter") {
  ShapeSpec s = canonical_instance(Category::kBowl);
  s.params["thickness"] = 1.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("thickness"), InputError);
  ShapeSpec q = canonical_instance(Category::kBox);
  q.pose.scale = 0.0;
  CHECK_THROWS_AS(q.validate(), InputError);
  CHECK_THROWS_AS(category_from_string("mug"), InputError);
  CHECK_NOTHROW(random_instance(Category::kBottle, 3).validate());
}
