#include "nsgf/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "nsgf/parallel.hpp"

namespace nsgf {
namespace {

double get(const ShapeSpec& s, const std::string& name) {
  auto it = s.params.find(name);
  if (it == s.params.end()) throw InputError("shape parameter '" + name + "' is missing");
  if (!std::isfinite(it->second)) throw InputError("shape parameter '" + name + "' is not finite");
  return it->second;
}

void check_range(const ShapeSpec& s, const std::string& name, double lo, double hi) {
  const double v = get(s, name);
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << "shape parameter '" << name << "' = " << v << " outside [" << lo << ", " << hi << "]";
    throw InputError(os.str());
  }
}

int bottle_knots(const ShapeSpec& s) {
  int k = 0;
  while (s.params.count("r" + std::to_string(k))) ++k;
  return k;
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string to_string(Category c) {
  switch (c) {
    case Category::kBottle: return "bottle";
    case Category::kBowl: return "bowl";
    case Category::kBox: return "box";
  }
  return "unknown";
}

Category category_from_string(const std::string& name) {
  if (name == "bottle") return Category::kBottle;
  if (name == "bowl") return Category::kBowl;
  if (name == "box") return Category::kBox;
  throw InputError("unknown shape category '" + name + "'");
}

void ShapeSpec::validate() const {
  if (!(pose.scale > 0.0)) throw InputError("pose scale must be positive");
  if (std::abs(pose.rotation.norm() - 1.0) > 1e-9) throw InputError("pose quaternion must be unit length");
  if (!pose.translation.allFinite()) throw InputError("pose translation must be finite");
  switch (category) {
    case Category::kBottle: {
      check_range(*this, "height", 0.05, 1.2);
      const int k = bottle_knots(*this);
      if (k < 1) throw InputError("shape parameter 'r0' is missing");
      for (int i = 0; i < k; ++i) check_range(*this, "r" + std::to_string(i), 0.005, 0.6);
      break;
    }
    case Category::kBowl: {
      check_range(*this, "radius", 0.02, 0.6);
      check_range(*this, "thickness", 0.002, get(*this, "radius"));
      check_range(*this, "cap_angle", 0.05, std::numbers::pi);
      break;
    }
    case Category::kBox:
      for (const char* n : {"hx", "hy", "hz"}) check_range(*this, n, 0.005, 0.6);
      break;
  }
}

AnalyticShape::AnalyticShape(const ShapeSpec& spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.category) {
    case Category::kBottle: {
      const double h = get(spec_, "height");
      const int k = bottle_knots(spec_);
      const double zb = -0.5 * h, zt = 0.5 * h;
      profile_.emplace_back(0.0, zb);
      if (k == 1) {
        profile_.emplace_back(get(spec_, "r0"), zb);
        profile_.emplace_back(get(spec_, "r0"), zt);
      } else {
        for (int i = 0; i < k; ++i) {
          profile_.emplace_back(get(spec_, "r" + std::to_string(i)), zb + h * i / (k - 1));
        }
      }
      profile_.emplace_back(0.0, zt);
      break;
    }
    case Category::kBowl: {
      bowl_radius_ = get(spec_, "radius");
      bowl_thickness_ = get(spec_, "thickness");
      bowl_cap_ = get(spec_, "cap_angle");
      // Sphere center placed so the object's z-extent is centered at 0.
      const double z_lo = -bowl_radius_;
      const double z_hi = -bowl_radius_ * std::cos(bowl_cap_);
      bowl_center_z_ = -0.5 * (z_lo + z_hi);
      break;
    }
    case Category::kBox:
      box_half_ = Vec3(get(spec_, "hx"), get(spec_, "hy"), get(spec_, "hz"));
      break;
  }
}

double AnalyticShape::local_sdf(const Vec3& x) const {
  switch (spec_.category) {
    case Category::kBottle: {
      const Eigen::Vector2d q(std::hypot(x.x(), x.y()), x.z());
      double d = std::numeric_limits<double>::infinity();
      bool inside = false;
      const std::size_t n = profile_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& a = profile_[i];
        const Eigen::Vector2d& b = profile_[(i + 1) % n];
        // The closing axis segment bounds the half-plane, not the solid.
        if (i + 1 < n) d = std::min(d, segment_distance(q, a, b));
        if ((a.y() > q.y()) != (b.y() > q.y())) {
          const double xc = a.x() + (q.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
          if (q.x() < xc) inside = !inside;
        }
      }
      return inside ? -d : d;
    }
    case Category::kBowl: {
      const double rho = std::hypot(x.x(), x.y());
      const double z = x.z() - bowl_center_z_;
      const double r = std::hypot(rho, z);
      const double inner = bowl_radius_ - bowl_thickness_;
      const bool full = bowl_cap_ >= std::numbers::pi - 1e-12;
      const double shell = inner > 0.0 ? std::max(r - bowl_radius_, inner - r) : r - bowl_radius_;
      if (full) return shell;
      const Eigen::Vector2d dir(std::sin(bowl_cap_), -std::cos(bowl_cap_));
      const Eigen::Vector2d q(rho, z);
      const double rim = segment_distance(q, std::max(inner, 0.0) * dir, bowl_radius_ * dir);
      const double phi = std::atan2(rho, -z);
      if (phi <= bowl_cap_) return shell < 0.0 ? -std::min(-shell, rim) : shell;
      return rim;
    }
    case Category::kBox: {
      const Vec3 q = x.cwiseAbs() - box_half_;
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
  }
  return 0.0;
}

double AnalyticShape::sdf(const Vec3& x) const {
  return spec_.pose.scale * local_sdf(spec_.pose.apply_inverse(x));
}

Vec3 AnalyticShape::normal(const Vec3& x) const {
  constexpr double h = 1e-6;
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo = x, hi = x;
    lo[a] -= h;
    hi[a] += h;
    g[a] = (sdf(hi) - sdf(lo)) / (2 * h);
  }
  const double n = g.norm();
  return n > 0 ? Vec3(g / n) : Vec3::UnitZ();
}

double AnalyticShape::occupancy(const Vec3& x, double beta) const { return sigmoid(-sdf(x) / beta); }

GeneratedShape generate_shape(const ShapeSpec& spec, const GridSpec& grid, std::optional<double> beta) {
  grid.validate();
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] < 16) throw InputError("grid dims must be >= 16 per axis for shape generation");
  }
  AnalyticShape shape(spec);
  const double b = beta.value_or(grid.voxel());
  if (!(b > 0.0)) throw InputError("smoothing beta must be positive");
  const Vec3 s = grid.spacing();
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  std::vector<float> data(static_cast<std::size_t>(nx) * ny * nz);
  parallel_for_chunks(static_cast<std::size_t>(nz), 1, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const Vec3 x = grid.bbox_min + Vec3(i * s.x(), j * s.y(), static_cast<double>(k) * s.z());
          data[(k * ny + j) * nx + i] = static_cast<float>(shape.occupancy(x, b));
        }
      }
    }
  });
  return {OccupancyField(grid, b, std::move(data)), std::move(shape)};
}

ShapeSpec cylinder_spec(double radius, double height) {
  ShapeSpec s;
  s.category = Category::kBottle;
  s.params = {{"height", height}, {"r0", radius}};
  return s;
}

ShapeSpec canonical_instance(Category c) {
  ShapeSpec s;
  s.category = c;
  switch (c) {
    case Category::kBottle:
      s.params = {{"height", 0.9}, {"r0", 0.1}, {"r1", 0.105}, {"r2", 0.1}, {"r3", 0.06}, {"r4", 0.04}};
      break;
    case Category::kBowl:
      s.params = {{"radius", 0.45}, {"thickness", 0.045}, {"cap_angle", std::numbers::pi / 2}};
      break;
    case Category::kBox:
      s.params = {{"hx", 0.45}, {"hy", 0.09}, {"hz", 0.07}};
      break;
  }
  return s;
}

ShapeSpec random_instance(Category c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ShapeSpec s;
  s.category = c;
  s.seed = seed;
  switch (c) {
    case Category::kBottle: {
      const double body = u(0.085, 0.11);
      s.params = {{"height", u(0.75, 0.95)}, {"r0", body}, {"r1", body * u(1.0, 1.06)},
                  {"r2", body * u(0.95, 1.0)}, {"r3", u(0.05, 0.07)}, {"r4", u(0.035, 0.045)}};
      break;
    }
    case Category::kBowl:
      s.params = {{"radius", u(0.38, 0.47)}, {"thickness", u(0.038, 0.05)}, {"cap_angle", u(1.35, 1.75)}};
      break;
    case Category::kBox:
      s.params = {{"hx", u(0.38, 0.48)}, {"hy", u(0.075, 0.1)}, {"hz", u(0.06, 0.09)}};
      break;
  }
  return s;
}

}  // namespace nsgf
