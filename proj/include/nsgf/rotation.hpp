#pragma once

#include <array>

#include "nsgf/types.hpp"

namespace nsgf {

// Grasp frame: approach a, tangential t and baseline b = t x a.
// Columns (b, t, a) form a right-handed rotation.
struct GraspFrame {
  Vec3 approach;
  Vec3 tangential;
  Vec3 baseline;

  Mat3 matrix() const;
  static GraspFrame from_matrix(const Mat3& r);
};

using Rot6 = std::array<double, 6>;

// Gram-Schmidt on the two 3-vector halves: a = normalize(u),
// t = normalize(v - (v.a) a), b = t x a. Throws InputError on a zero first
// half or parallel halves.
GraspFrame rot6d_to_frame(const Rot6& six);
Rot6 frame_to_rot6d(const GraspFrame& f);

// Vector-Jacobian product of rot6d_to_frame: given dL/da, dL/dt, dL/db
// returns dL/dsix.
Rot6 rot6d_to_frame_backward(const Rot6& six, const Vec3& grad_a, const Vec3& grad_t, const Vec3& grad_b);

// Smallest rotation taking unit vector `from` onto unit vector `to`.
Mat3 minimal_rotation(const Vec3& from, const Vec3& to);

}  // namespace nsgf
