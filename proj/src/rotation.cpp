#include "nsgf/rotation.hpp"

#include <cmath>

namespace nsgf {
namespace {

constexpr double kDegenerate = 1e-12;

struct Intermediate {
  Vec3 u, v, a, w, t, b;
  double norm_u, norm_w, dot_va;
};

Intermediate forward(const Rot6& six) {
  Intermediate s;
  s.u = Vec3(six[0], six[1], six[2]);
  s.v = Vec3(six[3], six[4], six[5]);
  s.norm_u = s.u.norm();
  if (!(s.norm_u > kDegenerate)) throw InputError("rot6d: first 3-vector is zero");
  s.a = s.u / s.norm_u;
  s.dot_va = s.v.dot(s.a);
  s.w = s.v - s.dot_va * s.a;
  s.norm_w = s.w.norm();
  if (!(s.norm_w > kDegenerate * std::max(1.0, s.v.norm()))) {
    throw InputError("rot6d: second 3-vector is parallel to the first");
  }
  s.t = s.w / s.norm_w;
  s.b = s.t.cross(s.a);
  return s;
}

}  // namespace

Mat3 GraspFrame::matrix() const {
  Mat3 r;
  r.col(0) = baseline;
  r.col(1) = tangential;
  r.col(2) = approach;
  return r;
}

GraspFrame GraspFrame::from_matrix(const Mat3& r) { return {r.col(2), r.col(1), r.col(0)}; }

GraspFrame rot6d_to_frame(const Rot6& six) {
  const Intermediate s = forward(six);
  return {s.a, s.t, s.b};
}

Rot6 frame_to_rot6d(const GraspFrame& f) {
  return {f.approach.x(), f.approach.y(), f.approach.z(), f.tangential.x(), f.tangential.y(), f.tangential.z()};
}

Rot6 rot6d_to_frame_backward(const Rot6& six, const Vec3& grad_a, const Vec3& grad_t, const Vec3& grad_b) {
  const Intermediate s = forward(six);
  // b = t x a
  Vec3 ga = grad_a + grad_b.cross(s.t);
  const Vec3 gt = grad_t + s.a.cross(grad_b);
  // t = w / |w|
  const Vec3 gw = (gt - s.t * s.t.dot(gt)) / s.norm_w;
  // w = v - (v.a) a
  const Vec3 gv = gw - s.a * s.a.dot(gw);
  ga += -s.dot_va * gw - s.a.dot(gw) * s.v;
  // a = u / |u|
  const Vec3 gu = (ga - s.a * s.a.dot(ga)) / s.norm_u;
  return {gu.x(), gu.y(), gu.z(), gv.x(), gv.y(), gv.z()};
}

Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  const Vec3 f = from.normalized(), t = to.normalized();
  return Eigen::Quaterniond::FromTwoVectors(f, t).toRotationMatrix();
}

}  // namespace nsgf
