#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace nsgf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Bad input supplied by the caller: invalid parameters, malformed files,
// infeasible requests. The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage could not produce a usable result from valid input
// (e.g. too few feasible grasps). Also exit code 1.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nsgf
