#pragma once

#include <span>
#include <string>
#include <vector>

#include "nsgf/oracle.hpp"

namespace nsgf {

enum class ConfidenceCombine { kMin, kMean };

// Scores valid grasps (q > 0) by the shape confidence at both contacts and
// returns them sorted by descending confidence, stable on input order.
std::vector<Grasp> rank_and_select(std::span<const Grasp> grasps, const OccupancyField& field,
                                   ConfidenceCombine combine = ConfidenceCombine::kMin);

struct ObjectScore {
  std::string id;
  std::size_t n_all = 0;   // valid grasps
  std::size_t n_succ = 0;  // of those, oracle passes
  bool best_success = false;
  bool no_valid = false;  // counted as zero success
};

struct EvalReport {
  std::vector<ObjectScore> objects;
  double s_omni = 0.0;
  double s_best = 0.0;
  std::size_t n_cat = 0;
};

struct EvalObject {
  std::string id;
  std::vector<Grasp> grasps;
  const OccupancyField* ground_truth = nullptr;
};

// Aggregates per-object counts: s_omni is the mean of n_succ / n_all,
// s_best the fraction of objects whose top-confidence grasp succeeds.
EvalReport summarize(std::vector<ObjectScore> objects);

// Checks every valid grasp against the object's ground-truth occupancy.
// The best grasp is the highest-confidence valid one, ties to the lower index.
EvalReport evaluate(std::span<const EvalObject> objects, const GripperModel& gripper, double mu = kDefaultFriction,
                    const OracleOptions& options = {});

}  // namespace nsgf
