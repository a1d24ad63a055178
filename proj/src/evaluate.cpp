#include "nsgf/evaluate.hpp"

#include <algorithm>
#include <numeric>

namespace nsgf {

std::vector<Grasp> rank_and_select(std::span<const Grasp> grasps, const OccupancyField& field,
                                   ConfidenceCombine combine) {
  std::vector<Grasp> out;
  for (const Grasp& g : grasps) {
    if (!g.valid()) continue;
    Grasp r = g;
    const double c1 = shape_confidence(field, g.point);
    const double c2 = shape_confidence(field, g.right_contact());
    r.confidence = combine == ConfidenceCombine::kMin ? std::min(c1, c2) : 0.5 * (c1 + c2);
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const Grasp& a, const Grasp& b) { return a.confidence > b.confidence; });
  return out;
}

EvalReport summarize(std::vector<ObjectScore> objects) {
  EvalReport report;
  report.n_cat = objects.size();
  if (objects.empty()) return report;
  // Ratios are summed in sorted order so the mean does not depend on object order.
  std::vector<double> ratios;
  std::size_t best = 0;
  for (const ObjectScore& o : objects) {
    ratios.push_back(o.n_all == 0 ? 0.0 : static_cast<double>(o.n_succ) / static_cast<double>(o.n_all));
    best += o.best_success ? 1 : 0;
  }
  std::sort(ratios.begin(), ratios.end());
  report.s_omni = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(objects.size());
  report.s_best = static_cast<double>(best) / static_cast<double>(objects.size());
  report.objects = std::move(objects);
  return report;
}

EvalReport evaluate(std::span<const EvalObject> objects, const GripperModel& gripper, double mu,
                    const OracleOptions& options) {
  std::vector<ObjectScore> scores;
  for (const EvalObject& obj : objects) {
    if (obj.ground_truth == nullptr) throw InputError("evaluate: object '" + obj.id + "' has no ground truth");
    ObjectScore s;
    s.id = obj.id;
    std::vector<Grasp> valid;
    for (const Grasp& g : obj.grasps)
      if (g.valid()) valid.push_back(g);
    s.n_all = valid.size();
    s.no_valid = valid.empty();
    if (!valid.empty()) {
      const auto verdicts = check_grasps(valid, *obj.ground_truth, gripper, mu, options);
      std::size_t best = 0;
      for (std::size_t i = 0; i < valid.size(); ++i) {
        s.n_succ += verdicts[i].passed ? 1 : 0;
        if (valid[i].confidence > valid[best].confidence) best = i;
      }
      s.best_success = verdicts[best].passed;
    }
    scores.push_back(std::move(s));
  }
  return summarize(std::move(scores));
}

}  // namespace nsgf
