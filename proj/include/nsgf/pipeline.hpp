#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsgf/serialize.hpp"

namespace nsgf {

struct ObjectSpec {
  std::string id;
  ShapeSpec shape;
};

// Everything one experiment needs. Seeds are explicit; every stage derives
// its own from `seed`.
struct ExperimentConfig {
  std::string category_id = "bottle";
  ObjectSpec source;
  std::vector<ObjectSpec> targets;
  GridSpec grid;
  int gt_dims = 96;  // resolution of the ground-truth grid used by eval
  GripperModel gripper;
  double mu = kDefaultFriction;
  double iso = 0.5;

  int n_primitives = 64;
  PrimitiveFitConfig template_fit = PrimitiveFitConfig::template_defaults();
  PrimitiveFitConfig instance_fit = PrimitiveFitConfig::instance_defaults();
  std::size_t primitive_samples = 2048;
  double mean_shift_bandwidth_voxels = 2.0;

  int annotate_budget = 200;
  std::size_t label_samples = 20000;
  double label_radius = 0.015;

  Architecture architecture;  // max_width follows the gripper
  FitConfig fit;
  FitConfig refit = FitConfig::refit_defaults();
  TransferOptions transfer;
  std::size_t decode_points = 5000;
  std::size_t export_top_k = 20;

  std::uint64_t seed = 0;
  std::filesystem::path output = "nsgf-out";

  void validate() const;
  // Canonical JSON; the output directory is not part of it.
  Json to_json() const;
  static ExperimentConfig from_json(const Json& j);
  // FNV-1a of to_json(), embedded in every artifact.
  std::string hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// Layout of an output directory.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path grid(const std::string& id) const;
  std::filesystem::path gt_grid(const std::string& id) const;
  std::filesystem::path mesh(const std::string& id) const;
  std::filesystem::path shape(const std::string& id) const;
  std::filesystem::path annotations() const;
  std::filesystem::path labels() const;
  std::filesystem::path source_model() const;
  std::filesystem::path template_primitives() const;
  std::filesystem::path primitives(const std::string& id) const;
  std::filesystem::path target_model(const std::string& id) const;
  std::filesystem::path transfer_stats(const std::string& id) const;
  std::filesystem::path grasps(const std::string& id) const;
  std::filesystem::path eval_json() const;
  std::filesystem::path eval_csv() const;
  std::filesystem::path export_dir(const std::string& id) const;
  std::filesystem::path events() const;
};

void cmd_gen(const ExperimentConfig& cfg);
void cmd_annotate(const ExperimentConfig& cfg);
void cmd_fit(const ExperimentConfig& cfg);
void cmd_primitives(const ExperimentConfig& cfg);
void cmd_transfer(const ExperimentConfig& cfg);
EvalReport cmd_eval(const ExperimentConfig& cfg);
void cmd_export(const ExperimentConfig& cfg);
// gen -> annotate -> fit -> primitives -> transfer -> eval -> export.
EvalReport run_pipeline(const ExperimentConfig& cfg);

// Holds <dir>/.nsgf.lock for its lifetime; a second holder gets InputError.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace nsgf
