#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nsgf/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural surface grasping fields: fit, transfer and evaluate dense grasp sets"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool no_width_refine = false, cold_start = false, no_filter = false;

  const std::map<std::string, std::string> commands = {
      {"gen", "generate shapes, occupancy grids and meshes"},
      {"annotate", "sample oracle-certified source grasps"},
      {"fit", "fit the source grasp field"},
      {"primitives", "fit the category template and per-object sphere primitives"},
      {"transfer", "transfer the source field to every target and decode grasps"},
      {"eval", "score target grasp sets against ground-truth geometry"},
      {"export", "write posed gripper meshes and grasp tables"},
      {"run", "every stage in order"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_flag("--no-width-refine", no_width_refine, "keep the predicted coarse width");
    sub->add_flag("--cold-start", cold_start, "refit targets from a fresh initialization");
    sub->add_flag("--no-filter", no_filter, "skip oracle filtering of transported grasps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    nsgf::ExperimentConfig cfg = nsgf::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    if (no_width_refine) cfg.transfer.width_refine = false;
    if (cold_start) cfg.transfer.cold_start = true;
    if (no_filter) cfg.transfer.filter = false;
    cfg.validate();

    nsgf::OutputLock lock(cfg.output);
    const std::map<std::string, std::function<void()>> run = {
        {"gen", [&] { nsgf::cmd_gen(cfg); }},
        {"annotate", [&] { nsgf::cmd_annotate(cfg); }},
        {"fit", [&] { nsgf::cmd_fit(cfg); }},
        {"primitives", [&] { nsgf::cmd_primitives(cfg); }},
        {"transfer", [&] { nsgf::cmd_transfer(cfg); }},
        {"eval",
         [&] {
           const auto r = nsgf::cmd_eval(cfg);
           std::printf("s_omni %.6f  s_best %.6f  objects %zu\n", r.s_omni, r.s_best, r.n_cat);
         }},
        {"export", [&] { nsgf::cmd_export(cfg); }},
        {"run",
         [&] {
           const auto r = nsgf::run_pipeline(cfg);
           std::printf("s_omni %.6f  s_best %.6f  objects %zu\n", r.s_omni, r.s_best, r.n_cat);
         }},
    };
    run.at(command)();
    return kExitOk;
  } catch (const nsgf::InputError& e) {
    std::fprintf(stderr, "nsgf %s: %s\n", command.c_str(), e.what());
    return kExitUser;
  } catch (const nsgf::StageError& e) {
    std::fprintf(stderr, "nsgf %s: %s\n", command.c_str(), e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nsgf %s: internal error: %s\n", command.c_str(), e.what());
    return kExitInternal;
  }
}
