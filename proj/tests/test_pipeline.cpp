#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nsgf/grid_io.hpp"
#include "nsgf/pipeline.hpp"
#include "support.hpp"

using namespace nsgf;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nsgf_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json minimal_config() {
  return Json::parse(R"({"schema": "nsgf.config", "version": 1, "category": "box",
    "source": {"id": "s"}, "targets": [{"id": "a", "random_seed": 1}, {"id": "b", "random_seed": 2},
    {"id": "c", "random_seed": 3}, {"id": "d", "random_seed": 4}], "gt_dims": 48, "seed": 9})");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NSGF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kSmoke = std::string(NSGF_CONFIG_DIR) + "/smoke.json";

}  // namespace

TEST_CASE("config parsing and defaults") {
  const ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  CHECK(c.category_id == "box");
  CHECK(c.targets.size() == 4);
  CHECK(c.grid.dims == std::array<int, 3>{64, 64, 64});
  CHECK(c.fit.iterations == 200);
  CHECK(c.fit.points_per_iter == 2000);
  CHECK(c.fit.learning_rate == 1e-4);
  CHECK(c.fit.lambda_reg == 0.1);
  CHECK(c.refit.iterations == 40);
  CHECK(c.mu == 0.5);
  CHECK(c.n_primitives == 64);
  CHECK(c.architecture.max_width == c.gripper.max_width);
  CHECK(c.transfer.filter);
  CHECK(c.transfer.centers == CenterSource::kPrimitive);
  CHECK(c.transfer.projection == ProjectionMode::kBaseline);
  Json closest = minimal_config();
  closest["transfer"] = {{"projection", "closest"}};
  CHECK(ExperimentConfig::from_json(closest).transfer.projection == ProjectionMode::kClosest);

  // Round trip through the canonical form keeps the hash.
  const ExperimentConfig again = ExperimentConfig::from_json(c.to_json());
  CHECK(again.hash() == c.hash());
  ExperimentConfig moved = c;
  moved.output = "/elsewhere";
  CHECK(moved.hash() == c.hash());
  Json other = minimal_config();
  other["seed"] = 10;
  CHECK(ExperimentConfig::from_json(other).hash() != c.hash());
}

TEST_CASE("config errors") {
  Json j = minimal_config();
  j["schema"] = "nsgf.grasps";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["version"] = 99;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["category"] = "teapot";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["targets"][0]["id"] = "a/b";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["transfer"] = {{"centers", "median"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["transfer"] = {{"projection", "radial"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["fit"] = {{"iterations", "many"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);
  j = minimal_config();
  j["targets"][1]["cylinder"] = {{"radius", 0.1}, {"height", 1.0}};
  j["targets"][1].erase("random_seed");
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), InputError);  // a cylinder is not a box
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InputError);
}

TEST_CASE("gen writes one grid and mesh per object, deterministically") {
  ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  c.output = fresh_dir("gen");
  cmd_gen(c);
  const Workspace ws{c.output};
  std::vector<std::string> ids{"s", "a", "b", "c", "d"};
  std::size_t grids = 0, objs = 0;
  for (const auto& e : fs::directory_iterator(ws.root / "objects")) {
    const std::string name = e.path().filename().string();
    grids += name.ends_with(".grid") && !name.ends_with(".gt.grid");
    objs += name.ends_with(".obj");
  }
  CHECK(grids == 5);
  CHECK(objs == 5);
  const std::size_t header = 4 + 2 + 3 * 4 + 3 * 8 + 3 * 8 + 8;
  std::map<std::string, std::string> first;
  for (const auto& id : ids) {
    CHECK(fs::file_size(ws.grid(id)) == header + 4 * 64 * 64 * 64);
    CHECK(fs::file_size(ws.gt_grid(id)) == header + 4 * 48 * 48 * 48);
    const auto field = load_grid(ws.grid(id));
    CHECK(field.dims() == std::array<int, 3>{64, 64, 64});
    CHECK(read_json_file(ws.shape(id))["config_hash"] == c.hash());
    CHECK(slurp(ws.mesh(id)).find("config_hash " + c.hash()) != std::string::npos);
    first[id] = slurp(ws.grid(id)) + slurp(ws.mesh(id));
  }
  fs::remove_all(c.output);
  cmd_gen(c);
  for (const auto& id : ids) CHECK(slurp(ws.grid(id)) + slurp(ws.mesh(id)) == first[id]);
  fs::remove_all(c.output);
}

TEST_CASE("eval on a hand-counted fixture") {
  Json j = minimal_config();
  j["category"] = "bowl";
  j["source"] = {{"id", "s"}, {"shape", shape_to_json(test::sphere_spec(0.1))}};
  j["targets"] = {{{"id", "a"}, {"shape", shape_to_json(test::sphere_spec(0.1))}},
                  {{"id", "b"}, {"shape", shape_to_json(test::sphere_spec(0.1))}}};
  j["gt_dims"] = 64;
  ExperimentConfig c = ExperimentConfig::from_json(j);
  c.output = fresh_dir("eval");
  cmd_gen(c);
  const Workspace ws{c.output};

  auto grasp = [](double width, double confidence) {
    Grasp g = make_grasp(Vec3(-0.1, 0, 0), -Vec3::UnitZ(), -Vec3::UnitY(), width);
    g.confidence = confidence;
    return g;
  };
  // a: three pass, the most confident one collides; b: both pass.
  const std::vector<Grasp> ga{grasp(0.12, 0.9), grasp(0.2, 0.5), grasp(0.2, 0.4), grasp(0.2, 0.3)};
  const std::vector<Grasp> gb{grasp(0.2, 0.8), grasp(0.2, 0.7)};
  fs::create_directories(ws.grasps("a").parent_path());
  write_json_file(ws.grasps("a"), grasp_set_to_json(ga, c.hash()));
  write_json_file(ws.grasps("b"), grasp_set_to_json(gb, c.hash()));
  const EvalReport r = cmd_eval(c);
  REQUIRE(r.objects.size() == 2);
  CHECK(r.objects[0].n_all == 4);
  CHECK(r.objects[0].n_succ == 3);
  CHECK_FALSE(r.objects[0].best_success);
  CHECK(r.objects[1].n_succ == 2);
  CHECK(r.objects[1].best_success);
  CHECK(r.s_omni == 0.875);
  CHECK(r.s_best == 0.5);
  const Json doc = read_json_file(ws.eval_json());
  CHECK(doc["config_hash"] == c.hash());
  CHECK(doc["s_omni"].get<double>() == 0.875);
  CHECK(fs::exists(ws.eval_csv()));

  // A file of the wrong kind where grasps are expected.
  write_json_file(ws.grasps("b"), labels_to_json({}, c.hash()));
  CHECK_THROWS_AS(cmd_eval(c), InputError);
  fs::remove(ws.grasps("b"));
  CHECK_THROWS_AS(cmd_eval(c), InputError);
  fs::remove_all(c.output);
}

TEST_CASE("output lock") {
  const fs::path dir = fresh_dir("lock");
  {
    OutputLock first(dir);
    CHECK(fs::exists(dir / ".nsgf.lock"));
    CHECK_THROWS_AS(OutputLock{dir}, InputError);
  }
  CHECK_FALSE(fs::exists(dir / ".nsgf.lock"));
  CHECK_NOTHROW(OutputLock{dir});
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes and rerun determinism") {
  const fs::path a = fresh_dir("cli_a"), b = fresh_dir("cli_b");
  CHECK(run_cli("") == 1);
  CHECK(run_cli("gen --config /nonexistent.json") == 1);
  CHECK(run_cli("eval --config " + kSmoke + " --out " + a.string()) == 1);  // nothing upstream yet
  CHECK(run_cli("run --config " + kSmoke + " --out " + a.string()) == 0);
  CHECK(run_cli("run --config " + kSmoke + " --out " + b.string()) == 0);
  for (const char* rel : {"eval.json", "eval.csv", "grasps/t0.json", "grasps/t1.json", "models/t0.model.json",
                          "export/t0/grasps.csv"}) {
    INFO(rel);
    REQUIRE(fs::exists(a / rel));
    CHECK(slurp(a / rel) == slurp(b / rel));
  }
  const ExperimentConfig smoke = load_config(kSmoke);
  CHECK(read_json_file(a / "eval.json")["config_hash"] == smoke.hash());
  CHECK(read_json_file(a / "grasps/t0.json")["config_hash"] == smoke.hash());

  // Held lock: the second writer is refused.
  std::ofstream(a / ".nsgf.lock") << "1\n";
  CHECK(run_cli("eval --config " + kSmoke + " --out " + a.string()) == 1);
  fs::remove(a / ".nsgf.lock");
  CHECK(run_cli("eval --config " + kSmoke + " --out " + a.string()) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}
