#include "nsgf/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nsgf/annotate.hpp"
#include "nsgf/grid_io.hpp"

namespace nsgf {
namespace {

namespace fs = std::filesystem;

enum class Stage : std::uint64_t {
  kAnnotate = 1,
  kFitSamples,
  kFitInit,
  kFitBatches,
  kPrimitiveSamples,
  kCenters,
  kTransfer,
  kRefit,
  kDecode,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, Stage stage, std::size_t object = 0) {
  return splitmix64(splitmix64(cfg.seed ^ (static_cast<std::uint64_t>(stage) << 32)) + object);
}

Json primitive_config_to_json(const PrimitiveFitConfig& c) {
  return {{"steps", c.steps},         {"learning_rate", c.learning_rate}, {"lambda_cov", c.lambda_cov},
          {"init_radius", c.init_radius}, {"stall_window", c.stall_window},
          {"final_lr_fraction", c.final_lr_fraction}};
}

PrimitiveFitConfig primitive_config_from_json(const Json& j, PrimitiveFitConfig c) {
  if (j.contains("steps")) c.steps = j.at("steps").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("lambda_cov")) c.lambda_cov = j.at("lambda_cov").get<double>();
  if (j.contains("init_radius")) c.init_radius = j.at("init_radius").get<double>();
  if (j.contains("stall_window")) c.stall_window = j.at("stall_window").get<int>();
  if (j.contains("final_lr_fraction")) c.final_lr_fraction = j.at("final_lr_fraction").get<double>();
  if (c.steps < 1 || !(c.learning_rate > 0) || !(c.lambda_cov >= 0) || !(c.init_radius > 0) ||
      !(c.final_lr_fraction > 0 && c.final_lr_fraction <= 1))
    throw InputError("config: invalid primitive fit settings");
  return c;
}

Json shape_body(const ShapeSpec& s) {
  Json j = shape_to_json(s);
  j.erase("schema");
  j.erase("version");
  return j;
}

ObjectSpec object_from_json(const Json& j, Category category, const std::string& where) {
  if (!j.is_object()) throw InputError("config: " + where + " must be an object");
  ObjectSpec o;
  o.id = j.value("id", where);
  if (o.id.empty() || o.id.find_first_of("/\\ ") != std::string::npos)
    throw InputError("config: " + where + " id '" + o.id + "' is not a valid file stem");
  if (j.contains("shape")) {
    o.shape = shape_from_json(j["shape"]);
  } else if (j.contains("random_seed")) {
    o.shape = random_instance(category, j["random_seed"].get<std::uint64_t>());
  } else if (j.contains("cylinder")) {
    const Json& c = j["cylinder"];
    o.shape = cylinder_spec(c.at("radius").get<double>(), c.at("height").get<double>());
  } else {
    o.shape = canonical_instance(category);
  }
  if (j.contains("translation")) o.shape.pose.translation = vec_from_json(j["translation"], where + " translation");
  if (o.shape.category != category)
    throw InputError("config: " + where + " '" + o.id + "' is a " + to_string(o.shape.category) +
                     ", not a " + to_string(category));
  o.shape.validate();
  return o;
}

const char* projection_name(ProjectionMode m) {
  switch (m) {
    case ProjectionMode::kBaseline: return "baseline";
    case ProjectionMode::kClosest: return "closest";
    case ProjectionMode::kBaselineThenClosest: return "baseline_then_closest";
  }
  return "baseline_then_closest";
}

Json transfer_options_to_json(const TransferOptions& t) {
  return {{"filter", t.filter},
          {"cold_start", t.cold_start},
          {"width_refine", t.width_refine},
          {"approx_samples", t.approx_samples},
          {"label_samples", t.label_samples},
          {"negative_ratio", t.negative_ratio},
          {"filtered_as_negative", t.filtered_as_negative},
          {"centers", t.centers == CenterSource::kPrimitive ? "primitive" : "mean_shift"},
          {"projection", projection_name(t.projection)}};
}

void append_event(const Workspace& ws, const std::string& stage, Json event) {
  Json line;
  line["stage"] = stage;
  for (auto& [k, v] : event.items()) line[k] = v;
  std::ofstream out(ws.events(), std::ios::app);
  out << line.dump() << '\n';
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path))
    throw InputError(stage + ": missing input '" + path.string() + "' (run the upstream command first)");
}

OccupancyField load_field(const fs::path& path, const std::string& stage) {
  require(path, stage);
  try {
    return load_grid(path);
  } catch (const InputError& e) {
    throw InputError(stage + ": '" + path.string() + "': " + e.what());
  }
}

Json load_doc(const fs::path& path, const std::string& stage) {
  require(path, stage);
  return read_json_file(path);
}

// Mesh of the stored grid; the OBJ files are a viewing export only.
TriMesh object_mesh(const OccupancyField& field, const ExperimentConfig& cfg, const std::string& id) {
  TriMesh mesh = extract_mesh(field, cfg.iso);
  if (mesh.faces.size() < kMinFittableFaces)
    throw StageError("object '" + id + "' has a degenerate surface (" + std::to_string(mesh.faces.size()) + " faces)");
  return mesh;
}

std::vector<const ObjectSpec*> all_objects(const ExperimentConfig& cfg) {
  std::vector<const ObjectSpec*> out{&cfg.source};
  for (const auto& t : cfg.targets) out.push_back(&t);
  return out;
}

ObjectRecord load_record(const ExperimentConfig& cfg, const Workspace& ws, const ObjectSpec& obj, std::size_t index,
                         const std::string& stage) {
  ObjectRecord rec;
  rec.id = obj.id;
  rec.pose = obj.shape.pose;
  rec.occupancy = load_field(ws.grid(obj.id), stage);
  rec.mesh = object_mesh(rec.occupancy, cfg, obj.id);
  rec.primitives = primitives_from_json(load_doc(ws.primitives(obj.id), stage));
  estimate_centers(rec, cfg.primitive_samples, cfg.mean_shift_bandwidth_voxels * rec.occupancy.voxel(),
                   stage_seed(cfg, Stage::kCenters, index));
  return rec;
}

void write_box(std::ostream& os, const Eigen::Isometry3d& pose, const GripperBox& box, std::size_t& base) {
  for (int c = 0; c < 8; ++c) {
    const Vec3 local((c & 1) ? box.hi.x() : box.lo.x(), (c & 2) ? box.hi.y() : box.lo.y(),
                     (c & 4) ? box.hi.z() : box.lo.z());
    const Vec3 w = pose * local;
    os << "v " << w.x() << ' ' << w.y() << ' ' << w.z() << '\n';
  }
  static constexpr int kQuads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : kQuads) {
    os << "f " << base + q[0] << ' ' << base + q[1] << ' ' << base + q[2] << '\n';
    os << "f " << base + q[0] << ' ' << base + q[2] << ' ' << base + q[3] << '\n';
  }
  base += 8;
}

}  // namespace

void ExperimentConfig::validate() const {
  grid.validate();
  if (gt_dims < 16) throw InputError("config: gt_dims must be >= 16");
  gripper.validate();
  if (!(mu > 0)) throw InputError("config: mu must be positive");
  if (!(iso > 0 && iso < 1)) throw InputError("config: iso must lie in (0, 1)");
  if (n_primitives < 1) throw InputError("config: n_primitives must be >= 1");
  if (primitive_samples < 10 * static_cast<std::size_t>(n_primitives))
    throw InputError("config: primitive_samples must be at least 10 x n_primitives");
  if (annotate_budget < 1) throw InputError("config: annotate budget must be >= 1");
  if (!(label_radius > 0)) throw InputError("config: label radius must be positive");
  if (label_samples < 1 || decode_points < 1) throw InputError("config: sample counts must be positive");
  architecture.validate();
  if (architecture.max_width != gripper.max_width)
    throw InputError("config: architecture max_width must equal the gripper max_width");
  fit.validate();
  refit.validate();
  source.shape.validate();
  std::vector<std::string> ids{source.id};
  for (const auto& t : targets) {
    t.shape.validate();
    if (std::find(ids.begin(), ids.end(), t.id) != ids.end()) throw InputError("config: duplicate object id '" + t.id + "'");
    ids.push_back(t.id);
  }
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["schema"] = "nsgf.config";
  j["version"] = kSchemaVersion;
  j["category"] = category_id;
  j["source"] = {{"id", source.id}, {"shape", shape_body(source.shape)}};
  Json ts = Json::array();
  for (const auto& t : targets) ts.push_back({{"id", t.id}, {"shape", shape_body(t.shape)}});
  j["targets"] = ts;
  j["grid"] = {{"dims", grid.dims}, {"bbox_min", vec_to_json(grid.bbox_min)}, {"bbox_max", vec_to_json(grid.bbox_max)}};
  j["gt_dims"] = gt_dims;
  j["gripper"] = gripper_to_json(gripper);
  j["mu"] = mu;
  j["iso"] = iso;
  j["primitives"] = {{"n", n_primitives},
                     {"samples", primitive_samples},
                     {"bandwidth_voxels", mean_shift_bandwidth_voxels},
                     {"template", primitive_config_to_json(template_fit)},
                     {"instance", primitive_config_to_json(instance_fit)}};
  j["annotate"] = {{"budget", annotate_budget}};
  j["labels"] = {{"samples", label_samples}, {"radius", label_radius}};
  Json arch = architecture_to_json(architecture);
  arch.erase("max_width");
  arch.erase("bbox_min");
  arch.erase("bbox_max");
  j["architecture"] = arch;
  j["fit"] = fit_config_to_json(fit);
  j["refit"] = fit_config_to_json(refit);
  j["transfer"] = transfer_options_to_json(transfer);
  j["decode_points"] = decode_points;
  j["export_top_k"] = export_top_k;
  j["seed"] = seed;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  expect_schema(j, "nsgf.config", "config");
  ExperimentConfig c;
  try {
    c.category_id = j.value("category", c.category_id);
    const Category category = category_from_string(c.category_id);
    c.source = object_from_json(j.value("source", Json::object()), category, "source");
    if (j.contains("targets")) {
      std::size_t n = 0;
      for (const Json& t : j["targets"]) c.targets.push_back(object_from_json(t, category, "target" + std::to_string(n++)));
    }
    if (j.contains("grid")) {
      const Json& g = j["grid"];
      if (g.contains("dims")) {
        const auto d = g["dims"];
        if (d.is_number()) c.grid.dims = {d.get<int>(), d.get<int>(), d.get<int>()};
        else c.grid.dims = d.get<std::array<int, 3>>();
      }
      if (g.contains("bbox_min")) c.grid.bbox_min = vec_from_json(g["bbox_min"], "grid bbox_min");
      if (g.contains("bbox_max")) c.grid.bbox_max = vec_from_json(g["bbox_max"], "grid bbox_max");
    }
    c.gt_dims = j.value("gt_dims", c.gt_dims);
    if (j.contains("gripper")) c.gripper = gripper_from_json(j["gripper"]);
    c.mu = j.value("mu", c.mu);
    c.iso = j.value("iso", c.iso);
    if (j.contains("primitives")) {
      const Json& p = j["primitives"];
      c.n_primitives = p.value("n", c.n_primitives);
      c.primitive_samples = p.value("samples", c.primitive_samples);
      c.mean_shift_bandwidth_voxels = p.value("bandwidth_voxels", c.mean_shift_bandwidth_voxels);
      if (p.contains("template")) c.template_fit = primitive_config_from_json(p["template"], c.template_fit);
      if (p.contains("instance")) c.instance_fit = primitive_config_from_json(p["instance"], c.instance_fit);
    }
    if (j.contains("annotate")) c.annotate_budget = j["annotate"].value("budget", c.annotate_budget);
    if (j.contains("labels")) {
      c.label_samples = j["labels"].value("samples", c.label_samples);
      c.label_radius = j["labels"].value("radius", c.label_radius);
    }
    if (j.contains("architecture")) {
      const Json& a = j["architecture"];
      c.architecture.feature_dim = a.value("feature_dim", c.architecture.feature_dim);
      c.architecture.grid_res = a.value("grid_res", c.architecture.grid_res);
      c.architecture.hidden = a.value("hidden", c.architecture.hidden);
      c.architecture.backbone_layers = a.value("backbone_layers", c.architecture.backbone_layers);
      c.architecture.head_layers = a.value("head_layers", c.architecture.head_layers);
      c.architecture.omega0 = a.value("omega0", c.architecture.omega0);
    }
    if (j.contains("fit")) c.fit = fit_config_from_json(j["fit"], c.fit);
    if (j.contains("refit")) c.refit = fit_config_from_json(j["refit"], c.refit);
    if (j.contains("transfer")) {
      const Json& t = j["transfer"];
      c.transfer.filter = t.value("filter", c.transfer.filter);
      c.transfer.cold_start = t.value("cold_start", c.transfer.cold_start);
      c.transfer.width_refine = t.value("width_refine", c.transfer.width_refine);
      c.transfer.approx_samples = t.value("approx_samples", c.transfer.approx_samples);
      c.transfer.label_samples = t.value("label_samples", c.transfer.label_samples);
      c.transfer.negative_ratio = t.value("negative_ratio", c.transfer.negative_ratio);
      c.transfer.filtered_as_negative = t.value("filtered_as_negative", c.transfer.filtered_as_negative);
      if (t.contains("centers")) {
        const std::string src = t["centers"].get<std::string>();
        if (src == "primitive") c.transfer.centers = CenterSource::kPrimitive;
        else if (src == "mean_shift") c.transfer.centers = CenterSource::kMeanShift;
        else throw InputError("config: transfer centers must be 'primitive' or 'mean_shift', got '" + src + "'");
      }
      if (t.contains("projection")) {
        const std::string mode = t["projection"].get<std::string>();
        bool known = false;
        for (ProjectionMode m : {ProjectionMode::kBaseline, ProjectionMode::kClosest,
                                 ProjectionMode::kBaselineThenClosest}) {
          if (mode == projection_name(m)) {
            c.transfer.projection = m;
            known = true;
          }
        }
        if (!known)
          throw InputError("config: transfer projection must be 'baseline', 'closest' or 'baseline_then_closest', got '" +
                           mode + "'");
      }
    }
    c.decode_points = j.value("decode_points", c.decode_points);
    c.export_top_k = j.value("export_top_k", c.export_top_k);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output")) c.output = j["output"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.architecture.max_width = c.gripper.max_width;
  c.architecture.bbox_min = c.grid.bbox_min;
  c.architecture.bbox_max = c.grid.bbox_max;
  c.validate();
  return c;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

ExperimentConfig load_config(const fs::path& path) {
  const Json j = read_json_file(path);
  ExperimentConfig c = ExperimentConfig::from_json(j);
  if (j.contains("output")) {
    const fs::path out = j["output"].get<std::string>();
    c.output = out.is_relative() ? path.parent_path() / out : out;
  }
  return c;
}

fs::path Workspace::grid(const std::string& id) const { return root / "objects" / (id + ".grid"); }
fs::path Workspace::gt_grid(const std::string& id) const { return root / "objects" / (id + ".gt.grid"); }
fs::path Workspace::mesh(const std::string& id) const { return root / "objects" / (id + ".obj"); }
fs::path Workspace::shape(const std::string& id) const { return root / "objects" / (id + ".shape.json"); }
fs::path Workspace::annotations() const { return root / "annotations" / "grasps.json"; }
fs::path Workspace::labels() const { return root / "annotations" / "labels.json"; }
fs::path Workspace::source_model() const { return root / "models" / "source.model.json"; }
fs::path Workspace::template_primitives() const { return root / "primitives" / "template.json"; }
fs::path Workspace::primitives(const std::string& id) const { return root / "primitives" / (id + ".json"); }
fs::path Workspace::target_model(const std::string& id) const { return root / "models" / (id + ".model.json"); }
fs::path Workspace::transfer_stats(const std::string& id) const { return root / "transfer" / (id + ".stats.json"); }
fs::path Workspace::grasps(const std::string& id) const { return root / "grasps" / (id + ".json"); }
fs::path Workspace::eval_json() const { return root / "eval.json"; }
fs::path Workspace::eval_csv() const { return root / "eval.csv"; }
fs::path Workspace::export_dir(const std::string& id) const { return root / "export" / id; }
fs::path Workspace::events() const { return root / "events.jsonl"; }

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".nsgf.lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw InputError("output directory '" + dir.string() + "' is locked by another command (" + path_.string() + ")");
    throw InputError("cannot create lock '" + path_.string() + "': " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void cmd_gen(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(ws.root / "objects", ec);
  if (ec) throw InputError("gen: cannot create '" + (ws.root / "objects").string() + "': " + ec.message());
  const std::string hash = cfg.hash();
  GridSpec gt = cfg.grid;
  gt.dims = {cfg.gt_dims, cfg.gt_dims, cfg.gt_dims};
  for (const ObjectSpec* obj : all_objects(cfg)) {
    const GeneratedShape shape = generate_shape(obj->shape, cfg.grid);
    const TriMesh mesh = object_mesh(shape.field, cfg, obj->id);
    save_grid(shape.field, ws.grid(obj->id));
    save_grid(generate_shape(obj->shape, gt).field, ws.gt_grid(obj->id));
    std::ostringstream obj_text;
    obj_text << "# nsgf object " << obj->id << " config_hash " << hash << '\n';
    write_obj(mesh, obj_text);
    write_text_file(ws.mesh(obj->id), obj_text.str());
    Json doc = shape_to_json(obj->shape);
    doc["id"] = obj->id;
    doc["config_hash"] = hash;
    doc["grid_file"] = ws.grid(obj->id).filename().string();
    doc["gt_grid_file"] = ws.gt_grid(obj->id).filename().string();
    write_json_file(ws.shape(obj->id), doc);
    append_event(ws, "gen", {{"object", obj->id}, {"faces", mesh.faces.size()}, {"area", mesh.area()}});
  }
  append_event(ws, "gen", {{"event", "done"}, {"objects", all_objects(cfg).size()}, {"seconds", elapsed(t0)}});
}

void cmd_annotate(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const auto t0 = std::chrono::steady_clock::now();
  const OccupancyField field = load_field(ws.grid(cfg.source.id), "annotate");
  const TriMesh mesh = object_mesh(field, cfg, cfg.source.id);
  AnnotateOptions options;
  options.oracle.iso = cfg.iso;
  const Annotation ann = annotate_source(field, mesh, cfg.gripper, cfg.mu, cfg.annotate_budget,
                                         stage_seed(cfg, Stage::kAnnotate), options);
  fs::create_directories(ws.annotations().parent_path());
  const std::string hash = cfg.hash();
  write_json_file(ws.annotations(), grasp_set_to_json(ann.grasps, hash));
  write_json_file(ws.labels(), labels_to_json(ann.labels, hash));
  append_event(ws, "annotate", {{"grasps", ann.grasps.size()}, {"contact_pairs", ann.contact_pairs},
                                {"seconds", elapsed(t0)}});
}

void cmd_fit(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const auto t0 = std::chrono::steady_clock::now();
  const OccupancyField field = load_field(ws.grid(cfg.source.id), "fit");
  const TriMesh mesh = object_mesh(field, cfg, cfg.source.id);
  const auto grasps = grasp_set_from_json(load_doc(ws.annotations(), "fit"), cfg.gripper.max_width);
  const auto samples = sample_surface(mesh, field, cfg.label_samples, stage_seed(cfg, Stage::kFitSamples));
  LabelOptions labels;
  labels.radius = cfg.label_radius;
  const auto data = make_training_points(samples, grasps, labels);
  FitConfig fc = cfg.fit;
  fc.seed = stage_seed(cfg, Stage::kFitBatches);
  const FitResult result = fit(NsgfModel(cfg.architecture, stage_seed(cfg, Stage::kFitInit)), data, fc);
  fs::create_directories(ws.source_model().parent_path());
  write_json_file(ws.source_model(), model_to_json(result.model, cfg.hash(), cfg.to_json()));
  std::size_t positives = 0;
  for (const auto& d : data) positives += d.positive ? 1 : 0;
  append_event(ws, "fit", {{"points", data.size()},
                           {"positives", positives},
                           {"loss_trace", result.loss_trace},
                           {"final_validity", result.final_breakdown.validity},
                           {"final_rotation", result.final_breakdown.rotation},
                           {"final_width", result.final_breakdown.width},
                           {"final_reg", result.final_breakdown.reg},
                           {"seconds", elapsed(t0)}});
}

void cmd_primitives(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(ws.template_primitives().parent_path());
  const auto objects = all_objects(cfg);
  std::vector<std::vector<Vec3>> points;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const OccupancyField field = load_field(ws.grid(objects[i]->id), "primitives");
    const TriMesh mesh = object_mesh(field, cfg, objects[i]->id);
    points.push_back(sample_points(sample_surface(mesh, field, cfg.primitive_samples,
                                                  stage_seed(cfg, Stage::kPrimitiveSamples, i))));
  }
  const PrimitiveFitResult templ = fit_template(points[0], cfg.n_primitives, cfg.template_fit, cfg.category_id);
  const std::string hash = cfg.hash();
  Json tdoc = primitives_to_json(templ.primitives);
  tdoc["config_hash"] = hash;
  write_json_file(ws.template_primitives(), tdoc);
  append_event(ws, "primitives", {{"object", "template"}, {"loss", templ.final_loss}, {"stalled", templ.stalled}});
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const PrimitiveFitResult inst = fit_instance(points[i], templ.primitives, cfg.instance_fit);
    Json doc = primitives_to_json(inst.primitives);
    doc["config_hash"] = hash;
    write_json_file(ws.primitives(objects[i]->id), doc);
    append_event(ws, "primitives",
                 {{"object", objects[i]->id}, {"loss", inst.final_loss}, {"stalled", inst.stalled}});
  }
  append_event(ws, "primitives", {{"event", "done"}, {"seconds", elapsed(t0)}});
}

void cmd_transfer(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const auto t0 = std::chrono::steady_clock::now();
  ObjectRecord src = load_record(cfg, ws, cfg.source, 0, "transfer");
  src.field = model_from_json(load_doc(ws.source_model(), "transfer"));
  if (!(src.field->architecture() == cfg.architecture))
    throw InputError("transfer: '" + ws.source_model().string() + "' was fitted with a different architecture");
  fs::create_directories(ws.transfer_stats("x").parent_path());
  fs::create_directories(ws.grasps("x").parent_path());
  const std::string hash = cfg.hash();

  for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
    const ObjectSpec& obj = cfg.targets[i];
    const auto t1 = std::chrono::steady_clock::now();
    const ObjectRecord tgt = load_record(cfg, ws, obj, i + 1, "transfer");
    TransferOptions options = cfg.transfer;
    options.seed = stage_seed(cfg, Stage::kTransfer, i + 1);
    options.labels.radius = cfg.label_radius;
    FitConfig refit = cfg.refit;
    refit.seed = stage_seed(cfg, Stage::kRefit, i + 1);
    const TransferResult result = transfer_field(src, tgt, cfg.gripper, cfg.mu, refit, options);
    write_json_file(ws.target_model(obj.id), model_to_json(result.model, hash, cfg.to_json()));
    Json stats = transfer_stats_to_json(result.stats);
    stats["config_hash"] = hash;
    stats["source"] = cfg.source.id;
    stats["target"] = obj.id;
    write_json_file(ws.transfer_stats(obj.id), stats);

    DecodeOptions decode;
    decode.width_refine = cfg.transfer.width_refine;
    decode.refine.iso = cfg.iso;
    const auto grasps = decode_grasps(result.model, tgt, cfg.decode_points, stage_seed(cfg, Stage::kDecode, i + 1), decode);
    write_json_file(ws.grasps(obj.id), grasp_set_to_json(grasps, hash));
    append_event(ws, "transfer", {{"target", obj.id},
                                  {"stats", transfer_stats_to_json(result.stats)},
                                  {"loss_trace", result.loss_trace},
                                  {"decoded", grasps.size()},
                                  {"seconds", elapsed(t1)}});
  }
  append_event(ws, "transfer", {{"event", "done"}, {"targets", cfg.targets.size()}, {"seconds", elapsed(t0)}});
}

EvalReport cmd_eval(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  std::vector<OccupancyField> truths;
  std::vector<EvalObject> objects;
  truths.reserve(cfg.targets.size());
  for (const ObjectSpec& obj : cfg.targets) {
    truths.push_back(load_field(ws.gt_grid(obj.id), "eval"));
    EvalObject eo;
    eo.id = obj.id;
    eo.grasps = grasp_set_from_json(load_doc(ws.grasps(obj.id), "eval"), cfg.gripper.max_width);
    objects.push_back(std::move(eo));
  }
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i].ground_truth = &truths[i];
  OracleOptions oracle;
  oracle.iso = cfg.iso;
  const EvalReport report = evaluate(objects, cfg.gripper, cfg.mu, oracle);
  write_json_file(ws.eval_json(), eval_report_to_json(report, cfg.hash()));
  std::ostringstream csv;
  write_eval_csv(report, csv);
  write_text_file(ws.eval_csv(), csv.str());
  append_event(ws, "eval", {{"s_omni", report.s_omni}, {"s_best", report.s_best}, {"n_cat", report.n_cat}});
  return report;
}

void cmd_export(const ExperimentConfig& cfg) {
  const Workspace ws{cfg.output};
  const std::string hash = cfg.hash();
  for (const ObjectSpec& obj : cfg.targets) {
    const auto grasps = grasp_set_from_json(load_doc(ws.grasps(obj.id), "export"), cfg.gripper.max_width);
    const OccupancyField field = load_field(ws.grid(obj.id), "export");
    const fs::path dir = ws.export_dir(obj.id);
    fs::create_directories(dir);
    const std::size_t k = std::min(cfg.export_top_k, grasps.size());
    const double clearance = 0.5 * field.voxel();

    std::ostringstream grippers;
    grippers << "# nsgf grippers " << obj.id << " top " << k << " config_hash " << hash << '\n'
             << std::setprecision(9);
    std::size_t base = 1;
    std::ostringstream csv;
    csv << "rank,confidence,validity_logit,width,px,py,pz,ax,ay,az,tx,ty,tz,bx,by,bz\n" << std::setprecision(17);
    for (std::size_t r = 0; r < grasps.size(); ++r) {
      const Grasp& g = grasps[r];
      csv << r << ',' << g.confidence << ',' << g.validity << ',' << g.width;
      for (const Vec3* v : {&g.point, &g.approach, &g.tangential, &g.baseline})
        csv << ',' << v->x() << ',' << v->y() << ',' << v->z();
      csv << '\n';
      if (r >= k) continue;
      grippers << "o grasp_" << r << '\n';
      const Eigen::Isometry3d pose = assemble_pose(g, cfg.gripper);
      for (const GripperBox& box : gripper_boxes(g.width, cfg.gripper, clearance)) write_box(grippers, pose, box, base);
    }
    write_text_file(dir / "grippers.obj", grippers.str());
    write_text_file(dir / "grasps.csv", csv.str());
    std::ostringstream mesh_text;
    mesh_text << "# nsgf object " << obj.id << " config_hash " << hash << '\n';
    write_obj(object_mesh(field, cfg, obj.id), mesh_text);
    write_text_file(dir / "object.obj", mesh_text.str());
    append_event(ws, "export", {{"object", obj.id}, {"grippers", k}, {"grasps", grasps.size()}});
  }
}

EvalReport run_pipeline(const ExperimentConfig& cfg) {
  cmd_gen(cfg);
  cmd_annotate(cfg);
  cmd_fit(cfg);
  cmd_primitives(cfg);
  cmd_transfer(cfg);
  EvalReport report = cmd_eval(cfg);
  cmd_export(cfg);
  return report;
}

}  // namespace nsgf
