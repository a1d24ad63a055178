#include "nsgf/serialize.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace nsgf {
namespace {

Json header(const std::string& schema) {
  Json j;
  j["schema"] = schema;
  j["version"] = kSchemaVersion;
  return j;
}

template <typename T>
T field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(what + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(what + ": '" + key + "' has the wrong type");
  }
}

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

void expect_schema(const Json& j, const std::string& schema, const std::string& source) {
  const auto name = field<std::string>(j, "schema", source);
  if (name != schema) throw InputError(source + ": expected schema '" + schema + "', found '" + name + "'");
  const int version = field<int>(j, "version", source);
  if (version != kSchemaVersion) {
    throw InputError(source + ": schema version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kSchemaVersion) + ")");
  }
}

Json vec_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw InputError(what + ": expected a 3-vector");
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number()) throw InputError(what + ": non-numeric component");
    v[a] = j[a].get<double>();
  }
  return v;
}

Json shape_to_json(const ShapeSpec& spec) {
  Json j = header("nsgf.shape");
  j["category"] = to_string(spec.category);
  Json params = Json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  j["params"] = params;
  const auto& q = spec.pose.rotation;
  j["pose"] = {{"rotation", Json::array({q.w(), q.x(), q.y(), q.z()})},
               {"translation", vec_to_json(spec.pose.translation)},
               {"scale", spec.pose.scale}};
  j["seed"] = spec.seed;
  return j;
}

ShapeSpec shape_from_json(const Json& j) {
  const std::string what = "shape";
  ShapeSpec spec;
  spec.category = category_from_string(field<std::string>(j, "category", what));
  const Json params = field<Json>(j, "params", what);
  if (!params.is_object()) throw InputError("shape: 'params' must be an object");
  for (const auto& [k, v] : params.items()) {
    if (!v.is_number()) throw InputError("shape: parameter '" + k + "' must be a number");
    spec.params[k] = v.get<double>();
  }
  if (j.contains("pose")) {
    const Json& pose = j["pose"];
    if (pose.contains("rotation")) {
      const auto r = pose["rotation"];
      if (!r.is_array() || r.size() != 4) throw InputError("shape: pose.rotation must be [w, x, y, z]");
      spec.pose.rotation = Eigen::Quaterniond(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                                              r[3].get<double>());
    }
    if (pose.contains("translation")) spec.pose.translation = vec_from_json(pose["translation"], "shape pose.translation");
    if (pose.contains("scale")) spec.pose.scale = field<double>(pose, "scale", "shape pose");
  }
  if (j.contains("seed")) spec.seed = field<std::uint64_t>(j, "seed", what);
  spec.validate();
  return spec;
}

Json primitives_to_json(const SpherePrimitiveSet& prims) {
  Json j = header("nsgf.primitives");
  j["category_id"] = prims.category_id;
  j["n_primitives"] = prims.size();
  Json centers = Json::array();
  for (const Vec3& c : prims.centers) centers.push_back(vec_to_json(c));
  j["centers"] = centers;
  j["radii"] = prims.radii;
  j["template"] = prims.is_template;
  j["sample_centroid"] = vec_to_json(prims.sample_centroid);
  j["sample_spread"] = vec_to_json(prims.sample_spread);
  return j;
}

SpherePrimitiveSet primitives_from_json(const Json& j) {
  const std::string what = "primitives";
  expect_schema(j, "nsgf.primitives", what);
  SpherePrimitiveSet p;
  p.category_id = field<std::string>(j, "category_id", what);
  const auto n = field<std::size_t>(j, "n_primitives", what);
  for (const Json& c : field<Json>(j, "centers", what)) p.centers.push_back(vec_from_json(c, "primitive center"));
  p.radii = field<std::vector<double>>(j, "radii", what);
  p.is_template = field<bool>(j, "template", what);
  if (j.contains("sample_centroid")) p.sample_centroid = vec_from_json(j["sample_centroid"], "primitive sample centroid");
  if (j.contains("sample_spread")) p.sample_spread = vec_from_json(j["sample_spread"], "primitive sample spread");
  if (p.centers.size() != n || p.radii.size() != n) throw InputError("primitives: n_primitives disagrees with arrays");
  p.validate();
  return p;
}

Json gripper_to_json(const GripperModel& g) {
  return {{"max_width", g.max_width},
          {"finger_depth", g.finger_depth},
          {"finger_thickness", g.finger_thickness},
          {"palm_extent", vec_to_json(g.palm_extent)}};
}

GripperModel gripper_from_json(const Json& j) {
  GripperModel g;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "default") return g;
    if (name == "wide") return GripperModel::wide();
    throw InputError("gripper: unknown preset '" + name + "'");
  }
  if (j.contains("max_width")) g.max_width = field<double>(j, "max_width", "gripper");
  if (j.contains("finger_depth")) g.finger_depth = field<double>(j, "finger_depth", "gripper");
  if (j.contains("finger_thickness")) g.finger_thickness = field<double>(j, "finger_thickness", "gripper");
  if (j.contains("palm_extent")) g.palm_extent = vec_from_json(j["palm_extent"], "gripper palm_extent");
  g.validate();
  return g;
}

Json grasp_to_json(const Grasp& g) {
  return {{"point", vec_to_json(g.point)},
          {"approach", vec_to_json(g.approach)},
          {"tangential", vec_to_json(g.tangential)},
          {"width", g.width},
          {"validity_logit", g.validity},
          {"confidence", g.confidence}};
}

Grasp grasp_from_json(const Json& j) {
  const std::string what = "grasp";
  Grasp g;
  g.point = vec_from_json(field<Json>(j, "point", what), "grasp point");
  g.approach = vec_from_json(field<Json>(j, "approach", what), "grasp approach");
  g.tangential = vec_from_json(field<Json>(j, "tangential", what), "grasp tangential");
  g.baseline = g.tangential.cross(g.approach);
  g.width = field<double>(j, "width", what);
  g.validity = field<double>(j, "validity_logit", what);
  g.confidence = field<double>(j, "confidence", what);
  return g;
}

Json grasp_set_to_json(std::span<const Grasp> grasps, const std::string& config_hash) {
  Json j = header("nsgf.grasps");
  j["config_hash"] = config_hash;
  Json list = Json::array();
  for (const Grasp& g : grasps) list.push_back(grasp_to_json(g));
  j["grasps"] = list;
  return j;
}

std::vector<Grasp> grasp_set_from_json(const Json& j, double max_width) {
  expect_schema(j, "nsgf.grasps", "grasp set");
  std::vector<Grasp> out;
  for (const Json& r : field<Json>(j, "grasps", "grasp set")) {
    Grasp g = grasp_from_json(r);
    g.validate(max_width);
    out.push_back(g);
  }
  return out;
}

Json labels_to_json(std::span<const GraspLabel> labels, const std::string& config_hash) {
  Json j = header("nsgf.labels");
  j["config_hash"] = config_hash;
  Json list = Json::array();
  for (const GraspLabel& l : labels) {
    list.push_back({{"point", vec_to_json(l.point)},
                    {"antipodal_point", vec_to_json(l.antipodal_point)},
                    {"approach", vec_to_json(l.approach)},
                    {"tangential", vec_to_json(l.tangential)},
                    {"positive", l.is_positive}});
  }
  j["labels"] = list;
  return j;
}

std::vector<GraspLabel> labels_from_json(const Json& j) {
  expect_schema(j, "nsgf.labels", "labels");
  std::vector<GraspLabel> out;
  for (const Json& r : field<Json>(j, "labels", "labels")) {
    GraspLabel l;
    l.point = vec_from_json(field<Json>(r, "point", "label"), "label point");
    l.antipodal_point = vec_from_json(field<Json>(r, "antipodal_point", "label"), "label antipodal_point");
    l.approach = vec_from_json(field<Json>(r, "approach", "label"), "label approach");
    l.tangential = vec_from_json(field<Json>(r, "tangential", "label"), "label tangential");
    l.is_positive = field<bool>(r, "positive", "label");
    out.push_back(l);
  }
  return out;
}

Json architecture_to_json(const Architecture& a) {
  return {{"feature_dim", a.feature_dim},   {"grid_res", a.grid_res},       {"hidden", a.hidden},
          {"backbone_layers", a.backbone_layers}, {"head_layers", a.head_layers}, {"omega0", a.omega0},
          {"max_width", a.max_width},       {"bbox_min", vec_to_json(a.bbox_min)},
          {"bbox_max", vec_to_json(a.bbox_max)}};
}

Architecture architecture_from_json(const Json& j) {
  const std::string what = "architecture";
  Architecture a;
  a.feature_dim = field<int>(j, "feature_dim", what);
  a.grid_res = field<int>(j, "grid_res", what);
  a.hidden = field<int>(j, "hidden", what);
  a.backbone_layers = field<int>(j, "backbone_layers", what);
  a.head_layers = field<int>(j, "head_layers", what);
  a.omega0 = field<double>(j, "omega0", what);
  a.max_width = field<double>(j, "max_width", what);
  a.bbox_min = vec_from_json(field<Json>(j, "bbox_min", what), "architecture bbox_min");
  a.bbox_max = vec_from_json(field<Json>(j, "bbox_max", what), "architecture bbox_max");
  a.validate();
  return a;
}

Json model_to_json(const NsgfModel& model, const std::string& config_hash, const Json& config_echo) {
  Json j = header("nsgf.model");
  j["config_hash"] = config_hash;
  j["architecture"] = architecture_to_json(model.architecture());
  j["feature_grid"] = {model.architecture().grid_res, model.architecture().grid_res, model.architecture().grid_res,
                       model.architecture().feature_dim};
  j["layer_order"] = "feature_grid, backbone, rotation_head, width_head, validity_head; per layer W (in x out) then b";
  j["config"] = config_echo;
  const auto params = model.parameters();
  std::vector<unsigned char> bytes;
  bytes.reserve(params.size() * 8);
  for (double v : params) {
    auto b = std::bit_cast<std::array<unsigned char, 8>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    bytes.insert(bytes.end(), b.begin(), b.end());
  }
  j["parameter_count"] = params.size();
  j["parameters_f64le_base64"] = base64_encode(bytes);
  return j;
}

NsgfModel model_from_json(const Json& j) {
  expect_schema(j, "nsgf.model", "model");
  const Architecture arch = architecture_from_json(field<Json>(j, "architecture", "model"));
  const auto count = field<std::size_t>(j, "parameter_count", "model");
  const auto bytes = base64_decode(field<std::string>(j, "parameters_f64le_base64", "model"));
  if (bytes.size() != count * 8) throw InputError("model: parameter blob length does not match parameter_count");
  std::vector<double> params(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<unsigned char, 8> b;
    std::copy(bytes.begin() + 8 * i, bytes.begin() + 8 * i + 8, b.begin());
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    params[i] = std::bit_cast<double>(b);
  }
  return NsgfModel(arch, std::move(params));
}

Json fit_config_to_json(const FitConfig& c) {
  return {{"iterations", c.iterations},   {"points_per_iter", c.points_per_iter}, {"learning_rate", c.learning_rate},
          {"lambda_reg", c.lambda_reg},   {"beta1", c.beta1},                     {"beta2", c.beta2},
          {"eps", c.eps},                 {"seed", c.seed}};
}

FitConfig fit_config_from_json(const Json& j, const FitConfig& defaults) {
  FitConfig c = defaults;
  const std::string what = "fit config";
  if (j.contains("iterations")) c.iterations = field<int>(j, "iterations", what);
  if (j.contains("points_per_iter")) c.points_per_iter = field<int>(j, "points_per_iter", what);
  if (j.contains("learning_rate")) c.learning_rate = field<double>(j, "learning_rate", what);
  if (j.contains("lambda_reg")) c.lambda_reg = field<double>(j, "lambda_reg", what);
  if (j.contains("beta1")) c.beta1 = field<double>(j, "beta1", what);
  if (j.contains("beta2")) c.beta2 = field<double>(j, "beta2", what);
  if (j.contains("eps")) c.eps = field<double>(j, "eps", what);
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", what);
  c.validate();
  return c;
}

Json transfer_stats_to_json(const TransferStats& s) {
  return {{"n_approx", s.n_approx},
          {"n_transported", s.n_transported},
          {"n_rejected_projection", s.n_rejected_projection},
          {"n_filtered_out", s.n_filtered_out},
          {"n_survivors", s.n_survivors},
          {"refit_final_loss", s.refit_final_loss}};
}

Json eval_report_to_json(const EvalReport& r, const std::string& config_hash) {
  Json j = header("nsgf.eval");
  j["config_hash"] = config_hash;
  j["s_omni"] = r.s_omni;
  j["s_best"] = r.s_best;
  j["n_cat"] = r.n_cat;
  Json objs = Json::array();
  for (const ObjectScore& o : r.objects) {
    objs.push_back({{"id", o.id},
                    {"n_all", o.n_all},
                    {"n_succ", o.n_succ},
                    {"ratio", o.n_all == 0 ? 0.0 : static_cast<double>(o.n_succ) / static_cast<double>(o.n_all)},
                    {"best_success", o.best_success},
                    {"no_valid", o.no_valid}});
  }
  j["objects"] = objs;
  return j;
}

void write_eval_csv(const EvalReport& r, std::ostream& os) {
  os << "object,n_all,n_succ,ratio,best_success,no_valid\n";
  for (const ObjectScore& o : r.objects) {
    const double ratio = o.n_all == 0 ? 0.0 : static_cast<double>(o.n_succ) / static_cast<double>(o.n_all);
    os << o.id << ',' << o.n_all << ',' << o.n_succ << ',' << std::setprecision(17) << ratio << ','
       << (o.best_success ? 1 : 0) << ',' << (o.no_valid ? 1 : 0) << '\n';
  }
}

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw InputError("base64: length is not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        vals[k] = 0;
        ++pad;
      } else {
        vals[k] = decode_char(c);
        if (vals[k] < 0 || pad > 0) throw InputError("base64: invalid character");
      }
    }
    const unsigned v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<unsigned char>(v >> 16));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 255));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 255));
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("failed writing '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace nsgf
