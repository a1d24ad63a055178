#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nsgf/evaluate.hpp"
#include "nsgf/primitives.hpp"
#include "nsgf/shapes.hpp"
#include "nsgf/transfer.hpp"

namespace nsgf {

using Json = nlohmann::ordered_json;

// Every document carries {"schema": <name>, "version": <int>}; readers
// reject other names or versions.
inline constexpr int kSchemaVersion = 1;

Json vec_to_json(const Vec3& v);
Vec3 vec_from_json(const Json& j, const std::string& what);

Json shape_to_json(const ShapeSpec& spec);
ShapeSpec shape_from_json(const Json& j);

Json primitives_to_json(const SpherePrimitiveSet& prims);
SpherePrimitiveSet primitives_from_json(const Json& j);

Json gripper_to_json(const GripperModel& g);
GripperModel gripper_from_json(const Json& j);

Json grasp_to_json(const Grasp& g);
Grasp grasp_from_json(const Json& j);
// Grasp set: {"schema": "nsgf.grasps", ..., "config_hash", "grasps": [records]}.
Json grasp_set_to_json(std::span<const Grasp> grasps, const std::string& config_hash);
std::vector<Grasp> grasp_set_from_json(const Json& j, double max_width);

Json labels_to_json(std::span<const GraspLabel> labels, const std::string& config_hash);
std::vector<GraspLabel> labels_from_json(const Json& j);

Json architecture_to_json(const Architecture& a);
Architecture architecture_from_json(const Json& j);
// Header plus the flat f64 parameter vector, base64 of its little-endian bytes.
Json model_to_json(const NsgfModel& model, const std::string& config_hash, const Json& config_echo);
NsgfModel model_from_json(const Json& j);

Json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const Json& j, const FitConfig& defaults);

Json transfer_stats_to_json(const TransferStats& s);
Json eval_report_to_json(const EvalReport& r, const std::string& config_hash);
void write_eval_csv(const EvalReport& r, std::ostream& os);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// Reads a JSON file; parse failures name the file.
Json read_json_file(const std::filesystem::path& path);
// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
// Writes text to a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Checks the schema name and version of a loaded document.
void expect_schema(const Json& j, const std::string& schema, const std::string& source);

}  // namespace nsgf
