#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/error.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/kinematics.hpp"
#include "nestplan/pipeline.hpp"
#include "nestplan/placement.hpp"

namespace nestplan {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Sorted keys, shortest round-trip doubles, no whitespace.
std::string canonical(const Json& doc);

/// Throws Io or Schema.
Json load_json(const std::filesystem::path& path);
Json parse_json(const std::string& text);

Json to_json(const Vec3& v);
Json to_json(const Pose& pose);  // {translation: [x,y,z], rotation: [w,x,y,z]}
Json to_json(const Hull& hull);  // {owner, vertices, faces}
Json to_json(const Workspace& ws);
Json to_json(const ArmModel& arm);
Json to_json(const Placement& placement);
Json to_json(const GroupTour& tour);
Json to_json(const ObjectSequence& seq);
Json to_json(const SettleResult& result);
Json to_json(const AssemblyPlan& plan);
Json to_json(const Error& error);

Vec3 vec3_from_json(const Json& j);
Pose pose_from_json(const Json& j);
Workspace workspace_from_json(const Json& j);
ArmModel arm_from_json(const Json& j);
Placement placement_from_json(const Json& j);

/// `base_dir` resolves an arm given as a relative file path.
Scene scene_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json scene_to_json(const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

/// Scene objects as an ungrouped authoring tree.
ConstraintTree tree_from_scene(const Scene& scene);

/// Objects without inline "vertices"/"triangles" take their mesh from
/// `meshes` (matched by id). Throws Schema, DuplicateId, UnknownId.
SpecDocument spec_from_json(const Json& j, const ConstraintTree* meshes = nullptr);
Json spec_to_json(const SpecDocument& spec, bool inline_meshes = false);

/// Full authoring state for clients: objects, groups, roots, exports.
Json tree_to_json(const ConstraintTree& tree);

}  // namespace nestplan
