#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nestplan/pose.hpp"

namespace nestplan {

enum class GroupMode { Relative, Absolute };

std::string_view to_string(GroupMode mode) noexcept;
/// Accepts "relative" / "absolute". Throws Error(Schema) otherwise.
GroupMode parse_group_mode(std::string_view text);

/// Triangle mesh in the object frame, meters.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  bool operator==(const Mesh&) const = default;
};

/// Throws DegenerateMesh unless the mesh has at least four non-coplanar
/// vertices and every triangle index is in range.
void check_mesh(const Mesh& mesh, std::string_view owner);

struct SceneObject {
  std::string id;
  std::shared_ptr<const Mesh> mesh;
  Pose pose;  // parent group frame, or world when ungrouped
  double padding = 0.0;
};

struct ChildRef {
  enum class Kind { Object, Group };

  Kind kind = Kind::Object;
  std::string id;

  static ChildRef object(std::string id) { return {Kind::Object, std::move(id)}; }
  static ChildRef group(std::string id) { return {Kind::Group, std::move(id)}; }
  bool is_group() const { return kind == Kind::Group; }
  bool operator==(const ChildRef&) const = default;
};

struct GroupNode {
  std::string id;
  GroupMode mode = GroupMode::Relative;
  Pose pose;  // parent group frame, or world for roots
  std::vector<ChildRef> children;
  std::optional<std::string> parent;
};

/// Flat form of an exported subtree. Groups and objects keep their local
/// poses; meshes are shared with the tree they came from.
struct SpecDocument {
  struct Group {
    std::string id;
    GroupMode mode = GroupMode::Relative;
    Pose pose;
    std::vector<ChildRef> children;
    std::optional<std::string> parent;
  };
  struct Object {
    std::string id;
    Pose pose;
    double padding = 0.0;
    std::shared_ptr<const Mesh> mesh;
    std::string parent;
  };

  std::vector<std::string> roots;
  std::map<std::string, Group> groups;
  std::map<std::string, Object> objects;

  /// Root-to-leaf composition of local poses. Throws UnknownId.
  Pose world_pose(const std::string& id) const;
  /// Groups in depth-first pre-order, roots in document order.
  std::vector<std::string> groups_preorder() const;
  /// Objects under `group`, including nested groups, in child order.
  std::vector<std::string> subtree_objects(const std::string& group) const;
  /// Throws InvalidSpec on dangling references, cycles, or empty groups.
  void check() const;
};

/// Combines documents with disjoint ids into one multi-root document.
SpecDocument merge_specs(const std::vector<SpecDocument>& docs);

/// The authoring state: scene objects plus the group forest. Authoring
/// operations are free functions below that return a new tree and leave the
/// input untouched, so a failed operation never changes state.
class ConstraintTree {
 public:
  /// Ingests a scene object as ungrouped. Throws DuplicateId, DegenerateMesh
  /// or NegativePadding.
  void add_scene_object(SceneObject object);

  const std::map<std::string, SceneObject>& objects() const { return objects_; }
  const std::map<std::string, GroupNode>& groups() const { return groups_; }
  const std::set<std::string>& roots() const { return roots_; }
  const std::set<std::string>& ungrouped() const { return ungrouped_; }
  const std::set<std::string>& exported() const { return exported_; }

  bool has_object(const std::string& id) const { return objects_.contains(id); }
  bool has_group(const std::string& id) const { return groups_.contains(id); }
  bool contains(const std::string& id) const { return has_object(id) || has_group(id); }

  const SceneObject& object(const std::string& id) const;
  const GroupNode& group(const std::string& id) const;

  /// Group holding `id` (object or group), if any. Throws UnknownId.
  std::optional<std::string> parent_of(const std::string& id) const;
  /// Outermost group above `id`, or `id` itself for a root group.
  std::optional<std::string> root_of(const std::string& id) const;
  bool is_descendant(const std::string& group, const std::string& ancestor) const;
  /// True when `id` or any group above it was exported.
  bool is_frozen(const std::string& id) const;

  std::vector<std::string> subtree_groups(const std::string& group) const;
  std::vector<std::string> subtree_objects(const std::string& group) const;

  /// Full invariant sweep. Returns one message per violation.
  std::vector<std::string> validate() const;

  bool operator==(const ConstraintTree&) const;

 private:
  friend struct TreeEditor;

  std::map<std::string, SceneObject> objects_;
  std::map<std::string, GroupNode> groups_;
  std::set<std::string> roots_;
  std::set<std::string> ungrouped_;
  std::set<std::string> exported_;
  std::map<std::string, std::string> owner_;  // object id -> group id
  std::size_t next_group_ = 1;
};

struct TreeAndGroup {
  ConstraintTree tree;
  std::string group;
};

struct TreeAndSpec {
  ConstraintTree tree;
  SpecDocument spec;
};

TreeAndGroup create_group(const ConstraintTree& tree, const std::string& a, const std::string& b);
ConstraintTree add_object(const ConstraintTree& tree, const std::string& group, const std::string& object);
/// `first` becomes the parent of `second`.
ConstraintTree nest_groups(const ConstraintTree& tree, const std::string& first, const std::string& second);
TreeAndGroup wrap_in_parent(const ConstraintTree& tree, const std::string& a, const std::string& b);
ConstraintTree delete_group(const ConstraintTree& tree, const std::string& group);
ConstraintTree toggle_mode(const ConstraintTree& tree, const std::string& group);
ConstraintTree set_pose(const ConstraintTree& tree, const std::string& target, const Pose& pose);
Pose world_pose(const ConstraintTree& tree, const std::string& target);
TreeAndSpec export_spec(const ConstraintTree& tree, const std::string& group);

/// Rebuilds an (unfrozen) tree from a document.
ConstraintTree import_spec(const SpecDocument& spec);

}  // namespace nestplan
