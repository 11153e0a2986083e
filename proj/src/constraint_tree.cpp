#include "nestplan/constraint_tree.hpp"

#include <algorithm>
#include <functional>

#include "nestplan/error.hpp"

namespace nestplan {

std::string_view to_string(GroupMode mode) noexcept {
  return mode == GroupMode::Relative ? "relative" : "absolute";
}

GroupMode parse_group_mode(std::string_view text) {
  if (text == "relative") return GroupMode::Relative;
  if (text == "absolute") return GroupMode::Absolute;
  throw Error(ErrorCode::Schema, "mode must be \"relative\" or \"absolute\", got \"" + std::string(text) + "\"");
}

void check_mesh(const Mesh& mesh, std::string_view owner) {
  const std::string who(owner);
  const auto& v = mesh.vertices;
  for (const auto& tri : mesh.triangles) {
    for (int idx : tri) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= v.size())
        throw Error(ErrorCode::DegenerateMesh, "triangle index out of range in mesh of " + who, who);
    }
  }
  if (v.size() < 4) throw Error(ErrorCode::DegenerateMesh, "mesh of " + who + " has fewer than 4 vertices", who);

  double scale = 0.0;
  for (const auto& p : v) scale = std::max(scale, (p - v[0]).norm());
  const double eps = 1e-9 * std::max(scale, 1e-12);
  // Farthest point from v0, then from the line, then from the plane.
  std::size_t i1 = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if ((v[i] - v[0]).squaredNorm() > (v[i1] - v[0]).squaredNorm()) i1 = i;
  const Vec3 dir = (v[i1] - v[0]).normalized();
  std::size_t i2 = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = (v[i] - v[0]).cross(dir).norm();
    if (d > best) best = d, i2 = i;
  }
  if (scale <= 0.0 || best <= eps)
    throw Error(ErrorCode::DegenerateMesh, "mesh of " + who + " is collinear", who);
  const Vec3 normal = (v[i1] - v[0]).cross(v[i2] - v[0]).normalized();
  double off = 0.0;
  for (const auto& p : v) off = std::max(off, std::abs(normal.dot(p - v[0])));
  if (off <= eps) throw Error(ErrorCode::DegenerateMesh, "mesh of " + who + " is coplanar", who);
}

// ---------------------------------------------------------------------------
// SpecDocument

Pose SpecDocument::world_pose(const std::string& id) const {
  Pose local;
  std::optional<std::string> parent;
  if (auto it = objects.find(id); it != objects.end()) {
    local = it->second.pose;
    parent = it->second.parent;
  } else if (auto g = groups.find(id); g != groups.end()) {
    local = g->second.pose;
    parent = g->second.parent;
  } else {
    throw Error(ErrorCode::UnknownId, "unknown id " + id, id);
  }
  while (parent) {
    const auto& g = groups.at(*parent);
    local = g.pose * local;
    parent = g.parent;
  }
  return local;
}

std::vector<std::string> SpecDocument::groups_preorder() const {
  std::vector<std::string> out;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    out.push_back(id);
    for (const auto& c : groups.at(id).children)
      if (c.is_group()) visit(c.id);
  };
  for (const auto& r : roots) visit(r);
  return out;
}

std::vector<std::string> SpecDocument::subtree_objects(const std::string& group) const {
  std::vector<std::string> out;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    for (const auto& c : groups.at(id).children) {
      if (c.is_group())
        visit(c.id);
      else
        out.push_back(c.id);
    }
  };
  visit(group);
  return out;
}

void SpecDocument::check() const {
  auto fail = [](const std::string& msg, const std::string& id = {}) {
    throw Error(ErrorCode::InvalidSpec, msg, id);
  };
  std::set<std::string> seen_groups;
  std::set<std::string> seen_objects;
  std::function<void(const std::string&, const std::optional<std::string>&)> visit =
      [&](const std::string& id, const std::optional<std::string>& parent) {
        auto it = groups.find(id);
        if (it == groups.end()) fail("dangling group reference " + id, id);
        if (!seen_groups.insert(id).second) fail("group " + id + " referenced twice", id);
        if (it->second.parent != parent) fail("group " + id + " has inconsistent parent", id);
        if (it->second.children.empty()) fail("group " + id + " is empty", id);
        for (const auto& c : it->second.children) {
          if (c.is_group()) {
            visit(c.id, id);
          } else {
            auto o = objects.find(c.id);
            if (o == objects.end()) fail("dangling object reference " + c.id, c.id);
            if (!seen_objects.insert(c.id).second) fail("object " + c.id + " referenced twice", c.id);
            if (o->second.parent != id) fail("object " + c.id + " has inconsistent parent", c.id);
            if (!o->second.mesh) fail("object " + c.id + " has no mesh", c.id);
            if (o->second.padding < 0.0) fail("object " + c.id + " has negative padding", c.id);
          }
        }
      };
  for (const auto& r : roots) visit(r, std::nullopt);
  if (seen_groups.size() != groups.size()) fail("unreachable groups in document");
  if (seen_objects.size() != objects.size()) fail("unreachable objects in document");
  for (const auto& [id, _] : objects)
    if (groups.contains(id)) fail("id " + id + " names both a group and an object", id);
}

SpecDocument merge_specs(const std::vector<SpecDocument>& docs) {
  SpecDocument out;
  for (const auto& d : docs) {
    for (const auto& r : d.roots) out.roots.push_back(r);
    for (const auto& [id, g] : d.groups)
      if (!out.groups.emplace(id, g).second) throw Error(ErrorCode::DuplicateId, "duplicate group " + id, id);
    for (const auto& [id, o] : d.objects)
      if (!out.objects.emplace(id, o).second) throw Error(ErrorCode::DuplicateId, "duplicate object " + id, id);
  }
  out.check();
  return out;
}

// ---------------------------------------------------------------------------
// ConstraintTree queries

void ConstraintTree::add_scene_object(SceneObject object) {
  if (contains(object.id)) throw Error(ErrorCode::DuplicateId, "duplicate id " + object.id, object.id);
  if (!object.mesh) throw Error(ErrorCode::DegenerateMesh, "object " + object.id + " has no mesh", object.id);
  if (object.padding < 0.0)
    throw Error(ErrorCode::NegativePadding, "object " + object.id + " has negative padding", object.id);
  check_mesh(*object.mesh, object.id);
  const std::string id = object.id;
  objects_.emplace(id, std::move(object));
  ungrouped_.insert(id);
}

const SceneObject& ConstraintTree::object(const std::string& id) const {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownId, "unknown object " + id, id);
  return it->second;
}

const GroupNode& ConstraintTree::group(const std::string& id) const {
  auto it = groups_.find(id);
  if (it == groups_.end()) throw Error(ErrorCode::UnknownId, "unknown group " + id, id);
  return it->second;
}

std::optional<std::string> ConstraintTree::parent_of(const std::string& id) const {
  if (auto it = groups_.find(id); it != groups_.end()) return it->second.parent;
  if (!objects_.contains(id)) throw Error(ErrorCode::UnknownId, "unknown id " + id, id);
  if (auto it = owner_.find(id); it != owner_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> ConstraintTree::root_of(const std::string& id) const {
  std::optional<std::string> cur = has_group(id) ? std::optional<std::string>(id) : parent_of(id);
  if (!cur) return std::nullopt;
  while (auto p = groups_.at(*cur).parent) cur = p;
  return cur;
}

bool ConstraintTree::is_descendant(const std::string& g, const std::string& ancestor) const {
  std::optional<std::string> cur = group(g).parent;
  while (cur) {
    if (*cur == ancestor) return true;
    cur = groups_.at(*cur).parent;
  }
  return false;
}

bool ConstraintTree::is_frozen(const std::string& id) const {
  std::optional<std::string> cur = has_group(id) ? std::optional<std::string>(id) : parent_of(id);
  while (cur) {
    if (exported_.contains(*cur)) return true;
    cur = groups_.at(*cur).parent;
  }
  return false;
}

std::vector<std::string> ConstraintTree::subtree_groups(const std::string& g) const {
  std::vector<std::string> out{g};
  for (std::size_t i = 0; i < out.size(); ++i)
    for (const auto& c : group(out[i]).children)
      if (c.is_group()) out.push_back(c.id);
  return out;
}

std::vector<std::string> ConstraintTree::subtree_objects(const std::string& g) const {
  std::vector<std::string> out;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    for (const auto& c : group(id).children) {
      if (c.is_group())
        visit(c.id);
      else
        out.push_back(c.id);
    }
  };
  visit(g);
  return out;
}

std::vector<std::string> ConstraintTree::validate() const {
  std::vector<std::string> issues;
  std::map<std::string, int> object_refs;
  std::map<std::string, int> group_refs;
  for (const auto& [id, g] : groups_) {
    if (g.id != id) issues.push_back("group key mismatch " + id);
    if (objects_.contains(id)) issues.push_back("id " + id + " used by object and group");
    if (g.children.empty()) issues.push_back("group " + id + " is empty");
    for (const auto& c : g.children) {
      if (c.is_group()) {
        auto it = groups_.find(c.id);
        if (it == groups_.end()) {
          issues.push_back("group " + id + " references missing group " + c.id);
          continue;
        }
        ++group_refs[c.id];
        if (it->second.parent != id) issues.push_back("group " + c.id + " parent does not point at " + id);
      } else {
        if (!objects_.contains(c.id)) {
          issues.push_back("group " + id + " references missing object " + c.id);
          continue;
        }
        ++object_refs[c.id];
        auto own = owner_.find(c.id);
        if (own == owner_.end() || own->second != id) issues.push_back("owner index stale for " + c.id);
      }
    }
    if (g.parent) {
      if (!groups_.contains(*g.parent)) issues.push_back("group " + id + " has missing parent " + *g.parent);
      if (roots_.contains(id)) issues.push_back("non-root group " + id + " listed as root");
    } else if (!roots_.contains(id)) {
      issues.push_back("parentless group " + id + " missing from roots");
    }
    if (std::abs(g.pose.rotation().norm() - 1.0) > 1e-9) issues.push_back("group " + id + " rotation not unit");
  }
  for (const auto& [id, n] : group_refs)
    if (n > 1) issues.push_back("group " + id + " has " + std::to_string(n) + " parents");
  for (const auto& r : roots_)
    if (!groups_.contains(r) || groups_.at(r).parent) issues.push_back("roots entry " + r + " invalid");
  for (const auto& [id, o] : objects_) {
    const int n = object_refs.contains(id) ? object_refs.at(id) : 0;
    if (n > 1) issues.push_back("object " + id + " in " + std::to_string(n) + " groups");
    const bool loose = ungrouped_.contains(id);
    if (loose && n != 0) issues.push_back("object " + id + " both grouped and ungrouped");
    if (!loose && n == 0) issues.push_back("object " + id + " neither grouped nor ungrouped");
    if (o.padding < 0.0) issues.push_back("object " + id + " negative padding");
  }
  for (const auto& [o, g] : owner_)
    if (!object_refs.contains(o)) issues.push_back("owner index has stale entry " + o + " -> " + g);
  for (const auto& u : ungrouped_)
    if (!objects_.contains(u)) issues.push_back("ungrouped entry " + u + " missing");
  for (const auto& e : exported_)
    if (!groups_.contains(e)) issues.push_back("exported entry " + e + " missing");

  // Acyclicity: every group must reach a root within |groups| steps.
  for (const auto& [id, g] : groups_) {
    std::optional<std::string> cur = g.parent;
    std::size_t steps = 0;
    while (cur && groups_.contains(*cur) && steps <= groups_.size()) {
      cur = groups_.at(*cur).parent;
      ++steps;
    }
    if (steps > groups_.size()) {
      issues.push_back("cycle through group " + id);
      break;
    }
  }
  return issues;
}

bool ConstraintTree::operator==(const ConstraintTree& o) const {
  if (roots_ != o.roots_ || ungrouped_ != o.ungrouped_ || exported_ != o.exported_ || owner_ != o.owner_)
    return false;
  if (objects_.size() != o.objects_.size() || groups_.size() != o.groups_.size()) return false;
  for (const auto& [id, a] : objects_) {
    auto it = o.objects_.find(id);
    if (it == o.objects_.end()) return false;
    const auto& b = it->second;
    if (!(a.pose == b.pose) || a.padding != b.padding) return false;
    if (a.mesh != b.mesh && (!a.mesh || !b.mesh || !(*a.mesh == *b.mesh))) return false;
  }
  for (const auto& [id, a] : groups_) {
    auto it = o.groups_.find(id);
    if (it == o.groups_.end()) return false;
    const auto& b = it->second;
    if (a.mode != b.mode || !(a.pose == b.pose) || a.children != b.children || a.parent != b.parent) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Authoring transitions

struct TreeEditor {
  ConstraintTree t;

  void require_object(const std::string& id) const {
    if (!t.has_object(id)) throw Error(ErrorCode::UnknownId, "unknown object " + id, id);
  }
  void require_group(const std::string& id) const {
    if (!t.has_group(id)) throw Error(ErrorCode::UnknownId, "unknown group " + id, id);
  }
  void require_unfrozen(const std::string& id) const {
    if (t.is_frozen(id)) throw Error(ErrorCode::GroupFrozen, id + " belongs to an exported group", id);
  }
  void require_root(const std::string& id) const {
    if (t.group(id).parent) throw Error(ErrorCode::NotRoot, "group " + id + " has a parent", id);
  }
  void require_ungrouped(const std::string& id) const {
    if (auto own = t.owner_.find(id); own != t.owner_.end())
      throw Error(ErrorCode::AlreadyGrouped, "object " + id + " already belongs to group " + own->second, id);
  }

  Pose& local_pose(const std::string& id) {
    if (auto it = t.groups_.find(id); it != t.groups_.end()) return it->second.pose;
    return t.objects_.at(id).pose;
  }

  GroupNode& node(const std::string& id) { return t.groups_.at(id); }
  void erase_group(const std::string& id) {
    t.groups_.erase(id);
    t.roots_.erase(id);
  }
  void mark_exported(const std::string& id) { t.exported_.insert(id); }
  void insert_object(SceneObject o, const std::string& owner) {
    t.owner_.emplace(o.id, owner);
    t.objects_.emplace(o.id, std::move(o));
  }
  void insert_group(GroupNode g) {
    if (!g.parent) t.roots_.insert(g.id);
    t.groups_.emplace(g.id, std::move(g));
  }

  std::string fresh_group_id() {
    for (;;) {
      std::string id = "g" + std::to_string(t.next_group_++);
      if (!t.contains(id)) return id;
    }
  }

  /// Moves `child` under `parent` (nullopt = top level), rewriting its local
  /// pose so the world pose is unchanged. Does not touch children lists.
  void rehome(const ChildRef& child, const std::optional<std::string>& parent) {
    const Pose world = world_pose(t, child.id);
    const Pose parent_world = parent ? world_pose(t, *parent) : Pose::identity();
    local_pose(child.id) = parent_world.inverse() * world;
    if (child.is_group()) {
      auto& g = t.groups_.at(child.id);
      g.parent = parent;
      if (parent)
        t.roots_.erase(child.id);
      else
        t.roots_.insert(child.id);
    } else if (parent) {
      t.owner_[child.id] = *parent;
      t.ungrouped_.erase(child.id);
    } else {
      t.owner_.erase(child.id);
      t.ungrouped_.insert(child.id);
    }
  }

  std::string new_root_group(const std::vector<ChildRef>& members) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& m : members) centroid += world_pose(t, m.id).translation();
    centroid /= static_cast<double>(members.size());

    const std::string id = fresh_group_id();
    GroupNode node;
    node.id = id;
    node.mode = GroupMode::Relative;
    node.pose = Pose(centroid);
    t.groups_.emplace(id, std::move(node));
    t.roots_.insert(id);
    for (const auto& m : members) {
      rehome(m, id);
      t.groups_.at(id).children.push_back(m);
    }
    return id;
  }
};

TreeAndGroup create_group(const ConstraintTree& tree, const std::string& a, const std::string& b) {
  TreeEditor ed{tree};
  ed.require_object(a);
  ed.require_object(b);
  ed.require_ungrouped(a);
  ed.require_ungrouped(b);
  std::vector<ChildRef> members{ChildRef::object(a)};
  if (a != b) members.push_back(ChildRef::object(b));
  std::string id = ed.new_root_group(members);
  return {std::move(ed.t), std::move(id)};
}

ConstraintTree add_object(const ConstraintTree& tree, const std::string& group, const std::string& object) {
  TreeEditor ed{tree};
  ed.require_group(group);
  ed.require_object(object);
  ed.require_ungrouped(object);
  ed.require_unfrozen(group);
  ed.rehome(ChildRef::object(object), group);
  ed.node(group).children.push_back(ChildRef::object(object));
  return std::move(ed.t);
}

ConstraintTree nest_groups(const ConstraintTree& tree, const std::string& first, const std::string& second) {
  TreeEditor ed{tree};
  ed.require_group(first);
  ed.require_group(second);
  if (first == second) throw Error(ErrorCode::CycleError, "cannot nest group " + first + " in itself", first);
  ed.require_unfrozen(first);
  ed.require_unfrozen(second);
  ed.require_root(second);
  if (tree.is_descendant(first, second))
    throw Error(ErrorCode::CycleError, "group " + first + " is inside " + second, first);
  ed.rehome(ChildRef::group(second), first);
  ed.node(first).children.push_back(ChildRef::group(second));
  return std::move(ed.t);
}

TreeAndGroup wrap_in_parent(const ConstraintTree& tree, const std::string& a, const std::string& b) {
  TreeEditor ed{tree};
  ed.require_group(a);
  ed.require_group(b);
  if (a == b) throw Error(ErrorCode::InvalidArgument, "cannot wrap group " + a + " with itself", a);
  ed.require_unfrozen(a);
  ed.require_unfrozen(b);
  ed.require_root(a);
  ed.require_root(b);
  std::string id = ed.new_root_group({ChildRef::group(a), ChildRef::group(b)});
  return {std::move(ed.t), std::move(id)};
}

ConstraintTree delete_group(const ConstraintTree& tree, const std::string& group) {
  TreeEditor ed{tree};
  ed.require_group(group);
  ed.require_unfrozen(group);
  const GroupNode doomed = tree.group(group);
  for (const auto& c : doomed.children) ed.rehome(c, doomed.parent);
  if (doomed.parent) {
    auto& siblings = ed.node(*doomed.parent).children;
    auto pos = std::find(siblings.begin(), siblings.end(), ChildRef::group(group));
    pos = siblings.erase(pos);
    siblings.insert(pos, doomed.children.begin(), doomed.children.end());
  }
  ed.erase_group(group);
  return std::move(ed.t);
}

ConstraintTree toggle_mode(const ConstraintTree& tree, const std::string& group) {
  TreeEditor ed{tree};
  ed.require_group(group);
  ed.require_unfrozen(group);
  auto& g = ed.node(group);
  g.mode = g.mode == GroupMode::Relative ? GroupMode::Absolute : GroupMode::Relative;
  return std::move(ed.t);
}

ConstraintTree set_pose(const ConstraintTree& tree, const std::string& target, const Pose& pose) {
  TreeEditor ed{tree};
  if (!tree.contains(target)) throw Error(ErrorCode::UnknownId, "unknown id " + target, target);
  ed.require_unfrozen(target);
  ed.local_pose(target) = pose;
  return std::move(ed.t);
}

Pose world_pose(const ConstraintTree& tree, const std::string& target) {
  Pose acc;
  std::optional<std::string> parent;
  if (tree.has_group(target)) {
    const auto& g = tree.group(target);
    acc = g.pose;
    parent = g.parent;
  } else {
    acc = tree.object(target).pose;
    parent = tree.parent_of(target);
  }
  while (parent) {
    const auto& g = tree.group(*parent);
    acc = g.pose * acc;
    parent = g.parent;
  }
  return acc;
}

TreeAndSpec export_spec(const ConstraintTree& tree, const std::string& group) {
  TreeEditor ed{tree};
  ed.require_group(group);
  ed.require_root(group);
  if (tree.exported().contains(group))
    throw Error(ErrorCode::AlreadyExported, "group " + group + " was already exported", group);

  SpecDocument doc;
  doc.roots.push_back(group);
  for (const auto& gid : tree.subtree_groups(group)) {
    const auto& g = tree.group(gid);
    doc.groups.emplace(gid, SpecDocument::Group{g.id, g.mode, g.pose, g.children, g.parent});
    for (const auto& c : g.children) {
      if (c.is_group()) continue;
      const auto& o = tree.object(c.id);
      doc.objects.emplace(c.id, SpecDocument::Object{o.id, o.pose, o.padding, o.mesh, gid});
    }
    ed.mark_exported(gid);
  }
  return {std::move(ed.t), std::move(doc)};
}

ConstraintTree import_spec(const SpecDocument& spec) {
  spec.check();
  TreeEditor ed;
  for (const auto& [id, o] : spec.objects) {
    if (o.mesh) check_mesh(*o.mesh, id);
    ed.insert_object(SceneObject{o.id, o.mesh, o.pose, o.padding}, o.parent);
  }
  for (const auto& [id, g] : spec.groups) {
    ed.insert_group(GroupNode{g.id, g.mode, g.pose, g.children, g.parent});
  }
  return std::move(ed.t);
}

}  // namespace nestplan
