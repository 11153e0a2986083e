#include "nestplan/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace nestplan {

namespace {

[[noreturn]] void schema(const std::string& what, const std::string& subject = {}) {
  throw Error(ErrorCode::Schema, what, subject);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) schema(where + " is missing \"" + key + "\"");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) schema(where + " must be a number");
  return j.get<double>();
}

std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) schema(where + " must be a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& where, std::size_t size = 0) {
  if (!j.is_array()) schema(where + " must be an array");
  if (size && j.size() != size) schema(where + " must have " + std::to_string(size) + " entries");
  return j;
}

double optional_number(const Json& j, const char* key, double fallback, const std::string& where) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, where + "." + key);
}

Eigen::Vector2d vec2(const Json& j, const std::string& where) {
  array(j, where, 2);
  return {number(j[0], where), number(j[1], where)};
}

Json vec2_json(const Eigen::Vector2d& v) { return Json::array({v.x(), v.y()}); }

void check_version(const Json& j, const std::string& what) {
  const Json& v = field(j, "format_version", what);
  if (!v.is_number_integer()) schema(what + ".format_version must be an integer");
  if (v.get<int>() != kFormatVersion)
    throw Error(ErrorCode::FormatVersion, what + " has format_version " + v.dump() + ", expected 1");
}

Mesh mesh_from_json(const Json& j, const std::string& where) {
  Mesh m;
  for (const auto& v : array(field(j, "vertices", where), where + ".vertices")) m.vertices.push_back(vec3_from_json(v));
  for (const auto& t : array(field(j, "triangles", where), where + ".triangles")) {
    array(t, where + ".triangles[]", 3);
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      if (!t[k].is_number_integer()) schema(where + ".triangles entries must be integers");
      tri[k] = t[k].get<int>();
    }
    m.triangles.push_back(tri);
  }
  return m;
}

void mesh_to_json(const Mesh& m, Json& out) {
  out["vertices"] = Json::array();
  for (const auto& v : m.vertices) out["vertices"].push_back(to_json(v));
  out["triangles"] = Json::array();
  for (const auto& t : m.triangles) out["triangles"].push_back(Json::array({t[0], t[1], t[2]}));
}

Json config_json(const JointConfig& q) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < q.size(); ++i) out.push_back(q[i]);
  return out;
}

JointConfig config_from_json(const Json& j, const std::string& where) {
  array(j, where);
  JointConfig q(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) q[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return q;
}

}  // namespace

std::string canonical(const Json& doc) { return doc.dump(); }

Json parse_json(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    schema(std::string("malformed JSON: ") + e.what());
  }
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string(), path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const Pose& p) {
  const Quat& q = p.rotation();
  return {{"translation", to_json(p.translation())}, {"rotation", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Vec3 vec3_from_json(const Json& j) {
  array(j, "vector", 3);
  return {number(j[0], "vector"), number(j[1], "vector"), number(j[2], "vector")};
}

Pose pose_from_json(const Json& j) {
  const Vec3 t = vec3_from_json(field(j, "translation", "pose"));
  const Json& r = array(field(j, "rotation", "pose"), "pose.rotation", 4);
  const Quat q(number(r[0], "rotation"), number(r[1], "rotation"), number(r[2], "rotation"), number(r[3], "rotation"));
  if (q.norm() < 1e-12) schema("pose.rotation must be a non-zero quaternion");
  return Pose(t, q);
}

Json to_json(const Hull& h) {
  Json out{{"owner", h.owner}, {"vertices", Json::array()}, {"faces", Json::array()}};
  for (const auto& v : h.vertices) out["vertices"].push_back(to_json(v));
  for (const auto& f : h.faces) out["faces"].push_back(Json::array({f[0], f[1], f[2]}));
  return out;
}

Json to_json(const Workspace& ws) {
  Json out{{"table_height", ws.table_height},     {"table_min", vec2_json(ws.table_min)},
           {"table_max", vec2_json(ws.table_max)}, {"arm_base", to_json(ws.arm_base)},
           {"reach", ws.reach},                    {"base_clearance", ws.base_clearance},
           {"unit_clearance", ws.unit_clearance},  {"staging_depth", ws.staging_depth}};
  if (ws.focus) out["focus"] = vec2_json(*ws.focus);
  return out;
}

Workspace workspace_from_json(const Json& j) {
  const std::string w = "workspace";
  if (!j.is_object()) schema(w + " must be an object");
  Workspace ws;
  ws.table_height = optional_number(j, "table_height", ws.table_height, w);
  if (j.contains("table_min")) ws.table_min = vec2(j["table_min"], w + ".table_min");
  if (j.contains("table_max")) ws.table_max = vec2(j["table_max"], w + ".table_max");
  if (j.contains("arm_base")) ws.arm_base = vec3_from_json(j["arm_base"]);
  ws.reach = optional_number(j, "reach", ws.reach, w);
  ws.base_clearance = optional_number(j, "base_clearance", ws.base_clearance, w);
  ws.unit_clearance = optional_number(j, "unit_clearance", ws.unit_clearance, w);
  ws.staging_depth = optional_number(j, "staging_depth", ws.staging_depth, w);
  if (j.contains("focus")) ws.focus = vec2(j["focus"], w + ".focus");
  ws.check();
  return ws;
}

Json to_json(const ArmModel& arm) {
  Json out{{"format_version", kFormatVersion}, {"name", arm.name}, {"base", to_json(arm.base)},
           {"tool", to_json(arm.tool)}, {"joints", Json::array()}, {"capsules", Json::array()}};
  for (const auto& jt : arm.joints)
    out["joints"].push_back({{"name", jt.name},
                             {"offset", to_json(jt.offset)},
                             {"axis", to_json(jt.axis)},
                             {"limits", Json::array({jt.lower, jt.upper})}});
  for (const auto& c : arm.capsules)
    out["capsules"].push_back({{"frame", c.frame}, {"a", to_json(c.a)}, {"b", to_json(c.b)}, {"radius", c.radius}});
  if (arm.home.size()) out["home"] = config_json(arm.home);
  return out;
}

ArmModel arm_from_json(const Json& j) {
  check_version(j, "arm");
  ArmModel arm;
  arm.name = text(field(j, "name", "arm"), "arm.name");
  if (j.contains("base")) arm.base = pose_from_json(j["base"]);
  if (j.contains("tool")) arm.tool = pose_from_json(j["tool"]);
  for (const auto& jt : array(field(j, "joints", "arm"), "arm.joints")) {
    Joint joint;
    joint.name = text(field(jt, "name", "joint"), "joint.name");
    joint.offset = pose_from_json(field(jt, "offset", "joint"));
    joint.axis = vec3_from_json(field(jt, "axis", "joint"));
    const Json& lim = array(field(jt, "limits", "joint"), "joint.limits", 2);
    joint.lower = number(lim[0], "joint.limits");
    joint.upper = number(lim[1], "joint.limits");
    arm.joints.push_back(joint);
  }
  if (j.contains("capsules"))
    for (const auto& c : array(j["capsules"], "arm.capsules")) {
      const Json& frame = field(c, "frame", "capsule");
      if (!frame.is_number_integer()) schema("capsule.frame must be an integer");
      arm.capsules.push_back({frame.get<int>(), vec3_from_json(field(c, "a", "capsule")),
                              vec3_from_json(field(c, "b", "capsule")), number(field(c, "radius", "capsule"), "radius")});
    }
  if (j.contains("home")) arm.home = config_from_json(j["home"], "arm.home");
  arm.check();
  return arm;
}

Json to_json(const Placement& placement) {
  Json out = Json::object();
  for (const auto& [id, pose] : placement.poses) out[id] = to_json(pose);
  return out;
}

Placement placement_from_json(const Json& j) {
  if (!j.is_object()) schema("placement must be an object");
  Placement p;
  for (const auto& [id, pose] : j.items()) p.poses[id] = pose_from_json(pose);
  return p;
}

Json to_json(const GroupTour& tour) { return {{"order", tour.order}, {"length", tour.length}}; }

Json to_json(const ObjectSequence& seq) {
  return {{"group", seq.group}, {"order", seq.order}, {"cost", seq.cost}};
}

Json to_json(const SettleResult& r) {
  return {{"format_version", kFormatVersion},
          {"placement", to_json(r.placement)},
          {"converged", r.converged},
          {"rounds", r.rounds},
          {"max_penetration", r.max_penetration},
          {"history", r.history},
          {"unsupported", r.unsupported}};
}

Json to_json(const AssemblyPlan& plan) {
  Json steps = Json::array();
  for (const auto& s : plan.steps) {
    Json approach = Json::array(), transfer = Json::array();
    for (const auto& q : s.approach) approach.push_back(config_json(q));
    for (const auto& q : s.transfer) transfer.push_back(config_json(q));
    steps.push_back({{"object", s.object},
                     {"group", s.group},
                     {"staged_pose", to_json(s.staged_pose)},
                     {"place_pose", to_json(s.place_pose)},
                     {"pick_config", config_json(s.pick_config)},
                     {"place_config", config_json(s.place_config)},
                     {"trajectory", {{"approach", approach}, {"transfer", transfer}}}});
  }
  Json sequences = Json::array();
  for (const auto& s : plan.sequences) sequences.push_back(to_json(s));
  Json objects = Json::object(), groups = Json::object();
  for (const auto& [id, h] : plan.object_hulls) objects[id] = to_json(h);
  for (const auto& [id, h] : plan.group_hulls) groups[id] = to_json(h);
  return {{"format_version", kFormatVersion},
          {"placements", to_json(plan.placement)},
          {"tour", to_json(plan.tour)},
          {"sequences", sequences},
          {"steps", steps},
          {"home", config_json(plan.home)},
          {"hulls", {{"objects", objects}, {"groups", groups}}},
          {"settle", {{"rounds", plan.settle_rounds}, {"max_penetration", plan.max_penetration}}}};
}

Json to_json(const Error& e) {
  Json err{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!e.subject().empty()) err["subject"] = e.subject();
  return {{"error", err}};
}

Scene scene_from_json(const Json& j, const std::filesystem::path& base_dir) {
  check_version(j, "scene");
  Scene scene;
  std::set<std::string> seen;
  for (const auto& o : array(field(j, "objects", "scene"), "scene.objects")) {
    SceneObject obj;
    obj.id = text(field(o, "id", "object"), "object.id");
    if (obj.id.empty()) schema("object.id must not be empty");
    if (!seen.insert(obj.id).second) throw Error(ErrorCode::DuplicateId, "duplicate object id " + obj.id, obj.id);
    auto mesh = std::make_shared<Mesh>(mesh_from_json(o, "object " + obj.id));
    check_mesh(*mesh, obj.id);
    obj.mesh = std::move(mesh);
    if (o.contains("pose")) obj.pose = pose_from_json(o["pose"]);
    obj.padding = optional_number(o, "padding", 0.0, "object");
    if (obj.padding < 0.0) throw Error(ErrorCode::NegativePadding, "negative padding on " + obj.id, obj.id);
    scene.objects.push_back(std::move(obj));
  }
  if (j.contains("workspace")) scene.workspace = workspace_from_json(j["workspace"]);
  if (j.contains("arm")) {
    const Json& arm = j["arm"];
    if (arm.is_string()) {
      const std::filesystem::path ref(arm.get<std::string>());
      scene.arm = arm_from_json(load_json(ref.is_absolute() ? ref : base_dir / ref));
    } else {
      scene.arm = arm_from_json(arm);
    }
  } else {
    scene.arm = planar_arm();
  }
  return scene;
}

Json scene_to_json(const Scene& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects) {
    Json e{{"id", o.id}, {"pose", to_json(o.pose)}, {"padding", o.padding}};
    mesh_to_json(*o.mesh, e);
    objects.push_back(e);
  }
  return {{"format_version", kFormatVersion},
          {"objects", objects},
          {"workspace", to_json(scene.workspace)},
          {"arm", to_json(scene.arm)}};
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_json(load_json(path), path.parent_path());
}

ConstraintTree tree_from_scene(const Scene& scene) {
  ConstraintTree tree;
  for (const auto& o : scene.objects) tree.add_scene_object(o);
  return tree;
}

namespace {

void read_group(const Json& j, const std::optional<std::string>& parent, SpecDocument& doc,
                std::set<std::string>& ids, std::map<std::string, std::string>& object_parent) {
  const Json& g = field(j, "group", "group entry");
  SpecDocument::Group group;
  group.id = text(field(g, "id", "group"), "group.id");
  if (!ids.insert(group.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id " + group.id, group.id);
  group.mode = parse_group_mode(text(field(g, "mode", "group"), "group.mode"));
  group.pose = pose_from_json(field(g, "pose", "group"));
  group.parent = parent;
  for (const auto& c : array(field(g, "children", "group"), "group.children")) {
    if (c.is_string()) {
      const std::string oid = c.get<std::string>();
      if (!ids.insert(oid).second) throw Error(ErrorCode::DuplicateId, "duplicate id " + oid, oid);
      object_parent[oid] = group.id;
      group.children.push_back(ChildRef::object(oid));
    } else {
      read_group(c, group.id, doc, ids, object_parent);
      group.children.push_back(ChildRef::group(field(c["group"], "id", "group").get<std::string>()));
    }
  }
  if (!parent) doc.roots.push_back(group.id);
  doc.groups[group.id] = std::move(group);
}

Json write_group(const SpecDocument& doc, const std::string& id) {
  const auto& g = doc.groups.at(id);
  Json children = Json::array();
  for (const auto& c : g.children) children.push_back(c.is_group() ? write_group(doc, c.id) : Json(c.id));
  return {{"group",
           {{"id", g.id}, {"mode", std::string(to_string(g.mode))}, {"pose", to_json(g.pose)}, {"children", children}}}};
}

}  // namespace

SpecDocument spec_from_json(const Json& j, const ConstraintTree* meshes) {
  check_version(j, "spec");
  SpecDocument doc;
  std::set<std::string> ids;
  std::map<std::string, std::string> object_parent;
  for (const auto& r : array(field(j, "roots", "spec"), "spec.roots")) read_group(r, std::nullopt, doc, ids, object_parent);

  std::set<std::string> described;
  for (const auto& o : array(field(j, "objects", "spec"), "spec.objects")) {
    SpecDocument::Object obj;
    obj.id = text(field(o, "id", "object"), "object.id");
    if (!described.insert(obj.id).second) throw Error(ErrorCode::DuplicateId, "duplicate object entry " + obj.id, obj.id);
    auto parent = object_parent.find(obj.id);
    if (parent == object_parent.end()) schema("object " + obj.id + " is not a child of any group", obj.id);
    obj.parent = parent->second;
    obj.pose = pose_from_json(field(o, "pose", "object"));
    obj.padding = optional_number(o, "padding", 0.0, "object");
    if (obj.padding < 0.0) throw Error(ErrorCode::NegativePadding, "negative padding on " + obj.id, obj.id);
    if (o.contains("vertices")) {
      auto mesh = std::make_shared<Mesh>(mesh_from_json(o, "object " + obj.id));
      check_mesh(*mesh, obj.id);
      obj.mesh = std::move(mesh);
    } else if (meshes && meshes->has_object(obj.id)) {
      obj.mesh = meshes->object(obj.id).mesh;
    } else {
      throw Error(ErrorCode::UnknownId, "no mesh for object " + obj.id, obj.id);
    }
    doc.objects[obj.id] = std::move(obj);
  }
  for (const auto& [oid, _] : object_parent)
    if (!doc.objects.contains(oid)) schema("group child " + oid + " has no object entry", oid);
  doc.check();
  return doc;
}

Json spec_to_json(const SpecDocument& spec, bool inline_meshes) {
  Json roots = Json::array();
  for (const auto& r : spec.roots) roots.push_back(write_group(spec, r));
  Json objects = Json::array();
  for (const auto& [id, o] : spec.objects) {
    Json e{{"id", id}, {"pose", to_json(o.pose)}, {"padding", o.padding}};
    if (inline_meshes) mesh_to_json(*o.mesh, e);
    objects.push_back(e);
  }
  return {{"format_version", kFormatVersion}, {"roots", roots}, {"objects", objects}};
}

Json tree_to_json(const ConstraintTree& tree) {
  Json objects = Json::array();
  for (const auto& [id, o] : tree.objects()) {
    Json e{{"id", id}, {"pose", to_json(o.pose)}, {"padding", o.padding},
           {"world_pose", to_json(world_pose(tree, id))}};
    const auto parent = tree.parent_of(id);
    e["parent"] = parent ? Json(*parent) : Json(nullptr);
    objects.push_back(e);
  }
  Json groups = Json::array();
  for (const auto& [id, g] : tree.groups()) {
    Json children = Json::array();
    for (const auto& c : g.children)
      children.push_back({{"kind", c.is_group() ? "group" : "object"}, {"id", c.id}});
    groups.push_back({{"id", id},
                      {"mode", std::string(to_string(g.mode))},
                      {"pose", to_json(g.pose)},
                      {"world_pose", to_json(world_pose(tree, id))},
                      {"children", children},
                      {"parent", g.parent ? Json(*g.parent) : Json(nullptr)},
                      {"frozen", tree.is_frozen(id)}});
  }
  return {{"format_version", kFormatVersion},
          {"objects", objects},
          {"groups", groups},
          {"roots", tree.roots()},
          {"ungrouped", tree.ungrouped()},
          {"exported", tree.exported()}};
}

}  // namespace nestplan
