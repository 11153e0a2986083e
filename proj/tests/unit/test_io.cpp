#include <doctest/doctest.h>

#include "nestplan/error.hpp"
#include "nestplan/io.hpp"
#include "oracles.hpp"
#include "spec_builder.hpp"

using namespace nestplan;

namespace {

const std::string kData = NESTPLAN_DATA_DIR;

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Json cube_object(const std::string& id, double x) {
  Json o{{"id", id}, {"padding", 0.0}, {"pose", to_json(Pose(Vec3(x, 0, 0.5)))}};
  const auto m = oracle::cube_mesh();
  o["vertices"] = Json::array();
  for (const auto& v : m->vertices) o["vertices"].push_back(to_json(v));
  o["triangles"] = Json::array();
  for (const auto& t : m->triangles) o["triangles"].push_back({t[0], t[1], t[2]});
  return o;
}

Json small_scene() {
  return {{"format_version", 1}, {"objects", Json::array({cube_object("a", 0), cube_object("b", 2)})}};
}

}  // namespace

TEST_CASE("canonical emission sorts keys and is stable") {
  const Json j = parse_json(R"({"b": 1, "a": [0.1, 2.5e-7, 3]})");
  CHECK(canonical(j) == R"({"a":[0.1,2.5e-07,3],"b":1})");
  CHECK(canonical(parse_json(canonical(j))) == canonical(j));
}

TEST_CASE("error codes have their wire names") {
  CHECK(to_string(ErrorCode::DuplicateId) == "DUP_ID");
  CHECK(to_string(ErrorCode::CycleError) == "CycleError");
  const Json e = to_json(Error(ErrorCode::GroupFrozen, "frozen", "g1"));
  CHECK(e["error"]["code"] == "GroupFrozen");
  CHECK(e["error"]["subject"] == "g1");
}

TEST_CASE("pose round trip is exact") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Pose p = Pose::from_axis_angle(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), 3 * u(rng));
    const Pose back = pose_from_json(parse_json(canonical(to_json(p))));
    CHECK(oracle::poses_match(back, p, 1e-15));
    CHECK(canonical(to_json(back)) == canonical(to_json(p)));
  }
}

TEST_CASE("scene parse and emit are inverse on canonical form") {
  const Scene s = scene_from_json(small_scene());
  REQUIRE(s.objects.size() == 2);
  const Json once = scene_to_json(s);
  CHECK(canonical(scene_to_json(scene_from_json(once))) == canonical(once));
}

TEST_CASE("scene errors") {
  Json dup = small_scene();
  dup["objects"].push_back(cube_object("a", 5));
  CHECK(code_of([&] { scene_from_json(dup); }) == ErrorCode::DuplicateId);
  Json version = small_scene();
  version["format_version"] = 2;
  CHECK(code_of([&] { scene_from_json(version); }) == ErrorCode::FormatVersion);
  Json missing = small_scene();
  missing.erase("format_version");
  CHECK(code_of([&] { scene_from_json(missing); }) == ErrorCode::Schema);
  Json flat = small_scene();
  flat["objects"][0]["vertices"] = Json::array({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
  flat["objects"][0]["triangles"] = Json::array({{0, 1, 2}});
  CHECK(code_of([&] { scene_from_json(flat); }) == ErrorCode::DegenerateMesh);
  Json padded = small_scene();
  padded["objects"][1]["padding"] = -1.0;
  CHECK(code_of([&] { scene_from_json(padded); }) == ErrorCode::NegativePadding);
  CHECK(code_of([&] { parse_json("{nope"); }) == ErrorCode::Schema);
  CHECK(code_of([&] { load_json("/nonexistent/file.json"); }) == ErrorCode::Io);
}

TEST_CASE("spec documents round trip through the tree") {
  const Scene s = scene_from_json(small_scene());
  auto t = tree_from_scene(s);
  auto [t1, g] = create_group(t, "a", "b");
  t1 = toggle_mode(t1, g);
  const auto [t2, doc] = export_spec(t1, g);
  const Json j = spec_to_json(doc);
  CHECK(j["roots"][0]["group"]["mode"] == "absolute");
  const SpecDocument back = spec_from_json(j, &t2);
  CHECK(canonical(spec_to_json(back)) == canonical(j));
  const SpecDocument inlined = spec_from_json(spec_to_json(doc, true));
  CHECK(canonical(spec_to_json(inlined)) == canonical(j));
  CHECK(code_of([&] { spec_from_json(j); }) == ErrorCode::UnknownId);
}

TEST_CASE("spec errors") {
  const Json good = load_json(kData + "/gearbox/spec.json");
  const Scene scene = load_scene(kData + "/gearbox/scene.json");
  const ConstraintTree tree = tree_from_scene(scene);
  CHECK_NOTHROW(spec_from_json(good, &tree));
  Json dup = good;
  dup["roots"][0]["group"]["children"].push_back(dup["roots"][0]["group"]["children"][0]);
  CHECK(code_of([&] { spec_from_json(dup, &tree); }) == ErrorCode::DuplicateId);
  Json mode = good;
  mode["roots"][0]["group"]["mode"] = "sideways";
  CHECK(code_of([&] { spec_from_json(mode, &tree); }) == ErrorCode::Schema);
}

TEST_CASE("gearbox example loads with the UR5 arm") {
  const Scene scene = load_scene(kData + "/gearbox/scene.json");
  CHECK(scene.objects.size() == 8);
  CHECK(scene.arm.dof() == 6);
  const ConstraintTree tree = tree_from_scene(scene);
  const SpecDocument spec = spec_from_json(load_json(kData + "/gearbox/spec.json"), &tree);
  CHECK(spec.groups.size() == 3);
  CHECK(spec.objects.size() == 8);
}

TEST_CASE("arm and workspace round trip") {
  const ArmModel arm = arm_from_json(load_json(kData + "/arms/ur5.json"));
  CHECK(canonical(to_json(arm_from_json(to_json(arm)))) == canonical(to_json(arm)));
  Workspace ws;
  ws.focus = Eigen::Vector2d(0.1, 0.2);
  CHECK(canonical(to_json(workspace_from_json(to_json(ws)))) == canonical(to_json(ws)));
}

TEST_CASE("placement round trip") {
  oracle::SpecBuilder b;
  b.group("g", GroupMode::Relative, Pose::from_axis_angle(Vec3(0.1, 0.2, 0.3), Vec3::UnitZ(), 0.4)).cube("x", "g", {0, 0, 0});
  const Placement p = authored_placement(b.doc());
  CHECK(placement_from_json(to_json(p)) == p);
}
