#include <cmath>

#include <doctest/doctest.h>

#include "nestplan/collision.hpp"
#include "nestplan/error.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/parallel.hpp"
#include "oracles.hpp"

using namespace nestplan;

namespace {

std::set<std::size_t> vertex_sources(const Hull& h) { return {h.source.begin(), h.source.end()}; }

void check_hull_shape(const Hull& h, std::span<const Vec3> points, double eps = 1e-7) {
  const Vec3 c = h.centroid();
  CHECK(h.max_plane_distance(c) < 0);
  for (const auto& v : h.vertices) CHECK(h.max_plane_distance(v) <= eps);
  for (const auto& p : points) CHECK(h.max_plane_distance(p) <= eps);
  for (std::size_t f = 0; f < h.faces.size(); ++f) CHECK(std::abs(h.normals[f].norm() - 1.0) < 1e-12);
}

ConstraintTree cubes(std::initializer_list<Vec3> centers, double padding = 0.0, double size = 1.0) {
  ConstraintTree t;
  int i = 0;
  for (const auto& c : centers) t.add_scene_object({"c" + std::to_string(i++), oracle::cube_mesh(size), Pose(c), padding});
  return t;
}

}  // namespace

TEST_CASE("cube corners plus centroid") {
  auto pts = oracle::cube_corners();
  pts.push_back(Vec3::Zero());
  const Hull h = quickhull(pts);
  CHECK(h.vertices.size() == 8);
  CHECK(h.faces.size() == 12);
  CHECK(vertex_sources(h).count(8) == 0);
  check_hull_shape(h, pts);
}

TEST_CASE("regular tetrahedron") {
  const std::vector<Vec3> pts{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  const Hull h = quickhull(pts);
  CHECK(h.vertices.size() == 4);
  CHECK(h.faces.size() == 4);
  check_hull_shape(h, pts);
}

TEST_CASE("degenerate inputs are rejected") {
  const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(quickhull(three), Error);
  std::vector<Vec3> flat;
  for (int i = 0; i < 20; ++i) flat.emplace_back(std::cos(i), std::sin(i * 1.3), 0.0);
  try {
    quickhull(flat);
    FAIL("coplanar input accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("random sets match the facet-enumeration oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 10 + static_cast<std::size_t>(trial) * 5;
    const auto pts = oracle::random_points(rng, n);
    const Hull h = quickhull(pts);
    CHECK(vertex_sources(h) == oracle::brute_hull_vertices(pts));
    check_hull_shape(h, pts);
  }
}

TEST_CASE("200 random points match the oracle in every configuration") {
  std::mt19937_64 rng(200);
  const auto pts = oracle::random_points(rng, 200);
  const auto expected = oracle::brute_hull_vertices(pts);
  for (bool grid : {false, true})
    for (bool par : {false, true}) {
      QuickhullOptions o;
      o.grid_apex = grid;
      o.parallel = par;
      CHECK(vertex_sources(quickhull(pts, o)) == expected);
    }
}

TEST_CASE("output does not depend on the worker count") {
  std::mt19937_64 rng(5);
  const auto pts = oracle::random_points(rng, 20000);
  set_thread_count(1);
  const Hull one = quickhull(pts);
  set_thread_count(4);
  const Hull four = quickhull(pts);
  set_thread_count(0);
  CHECK(one.vertices == four.vertices);
  CHECK(one.faces == four.faces);
  QuickhullOptions naive;
  naive.grid_apex = false;
  naive.parallel = false;
  CHECK(vertex_sources(quickhull(pts, naive)) == vertex_sources(one));
}

TEST_CASE("sphere surface points are all vertices") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
  CHECK(quickhull(pts).vertices.size() == pts.size());
}

TEST_CASE("pad_points") {
  const auto cube = oracle::cube_corners();
  CHECK(vertex_sources(quickhull(pad_points(cube, 0.0))).size() == 8);
  const std::vector<Vec3> one{Vec3::Zero()};
  const Hull oct = quickhull(pad_points(one, 1.0));
  CHECK(oct.vertices.size() == 6);
  for (const auto& v : oct.vertices) CHECK(std::abs(v.norm() - 1.0) < 1e-15);

  const Hull padded = quickhull(pad_points(cube, 0.1));
  for (const auto& v : cube)
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 probe = v;
      probe[axis] += (v[axis] > 0 ? 0.1 : -0.1);
      CHECK(padded.max_plane_distance(probe) <= 1e-12);
    }
  CHECK(padded.max_plane_distance(cube[0]) < -0.05);
  CHECK_THROWS_AS(pad_points(cube, -0.1), Error);
}

TEST_CASE("reduce keeps at most six points per cell") {
  std::mt19937_64 rng(1);
  const auto pts = oracle::random_points(rng, 1000, 0.0, 0.01);
  const Reduction r = reduce(pts, 1.0);
  CHECK(r.grid.cells.size() == 1);
  CHECK(r.representatives.size() <= 6);
  CHECK(r.grid.touches == pts.size());
}

TEST_CASE("reduce keeps well-separated points") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.emplace_back(0.25 + 2.0 * i, 0.25 + 2.0 * j, 0.25);
  const Reduction r = reduce(pts, 1.0);
  CHECK(r.representatives.size() == pts.size());
}

TEST_CASE("reduce errors") {
  const std::vector<Vec3> none;
  const std::vector<Vec3> one{Vec3::Zero()};
  try {
    reduce(none, 1.0);
    FAIL("empty input accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  try {
    reduce(one, 0.0);
    FAIL("zero cell accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveCell);
  }
}

TEST_CASE("reduced hull stays within the cell diagonal of every point") {
  std::mt19937_64 rng(77);
  const auto pts = oracle::random_points(rng, 100000, 0.0, 1.0);
  const double cell = 0.05;
  const Reduction r = reduce(pts, cell);
  CHECK(r.grid.touches == pts.size());
  CHECK(r.representatives.size() <= 6 * r.grid.cells.size());
  const Hull h = quickhull(r.representatives);
  const Hull full = quickhull(pts);
  for (const auto& v : h.vertices) CHECK(full.max_plane_distance(v) <= 1e-12);
  double worst = 0.0;
  for (const auto& p : pts) {
    if (h.max_plane_distance(p) <= 0) continue;
    worst = std::max(worst, oracle::point_hull_distance(p, h));
  }
  CHECK(worst <= cell * std::sqrt(3.0));
}

TEST_CASE("contains uses closed containment") {
  const Hull h = quickhull(oracle::cube_corners());
  CHECK(contains(h, h.centroid()));
  CHECK(contains(h, h.vertices[0]));
  CHECK_FALSE(contains(h, Vec3(10, 10, 10)));
}

TEST_CASE("leaf group of one cube is the padded cube") {
  auto t = cubes({Vec3(1, 2, 3)}, 0.0);
  auto [t1, g] = create_group(t, "c0", "c0");
  const Hull h = group_hull(t1, g);
  CHECK(h.owner == g);
  CHECK(h.vertices.size() == 8);
  for (const auto& v : h.vertices) CHECK((v - Vec3(1, 2, 3)).cwiseAbs().maxCoeff() == doctest::Approx(0.5));
  CHECK_THROWS_AS(group_hull(t1, "nope"), Error);
}

TEST_CASE("parents strictly contain their child hulls") {
  auto t = cubes({Vec3(0, 0, 0), Vec3(1.5, 0, 0), Vec3(0, 3, 0)}, 0.02, 0.5);
  auto [t1, inner] = create_group(t, "c0", "c1");
  auto [t2, outer] = create_group(t1, "c2", "c2");
  t2 = nest_groups(t2, outer, inner);
  const auto hulls = all_group_hulls(t2);
  for (const auto& v : hulls.at(inner).vertices) CHECK(hulls.at(outer).max_plane_distance(v) < 0);
}

TEST_CASE("a parent with one child group is the inflated child hull") {
  SpecDocument doc;
  doc.roots = {"P"};
  doc.groups["P"] = {"P", GroupMode::Relative, Pose(), {ChildRef::group("C")}, std::nullopt};
  doc.groups["C"] = {"C", GroupMode::Relative, Pose(Vec3(1, 0, 0)), {ChildRef::object("c0")}, std::string("P")};
  doc.objects["c0"] = {"c0", Pose(), 0.0, oracle::cube_mesh(1.0), "C"};
  const ConstraintTree t = import_spec(doc);
  GroupHullOptions o;
  o.nest_margin = 0.1;
  const auto hulls = all_group_hulls(t, o);
  const Hull& child = hulls.at("C");
  const Hull& parent = hulls.at("P");
  CHECK(parent.vertices.size() == child.vertices.size());
  const Vec3 c = child.centroid();
  for (const auto& v : child.vertices) {
    CHECK(parent.max_plane_distance(v) < 0);
    const Vec3 grown = v + 0.1 * (v - c).normalized();
    CHECK(contains(parent, grown, 1e-9));
  }
}

TEST_CASE("visible hulls follow the cursor down the containment chain") {
  auto t = cubes({Vec3(0, 0, 0), Vec3(0.3, 0, 0), Vec3(5, 0, 0), Vec3(10, 0, 0)}, 0.0, 0.2);
  auto [t1, c1] = create_group(t, "c0", "c0");
  auto [t2, c2] = create_group(t1, "c1", "c1");
  auto [t3, r] = wrap_in_parent(t2, c1, c2);
  auto [t4, far] = create_group(t3, "c3", "c3");
  CHECK(visible_hulls(t4, Vec3(100, 100, 100)) == std::set<std::string>{r, far});
  CHECK(visible_hulls(t4, Vec3(0.15, 0, 0)) == std::set<std::string>{r, far, c1, c2});
  // Inside r and inside c1: c1 has no child groups, so nothing more to show.
  CHECK(visible_hulls(t4, Vec3(0, 0, 0)) == std::set<std::string>{r, far, c1, c2});

  // Three levels: inside r and inside mid reveals mid's children.
  auto [t5, mid] = wrap_in_parent(t4, r, far);
  CHECK(visible_hulls(t5, Vec3(100, 0, 0)) == std::set<std::string>{mid});
  CHECK(visible_hulls(t5, Vec3(10, 0, 0)) == std::set<std::string>{mid, r, far});
  CHECK(visible_hulls(t5, Vec3(0, 0, 0)) == std::set<std::string>{mid, r, far, c1, c2});
}

TEST_CASE("four cubes at square corners: the group hull covers the empty middle") {
  auto t = cubes({Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0), Vec3(2, 2, 0)}, 0.0, 0.5);
  auto [t1, g] = create_group(t, "c0", "c1");
  t1 = add_object(t1, g, "c2");
  t1 = add_object(t1, g, "c3");
  const Vec3 center(1, 1, 0);
  CHECK(contains(group_hull(t1, g), center));
  for (const auto& [id, o] : t1.objects())
    CHECK_FALSE(contains(object_hull(*o.mesh, world_pose(t1, id), o.padding), center));
}
