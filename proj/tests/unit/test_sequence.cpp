#include <cmath>

#include <doctest/doctest.h>

#include "nestplan/error.hpp"
#include "nestplan/kinematics.hpp"
#include "nestplan/sequence.hpp"
#include "oracles.hpp"
#include "sequence_oracles.hpp"

using namespace nestplan;

namespace {

std::vector<std::string> names(std::size_t n, const char* prefix = "g") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::map<std::string, Vec3> random_centroids(std::mt19937_64& rng, const std::vector<std::string>& ids) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::map<std::string, Vec3> c;
  for (const auto& id : ids) c[id] = Vec3(u(rng), u(rng), 0.1 * u(rng));
  return c;
}

}  // namespace

TEST_CASE("collinear siblings are visited in order") {
  const std::map<std::string, Vec3> c{{"a", {1, 0, 0}}, {"b", {2, 0, 0}}, {"c", {3, 0, 0}}};
  const GroupTour t = order_groups(c, Vec3::Zero(), {});
  CHECK(t.order == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.length == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("children come before parents regardless of distance") {
  const std::map<std::string, Vec3> c{{"p", {0.1, 0, 0}}, {"c", {5, 0, 0}}};
  const Hierarchy h{{"c", "p"}, {"p", std::nullopt}};
  CHECK(order_groups(c, Vec3::Zero(), h).order == std::vector<std::string>{"c", "p"});
  CHECK(order_groups_heuristic(c, Vec3::Zero(), h).order == std::vector<std::string>{"c", "p"});
}

TEST_CASE("empty input is an error") {
  try {
    order_groups({}, Vec3::Zero(), {});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("exact tour matches brute force and bounds the heuristic") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ids = names(1 + trial % 8);
    const auto c = random_centroids(rng, ids);
    const Hierarchy h = trial % 2 ? oracle::random_forest(rng, ids, 0.4) : Hierarchy{};
    const GroupTour exact = order_groups(c, Vec3::Zero(), h);
    CHECK(respects_hierarchy(exact.order, h));
    CHECK(exact.length == doctest::Approx(oracle::brute_force_tour(c, Vec3::Zero(), h)).epsilon(1e-12));
    const GroupTour heur = order_groups_heuristic(c, Vec3::Zero(), h);
    CHECK(respects_hierarchy(heur.order, h));
    CHECK(heur.length >= exact.length - 1e-12);
  }
}

TEST_CASE("large instances use the heuristic and keep the hierarchy") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = names(13 + trial);
    const auto c = random_centroids(rng, ids);
    const Hierarchy h = oracle::random_forest(rng, ids, 0.5);
    const GroupTour t = order_groups(c, Vec3::Zero(), h);
    CHECK(t.order.size() == ids.size());
    CHECK(respects_hierarchy(t.order, h));
    CHECK(t.length == doctest::Approx(tour_length(t.order, c, Vec3::Zero())).epsilon(1e-12));
  }
}

TEST_CASE("2-opt never lengthens the nearest-neighbour path") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ids = names(20);
    const auto c = random_centroids(rng, ids);
    // Nearest neighbour from the base, computed here.
    std::vector<std::string> nn;
    std::set<std::string> left(ids.begin(), ids.end());
    Vec3 at = Vec3::Zero();
    while (!left.empty()) {
      auto best = *left.begin();
      for (const auto& id : left)
        if ((c.at(id) - at).norm() < (c.at(best) - at).norm()) best = id;
      nn.push_back(best);
      at = c.at(best);
      left.erase(best);
    }
    CHECK(order_groups_heuristic(c, Vec3::Zero(), {}).length <= tour_length(nn, c, Vec3::Zero()) + 1e-12);
  }
}

TEST_CASE("repair moves parents after their descendants") {
  const Hierarchy h{{"a", "b"}, {"b", "c"}, {"c", std::nullopt}, {"d", std::nullopt}};
  const auto fixed = repair_hierarchy({"c", "d", "b", "a"}, h);
  CHECK(respects_hierarchy(fixed, h));
  CHECK(fixed == std::vector<std::string>{"d", "a", "b", "c"});
}

TEST_CASE("single object costs nothing") {
  const std::map<std::string, JointConfig> q{{"only", JointConfig::Ones(3)}};
  const auto s = order_objects("g", {"only"}, q, {});
  CHECK(s.order == std::vector<std::string>{"only"});
  CHECK(s.cost == 0.0);
}

TEST_CASE("supports come first") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::map<std::string, JointConfig> q;
  for (const char* id : {"plate", "gear", "shaft", "nut"}) q[id] = JointConfig::NullaryExpr(6, [&] { return u(rng); });
  const Precedence before{{"plate", "gear"}, {"gear", "nut"}};
  const auto s = order_objects("g", {"gear", "nut", "plate", "shaft"}, q, before);
  CHECK(oracle::precedence_holds(s.order, before));
  CHECK(s.cost == doctest::Approx(sequence_cost(s.order, q)).epsilon(1e-12));
}

TEST_CASE("cyclic precedence is reported") {
  const std::map<std::string, JointConfig> q{{"a", JointConfig::Zero(2)}, {"b", JointConfig::Ones(2)}};
  try {
    order_objects("g", {"a", "b"}, q, {{"a", "b"}, {"b", "a"}});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CyclicPrecedence);
  }
}

TEST_CASE("exact object order matches enumeration") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ids = names(1 + trial % 6, "o");
    std::map<std::string, JointConfig> q;
    for (const auto& id : ids) q[id] = JointConfig::NullaryExpr(6, [&] { return u(rng); });
    Precedence before;
    std::bernoulli_distribution edge(0.2);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        if (edge(rng)) before.emplace_back(ids[i], ids[j]);
    const auto s = order_objects("g", ids, q, before);
    CHECK(oracle::precedence_holds(s.order, before));
    CHECK(s.cost == doctest::Approx(oracle::brute_force_sequence(ids, q, before)).epsilon(1e-12));
  }
}

TEST_CASE("large groups still honour precedence") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto ids = names(14, "o");
  std::map<std::string, JointConfig> q;
  for (const auto& id : ids) q[id] = JointConfig::NullaryExpr(6, [&] { return u(rng); });
  Precedence before{{"o3", "o1"}, {"o1", "o7"}, {"o10", "o2"}};
  const auto s = order_objects("g", ids, q, before);
  CHECK(s.order.size() == ids.size());
  CHECK(oracle::precedence_holds(s.order, before));
}

TEST_CASE("support pairs detect stacking only") {
  std::map<std::string, Hull> h;
  h["base"] = object_hull(*oracle::box_mesh(0.2, 0.2, 0.04), Pose(Vec3(0, 0, 0.02)), 0.0, "base");
  h["top"] = object_hull(*oracle::cube_mesh(0.05), Pose(Vec3(0, 0, 0.065)), 0.0, "top");
  h["side"] = object_hull(*oracle::cube_mesh(0.04), Pose(Vec3(0.12, 0, 0.02)), 0.0, "side");
  const Precedence p = support_pairs(h);
  CHECK(p == Precedence{{"base", "top"}});
}

TEST_CASE("grasp pose sits above the part pointing down") {
  const Hull h = object_hull(*oracle::cube_mesh(0.1), Pose(Vec3(0.3, 0.1, 0.05)), 0.0, "c");
  const Pose g = grasp_pose(h);
  CHECK((g.translation() - Vec3(0.3, 0.1, 0.12)).norm() < 1e-12);
  CHECK((g.rotate(Vec3::UnitZ()) + Vec3::UnitZ()).norm() < 1e-12);
}

TEST_CASE("within-group sequencing on the planar arm") {
  const ArmModel arm = planar_arm();
  std::map<std::string, Hull> hulls;
  // Grasp targets must lie in the arm's plane and orientation family; the
  // planar arm cannot point its tool down, so it cannot reach them.
  hulls["a"] = object_hull(*oracle::cube_mesh(0.1), Pose(Vec3(1.0, 0.5, -0.07)), 0.0, "a");
  try {
    order_within_group("g", {"a"}, hulls, arm, {});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IKFailure);
    CHECK(e.subject() == "a");
  }
}
