#include <cmath>
#include <numbers>

#include <doctest/doctest.h>

#include "nestplan/error.hpp"
#include "nestplan/io.hpp"
#include "nestplan/kinematics.hpp"
#include "oracles.hpp"

using namespace nestplan;

namespace {

ArmModel ur5() { return arm_from_json(load_json(std::string(NESTPLAN_DATA_DIR) + "/arms/ur5.json")); }

JointConfig random_config(const ArmModel& arm, std::mt19937_64& rng) {
  JointConfig q(static_cast<Eigen::Index>(arm.dof()));
  for (std::size_t i = 0; i < arm.dof(); ++i)
    q[static_cast<Eigen::Index>(i)] = std::uniform_real_distribution<double>(arm.joints[i].lower, arm.joints[i].upper)(rng);
  return q;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

Hull box_at(const Vec3& center, const Vec3& size) {
  return object_hull(*oracle::box_mesh(size.x(), size.y(), size.z()), Pose(center), 0.0, "box");
}

void check_dense(const ArmModel& arm, const std::vector<JointConfig>& path, const std::vector<Hull>& obstacles,
                 double step) {
  for (const auto& q : oracle::densify(path, step)) CHECK_FALSE(in_collision(arm, q, obstacles));
}

}  // namespace

TEST_CASE("planar arm forward kinematics") {
  const ArmModel arm = planar_arm();
  CHECK((fk(arm, JointConfig::Zero(2)).translation() - Vec3(2, 0, 0)).norm() < 1e-12);
  CHECK((fk(arm, (JointConfig(2) << std::numbers::pi / 2, 0).finished()).translation() - Vec3(0, 2, 0)).norm() < 1e-9);
  CHECK(code_of([&] { fk(arm, (JointConfig(2) << 4.0, 0).finished()); }) == ErrorCode::LimitViolation);
  CHECK(code_of([&] { fk(arm, JointConfig::Zero(3)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("forward kinematics matches the matrix-chain oracle") {
  for (const ArmModel& arm : {planar_arm(), ur5()}) {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const JointConfig q = random_config(arm, rng);
      worst = std::max(worst, (fk(arm, q).matrix() - oracle::fk_matrix(arm, q)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("ik returns its seed for a reachable seed pose") {
  const ArmModel arm = ur5();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const JointConfig q0 = random_config(arm, rng);
    CHECK((ik(arm, fk(arm, q0), q0) - q0).norm() == 0.0);
  }
}

TEST_CASE("ik rejects targets beyond reach") {
  for (const ArmModel& arm : {planar_arm(), ur5()}) {
    const Pose far(Vec3(2.0 * arm.max_reach(), 0, 0));
    CHECK(code_of([&] { ik(arm, far, arm.home_config()); }) == ErrorCode::NoSolution);
  }
}

TEST_CASE("ik round-trips random reachable targets") {
  const ArmModel arm = ur5();
  std::mt19937_64 rng(100);
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const Pose target = fk(arm, random_config(arm, rng));
    try {
      const JointConfig q = ik(arm, target, arm.home_config());
      const Pose got = fk(arm, q);
      if ((got.translation() - target.translation()).norm() <= 1e-4 &&
          rotation_distance(got.rotation(), target.rotation()) <= 1e-3)
        ++ok;
    } catch (const Error&) {
    }
  }
  CHECK(ok >= 95);
}

TEST_CASE("ik honours the accept predicate") {
  const ArmModel arm = ur5();
  const Pose target = fk(arm, arm.home_config());
  IkOptions o;
  o.accept = [&](const JointConfig& q) { return q[0] > 1.0; };
  CHECK(code_of([&] { ik(arm, Pose(Vec3(0.0, 0.0, 5.0)), arm.home_config(), o); }) == ErrorCode::NoSolution);
  // Any accepted answer satisfies the predicate.
  try {
    const JointConfig q = ik(arm, target, arm.home_config(), o);
    CHECK(q[0] > 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSolution);
  }
}

TEST_CASE("capsule clearance agrees with point sampling") {
  const ArmModel arm = ur5();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 40; ++i) {
    const JointConfig q = random_config(arm, rng);
    const Hull h = box_at(Vec3(u(rng), u(rng), 0.3 + 0.5 * u(rng)), Vec3(0.1, 0.15, 0.08));
    const auto frames = joint_frames(arm, q);
    double sampled = std::numeric_limits<double>::infinity();
    double longest = 0.0;
    for (const auto& c : arm.capsules) {
      const Pose& f = c.frame < 0 ? arm.base : frames[static_cast<std::size_t>(c.frame)];
      const Vec3 a = f.apply(c.a), b = f.apply(c.b);
      longest = std::max(longest, (b - a).norm());
      sampled = std::min(sampled, oracle::sampled_capsule_clearance(a, b, c.radius, h, 1000));
    }
    const double exact = clearance(arm, q, {h});
    CHECK(exact <= sampled + 1e-9);
    CHECK(sampled - exact <= longest / 1000 + 1e-9);
  }
}

TEST_CASE("planner edge cases") {
  const ArmModel arm = planar_arm();
  const JointConfig q = JointConfig::Zero(2);
  CHECK(plan_path(arm, q, q, {}).size() == 1);
  const JointConfig goal = (JointConfig(2) << 1.0, -0.5).finished();
  const auto straight = plan_path(arm, q, goal, {});
  CHECK(straight.size() == 2);
  const Hull on_link = box_at(Vec3(1.5, 0, 0), Vec3(0.2, 0.2, 0.2));
  CHECK(code_of([&] { plan_path(arm, q, goal, {on_link}); }) == ErrorCode::StartInCollision);
  CHECK(code_of([&] { plan_path(arm, goal, q, {on_link}); }) == ErrorCode::GoalInCollision);
}

TEST_CASE("planar arm swings around a box") {
  const ArmModel arm = planar_arm();
  const JointConfig start = (JointConfig(2) << -1.2, 0.3).finished();
  const JointConfig goal = (JointConfig(2) << 1.2, -0.3).finished();
  // A post at (1.6, 0) blocks the direct sweep of the outer link.
  const std::vector<Hull> obstacles{box_at(Vec3(1.6, 0, 0), Vec3(0.2, 0.2, 0.4))};
  CHECK_FALSE(motion_free(arm, start, goal, obstacles));
  PlannerOptions o;
  o.seed = 11;
  const auto path = plan_path(arm, start, goal, obstacles, o);
  CHECK(path.front() == start);
  CHECK(path.back() == goal);
  check_dense(arm, path, obstacles, o.resolution / 10);
  CHECK(plan_path(arm, start, goal, obstacles, o) == path);
}

TEST_CASE("UR5 paths re-validate at ten times the resolution") {
  const ArmModel arm = ur5();
  const std::vector<Hull> obstacles{box_at(Vec3(0.45, 0.0, 0.15), Vec3(0.1, 0.5, 0.3)),
                                    box_at(Vec3(0.0, 0.0, -0.03), Vec3(1.5, 1.5, 0.04))};
  std::mt19937_64 rng(12);
  int planned = 0;
  for (int attempt = 0; attempt < 30 && planned < 4; ++attempt) {
    JointConfig a = random_config(arm, rng), b = random_config(arm, rng);
    if (in_collision(arm, a, obstacles) || in_collision(arm, b, obstacles)) continue;
    PlannerOptions o;
    o.seed = static_cast<std::uint64_t>(attempt);
    try {
      const auto path = plan_path(arm, a, b, obstacles, o);
      ++planned;
      check_dense(arm, path, obstacles, o.resolution / 10);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Timeout);
    }
  }
  CHECK(planned >= 2);
}

TEST_CASE("arm model validation") {
  ArmModel arm = planar_arm();
  arm.joints.pop_back();
  CHECK(code_of([&] { arm.check(); }) == ErrorCode::InvalidSpec);
  arm = planar_arm();
  arm.capsules[0].radius = 0.0;
  CHECK(code_of([&] { arm.check(); }) == ErrorCode::InvalidSpec);
  arm = planar_arm();
  arm.joints[0].lower = arm.joints[0].upper;
  CHECK(code_of([&] { arm.check(); }) == ErrorCode::InvalidSpec);
  CHECK_NOTHROW(ur5().check());
}
