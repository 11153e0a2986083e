#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nestplan/hull.hpp"
#include "nestplan/pose.hpp"

namespace nestplan {

using JointConfig = Eigen::VectorXd;

struct Joint {
  std::string name;
  Pose offset;  // from the previous joint frame (or the base)
  Vec3 axis = Vec3::UnitZ();
  double lower = -3.14159265358979323846;
  double upper = 3.14159265358979323846;
};

/// Link approximation: segment a-b with a radius, in the frame of joint
/// `frame` (-1 = arm base frame).
struct Capsule {
  int frame = -1;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

struct ArmModel {
  std::string name;
  Pose base;
  std::vector<Joint> joints;
  Pose tool;  // effector relative to the last joint frame
  std::vector<Capsule> capsules;
  JointConfig home;  // empty means all zeros

  std::size_t dof() const { return joints.size(); }
  JointConfig home_config() const;
  /// Upper bound on the effector's distance from the base origin.
  double max_reach() const;
  /// Throws InvalidSpec: fewer than two joints, bad limits, bad capsules.
  void check() const;
  bool within_limits(const JointConfig& q, double tolerance = 1e-12) const;
};

/// World frame of every joint after applying its rotation.
std::vector<Pose> joint_frames(const ArmModel& arm, const JointConfig& q);

/// Effector pose. Throws LimitViolation or InvalidArgument (size).
Pose fk(const ArmModel& arm, const JointConfig& q);

struct IkOptions {
  int max_iterations = 400;
  int restarts = 64;
  double damping = 0.02;
  double max_step = 0.4;
  double position_tolerance = 1e-4;
  double rotation_tolerance = 1e-3;
  /// Solutions failing this test are discarded and the search goes on.
  std::function<bool(const JointConfig&)> accept;
};

/// Damped least squares from `seed`, then from deterministic restarts.
/// Throws NoSolution.
JointConfig ik(const ArmModel& arm, const Pose& target, const JointConfig& seed, const IkOptions& options = {});

/// Smallest (surface distance - radius) over capsules and obstacles;
/// negative means contact.
double clearance(const ArmModel& arm, const JointConfig& q, const std::vector<Hull>& obstacles);
bool in_collision(const ArmModel& arm, const JointConfig& q, const std::vector<Hull>& obstacles);

/// Bounds how far any capsule point moves per radian of max-abs joint
/// change; used to certify whole motions from sampled clearances.
double sweep_bound(const ArmModel& arm);

/// Linear joint motion check by conservative advancement: every state of
/// the segment is certified, not only samples. Steps never exceed
/// `resolution` radians per joint.
bool motion_free(const ArmModel& arm, const JointConfig& from, const JointConfig& to,
                 const std::vector<Hull>& obstacles, double resolution = 0.05);

struct PlannerOptions {
  std::uint64_t seed = 1;
  double resolution = 0.05;
  double extend_step = 0.4;
  int max_iterations = 20000;
  int shortcut_rounds = 150;
};

/// RRT-Connect with shortcut smoothing. Waypoints start at `start` and end
/// at `goal`. Throws StartInCollision, GoalInCollision, Timeout.
std::vector<JointConfig> plan_path(const ArmModel& arm, const JointConfig& start, const JointConfig& goal,
                                   const std::vector<Hull>& obstacles, const PlannerOptions& options = {});

/// Two-link planar arm with unit links, rotating about z. Test fixture.
ArmModel planar_arm();

}  // namespace nestplan
