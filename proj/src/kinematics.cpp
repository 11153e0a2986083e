#include "nestplan/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nestplan/collision.hpp"
#include "nestplan/error.hpp"

namespace nestplan {

JointConfig ArmModel::home_config() const {
  if (home.size() == 0) return JointConfig::Zero(static_cast<Eigen::Index>(dof()));
  return home;
}

double ArmModel::max_reach() const {
  double r = tool.translation().norm();
  for (const auto& j : joints) r += j.offset.translation().norm();
  return r;
}

void ArmModel::check() const {
  if (joints.size() < 2) throw Error(ErrorCode::InvalidSpec, "arm needs at least two joints", name);
  for (const auto& j : joints) {
    if (!(j.lower < j.upper)) throw Error(ErrorCode::InvalidSpec, "joint limits must satisfy lower < upper", j.name);
    if (j.axis.norm() < 1e-12) throw Error(ErrorCode::InvalidSpec, "joint axis is zero", j.name);
  }
  for (const auto& c : capsules) {
    if (!(c.radius > 0.0)) throw Error(ErrorCode::InvalidSpec, "capsule radius must be positive", name);
    if (c.frame < -1 || c.frame >= static_cast<int>(joints.size()))
      throw Error(ErrorCode::InvalidSpec, "capsule frame out of range", name);
  }
  if (home.size() != 0 && (home.size() != static_cast<Eigen::Index>(dof()) || !within_limits(home)))
    throw Error(ErrorCode::InvalidSpec, "home configuration is invalid", name);
}

bool ArmModel::within_limits(const JointConfig& q, double tolerance) const {
  if (q.size() != static_cast<Eigen::Index>(dof())) return false;
  for (std::size_t i = 0; i < dof(); ++i) {
    const double v = q[static_cast<Eigen::Index>(i)];
    if (!(v >= joints[i].lower - tolerance && v <= joints[i].upper + tolerance)) return false;
  }
  return true;
}

namespace {

void require_size(const ArmModel& arm, const JointConfig& q) {
  if (q.size() != static_cast<Eigen::Index>(arm.dof()))
    throw Error(ErrorCode::InvalidArgument, "joint vector has " + std::to_string(q.size()) + " entries, arm has " +
                                                std::to_string(arm.dof()));
}

std::vector<Pose> frames_unchecked(const ArmModel& arm, const JointConfig& q) {
  std::vector<Pose> out;
  out.reserve(arm.dof());
  Pose t = arm.base;
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    const auto& j = arm.joints[i];
    t = t * j.offset * Pose(Vec3::Zero(), Quat(Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], j.axis.normalized())));
    out.push_back(t);
  }
  return out;
}

JointConfig clamp(const ArmModel& arm, JointConfig q) {
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    auto k = static_cast<Eigen::Index>(i);
    q[k] = std::clamp(q[k], arm.joints[i].lower, arm.joints[i].upper);
  }
  return q;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

JointConfig random_config(const ArmModel& arm, std::mt19937_64& rng) {
  JointConfig q(static_cast<Eigen::Index>(arm.dof()));
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    const auto& j = arm.joints[i];
    q[static_cast<Eigen::Index>(i)] = j.lower + uniform01(rng) * (j.upper - j.lower);
  }
  return q;
}

Eigen::Matrix<double, 6, 1> pose_error(const Pose& target, const Pose& current) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.translation() - current.translation();
  Eigen::AngleAxisd aa(target.rotation() * current.rotation().conjugate());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > 3.14159265358979323846) {
    angle = 2.0 * 3.14159265358979323846 - angle;
    axis = -axis;
  }
  e.tail<3>() = angle * axis;
  return e;
}

}  // namespace

std::vector<Pose> joint_frames(const ArmModel& arm, const JointConfig& q) {
  require_size(arm, q);
  return frames_unchecked(arm, q);
}

Pose fk(const ArmModel& arm, const JointConfig& q) {
  require_size(arm, q);
  if (!arm.within_limits(q)) throw Error(ErrorCode::LimitViolation, "joint configuration outside limits", arm.name);
  return frames_unchecked(arm, q).back() * arm.tool;
}

JointConfig ik(const ArmModel& arm, const Pose& target, const JointConfig& seed, const IkOptions& options) {
  require_size(arm, seed);
  const auto n = static_cast<Eigen::Index>(arm.dof());
  if ((target.translation() - arm.base.translation()).norm() > arm.max_reach())
    throw Error(ErrorCode::NoSolution, "target beyond arm reach", arm.name);

  std::mt19937_64 rng(0x5eed1cULL);
  for (int attempt = 0; attempt <= options.restarts; ++attempt) {
    JointConfig q = attempt == 0 ? clamp(arm, seed) : random_config(arm, rng);
    for (int it = 0; it < options.max_iterations; ++it) {
      const auto frames = frames_unchecked(arm, q);
      const Pose effector = frames.back() * arm.tool;
      const auto e = pose_error(target, effector);
      if (e.head<3>().norm() <= options.position_tolerance && e.tail<3>().norm() <= options.rotation_tolerance) {
        if (!options.accept || options.accept(q)) return q;
        break;
      }
      Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 z = frames[static_cast<std::size_t>(i)].rotate(arm.joints[static_cast<std::size_t>(i)].axis.normalized());
        jac.block<3, 1>(0, i) = z.cross(effector.translation() - frames[static_cast<std::size_t>(i)].translation());
        jac.block<3, 1>(3, i) = z;
      }
      const double lambda2 = options.damping * options.damping;
      const Eigen::Matrix<double, 6, 6> jjt = jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
      JointConfig dq = jac.transpose() * jjt.ldlt().solve(e);
      const double big = dq.cwiseAbs().maxCoeff();
      if (big > options.max_step) dq *= options.max_step / big;
      if (big < 1e-14) break;
      q = clamp(arm, q + dq);
    }
  }
  throw Error(ErrorCode::NoSolution, "inverse kinematics did not converge", arm.name);
}

namespace {

struct Box3 {
  Vec3 lo, hi;
};

Box3 bounds(const Hull& h) {
  Box3 b{Vec3::Constant(std::numeric_limits<double>::infinity()), Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : h.vertices) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

double box_gap(const Box3& a, const Box3& b) {
  const Vec3 gap = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0);
  return gap.norm();
}

}  // namespace

double clearance(const ArmModel& arm, const JointConfig& q, const std::vector<Hull>& obstacles) {
  require_size(arm, q);
  if (obstacles.empty()) return std::numeric_limits<double>::infinity();
  const auto frames = frames_unchecked(arm, q);
  std::vector<Box3> boxes;
  boxes.reserve(obstacles.size());
  for (const auto& h : obstacles) boxes.push_back(bounds(h));

  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : arm.capsules) {
    const Pose& f = c.frame < 0 ? arm.base : frames[static_cast<std::size_t>(c.frame)];
    const Vec3 p0 = f.apply(c.a), p1 = f.apply(c.b);
    const Box3 seg{p0.cwiseMin(p1), p0.cwiseMax(p1)};
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      if (box_gap(seg, boxes[k]) - c.radius >= best) continue;
      best = std::min(best, segment_distance(p0, p1, obstacles[k]) - c.radius);
    }
  }
  return best;
}

bool in_collision(const ArmModel& arm, const JointConfig& q, const std::vector<Hull>& obstacles) {
  return clearance(arm, q, obstacles) <= kTouchTolerance;
}

double sweep_bound(const ArmModel& arm) {
  // A point at distance r from a joint axis moves at most r per radian, and
  // the max-abs joint norm bounds every joint's change at once.
  double bound = 0.0;
  for (const auto& c : arm.capsules) {
    const double tip = std::max(c.a.norm(), c.b.norm());
    double total = 0.0;
    for (int i = 0; i <= c.frame; ++i) {
      double r = tip;
      for (int j = i + 1; j <= c.frame; ++j) r += arm.joints[static_cast<std::size_t>(j)].offset.translation().norm();
      total += r;
    }
    bound = std::max(bound, total);
  }
  return bound;
}

bool motion_free(const ArmModel& arm, const JointConfig& from, const JointConfig& to,
                 const std::vector<Hull>& obstacles, double resolution) {
  require_size(arm, from);
  require_size(arm, to);
  const double span = (to - from).cwiseAbs().maxCoeff();
  const double lipschitz = std::max(sweep_bound(arm), 1e-12);
  double t = 0.0;
  while (true) {
    const JointConfig q = span > 0.0 ? JointConfig(from + (t / span) * (to - from)) : from;
    const double d = clearance(arm, q, obstacles);
    if (d <= kTouchTolerance) return false;
    if (t >= span) return true;
    const double advance = std::min(resolution, d / lipschitz);
    if (advance < 1e-7) return false;
    t = std::min(span, t + advance);
  }
}

namespace {

struct Tree {
  std::vector<JointConfig> nodes;
  std::vector<int> parent;

  int nearest(const JointConfig& q) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) best_d = d, best = static_cast<int>(i);
    }
    return best;
  }

  std::vector<JointConfig> path_to_root(int i) const {
    std::vector<JointConfig> out;
    for (; i >= 0; i = parent[static_cast<std::size_t>(i)]) out.push_back(nodes[static_cast<std::size_t>(i)]);
    return out;
  }
};

enum class Extend { Trapped, Advanced, Reached };

}  // namespace

std::vector<JointConfig> plan_path(const ArmModel& arm, const JointConfig& start, const JointConfig& goal,
                                   const std::vector<Hull>& obstacles, const PlannerOptions& options) {
  require_size(arm, start);
  require_size(arm, goal);
  if (!arm.within_limits(start) || !arm.within_limits(goal))
    throw Error(ErrorCode::LimitViolation, "path endpoint outside joint limits", arm.name);
  if (in_collision(arm, start, obstacles)) throw Error(ErrorCode::StartInCollision, "start configuration collides", arm.name);
  if (in_collision(arm, goal, obstacles)) throw Error(ErrorCode::GoalInCollision, "goal configuration collides", arm.name);
  if ((goal - start).cwiseAbs().maxCoeff() == 0.0) return {start};

  auto free = [&](const JointConfig& a, const JointConfig& b) {
    return motion_free(arm, a, b, obstacles, options.resolution);
  };
  if (free(start, goal)) return {start, goal};

  std::mt19937_64 rng(options.seed);
  Tree a{{start}, {-1}}, b{{goal}, {-1}};
  bool a_is_start = true;

  auto extend = [&](Tree& tree, const JointConfig& target) {
    const int near = tree.nearest(target);
    const JointConfig& from = tree.nodes[static_cast<std::size_t>(near)];
    const double gap = (target - from).norm();
    const bool reach = gap <= options.extend_step;
    const JointConfig next = reach ? target : JointConfig(from + (options.extend_step / gap) * (target - from));
    if (!free(from, next)) return Extend::Trapped;
    tree.nodes.push_back(next);
    tree.parent.push_back(near);
    return reach ? Extend::Reached : Extend::Advanced;
  };

  std::vector<JointConfig> path;
  for (int it = 0; it < options.max_iterations && path.empty(); ++it) {
    const JointConfig sample = random_config(arm, rng);
    if (extend(a, sample) != Extend::Trapped) {
      const JointConfig newest = a.nodes.back();
      Extend status;
      do status = extend(b, newest);
      while (status == Extend::Advanced);
      if (status == Extend::Reached) {
        auto from_a = a.path_to_root(static_cast<int>(a.nodes.size()) - 1);
        auto from_b = b.path_to_root(static_cast<int>(b.nodes.size()) - 1);
        std::reverse(from_a.begin(), from_a.end());
        from_a.insert(from_a.end(), from_b.begin() + 1, from_b.end());
        if (!a_is_start) std::reverse(from_a.begin(), from_a.end());
        path = std::move(from_a);
      }
    }
    std::swap(a, b);
    a_is_start = !a_is_start;
  }
  if (path.empty()) throw Error(ErrorCode::Timeout, "path search hit the iteration cap", arm.name);

  for (int round = 0; round < options.shortcut_rounds && path.size() > 2; ++round) {
    std::size_t i = static_cast<std::size_t>(rng() % path.size());
    std::size_t j = static_cast<std::size_t>(rng() % path.size());
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    if (free(path[i], path[j])) path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1, path.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return path;
}

ArmModel planar_arm() {
  ArmModel arm;
  arm.name = "planar2";
  Joint j1{"j1", Pose(), Vec3::UnitZ()};
  Joint j2{"j2", Pose::from_translation(1, 0, 0), Vec3::UnitZ()};
  arm.joints = {j1, j2};
  arm.tool = Pose::from_translation(1, 0, 0);
  arm.capsules = {{0, Vec3::Zero(), Vec3(1, 0, 0), 0.05}, {1, Vec3::Zero(), Vec3(1, 0, 0), 0.05}};
  return arm;
}

}  // namespace nestplan
