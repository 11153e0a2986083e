#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nestplan/hull.hpp"
#include "nestplan/kinematics.hpp"
#include "nestplan/pose.hpp"

namespace nestplan {

struct GroupTour {
  std::vector<std::string> order;
  double length = 0.0;
  bool operator==(const GroupTour&) const = default;
};

/// group -> parent group (nullopt for roots). Groups missing from the map
/// are treated as roots.
using Hierarchy = std::map<std::string, std::optional<std::string>>;

/// Open path from `base` through the points in `order`.
double tour_length(const std::vector<std::string>& order, const std::map<std::string, Vec3>& centroids,
                   const Vec3& base);

/// True when every group comes after all of its descendants.
bool respects_hierarchy(const std::vector<std::string>& order, const Hierarchy& parents);

/// Moves each group that precedes one of its descendants to just after its
/// last descendant, keeping everything else in order.
std::vector<std::string> repair_hierarchy(std::vector<std::string> order, const Hierarchy& parents);

/// Shortest descendant-first open tour. Exact Held-Karp up to `exact_limit`
/// groups, nearest neighbour + repair + 2-opt above. Throws EmptyInput.
GroupTour order_groups(const std::map<std::string, Vec3>& centroids, const Vec3& base, const Hierarchy& parents,
                       std::size_t exact_limit = 12);

/// The heuristic path on its own (also used above the exact limit).
GroupTour order_groups_heuristic(const std::map<std::string, Vec3>& centroids, const Vec3& base,
                                 const Hierarchy& parents);

/// (before, after): `before` must be placed earlier.
using Precedence = std::vector<std::pair<std::string, std::string>>;

struct ObjectSequence {
  std::string group;
  std::vector<std::string> order;
  double cost = 0.0;  // joint-space L2 between consecutive place configs
  bool operator==(const ObjectSequence&) const = default;
};

/// Sum of joint-space distances along `order`.
double sequence_cost(const std::vector<std::string>& order, const std::map<std::string, JointConfig>& configs);

/// Cheapest precedence-feasible order of `objects`. Exact search up to
/// `exact_limit` objects, greedy + pairwise-swap repair above. Throws
/// CyclicPrecedence.
ObjectSequence order_objects(const std::string& group, const std::vector<std::string>& objects,
                             const std::map<std::string, JointConfig>& configs, const Precedence& supports,
                             std::size_t exact_limit = 8);

/// Pairs (support, supported) among `hulls`: the supported object touches
/// the support within `tolerance` and sits on top of it.
Precedence support_pairs(const std::map<std::string, Hull>& hulls, double tolerance = 1e-4);

/// Effector pose above a hull: centroid raised by half the bounding-box
/// height plus 2 cm, tool z pointing down.
Pose grasp_pose(const Hull& hull);

/// IK for grasp_pose(hull) from a fixed seed, skipping solutions that touch
/// `obstacles`. Throws IKFailure(hull.owner).
JointConfig grasp_config(const ArmModel& arm, const Hull& hull, const JointConfig& seed,
                         const std::vector<Hull>& obstacles = {});

/// order_objects with costs from grasp configurations of `hulls`.
ObjectSequence order_within_group(const std::string& group, const std::vector<std::string>& objects,
                                  const std::map<std::string, Hull>& hulls, const ArmModel& arm,
                                  const Precedence& supports, const std::vector<Hull>& obstacles = {});

}  // namespace nestplan
