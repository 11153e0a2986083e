#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/pose.hpp"

namespace nestplan {

/// Table-top work cell. All lengths in meters.
struct Workspace {
  double table_height = 0.0;
  Eigen::Vector2d table_min{-0.8, -0.8};
  Eigen::Vector2d table_max{0.8, 0.8};
  Vec3 arm_base = Vec3::Zero();
  double reach = 0.85;
  /// No placement closer than this (in the table plane) to the arm base.
  double base_clearance = 0.2;
  /// Minimum gap between separately placed rigid units.
  double unit_clearance = 0.03;
  /// Strip along the -y table edge kept free for staged parts.
  double staging_depth = 0.15;
  /// Where root groups are pulled toward; defaults to the middle of the
  /// placeable region.
  std::optional<Eigen::Vector2d> focus;

  Eigen::Vector2d placeable_min() const { return {table_min.x(), table_min.y() + staging_depth}; }
  Eigen::Vector2d placeable_max() const { return table_max; }
  Eigen::Vector2d focus_point() const { return focus ? *focus : Eigen::Vector2d(0.5 * (placeable_min() + placeable_max())); }
  /// Throws InvalidSpec for a non-positive reach or an empty table.
  void check() const;
};

/// World pose for every group and object of a spec document.
struct Placement {
  std::map<std::string, Pose> poses;

  const Pose& at(const std::string& id) const;
  bool operator==(const Placement&) const = default;
};

/// A set of groups and objects that the solver moves as one rigid body.
/// Relative groups anchor their own unit; absolute groups ride along with
/// their parent's unit, or are pinned to the world at the root.
struct RigidUnit {
  std::string anchor;
  bool fixed = false;
  std::optional<std::string> parent;  // group the anchor hangs under
  std::vector<std::string> groups;
  std::vector<std::string> objects;
};

/// Units in the order the solver handles them: pinned units first, then the
/// free units in depth-first pre-order.
std::vector<RigidUnit> rigid_units(const SpecDocument& spec);

/// Placement with every pose equal to the authored composition.
Placement authored_placement(const SpecDocument& spec);

/// Padded world-frame hull of every object at the given placement.
std::map<std::string, Hull> object_hulls(const SpecDocument& spec, const Placement& placement);

struct SolverOptions {
  int samples = 48;
  int restarts = 8;
  int descent_iterations = 80;
  double weight_collision = 1e3;
  double weight_reach = 1e2;
  double weight_support = 1e2;
  double weight_parent = 1.0;
  /// Constraint terms below this count as satisfied.
  double feasibility_tolerance = 1e-8;
};

/// Chooses world poses for relative groups (yaw + table position, resting
/// on the highest support below) and keeps absolute groups as authored.
/// Throws Infeasible(group) or InvalidSpec.
Placement resolve_poses(const SpecDocument& spec, const Workspace& workspace, std::uint64_t seed,
                        const SolverOptions& options = {});

struct SettleOptions {
  int max_rounds = 200;
  double tolerance = 1e-4;       // max penetration accepted at the end
  double contact_slack = 1e-6;   // overlap below this is resting contact
  double support_tolerance = 1e-5;
};

struct SettleResult {
  Placement placement;
  bool converged = false;
  int rounds = 0;
  double max_penetration = 0.0;
  /// Max penetration after each round, starting with the input.
  std::vector<double> history;
  std::vector<std::string> unsupported;
};

/// Position-based interpenetration removal followed by gravity drops, until
/// nothing overlaps and everything rests on the table or another object.
/// Returns the best iterate with converged = false when rounds run out.
SettleResult settle(const SpecDocument& spec, const Placement& placement, const Workspace& workspace,
                    const SettleOptions& options = {});

/// Largest pairwise penetration between objects (and below the table).
double max_penetration(const std::map<std::string, Hull>& hulls, double table_height);

/// How far `moving` can fall before resting on the table or on one of
/// `obstacles`.
double drop_distance(const std::vector<const Hull*>& moving, const std::vector<const Hull*>& obstacles,
                     double table_height);

}  // namespace nestplan
