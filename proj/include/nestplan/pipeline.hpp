#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/kinematics.hpp"
#include "nestplan/placement.hpp"
#include "nestplan/sequence.hpp"

namespace nestplan {

/// Objects, work cell and arm as loaded from a scene file.
struct Scene {
  std::vector<SceneObject> objects;
  Workspace workspace;
  ArmModel arm;
};

struct PlanStep {
  std::string object;
  std::string group;
  Pose staged_pose;  // where the part waits before pick-up
  Pose place_pose;
  JointConfig pick_config;
  JointConfig place_config;
  std::vector<JointConfig> approach;  // previous config -> pick
  std::vector<JointConfig> transfer;  // pick -> place
};

struct AssemblyPlan {
  Placement placement;
  GroupTour tour;
  std::vector<ObjectSequence> sequences;
  std::vector<PlanStep> steps;
  std::map<std::string, Hull> object_hulls;
  std::map<std::string, Hull> group_hulls;
  JointConfig home;
  int settle_rounds = 0;
  double max_penetration = 0.0;
};

/// The spec with local poses rewritten so that world poses equal `placement`.
SpecDocument with_placement(const SpecDocument& spec, const Placement& placement);

/// Thin slab under the table top, used as an arm obstacle.
Hull table_slab(const Workspace& workspace);

/// Obstacles seen by the arm during step `k`: objects placed in earlier
/// steps, parts still waiting in staging, and the table. The part being
/// carried is left out when `carrying` is set.
std::vector<Hull> step_obstacles(const SpecDocument& spec, const AssemblyPlan& plan, const Workspace& workspace,
                                 std::size_t k, bool carrying);

/// Group tour, per-group sequences, pick/place configurations and paths for
/// a resolved and settled placement.
AssemblyPlan assemble_plan(const SpecDocument& spec, const Placement& placement, const Workspace& workspace,
                           const ArmModel& arm, std::uint64_t seed = 0, const GroupHullOptions& hull_options = {});

struct PlanOptions {
  std::uint64_t seed = 0;
  SolverOptions solver;
  SettleOptions settle;
  GroupHullOptions hulls;
};

/// resolve_poses, settle, assemble_plan. Throws NoConvergence if settling
/// leaves overlaps or floating parts.
AssemblyPlan plan_assembly(const SpecDocument& spec, const Workspace& workspace, const ArmModel& arm,
                           const PlanOptions& options = {});

}  // namespace nestplan
