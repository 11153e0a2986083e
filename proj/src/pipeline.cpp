#include "nestplan/pipeline.hpp"

#include <algorithm>
#include <limits>

#include "nestplan/error.hpp"

namespace nestplan {

SpecDocument with_placement(const SpecDocument& spec, const Placement& placement) {
  SpecDocument out = spec;
  for (auto& [id, g] : out.groups)
    g.pose = g.parent ? placement.at(*g.parent).inverse() * placement.at(id) : placement.at(id);
  for (auto& [id, o] : out.objects) o.pose = placement.at(o.parent).inverse() * placement.at(id);
  return out;
}

Hull table_slab(const Workspace& ws) {
  const double top = ws.table_height - 2e-3, bottom = ws.table_height - 0.05;
  std::vector<Vec3> corners;
  for (double x : {ws.table_min.x() - 0.05, ws.table_max.x() + 0.05})
    for (double y : {ws.table_min.y() - 0.05, ws.table_max.y() + 0.05})
      for (double z : {bottom, top}) corners.emplace_back(x, y, z);
  Hull h = quickhull(corners, QuickhullOptions{.grid_apex = false, .parallel = false});
  h.owner = "table";
  return h;
}

std::vector<Hull> step_obstacles(const SpecDocument& spec, const AssemblyPlan& plan, const Workspace& workspace,
                                 std::size_t k, bool carrying) {
  std::vector<Hull> out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    if (i < k) {
      out.push_back(plan.object_hulls.at(step.object));
    } else if (i > k || !carrying) {
      const auto& o = spec.objects.at(step.object);
      out.push_back(object_hull(*o.mesh, step.staged_pose, o.padding, step.object));
    }
  }
  out.push_back(table_slab(workspace));
  return out;
}

namespace {

Vec3 mean_centroid(const SpecDocument& spec, const std::map<std::string, Hull>& hulls, const std::string& group) {
  Vec3 sum = Vec3::Zero();
  const auto objs = spec.subtree_objects(group);
  for (const auto& o : objs) sum += hulls.at(o).centroid();
  return objs.empty() ? sum : Vec3(sum / static_cast<double>(objs.size()));
}

}  // namespace

AssemblyPlan assemble_plan(const SpecDocument& spec, const Placement& placement, const Workspace& workspace,
                           const ArmModel& arm_in, std::uint64_t seed, const GroupHullOptions& hull_options) {
  ArmModel arm = arm_in;
  arm.base = Pose(workspace.arm_base, arm_in.base.rotation());
  arm.check();

  AssemblyPlan plan;
  plan.placement = placement;
  plan.object_hulls = object_hulls(spec, placement);
  plan.home = arm.home_config();
  if (spec.groups.empty()) return plan;
  plan.group_hulls = all_group_hulls(import_spec(with_placement(spec, placement)), hull_options);

  Hierarchy parents;
  std::map<std::string, Vec3> centroids;
  for (const auto& [id, g] : spec.groups) {
    parents[id] = g.parent;
    centroids[id] = mean_centroid(spec, plan.object_hulls, id);
  }
  plan.tour = order_groups(centroids, workspace.arm_base, parents);

  const Precedence supports = support_pairs(plan.object_hulls);
  const std::vector<Hull> table{table_slab(workspace)};
  for (const auto& g : plan.tour.order) {
    std::vector<std::string> direct;
    for (const auto& c : spec.groups.at(g).children)
      if (!c.is_group()) direct.push_back(c.id);
    plan.sequences.push_back(order_within_group(g, direct, plan.object_hulls, arm, supports, table));
    for (const auto& o : plan.sequences.back().order) {
      PlanStep step;
      step.object = o;
      step.group = g;
      step.place_pose = placement.at(o);
      plan.steps.push_back(std::move(step));
    }
  }

  // Parts wait in a row along the -y edge, in plan order.
  double cursor = workspace.table_min.x() + 0.02;
  const double lane = workspace.table_min.y() + 0.5 * workspace.staging_depth;
  for (auto& step : plan.steps) {
    const Hull& h = plan.object_hulls.at(step.object);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const auto& v : h.vertices) lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
    const Vec3 shift(cursor - lo.x(), lane - 0.5 * (lo.y() + hi.y()), workspace.table_height - lo.z());
    step.staged_pose = Pose(step.place_pose.translation() + shift, step.place_pose.rotation());
    cursor += (hi.x() - lo.x()) + 0.02;
  }

  JointConfig at = plan.home;
  for (std::size_t k = 0; k < plan.steps.size(); ++k) {
    auto& step = plan.steps[k];
    const auto& o = spec.objects.at(step.object);
    const Hull staged = object_hull(*o.mesh, step.staged_pose, o.padding, step.object);
    const auto before = step_obstacles(spec, plan, workspace, k, false);
    const auto during = step_obstacles(spec, plan, workspace, k, true);
    step.pick_config = grasp_config(arm, staged, plan.home, before);
    // Same configuration the sequencer costed, unless something now blocks it.
    const Hull& target = plan.object_hulls.at(step.object);
    step.place_config = grasp_config(arm, target, plan.home, table);
    if (in_collision(arm, step.place_config, during)) step.place_config = grasp_config(arm, target, plan.home, during);
    PlannerOptions po;
    po.seed = seed * 1000003u + 2 * k + 1;
    try {
      step.approach = plan_path(arm, at, step.pick_config, before, po);
      po.seed += 1;
      step.transfer = plan_path(arm, step.pick_config, step.place_config, during, po);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (step " + std::to_string(k) + ", " + step.object + ")",
                  step.object);
    }
    at = step.place_config;
  }
  return plan;
}

AssemblyPlan plan_assembly(const SpecDocument& spec, const Workspace& workspace, const ArmModel& arm,
                           const PlanOptions& options) {
  const Placement resolved = resolve_poses(spec, workspace, options.seed, options.solver);
  const SettleResult settled = settle(spec, resolved, workspace, options.settle);
  if (!settled.converged)
    throw Error(ErrorCode::NoConvergence, "settling left overlapping or unsupported parts");
  AssemblyPlan plan = assemble_plan(spec, settled.placement, workspace, arm, options.seed, options.hulls);
  plan.settle_rounds = settled.rounds;
  plan.max_penetration = settled.max_penetration;
  return plan;
}

}  // namespace nestplan
