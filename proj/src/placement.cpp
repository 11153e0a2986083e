#include "nestplan/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "nestplan/collision.hpp"
#include "nestplan/error.hpp"
#include "nestplan/parallel.hpp"

namespace nestplan {

void Workspace::check() const {
  if (!(reach > 0.0)) throw Error(ErrorCode::InvalidSpec, "workspace reach must be positive");
  if (!(table_max.x() > table_min.x()) || !(table_max.y() > table_min.y()))
    throw Error(ErrorCode::InvalidSpec, "workspace table extent is empty");
  if (!(placeable_max().y() > placeable_min().y()))
    throw Error(ErrorCode::InvalidSpec, "staging strip covers the whole table");
  if (base_clearance < 0.0 || unit_clearance < 0.0 || staging_depth < 0.0)
    throw Error(ErrorCode::InvalidSpec, "workspace clearances must be non-negative");
}

const Pose& Placement::at(const std::string& id) const {
  auto it = poses.find(id);
  if (it == poses.end()) throw Error(ErrorCode::UnknownId, "no placement for " + id, id);
  return it->second;
}

std::vector<RigidUnit> rigid_units(const SpecDocument& spec) {
  std::vector<RigidUnit> units;
  std::map<std::string, std::size_t> unit_of;
  for (const auto& gid : spec.groups_preorder()) {
    const auto& g = spec.groups.at(gid);
    std::size_t u;
    if (!g.parent || g.mode == GroupMode::Relative) {
      u = units.size();
      RigidUnit unit;
      unit.anchor = gid;
      unit.fixed = !g.parent && g.mode == GroupMode::Absolute;
      unit.parent = g.parent;
      units.push_back(std::move(unit));
    } else {
      u = unit_of.at(*g.parent);
    }
    unit_of[gid] = u;
    units[u].groups.push_back(gid);
    for (const auto& c : g.children)
      if (!c.is_group()) units[u].objects.push_back(c.id);
  }
  std::stable_partition(units.begin(), units.end(), [](const RigidUnit& u) { return u.fixed; });
  return units;
}

Placement authored_placement(const SpecDocument& spec) {
  Placement p;
  for (const auto& [id, _] : spec.groups) p.poses[id] = spec.world_pose(id);
  for (const auto& [id, _] : spec.objects) p.poses[id] = spec.world_pose(id);
  return p;
}

std::map<std::string, Hull> object_hulls(const SpecDocument& spec, const Placement& placement) {
  std::map<std::string, Hull> out;
  for (const auto& [id, o] : spec.objects) out.emplace(id, object_hull(*o.mesh, placement.at(id), o.padding, id));
  return out;
}

namespace {

struct Box2 {
  Eigen::Vector2d lo, hi;
};

Box2 xy_box(const Hull& h) {
  Box2 b{Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity()),
         Eigen::Vector2d::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : h.vertices) {
    b.lo = b.lo.cwiseMin(v.head<2>());
    b.hi = b.hi.cwiseMax(v.head<2>());
  }
  return b;
}

bool xy_overlap(const Box2& a, const Box2& b, double margin) {
  return a.lo.x() < b.hi.x() - margin && b.lo.x() < a.hi.x() - margin && a.lo.y() < b.hi.y() - margin &&
         b.lo.y() < a.hi.y() - margin;
}

bool boxes_near(const Hull& a, const Hull& b, double gap) {
  for (int axis = 0; axis < 3; ++axis) {
    double alo = std::numeric_limits<double>::infinity(), ahi = -alo, blo = alo, bhi = -alo;
    for (const auto& v : a.vertices) alo = std::min(alo, v[axis]), ahi = std::max(ahi, v[axis]);
    for (const auto& v : b.vertices) blo = std::min(blo, v[axis]), bhi = std::max(bhi, v[axis]);
    if (alo > bhi + gap || blo > ahi + gap) return false;
  }
  return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

Quat yaw_rotation(double yaw) { return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())); }

struct Candidate {
  double x = 0.0, y = 0.0, yaw = 0.0;
  double z = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

class UnitPlacer {
 public:
  UnitPlacer(const SpecDocument& spec, const Workspace& ws, const SolverOptions& opt, const RigidUnit& unit,
             const Placement& authored, const std::vector<Hull>& placed, Eigen::Vector2d target)
      : ws_(ws), opt_(opt), placed_(placed), target_(target) {
    const Pose anchor = authored.at(unit.anchor);
    base_rotation_ = anchor.rotation();
    const Pose frame(Vec3::Zero(), base_rotation_);
    for (const auto& oid : unit.objects) {
      const auto& o = spec.objects.at(oid);
      const Pose local = anchor.inverse() * authored.at(oid);
      shapes_.push_back(object_hull(*o.mesh, frame * local, o.padding, oid));
    }
    for (const auto& h : placed_) placed_boxes_.push_back(xy_box(h));
  }

  std::vector<Hull> hulls_at(const Candidate& c) const {
    std::vector<Hull> out;
    out.reserve(shapes_.size());
    const Pose move(Vec3(c.x, c.y, c.z), yaw_rotation(c.yaw));
    for (const auto& s : shapes_) out.push_back(s.transformed(move));
    return out;
  }

  Pose anchor_pose(const Candidate& c) const {
    return Pose(Vec3(c.x, c.y, c.z), yaw_rotation(c.yaw) * base_rotation_);
  }

  Candidate evaluate(double x, double y, double yaw) const {
    Candidate c{x, y, yaw};
    std::vector<Hull> hulls = hulls_at(c);
    double low = std::numeric_limits<double>::infinity();
    for (const auto& h : hulls) low = std::min(low, h.min_z());
    double lift = ws_.table_height - low;

    // Start above anything underneath, then fall onto the first support.
    double top = ws_.table_height;
    for (const auto& h : hulls) {
      const Box2 b = xy_box(h);
      for (std::size_t j = 0; j < placed_.size(); ++j)
        if (xy_overlap(b, placed_boxes_[j], 0.0)) top = std::max(top, placed_[j].max_z());
    }
    if (top > ws_.table_height) lift += top - ws_.table_height + 1e-3;
    for (auto& h : hulls) h = h.translated(Vec3(0, 0, lift));
    std::vector<const Hull*> moving, obstacles;
    for (const auto& h : hulls) moving.push_back(&h);
    for (const auto& h : placed_) obstacles.push_back(&h);
    const double fall = drop_distance(moving, obstacles, ws_.table_height);
    c.z = lift - fall;
    for (auto& h : hulls) h = h.translated(Vec3(0, 0, -fall));

    double collision = 0.0;
    for (const auto& h : hulls)
      for (const auto& p : placed_) {
        if (!boxes_near(h, p, ws_.unit_clearance)) continue;
        const double d = distance(h, p);
        if (d < ws_.unit_clearance) collision += ws_.unit_clearance - d;
      }

    double reach = 0.0;
    double support = 0.0;
    const auto lo = ws_.placeable_min(), hi = ws_.placeable_max();
    for (const auto& h : hulls) {
      const Vec3 center = h.centroid();
      reach += std::pow(std::max(0.0, (center - ws_.arm_base).norm() - ws_.reach), 2);
      reach += std::pow(std::max(0.0, ws_.base_clearance - (center - ws_.arm_base).head<2>().norm()), 2);
      double overhang = 0.0;
      for (const auto& v : h.vertices) {
        overhang = std::max({overhang, lo.x() - v.x(), v.x() - hi.x(), lo.y() - v.y(), v.y() - hi.y()});
        // keep the keep-out disc around the base free of geometry, not just centroids
        overhang = std::max(overhang, ws_.base_clearance - (v - ws_.arm_base).head<2>().norm());
      }
      support += overhang * overhang;
    }
    const double gap = drop_distance(moving, obstacles, ws_.table_height);
    support += gap * gap;
    const double parent = (Eigen::Vector2d(x, y) - target_).squaredNorm();

    c.cost = opt_.weight_collision * collision + opt_.weight_reach * reach + opt_.weight_support * support +
             opt_.weight_parent * parent;
    c.feasible = collision <= opt_.feasibility_tolerance && reach <= opt_.feasibility_tolerance &&
                 support <= opt_.feasibility_tolerance;
    return c;
  }

 private:
  const Workspace& ws_;
  const SolverOptions& opt_;
  const std::vector<Hull>& placed_;
  std::vector<Box2> placed_boxes_;
  Eigen::Vector2d target_;
  Quat base_rotation_;
  std::vector<Hull> shapes_;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.cost < b.cost;
}

}  // namespace

double drop_distance(const std::vector<const Hull*>& moving, const std::vector<const Hull*>& obstacles,
                     double table_height) {
  double fall = std::numeric_limits<double>::infinity();
  for (const Hull* m : moving) fall = std::min(fall, m->min_z() - table_height);
  for (const Hull* m : moving) {
    const Box2 mb = xy_box(*m);
    const double top = m->max_z();
    for (const Hull* o : obstacles) {
      if (o->min_z() >= top || !xy_overlap(mb, xy_box(*o), 1e-9)) continue;
      if (auto hit = drop_contact(*m, *o)) fall = std::min(fall, *hit);
    }
  }
  return std::max(fall, 0.0);
}

double max_penetration(const std::map<std::string, Hull>& hulls, double table_height) {
  double worst = 0.0;
  for (auto a = hulls.begin(); a != hulls.end(); ++a) {
    worst = std::max(worst, table_height - a->second.min_z());
    for (auto b = std::next(a); b != hulls.end(); ++b) {
      if (!boxes_near(a->second, b->second, 0.0) || !collide(a->second, b->second)) continue;
      worst = std::max(worst, penetration_depth(a->second, b->second).depth);
    }
  }
  return worst;
}

Placement resolve_poses(const SpecDocument& spec, const Workspace& workspace, std::uint64_t seed,
                        const SolverOptions& options) {
  spec.check();
  workspace.check();
  const Placement authored = authored_placement(spec);
  Placement out;
  std::vector<Hull> placed;

  for (const auto& unit : rigid_units(spec)) {
    if (unit.fixed) {
      for (const auto& g : unit.groups) out.poses[g] = authored.at(g);
      for (const auto& o : unit.objects) {
        out.poses[o] = authored.at(o);
        const auto& so = spec.objects.at(o);
        placed.push_back(object_hull(*so.mesh, out.poses[o], so.padding, o));
      }
      continue;
    }

    const Eigen::Vector2d target =
        unit.parent ? Eigen::Vector2d(out.at(*unit.parent).translation().head<2>()) : workspace.focus_point();
    if (unit.objects.empty()) {
      // Only subgroups: a frame with nothing to collide, placed at its target.
      const Pose anchor_world(Vec3(target.x(), target.y(), workspace.table_height), authored.at(unit.anchor).rotation());
      const Pose anchor_authored = authored.at(unit.anchor);
      for (const auto& g : unit.groups) out.poses[g] = anchor_world * (anchor_authored.inverse() * authored.at(g));
      continue;
    }
    const UnitPlacer placer(spec, workspace, options, unit, authored, placed, target);

    const auto lo = workspace.placeable_min(), hi = workspace.placeable_max();
    const std::uint64_t stream = splitmix64(seed ^ splitmix64(hash_string(unit.anchor)));
    const double shift[3] = {unit_interval(splitmix64(stream + 1)), unit_interval(splitmix64(stream + 2)),
                             unit_interval(splitmix64(stream + 3))};
    auto sample = [&](std::uint64_t k) {
      auto wrap = [](double v) { return v - std::floor(v); };
      return std::array<double, 3>{lo.x() + wrap(radical_inverse(k, 2) + shift[0]) * (hi.x() - lo.x()),
                                   lo.y() + wrap(radical_inverse(k, 3) + shift[1]) * (hi.y() - lo.y()),
                                   wrap(radical_inverse(k, 5) + shift[2]) * 2.0 * std::numbers::pi};
    };

    std::optional<Candidate> accepted;
    for (int restart = 0; restart < options.restarts && !accepted; ++restart) {
      const auto n = static_cast<std::size_t>(options.samples);
      std::vector<Candidate> scored(n);
      parallel_for(
          n,
          [&](std::size_t i) {
            const auto s = sample(1 + static_cast<std::uint64_t>(restart) * n + i);
            scored[i] = placer.evaluate(s[0], s[1], s[2]);
          },
          4);
      std::size_t arg = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (better(scored[i], scored[arg])) arg = i;

      // Coordinate descent on (x, y, yaw) with step halving.
      Candidate cur = scored[arg];
      double step[3] = {0.04, 0.04, 0.25};
      for (int it = 0; it < options.descent_iterations; ++it) {
        bool moved = false;
        for (int axis = 0; axis < 3; ++axis)
          for (double sign : {1.0, -1.0}) {
            double v[3] = {cur.x, cur.y, cur.yaw};
            v[axis] += sign * step[axis];
            v[0] = std::clamp(v[0], lo.x(), hi.x());
            v[1] = std::clamp(v[1], lo.y(), hi.y());
            const Candidate next = placer.evaluate(v[0], v[1], v[2]);
            if (better(next, cur) && next.cost < cur.cost - 1e-15) {
              cur = next;
              moved = true;
            }
          }
        if (!moved) {
          for (double& s : step) s *= 0.5;
          if (step[0] < 1e-4) break;
        }
      }
      if (cur.feasible) accepted = cur;
    }
    if (!accepted) throw Error(ErrorCode::Infeasible, "no feasible pose for group " + unit.anchor, unit.anchor);

    const Pose anchor_world = placer.anchor_pose(*accepted);
    const Pose anchor_authored = authored.at(unit.anchor);
    for (const auto& g : unit.groups) out.poses[g] = anchor_world * (anchor_authored.inverse() * authored.at(g));
    for (const auto& o : unit.objects) {
      out.poses[o] = anchor_world * (anchor_authored.inverse() * authored.at(o));
      const auto& so = spec.objects.at(o);
      placed.push_back(object_hull(*so.mesh, out.poses[o], so.padding, o));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Settling

namespace {

/// Objects under an absolute group move with the outermost group of their
/// absolute chain; objects of relative groups move on their own.
std::string settle_key(const SpecDocument& spec, const std::string& object) {
  std::string g = spec.objects.at(object).parent;
  if (spec.groups.at(g).mode != GroupMode::Absolute) return "object:" + object;
  while (true) {
    const auto& node = spec.groups.at(g);
    if (!node.parent || spec.groups.at(*node.parent).mode != GroupMode::Absolute) break;
    g = *node.parent;
  }
  return "group:" + g;
}

}  // namespace

SettleResult settle(const SpecDocument& spec, const Placement& placement, const Workspace& workspace,
                    const SettleOptions& options) {
  SettleResult result;
  result.placement = placement;
  Placement& cur = result.placement;

  std::map<std::string, std::vector<std::string>> units;  // key -> objects
  std::map<std::string, std::vector<std::string>> unit_groups;
  std::map<std::string, std::string> key_of;
  for (const auto& [oid, _] : spec.objects) {
    const std::string key = settle_key(spec, oid);
    key_of[oid] = key;
    units[key].push_back(oid);
  }
  for (const auto& [key, _] : units) {
    if (!key.starts_with("group:")) continue;
    std::vector<std::string> stack{key.substr(6)};
    while (!stack.empty()) {
      const std::string g = stack.back();
      stack.pop_back();
      unit_groups[key].push_back(g);
      for (const auto& c : spec.groups.at(g).children)
        if (c.is_group() && spec.groups.at(c.id).mode == GroupMode::Absolute) stack.push_back(c.id);
    }
  }

  // Max and total penetration; resting contact within the slack counts as none.
  struct Depth {
    double max = 0.0, total = 0.0;
  };
  auto measure = [&](const std::map<std::string, Hull>& hs) {
    Depth d;
    auto add = [&](double v) {
      if (v <= options.contact_slack) return;
      d.max = std::max(d.max, v);
      d.total += v;
    };
    for (auto a = hs.begin(); a != hs.end(); ++a) {
      add(workspace.table_height - a->second.min_z());
      for (auto b = std::next(a); b != hs.end(); ++b)
        if (boxes_near(a->second, b->second, 0.0) && collide(a->second, b->second))
          add(penetration_depth(a->second, b->second).depth);
    }
    return d;
  };

  std::map<std::string, Hull> hulls = object_hulls(spec, cur);
  Depth current = measure(hulls);
  result.history.push_back(current.max);

  auto move_unit = [&](const std::string& key, const Vec3& d, std::map<std::string, Hull>& hs, Placement* pl) {
    for (const auto& oid : units.at(key)) {
      hs.at(oid) = hs.at(oid).translated(d);
      if (pl) {
        const Pose& p = pl->poses.at(oid);
        pl->poses[oid] = Pose(p.translation() + d, p.rotation());
      }
    }
    if (pl && unit_groups.contains(key))
      for (const auto& g : unit_groups.at(key)) {
        const Pose& p = pl->poses.at(g);
        pl->poses[g] = Pose(p.translation() + d, p.rotation());
      }
  };

  auto unit_drop = [&](const std::string& key) {
    std::vector<const Hull*> moving, obstacles;
    for (const auto& [oid, h] : hulls) (key_of.at(oid) == key ? moving : obstacles).push_back(&h);
    return drop_distance(moving, obstacles, workspace.table_height);
  };

  // Applies the largest scale of `moves` (1, 1/2, ...) that does not raise
  // the max penetration. Pushes must also make progress on the max or the
  // total, so they cannot cycle.
  auto try_moves = [&](const std::map<std::string, Vec3>& moves, bool need_progress) {
    for (double scale = 1.0; scale > 1e-3; scale *= 0.5) {
      auto trial = hulls;
      for (const auto& [key, d] : moves) move_unit(key, scale * d, trial, nullptr);
      const Depth after = measure(trial);
      const bool progress = after.max < current.max || after.total < current.total;
      if (after.max <= current.max && (progress || !need_progress)) {
        for (const auto& [key, d] : moves) move_unit(key, scale * d, hulls, &cur);
        current = after;
        return true;
      }
    }
    return false;
  };

  struct Contact {
    std::string a, b;
    Penetration pen;
  };

  for (int round = 0; round < options.max_rounds; ++round) {
    bool changed = false;

    // (1) push overlapping units apart by half the penetration vector each
    std::map<std::string, Vec3> push;
    std::vector<Contact> contacts;
    for (auto a = hulls.begin(); a != hulls.end(); ++a) {
      const std::string& ka = key_of.at(a->first);
      const double below = workspace.table_height - a->second.min_z();
      if (below > options.contact_slack) {
        auto& p = push.try_emplace(ka, Vec3::Zero()).first->second;
        p.z() = std::max(p.z(), below);
      }
      for (auto b = std::next(a); b != hulls.end(); ++b) {
        const std::string& kb = key_of.at(b->first);
        if (ka == kb || !boxes_near(a->second, b->second, 0.0) || !collide(a->second, b->second)) continue;
        const Penetration pen = penetration_depth(a->second, b->second);
        if (pen.depth <= options.contact_slack) continue;
        push.try_emplace(ka, Vec3::Zero()).first->second -= 0.5 * pen.depth * pen.direction;
        push.try_emplace(kb, Vec3::Zero()).first->second += 0.5 * pen.depth * pen.direction;
        contacts.push_back({ka, kb, pen});
      }
    }
    if (!push.empty() && try_moves(push, true)) {
      changed = true;
    } else {
      // Joint push rejected: resolve pairs one at a time, deepest first,
      // splitting the correction or moving either unit alone.
      std::stable_sort(contacts.begin(), contacts.end(),
                       [](const Contact& x, const Contact& y) { return x.pen.depth > y.pen.depth; });
      for (const auto& c : contacts) {
        const Vec3 d = c.pen.depth * c.pen.direction;
        for (const auto& moves : {std::map<std::string, Vec3>{{c.a, -0.5 * d}, {c.b, 0.5 * d}},
                                  std::map<std::string, Vec3>{{c.b, d}}, std::map<std::string, Vec3>{{c.a, -d}}})
          if (try_moves(moves, true)) {
            changed = true;
            break;
          }
      }
    }

    // (2) let unsupported units fall, lowest first
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [key, objs] : units) {
      double low = std::numeric_limits<double>::infinity();
      for (const auto& oid : objs) low = std::min(low, hulls.at(oid).min_z());
      order.emplace_back(low, key);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [_, key] : order) {
      const double fall = unit_drop(key);
      if (fall > options.support_tolerance && try_moves({{key, Vec3(0, 0, -fall)}}, false)) changed = true;
    }

    result.history.push_back(current.max);
    result.rounds = round + 1;
    if (!changed && current.max < options.tolerance) break;
  }

  result.max_penetration = current.max;
  for (const auto& [key, objs] : units)
    if (unit_drop(key) > options.support_tolerance) result.unsupported.insert(result.unsupported.end(), objs.begin(), objs.end());
  result.converged = current.max < options.tolerance && result.unsupported.empty();
  return result;
}

}  // namespace nestplan
