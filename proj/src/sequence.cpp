#include "nestplan/sequence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "nestplan/collision.hpp"
#include "nestplan/error.hpp"

namespace nestplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// bit i of req[j] set: group i is a descendant of group j.
std::vector<std::uint64_t> descendant_masks(const std::vector<std::string>& ids, const Hierarchy& parents) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  std::vector<std::uint64_t> req(ids.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string cur = ids[i];
    std::size_t guard = 0;
    while (guard++ <= parents.size()) {
      auto it = parents.find(cur);
      if (it == parents.end() || !it->second) break;
      cur = *it->second;
      if (auto a = index.find(cur); a != index.end()) req[a->second] |= std::uint64_t{1} << i;
    }
  }
  return req;
}

std::vector<std::vector<std::string>> descendant_lists(const std::vector<std::string>& ids, const Hierarchy& parents) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  std::vector<std::vector<std::string>> out(ids.size());
  for (const auto& id : ids) {
    std::string cur = id;
    std::size_t guard = 0;
    while (guard++ <= parents.size()) {
      auto it = parents.find(cur);
      if (it == parents.end() || !it->second) break;
      cur = *it->second;
      if (auto a = index.find(cur); a != index.end()) out[a->second].push_back(id);
    }
  }
  return out;
}

}  // namespace

double tour_length(const std::vector<std::string>& order, const std::map<std::string, Vec3>& centroids,
                   const Vec3& base) {
  double total = 0.0;
  Vec3 at = base;
  for (const auto& g : order) {
    const Vec3& next = centroids.at(g);
    total += (next - at).norm();
    at = next;
  }
  return total;
}

bool respects_hierarchy(const std::vector<std::string>& order, const Hierarchy& parents) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  const auto desc = descendant_lists(order, parents);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const auto& d : desc[i])
      if (pos.at(d) > i) return false;
  return true;
}

std::vector<std::string> repair_hierarchy(std::vector<std::string> order, const Hierarchy& parents) {
  std::vector<std::string> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  const auto desc_sorted = descendant_lists(sorted, parents);
  std::map<std::string, std::vector<std::string>> desc;
  for (std::size_t i = 0; i < sorted.size(); ++i) desc[sorted[i]] = desc_sorted[i];

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < order.size() && !changed; ++i) {
      std::size_t last = i;
      for (const auto& d : desc[order[i]]) {
        const auto p = static_cast<std::size_t>(std::find(order.begin(), order.end(), d) - order.begin());
        last = std::max(last, p);
      }
      if (last > i) {
        const std::string g = order[i];
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
        order.insert(order.begin() + static_cast<std::ptrdiff_t>(last), g);
        changed = true;
      }
    }
  }
  return order;
}

GroupTour order_groups_heuristic(const std::map<std::string, Vec3>& centroids, const Vec3& base,
                                 const Hierarchy& parents) {
  if (centroids.empty()) throw Error(ErrorCode::EmptyInput, "no groups to order");
  std::vector<std::string> ids;
  for (const auto& [id, _] : centroids) ids.push_back(id);

  // Nearest neighbour over raw distances, then put descendants first.
  std::vector<std::string> order;
  std::vector<bool> used(ids.size(), false);
  Vec3 at = base;
  for (std::size_t step = 0; step < ids.size(); ++step) {
    std::size_t best = ids.size();
    double best_d = kInf;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (used[i]) continue;
      const double d = (centroids.at(ids[i]) - at).norm();
      if (d < best_d) best_d = d, best = i;
    }
    used[best] = true;
    order.push_back(ids[best]);
    at = centroids.at(ids[best]);
  }
  order = repair_hierarchy(order, parents);

  // 2-opt restricted to orders that keep the hierarchy rule.
  double length = tour_length(order, centroids, base);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      for (std::size_t k = i + 1; k < order.size(); ++k) {
        std::vector<std::string> cand = order;
        std::reverse(cand.begin() + static_cast<std::ptrdiff_t>(i), cand.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        const double l = tour_length(cand, centroids, base);
        if (l < length - 1e-12 && respects_hierarchy(cand, parents)) {
          order = std::move(cand);
          length = l;
          improved = true;
        }
      }
  }
  return {order, length};
}

GroupTour order_groups(const std::map<std::string, Vec3>& centroids, const Vec3& base, const Hierarchy& parents,
                       std::size_t exact_limit) {
  if (centroids.empty()) throw Error(ErrorCode::EmptyInput, "no groups to order");
  if (centroids.size() > std::min<std::size_t>(exact_limit, 20)) return order_groups_heuristic(centroids, base, parents);

  std::vector<std::string> ids;
  std::vector<Vec3> pts;
  for (const auto& [id, c] : centroids) ids.push_back(id), pts.push_back(c);
  const std::size_t n = ids.size();
  const auto req = descendant_masks(ids, parents);
  const std::size_t full = (std::size_t{1} << n) - 1;

  std::vector<double> dp((full + 1) * n, kInf);
  std::vector<int> from((full + 1) * n, -1);
  for (std::size_t j = 0; j < n; ++j)
    if (req[j] == 0) dp[(std::size_t{1} << j) * n + j] = (pts[j] - base).norm();
  for (std::size_t mask = 1; mask <= full; ++mask)
    for (std::size_t j = 0; j < n; ++j) {
      const double cur = dp[mask * n + j];
      if (cur == kInf) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask & (std::size_t{1} << k) || (req[k] & ~mask) != 0) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double c = cur + (pts[k] - pts[j]).norm();
        if (c < dp[next * n + k]) {
          dp[next * n + k] = c;
          from[next * n + k] = static_cast<int>(j);
        }
      }
    }
  std::size_t end = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (dp[full * n + j] < dp[full * n + end]) end = j;

  GroupTour tour;
  std::size_t mask = full;
  for (int j = static_cast<int>(end); j >= 0;) {
    tour.order.push_back(ids[static_cast<std::size_t>(j)]);
    const int prev = from[mask * n + static_cast<std::size_t>(j)];
    mask &= ~(std::size_t{1} << j);
    j = prev;
  }
  std::reverse(tour.order.begin(), tour.order.end());
  tour.length = tour_length(tour.order, centroids, base);
  return tour;
}

double sequence_cost(const std::vector<std::string>& order, const std::map<std::string, JointConfig>& configs) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += (configs.at(order[i]) - configs.at(order[i - 1])).norm();
  return total;
}

namespace {

bool feasible(const std::vector<std::size_t>& order, const std::vector<std::uint64_t>& req) {
  std::uint64_t seen = 0;
  for (std::size_t i : order) {
    if ((req[i] & ~seen) != 0) return false;
    seen |= std::uint64_t{1} << i;
  }
  return true;
}

}  // namespace

ObjectSequence order_objects(const std::string& group, const std::vector<std::string>& objects,
                             const std::map<std::string, JointConfig>& configs, const Precedence& supports,
                             std::size_t exact_limit) {
  ObjectSequence out;
  out.group = group;
  const std::size_t n = objects.size();
  if (n == 0) return out;
  if (n > 63) throw Error(ErrorCode::InvalidArgument, "too many objects in one group", group);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[objects[i]] = i;
  std::vector<std::uint64_t> req(n, 0);
  for (const auto& [before, after] : supports) {
    auto b = index.find(before), a = index.find(after);
    if (b == index.end() || a == index.end() || b->second == a->second) continue;
    req[a->second] |= std::uint64_t{1} << b->second;
  }
  {  // Kahn's algorithm to reject cycles
    std::uint64_t done = 0;
    for (bool progress = true; progress;) {
      progress = false;
      for (std::size_t i = 0; i < n; ++i)
        if (!(done >> i & 1) && (req[i] & ~done) == 0) done |= std::uint64_t{1} << i, progress = true;
    }
    if (std::popcount(done) != static_cast<int>(n))
      throw Error(ErrorCode::CyclicPrecedence, "support relation in group " + group + " has a cycle", group);
  }

  std::vector<JointConfig> q;
  for (const auto& o : objects) q.push_back(configs.at(o));
  auto cost = [&](std::size_t a, std::size_t b) { return (q[a] - q[b]).norm(); };
  std::vector<std::size_t> order;

  if (n <= std::min<std::size_t>(exact_limit, 16)) {
    const std::size_t full = (std::size_t{1} << n) - 1;
    std::vector<double> dp((full + 1) * n, kInf);
    std::vector<int> from((full + 1) * n, -1);
    for (std::size_t j = 0; j < n; ++j)
      if (req[j] == 0) dp[(std::size_t{1} << j) * n + j] = 0.0;
    for (std::size_t mask = 1; mask <= full; ++mask)
      for (std::size_t j = 0; j < n; ++j) {
        const double cur = dp[mask * n + j];
        if (cur == kInf) continue;
        for (std::size_t k = 0; k < n; ++k) {
          if (mask & (std::size_t{1} << k) || (req[k] & ~mask) != 0) continue;
          const std::size_t next = mask | (std::size_t{1} << k);
          const double c = cur + cost(j, k);
          if (c < dp[next * n + k]) dp[next * n + k] = c, from[next * n + k] = static_cast<int>(j);
        }
      }
    std::size_t end = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (dp[full * n + j] < dp[full * n + end]) end = j;
    std::size_t mask = full;
    for (int j = static_cast<int>(end); j >= 0;) {
      order.push_back(static_cast<std::size_t>(j));
      const int prev = from[mask * n + static_cast<std::size_t>(j)];
      mask &= ~(std::size_t{1} << j);
      j = prev;
    }
    std::reverse(order.begin(), order.end());
  } else {
    std::uint64_t seen = 0;
    std::optional<std::size_t> at;
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t best = n;
      double best_c = kInf;
      for (std::size_t i = 0; i < n; ++i) {
        if (seen >> i & 1 || (req[i] & ~seen) != 0) continue;
        const double c = at ? cost(*at, i) : 0.0;
        if (c < best_c) best_c = c, best = i;
      }
      order.push_back(best);
      seen |= std::uint64_t{1} << best;
      at = best;
    }
    auto total = [&](const std::vector<std::size_t>& o) {
      double t = 0.0;
      for (std::size_t i = 1; i < o.size(); ++i) t += cost(o[i - 1], o[i]);
      return t;
    };
    double current = total(order);
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          std::swap(order[i], order[j]);
          const double c = total(order);
          if (c < current - 1e-12 && feasible(order, req)) {
            current = c;
            improved = true;
          } else {
            std::swap(order[i], order[j]);
          }
        }
    }
  }

  for (std::size_t i : order) out.order.push_back(objects[i]);
  out.cost = sequence_cost(out.order, configs);
  return out;
}

Precedence support_pairs(const std::map<std::string, Hull>& hulls, double tolerance) {
  Precedence out;
  for (const auto& [top_id, top] : hulls)
    for (const auto& [below_id, below] : hulls) {
      if (top_id == below_id) continue;
      if (top.min_z() < below.max_z() - tolerance || top.min_z() > below.max_z() + tolerance) continue;
      if (distance(top, below) <= tolerance) out.emplace_back(below_id, top_id);
    }
  return out;
}

Pose grasp_pose(const Hull& hull) {
  const Vec3 c = hull.centroid();
  const double half = 0.5 * (hull.max_z() - hull.min_z());
  const double mid = 0.5 * (hull.max_z() + hull.min_z());
  return Pose(Vec3(c.x(), c.y(), mid + half + 0.02), Quat(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX())));
}

JointConfig grasp_config(const ArmModel& arm, const Hull& hull, const JointConfig& seed,
                         const std::vector<Hull>& obstacles) {
  IkOptions options;
  if (!obstacles.empty()) options.accept = [&](const JointConfig& q) { return !in_collision(arm, q, obstacles); };
  try {
    return ik(arm, grasp_pose(hull), seed, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSolution) throw;
    throw Error(ErrorCode::IKFailure, "no arm configuration reaches " + hull.owner, hull.owner);
  }
}

ObjectSequence order_within_group(const std::string& group, const std::vector<std::string>& objects,
                                  const std::map<std::string, Hull>& hulls, const ArmModel& arm,
                                  const Precedence& supports, const std::vector<Hull>& obstacles) {
  std::map<std::string, JointConfig> configs;
  for (const auto& o : objects) configs[o] = grasp_config(arm, hulls.at(o), arm.home_config(), obstacles);
  return order_objects(group, objects, configs, supports);
}

}  // namespace nestplan
