// Independent reference implementations used to check the library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/kinematics.hpp"

namespace oracle {

using nestplan::Hull;
using nestplan::Mesh;
using nestplan::Vec3;

inline bool poses_match(const nestplan::Pose& a, const nestplan::Pose& b, double tol) {
  return (a.translation() - b.translation()).norm() <= tol && nestplan::rotation_distance(a.rotation(), b.rotation()) <= tol;
}

inline std::shared_ptr<const Mesh> box_mesh(double w, double d, double h, Vec3 center = Vec3::Zero()) {
  auto m = std::make_shared<Mesh>();
  for (int i = 0; i < 8; ++i)
    m->vertices.push_back(center + Vec3((i & 1 ? 0.5 : -0.5) * w, (i & 2 ? 0.5 : -0.5) * d, (i & 4 ? 0.5 : -0.5) * h));
  m->triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                  {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

inline std::shared_ptr<const Mesh> cube_mesh(double size = 1.0) { return box_mesh(size, size, size); }

inline std::vector<Vec3> cube_corners(double size = 1.0, Vec3 center = Vec3::Zero()) {
  return box_mesh(size, size, size, center)->vertices;
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

/// Indices of hull vertices by facet enumeration: a point is a vertex when
/// it belongs to a triple whose plane has every other point on one side.
/// Assumes general position (no four coplanar points on the boundary).
inline std::set<std::size_t> brute_hull_vertices(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  std::vector<char> vertex(n, 0);
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 eij = pts[j] - pts[i];
      for (std::size_t k = j + 1; k < n; ++k) {
        if (vertex[i] && vertex[j] && vertex[k]) continue;
        const Vec3 normal = eij.cross(pts[k] - pts[i]);
        if (normal.norm() < eps) continue;
        const double base = normal.dot(pts[i]);
        bool above = false, below = false;
        for (std::size_t m = 0; m < n && !(above && below); ++m) {
          const double d = normal.dot(pts[m]) - base;
          above |= d > eps;
          below |= d < -eps;
        }
        if (!(above && below)) vertex[i] = vertex[j] = vertex[k] = 1;
      }
    }
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (vertex[i]) out.insert(i);
  return out;
}

/// Separating-axis intersection test for two convex polytopes given by
/// vertices and triangle faces. Closed sets: touching intersects.
inline bool sat_intersect(const Hull& a, const Hull& b, double tol = 1e-9) {
  auto project = [](const Hull& h, const Vec3& axis) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : h.vertices) lo = std::min(lo, axis.dot(v)), hi = std::max(hi, axis.dot(v));
    return std::pair{lo, hi};
  };
  auto separated = [&](Vec3 axis) {
    const double len = axis.norm();
    if (len < 1e-12) return false;
    axis /= len;
    const auto [alo, ahi] = project(a, axis);
    const auto [blo, bhi] = project(b, axis);
    return alo > bhi + tol || blo > ahi + tol;
  };
  auto face_normal = [](const Hull& h, const std::array<int, 3>& f) {
    return Vec3((h.vertices[f[1]] - h.vertices[f[0]]).cross(h.vertices[f[2]] - h.vertices[f[0]]));
  };
  auto edges = [](const Hull& h) {
    std::vector<Vec3> e;
    for (const auto& f : h.faces)
      for (int k = 0; k < 3; ++k) e.push_back(h.vertices[f[(k + 1) % 3]] - h.vertices[f[k]]);
    return e;
  };
  for (const auto& f : a.faces)
    if (separated(face_normal(a, f))) return false;
  for (const auto& f : b.faces)
    if (separated(face_normal(b, f))) return false;
  for (const auto& ea : edges(a))
    for (const auto& eb : edges(b))
      if (separated(ea.cross(eb))) return false;
  return true;
}

/// Distance from p to triangle abc (Ericson's closest-point regions).
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

/// Distance from p to a closed convex polytope: 0 inside, else the nearest
/// boundary triangle.
inline double point_hull_distance(const Vec3& p, const Hull& h) {
  bool inside = true;
  for (const auto& f : h.faces) {
    const Vec3 n = (h.vertices[f[1]] - h.vertices[f[0]]).cross(h.vertices[f[2]] - h.vertices[f[0]]);
    if (n.dot(p - h.vertices[f[0]]) > 0) inside = false;
  }
  if (inside) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : h.faces)
    best = std::min(best, point_triangle_distance(p, h.vertices[f[0]], h.vertices[f[1]], h.vertices[f[2]]));
  return best;
}

/// Rotation matrix from a unit quaternion (w, x, y, z), written out.
inline Eigen::Matrix3d quat_matrix(double w, double x, double y, double z) {
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// Rodrigues rotation about a unit axis.
inline Eigen::Matrix3d rodrigues(const Vec3& axis, double angle) {
  const Vec3 k = axis.normalized();
  Eigen::Matrix3d kx;
  kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * kx + (1 - std::cos(angle)) * kx * kx;
}

inline Eigen::Matrix4d homogeneous(const nestplan::Pose& p) {
  const auto& q = p.rotation();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = quat_matrix(q.w(), q.x(), q.y(), q.z());
  m.topRightCorner<3, 1>() = p.translation();
  return m;
}

/// Forward kinematics as a product of 4x4 homogeneous matrices.
inline Eigen::Matrix4d fk_matrix(const nestplan::ArmModel& arm, const nestplan::JointConfig& q) {
  Eigen::Matrix4d t = homogeneous(arm.base);
  for (std::size_t i = 0; i < arm.joints.size(); ++i) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    r.topLeftCorner<3, 3>() = rodrigues(arm.joints[i].axis, q[static_cast<Eigen::Index>(i)]);
    t = t * homogeneous(arm.joints[i].offset) * r;
  }
  return t * homogeneous(arm.tool);
}

/// Capsule-vs-hull contact by sampling points along the capsule axis.
inline double sampled_capsule_clearance(const Vec3& a, const Vec3& b, double radius, const Hull& h, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    best = std::min(best, point_hull_distance(a + t * (b - a), h));
  }
  return best - radius;
}

inline std::vector<nestplan::JointConfig> densify(const std::vector<nestplan::JointConfig>& path, double step) {
  std::vector<nestplan::JointConfig> out;
  if (path.empty()) return out;
  out.push_back(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double span = (path[i] - path[i - 1]).cwiseAbs().maxCoeff();
    const int n = std::max(1, static_cast<int>(std::ceil(span / step)));
    for (int k = 1; k <= n; ++k) out.push_back(path[i - 1] + (static_cast<double>(k) / n) * (path[i] - path[i - 1]));
  }
  return out;
}

}  // namespace oracle
