#pragma once

#include <optional>
#include <span>

#include "nestplan/hull.hpp"
#include "nestplan/pose.hpp"

namespace nestplan {

/// Separation distance below which two convex sets count as touching.
inline constexpr double kTouchTolerance = 1e-9;

struct Proximity {
  /// Euclidean distance between the two convex hulls; 0 when they overlap.
  double distance = 0.0;
  /// Closest point of (A - B) to the origin; points from B toward A.
  Vec3 separation = Vec3::Zero();
  bool intersecting = false;
};

/// GJK distance between the convex hulls of two point sets.
Proximity gjk_distance(std::span<const Vec3> a, std::span<const Vec3> b);

inline double distance(const Hull& a, const Hull& b) { return gjk_distance(a.vertices, b.vertices).distance; }

/// Closed-set intersection test: touching counts as collision.
bool collide(const Hull& a, const Hull& b);

struct Penetration {
  double depth = 0.0;
  /// Unit vector; translating `b` by depth * direction leaves the hulls touching.
  Vec3 direction = Vec3::UnitX();
};

/// Minimum translation separating b from a. Among equally short answers the
/// direction closest to +x, then +y, then +z wins. Throws NotIntersecting.
Penetration penetration_depth(const Hull& a, const Hull& b);

/// True when the hulls overlap by more than `slack` (penetration depth).
bool overlaps(const Hull& a, const Hull& b, double slack);

/// Downward translation at which `moving` first overlaps the interior of
/// `obstacle`; 0 if they already overlap, nullopt if a fall never meets it.
/// Side-by-side contact does not block.
std::optional<double> drop_contact(const Hull& moving, const Hull& obstacle, double tolerance = 1e-9);

/// Distance from a line segment to a convex hull (0 if they meet).
double segment_distance(const Vec3& p0, const Vec3& p1, const Hull& hull);

}  // namespace nestplan
