#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/pose.hpp"

namespace nestplan {

/// Convex polytope with triangulated, outward-oriented faces.
struct Hull {
  std::string owner;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> normals;    // unit, outward, one per face
  std::vector<double> offsets;  // normals[f].dot(x) == offsets[f] on face f
  /// Index of each vertex in the point array the hull was built from.
  std::vector<std::size_t> source;

  /// Mean of the vertices; strictly interior for a non-degenerate hull.
  Vec3 centroid() const;
  /// Largest signed plane distance of p (negative when strictly inside).
  double max_plane_distance(const Vec3& p) const;
  Hull transformed(const Pose& pose) const;
  Hull translated(const Vec3& offset) const;
  double min_z() const;
  double max_z() const;
};

/// Integer cell coordinate in a uniform grid.
using CellKey = std::array<std::int32_t, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept;
};

/// Single-pass spatial hash over a point array. Each occupied cell keeps its
/// six axis-extreme points (+x, -x, +y, -y, +z, -z) and its member indices.
struct HashGrid {
  struct Cell {
    CellKey key{};
    std::array<std::size_t, 6> extremes{};
    std::vector<std::size_t> members;
  };

  double cell_size = 0.0;
  std::vector<Cell> cells;  // in order of first occupation
  std::unordered_map<CellKey, std::size_t, CellKeyHash> index;
  /// Number of point visits made while building; equals the input size.
  std::size_t touches = 0;

  CellKey key_of(const Vec3& p) const;
};

struct Reduction {
  HashGrid grid;
  std::vector<Vec3> representatives;
  std::vector<std::size_t> representative_indices;
};

/// Axis-octahedron dilation: each vertex v becomes {v, v +/- padding * e_i}.
/// Throws NegativePadding.
std::vector<Vec3> pad_points(std::span<const Vec3> vertices, double padding);

/// Throws EmptyInput or NonPositiveCell.
Reduction reduce(std::span<const Vec3> points, double cell_size);

/// Bounding-box diagonal / 64, or 1 for a single point.
double default_cell_size(std::span<const Vec3> points);

struct QuickhullOptions {
  /// Bucket outside sets by grid cell and prune cells by their bound
  /// during the apex search. Off gives the textbook linear scan.
  bool grid_apex = true;
  /// Run apex searches and point reassignment on the worker pool.
  bool parallel = true;
  /// Apex-search grid resolution; 0 picks one from the point count.
  double cell_size = 0.0;
};

/// Exact convex hull. Throws DegenerateInput for fewer than four points or a
/// coplanar set. Output does not depend on the worker count.
Hull quickhull(std::span<const Vec3> points, const QuickhullOptions& options = {});

/// Closed containment: p on or behind every face plane, within `tolerance`.
bool contains(const Hull& hull, const Vec3& p, double tolerance = 1e-9);

/// World-frame padded hull of a mesh placed at `pose`.
Hull object_hull(const Mesh& mesh, const Pose& pose, double padding, std::string owner = {});

struct GroupHullOptions {
  /// Outward inflation of child hulls; negative means 0.5 x max padding
  /// among the group's objects.
  double nest_margin = -1.0;
  /// Inputs larger than this are reduced on a hash grid before the hull.
  std::size_t reduce_above = 20000;
  /// Grid cell for that reduction; 0 means default_cell_size.
  double cell_size = 0.0;
};

/// Hull over the padded member objects of `group` plus the inflated hulls
/// of its child groups. Throws UnknownId.
Hull group_hull(const ConstraintTree& tree, const std::string& group, const GroupHullOptions& options = {});

/// group_hull for every group, sharing child results.
std::map<std::string, Hull> all_group_hulls(const ConstraintTree& tree, const GroupHullOptions& options = {});

/// Root hulls, plus the children of every hull the cursor is inside,
/// applied down the containment chain.
std::set<std::string> visible_hulls(const ConstraintTree& tree, const Vec3& cursor,
                                    const std::map<std::string, Hull>& hulls);
std::set<std::string> visible_hulls(const ConstraintTree& tree, const Vec3& cursor);

}  // namespace nestplan
