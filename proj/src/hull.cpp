#include "nestplan/hull.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "nestplan/error.hpp"
#include "nestplan/parallel.hpp"

namespace nestplan {

// ---------------------------------------------------------------------------
// Hull helpers

Vec3 Hull::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return vertices.empty() ? c : Vec3(c / static_cast<double>(vertices.size()));
}

double Hull::max_plane_distance(const Vec3& p) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < faces.size(); ++f) best = std::max(best, normals[f].dot(p) - offsets[f]);
  return best;
}

Hull Hull::transformed(const Pose& pose) const {
  Hull out = *this;
  for (auto& v : out.vertices) v = pose.apply(v);
  for (std::size_t f = 0; f < out.faces.size(); ++f) {
    out.normals[f] = pose.rotate(normals[f]);
    out.offsets[f] = offsets[f] + out.normals[f].dot(pose.translation());
  }
  return out;
}

Hull Hull::translated(const Vec3& offset) const {
  Hull out = *this;
  for (auto& v : out.vertices) v += offset;
  for (std::size_t f = 0; f < out.faces.size(); ++f) out.offsets[f] += out.normals[f].dot(offset);
  return out;
}

double Hull::min_z() const {
  double z = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) z = std::min(z, v.z());
  return z;
}

double Hull::max_z() const {
  double z = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) z = std::max(z, v.z());
  return z;
}

bool contains(const Hull& hull, const Vec3& p, double tolerance) {
  for (std::size_t f = 0; f < hull.faces.size(); ++f)
    if (hull.normals[f].dot(p) - hull.offsets[f] > tolerance) return false;
  return !hull.faces.empty();
}

// ---------------------------------------------------------------------------
// Padding and spatial-hash reduction

std::vector<Vec3> pad_points(std::span<const Vec3> vertices, double padding) {
  if (padding < 0.0) throw Error(ErrorCode::NegativePadding, "padding must be non-negative");
  std::vector<Vec3> out;
  if (padding == 0.0) {
    out.assign(vertices.begin(), vertices.end());
    return out;
  }
  out.reserve(vertices.size() * 7);
  for (const auto& v : vertices) {
    out.push_back(v);
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 step = Vec3::Zero();
      step[axis] = padding;
      out.push_back(v + step);
      out.push_back(v - step);
    }
  }
  return out;
}

std::size_t CellKeyHash::operator()(const CellKey& k) const noexcept {
  const auto x = static_cast<std::uint64_t>(static_cast<std::uint32_t>(k[0]));
  const auto y = static_cast<std::uint64_t>(static_cast<std::uint32_t>(k[1]));
  const auto z = static_cast<std::uint64_t>(static_cast<std::uint32_t>(k[2]));
  std::uint64_t h = x * 0x9E3779B97F4A7C15ull;
  h ^= y * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
  h ^= z * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

CellKey HashGrid::key_of(const Vec3& p) const {
  return {static_cast<std::int32_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int32_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int32_t>(std::floor(p.z() / cell_size))};
}

Reduction reduce(std::span<const Vec3> points, double cell_size) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "cannot reduce an empty point set");
  if (!(cell_size > 0.0)) throw Error(ErrorCode::NonPositiveCell, "cell size must be positive");

  Reduction r;
  HashGrid& grid = r.grid;
  grid.cell_size = cell_size;
  grid.index.reserve(points.size() / 4 + 16);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    ++grid.touches;
    const CellKey key = grid.key_of(p);
    auto [it, inserted] = grid.index.try_emplace(key, grid.cells.size());
    if (inserted) {
      HashGrid::Cell cell;
      cell.key = key;
      cell.extremes.fill(i);
      cell.members.push_back(i);
      grid.cells.push_back(std::move(cell));
      continue;
    }
    auto& cell = grid.cells[it->second];
    cell.members.push_back(i);
    for (int axis = 0; axis < 3; ++axis) {
      if (p[axis] > points[cell.extremes[2 * axis]][axis]) cell.extremes[2 * axis] = i;
      if (p[axis] < points[cell.extremes[2 * axis + 1]][axis]) cell.extremes[2 * axis + 1] = i;
    }
  }

  for (const auto& cell : grid.cells) {
    std::array<std::size_t, 6> ext = cell.extremes;
    std::sort(ext.begin(), ext.end());
    const auto end = std::unique(ext.begin(), ext.end());
    for (auto it = ext.begin(); it != end; ++it) {
      r.representative_indices.push_back(*it);
      r.representatives.push_back(points[*it]);
    }
  }
  return r;
}

double default_cell_size(std::span<const Vec3> points) {
  if (points.empty()) return 1.0;
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  return diag > 0.0 ? diag / 64.0 : 1.0;
}

// ---------------------------------------------------------------------------
// Quickhull

namespace {

struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};  // neighbor across edge (v[k], v[k+1])
  Vec3 n = Vec3::Zero();
  double d = 0.0;
  std::vector<std::uint32_t> outside;
  bool alive = true;
  std::uint32_t visible_stamp = 0;
};

class QuickhullBuilder {
 public:
  QuickhullBuilder(std::span<const Vec3> points, const QuickhullOptions& options)
      : pts_(points), opt_(options) {}

  Hull run() {
    if (pts_.size() < 4) throw Error(ErrorCode::DegenerateInput, "quickhull needs at least 4 points");
    compute_tolerance();
    if (opt_.grid_apex) build_grid();
    build_simplex();
    assign_initial();
    expand();
    return collect();
  }

 private:
  double dist(const Face& f, std::size_t i) const { return f.n.dot(pts_[i]) - f.d; }

  void set_plane(Face& f) const {
    const Vec3& a = pts_[f.v[0]];
    const Vec3& b = pts_[f.v[1]];
    const Vec3& c = pts_[f.v[2]];
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len > 0.0) n /= len;
    f.n = n;
    f.d = n.dot((a + b + c) / 3.0);
  }

  void compute_tolerance() {
    Vec3 hi = Vec3::Zero();
    lo_ = pts_[0];
    hi_ = pts_[0];
    for (const auto& p : pts_) {
      hi = hi.cwiseMax(p.cwiseAbs());
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    // Same flavor as qhull's DISTround: a few ulps of the coordinate scale.
    eps_ = 1024.0 * std::numeric_limits<double>::epsilon() * (hi.x() + hi.y() + hi.z());
    if (eps_ == 0.0) eps_ = std::numeric_limits<double>::min();
  }

  // Apex-search grid: each point gets a cell, cells get tight bounds, and a
  // rank orders points cell by cell so outside sets come out as cell runs.
  void build_grid() {
    const std::size_t n = pts_.size();
    const double extent = (hi_ - lo_).maxCoeff();
    per_axis_ = static_cast<int>(std::clamp(std::cbrt(static_cast<double>(n) / 8.0), 1.0, 64.0));
    cell_ = opt_.cell_size > 0.0 ? opt_.cell_size : (extent > 0.0 ? extent / per_axis_ : 1.0);
    if (opt_.cell_size > 0.0 && extent > 0.0)
      per_axis_ = static_cast<int>(std::clamp(std::ceil(extent / cell_), 1.0, 256.0));
    const std::size_t cells = static_cast<std::size_t>(per_axis_) * per_axis_ * per_axis_;

    cell_of_.resize(n);
    std::vector<std::uint32_t> count(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::array<int, 3> k{};
      for (int a = 0; a < 3; ++a)
        k[a] = std::clamp(static_cast<int>((pts_[i][a] - lo_[a]) / cell_), 0, per_axis_ - 1);
      const auto id = static_cast<std::uint32_t>((k[0] * per_axis_ + k[1]) * per_axis_ + k[2]);
      cell_of_[i] = id;
      ++count[id + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    rank_.resize(n);
    std::vector<std::uint32_t> cursor(count.begin(), count.end() - 1);
    for (std::size_t i = 0; i < n; ++i) rank_[i] = cursor[cell_of_[i]]++;

    cell_lo_.assign(cells, Vec3::Constant(std::numeric_limits<double>::infinity()));
    cell_hi_.assign(cells, Vec3::Constant(-std::numeric_limits<double>::infinity()));
    for (std::size_t i = 0; i < n; ++i) {
      cell_lo_[cell_of_[i]] = cell_lo_[cell_of_[i]].cwiseMin(pts_[i]);
      cell_hi_[cell_of_[i]] = cell_hi_[cell_of_[i]].cwiseMax(pts_[i]);
    }
  }

  void build_simplex() {
    const std::size_t n = pts_.size();
    std::array<std::size_t, 6> ext{};
    for (int a = 0; a < 3; ++a) {
      std::size_t imax = 0, imin = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (pts_[i][a] > pts_[imax][a]) imax = i;
        if (pts_[i][a] < pts_[imin][a]) imin = i;
      }
      ext[2 * a] = imax;
      ext[2 * a + 1] = imin;
    }
    std::size_t i0 = ext[0], i1 = ext[1];
    double best = -1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        const double d = (pts_[ext[a]] - pts_[ext[b]]).squaredNorm();
        if (d > best) best = d, i0 = std::min(ext[a], ext[b]), i1 = std::max(ext[a], ext[b]);
      }
    if (std::sqrt(best) <= eps_) throw Error(ErrorCode::DegenerateInput, "all points coincide");

    const Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
    std::size_t i2 = 0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (pts_[i] - pts_[i0]).cross(dir).squaredNorm();
      if (d > best) best = d, i2 = i;
    }
    if (std::sqrt(best) <= eps_) throw Error(ErrorCode::DegenerateInput, "points are collinear");

    const Vec3 normal = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    std::size_t i3 = 0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(normal.dot(pts_[i] - pts_[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "points are coplanar");

    const std::array<int, 4> s{static_cast<int>(i0), static_cast<int>(i1), static_cast<int>(i2),
                               static_cast<int>(i3)};
    simplex_ = s;
    const Vec3 inner = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) / 4.0;
    const std::array<std::array<int, 3>, 4> tris{{{s[0], s[1], s[2]}, {s[0], s[3], s[1]}, {s[1], s[3], s[2]},
                                                  {s[2], s[3], s[0]}}};
    for (const auto& t : tris) {
      Face f;
      f.v = t;
      set_plane(f);
      if (f.n.dot(inner) - f.d > 0.0) {
        std::swap(f.v[1], f.v[2]);
        set_plane(f);
      }
      faces_.push_back(std::move(f));
    }
    for (std::size_t f = 0; f < 4; ++f)
      for (int k = 0; k < 3; ++k) {
        const int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
        for (std::size_t g = 0; g < 4; ++g) {
          if (g == f) continue;
          for (int j = 0; j < 3; ++j)
            if (faces_[g].v[j] == b && faces_[g].v[(j + 1) % 3] == a) faces_[f].nb[k] = static_cast<int>(g);
        }
      }
  }

  // Points are visited in grid-rank order (or index order without a grid) so
  // every outside list is sorted by that order.
  std::vector<std::uint32_t> visit_order(std::vector<std::uint32_t> ids) const {
    if (opt_.grid_apex)
      std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) { return rank_[a] < rank_[b]; });
    else
      std::sort(ids.begin(), ids.end());
    return ids;
  }

  /// For each point, the first face in `candidates` it lies outside of, or -1.
  void distribute(const std::vector<std::uint32_t>& ids, const std::vector<int>& candidates) {
    std::vector<int> target(ids.size(), -1);
    auto classify = [&](std::size_t j) {
      for (int f : candidates)
        if (dist(faces_[f], ids[j]) > eps_) {
          target[j] = f;
          return;
        }
    };
    if (opt_.parallel)
      parallel_for(ids.size(), classify, 4096);
    else
      for (std::size_t j = 0; j < ids.size(); ++j) classify(j);
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (target[j] >= 0) faces_[target[j]].outside.push_back(ids[j]);
  }

  void assign_initial() {
    std::vector<std::uint32_t> ids;
    ids.reserve(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i)
      if (std::find(simplex_.begin(), simplex_.end(), static_cast<int>(i)) == simplex_.end())
        ids.push_back(static_cast<std::uint32_t>(i));
    distribute(visit_order(std::move(ids)), {0, 1, 2, 3});
  }

  /// Farthest outside point of face f; ties go to the lowest point index.
  std::uint32_t find_apex(const Face& f) const {
    const auto& out = f.outside;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = out.front();
    auto consider = [&](std::uint32_t i) {
      const double d = dist(f, i);
      if (d > best || (d == best && i < arg)) best = d, arg = i;
    };
    if (!opt_.grid_apex) {
      for (auto i : out) consider(i);
      return arg;
    }
    // Cells are scanned best-bound first; a cell whose bound cannot beat the
    // current best is skipped together with every later one.
    struct Run {
      double bound;
      std::uint32_t begin, end;
    };
    std::vector<Run> runs;
    const Vec3 abs_n = f.n.cwiseAbs();
    for (std::uint32_t b = 0; b < out.size();) {
      std::uint32_t e = b + 1;
      const auto cell = cell_of_[out[b]];
      while (e < out.size() && cell_of_[out[e]] == cell) ++e;
      const Vec3 center = 0.5 * (cell_lo_[cell] + cell_hi_[cell]);
      const Vec3 half = 0.5 * (cell_hi_[cell] - cell_lo_[cell]);
      runs.push_back({f.n.dot(center) + abs_n.dot(half) - f.d, b, e});
      b = e;
    }
    std::stable_sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.bound > b.bound; });
    for (const auto& run : runs) {
      if (run.bound + eps_ < best) break;
      for (std::uint32_t j = run.begin; j < run.end; ++j) consider(out[j]);
    }
    return arg;
  }

  void add_point(int face, std::uint32_t apex) {
    ++stamp_;
    std::vector<int> visible{face};
    std::vector<std::pair<int, int>> horizon;  // (visible face, edge index)
    faces_[face].visible_stamp = stamp_;
    for (std::size_t s = 0; s < visible.size(); ++s) {
      const int g = visible[s];
      for (int k = 0; k < 3; ++k) {
        const int h = faces_[g].nb[k];
        if (faces_[h].visible_stamp == stamp_) continue;
        if (dist(faces_[h], apex) > eps_) {
          faces_[h].visible_stamp = stamp_;
          visible.push_back(h);
        } else {
          horizon.emplace_back(g, k);
        }
      }
    }

    const int first_new = static_cast<int>(faces_.size());
    std::unordered_map<int, int> by_start, by_end;
    by_start.reserve(horizon.size() * 2);
    by_end.reserve(horizon.size() * 2);
    for (const auto& [g, k] : horizon) {
      const int a = faces_[g].v[k];
      const int b = faces_[g].v[(k + 1) % 3];
      const int h = faces_[g].nb[k];
      Face nf;
      nf.v = {a, b, static_cast<int>(apex)};
      nf.nb[0] = h;
      set_plane(nf);
      if (nf.n.squaredNorm() == 0.0) {
        nf.n = faces_[g].n;
        nf.d = nf.n.dot(pts_[a]);
      }
      const int id = static_cast<int>(faces_.size());
      for (int j = 0; j < 3; ++j)
        if (faces_[h].v[j] == b && faces_[h].v[(j + 1) % 3] == a) faces_[h].nb[j] = id;
      by_start[a] = id;
      by_end[b] = id;
      faces_.push_back(std::move(nf));
    }
    for (int id = first_new; id < static_cast<int>(faces_.size()); ++id) {
      Face& f = faces_[id];
      f.nb[1] = by_start.at(f.v[1]);  // twin of (b, apex) is (apex, b)
      f.nb[2] = by_end.at(f.v[0]);    // twin of (apex, a) is (a, apex)
    }

    std::vector<std::uint32_t> orphans;
    for (int g : visible) {
      for (auto i : faces_[g].outside)
        if (i != apex) orphans.push_back(i);
      faces_[g].alive = false;
      std::vector<std::uint32_t>().swap(faces_[g].outside);
    }
    std::vector<int> fresh(faces_.size() - first_new);
    std::iota(fresh.begin(), fresh.end(), first_new);
    distribute(visit_order(std::move(orphans)), fresh);
  }

  void expand() {
    std::vector<int> pending;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f)
      if (!faces_[f].outside.empty()) pending.push_back(f);
    while (!pending.empty()) {
      std::vector<std::uint32_t> apex(pending.size());
      auto search = [&](std::size_t k) { apex[k] = find_apex(faces_[pending[k]]); };
      if (opt_.parallel)
        parallel_for(pending.size(), search, 8);
      else
        for (std::size_t k = 0; k < pending.size(); ++k) search(k);

      const std::size_t mark = faces_.size();
      for (std::size_t k = 0; k < pending.size(); ++k) {
        const Face& f = faces_[pending[k]];
        // A face that is still alive kept its outside set, so its apex holds.
        if (!f.alive || f.outside.empty()) continue;
        add_point(pending[k], apex[k]);
      }
      pending.clear();
      for (std::size_t f = mark; f < faces_.size(); ++f)
        if (faces_[f].alive && !faces_[f].outside.empty()) pending.push_back(static_cast<int>(f));
    }
  }

  Hull collect() const {
    std::vector<int> used;
    for (const auto& f : faces_)
      if (f.alive) used.insert(used.end(), f.v.begin(), f.v.end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::unordered_map<int, int> remap;
    Hull h;
    for (int i : used) {
      remap[i] = static_cast<int>(h.vertices.size());
      h.vertices.push_back(pts_[i]);
      h.source.push_back(static_cast<std::size_t>(i));
    }
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      h.faces.push_back({remap.at(f.v[0]), remap.at(f.v[1]), remap.at(f.v[2])});
      h.normals.push_back(f.n);
      h.offsets.push_back(f.d);
    }
    return h;
  }

  std::span<const Vec3> pts_;
  QuickhullOptions opt_;
  double eps_ = 0.0;
  Vec3 lo_, hi_;
  std::array<int, 4> simplex_{};
  std::vector<Face> faces_;
  std::uint32_t stamp_ = 0;

  int per_axis_ = 1;
  double cell_ = 1.0;
  std::vector<std::uint32_t> cell_of_;
  std::vector<std::uint32_t> rank_;
  std::vector<Vec3> cell_lo_, cell_hi_;
};

}  // namespace

Hull quickhull(std::span<const Vec3> points, const QuickhullOptions& options) {
  return QuickhullBuilder(points, options).run();
}

// ---------------------------------------------------------------------------
// Group hulls

Hull object_hull(const Mesh& mesh, const Pose& pose, double padding, std::string owner) {
  std::vector<Vec3> world;
  world.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) world.push_back(pose.apply(v));
  Hull h = quickhull(pad_points(world, padding));
  h.owner = std::move(owner);
  return h;
}

namespace {

Hull build_group_hull(const ConstraintTree& tree, const std::string& id, const GroupHullOptions& options,
                      std::map<std::string, Hull>& memo) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  const GroupNode& g = tree.group(id);

  double margin = options.nest_margin;
  if (margin < 0.0) {
    double pad = 0.0;
    for (const auto& o : tree.subtree_objects(id)) pad = std::max(pad, tree.object(o).padding);
    margin = 0.5 * pad;
  }

  std::vector<Vec3> points;
  for (const auto& c : g.children) {
    if (c.is_group()) {
      const Hull child = build_group_hull(tree, c.id, options, memo);
      const Vec3 center = child.centroid();
      for (const auto& v : child.vertices) {
        const Vec3 out = v - center;
        const double len = out.norm();
        points.push_back(len > 0.0 ? Vec3(v + margin * out / len) : v);
      }
    } else {
      const SceneObject& o = tree.object(c.id);
      const Pose pose = world_pose(tree, c.id);
      std::vector<Vec3> world;
      world.reserve(o.mesh->vertices.size());
      for (const auto& v : o.mesh->vertices) world.push_back(pose.apply(v));
      const auto padded = pad_points(world, o.padding);
      points.insert(points.end(), padded.begin(), padded.end());
    }
  }

  Hull h;
  if (points.size() > options.reduce_above) {
    const double cell = options.cell_size > 0.0 ? options.cell_size : default_cell_size(points);
    h = quickhull(reduce(points, cell).representatives);
  } else {
    h = quickhull(points);
  }
  h.owner = id;
  memo.emplace(id, h);
  return h;
}

}  // namespace

Hull group_hull(const ConstraintTree& tree, const std::string& group, const GroupHullOptions& options) {
  std::map<std::string, Hull> memo;
  return build_group_hull(tree, group, options, memo);
}

std::map<std::string, Hull> all_group_hulls(const ConstraintTree& tree, const GroupHullOptions& options) {
  std::map<std::string, Hull> memo;
  for (const auto& [id, _] : tree.groups()) build_group_hull(tree, id, options, memo);
  return memo;
}

std::set<std::string> visible_hulls(const ConstraintTree& tree, const Vec3& cursor,
                                    const std::map<std::string, Hull>& hulls) {
  std::set<std::string> shown(tree.roots().begin(), tree.roots().end());
  std::vector<std::string> frontier(tree.roots().begin(), tree.roots().end());
  while (!frontier.empty()) {
    const std::string id = frontier.back();
    frontier.pop_back();
    auto it = hulls.find(id);
    if (it == hulls.end() || !contains(it->second, cursor)) continue;
    for (const auto& c : tree.group(id).children) {
      if (!c.is_group()) continue;
      if (shown.insert(c.id).second) frontier.push_back(c.id);
    }
  }
  return shown;
}

std::set<std::string> visible_hulls(const ConstraintTree& tree, const Vec3& cursor) {
  return visible_hulls(tree, cursor, all_group_hulls(tree));
}

}  // namespace nestplan
