#include "nestplan/collision.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "nestplan/error.hpp"

namespace nestplan {

namespace {

std::size_t support_index(std::span<const Vec3> pts, const Vec3& dir) {
  std::size_t best = 0;
  double best_dot = pts[0].dot(dir);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = pts[i].dot(dir);
    if (d > best_dot) best_dot = d, best = i;
  }
  return best;
}

Vec3 support(std::span<const Vec3> a, std::span<const Vec3> b, const Vec3& dir) {
  return a[support_index(a, dir)] - b[support_index(b, -dir)];
}

/// Closest point of the simplex to the origin by enumerating its faces
/// (Johnson's method without the caching). Shrinks the simplex to the
/// smallest face carrying that point.
Vec3 closest_on_simplex(std::vector<Vec3>& simplex) {
  const int k = static_cast<int>(simplex.size());
  double best_norm = std::numeric_limits<double>::infinity();
  Vec3 best = simplex[0];
  int best_mask = 1;
  for (int mask = 1; mask < (1 << k); ++mask) {
    std::array<int, 4> idx{};
    int m = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1 << i)) idx[m++] = i;
    const Vec3& w0 = simplex[idx[0]];
    Vec3 x = w0;
    bool valid = true;
    if (m > 1) {
      Eigen::Matrix<double, 3, Eigen::Dynamic> e(3, m - 1);
      for (int j = 1; j < m; ++j) e.col(j - 1) = simplex[idx[j]] - w0;
      const Eigen::MatrixXd gram = e.transpose() * e;
      const Eigen::VectorXd rhs = -e.transpose() * w0;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      lu.setThreshold(1e-14);
      if (lu.rank() < m - 1) continue;
      const Eigen::VectorXd mu = lu.solve(rhs);
      double lambda0 = 1.0;
      for (int j = 0; j < m - 1; ++j) {
        if (mu[j] < -1e-12) valid = false;
        lambda0 -= mu[j];
      }
      if (lambda0 < -1e-12) valid = false;
      x = w0 + e * mu;
    }
    if (!valid) continue;
    const double n = x.squaredNorm();
    if (n < best_norm - 1e-18 || (n <= best_norm + 1e-18 && std::popcount(static_cast<unsigned>(mask)) <
                                                                   std::popcount(static_cast<unsigned>(best_mask)))) {
      best_norm = n;
      best = x;
      best_mask = mask;
    }
  }
  std::vector<Vec3> reduced;
  for (int i = 0; i < k; ++i)
    if (best_mask & (1 << i)) reduced.push_back(simplex[i]);
  simplex = std::move(reduced);
  return best;
}

}  // namespace

Proximity gjk_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  Proximity out;
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "gjk_distance needs non-empty point sets");
  Vec3 v = a[0] - b[0];
  std::vector<Vec3> simplex{v};
  for (int iter = 0; iter < 128; ++iter) {
    const double vv = v.squaredNorm();
    if (vv <= 1e-28) {
      out.intersecting = true;
      out.distance = 0.0;
      out.separation = Vec3::Zero();
      return out;
    }
    const Vec3 w = support(a, b, -v);
    // v.v - v.w bounds |v|^2 - dist^2 from above; stop when it is tiny.
    if (vv - v.dot(w) <= 1e-12 * vv + 1e-24) break;
    bool repeated = false;
    for (const auto& s : simplex)
      if ((s - w).squaredNorm() <= 1e-28) repeated = true;
    if (repeated) break;
    simplex.push_back(w);
    v = closest_on_simplex(simplex);
    if (simplex.size() == 4) {
      out.intersecting = true;
      out.distance = 0.0;
      out.separation = Vec3::Zero();
      return out;
    }
  }
  out.separation = v;
  out.distance = v.norm();
  out.intersecting = out.distance <= kTouchTolerance;
  return out;
}

bool collide(const Hull& a, const Hull& b) { return gjk_distance(a.vertices, b.vertices).distance <= kTouchTolerance; }

Penetration penetration_depth(const Hull& a, const Hull& b) {
  if (!collide(a, b)) throw Error(ErrorCode::NotIntersecting, "hulls " + a.owner + " and " + b.owner + " are apart");

  const std::span<const Vec3> av(a.vertices), bv(b.vertices);
  std::vector<Vec3> pts;
  auto add = [&](const Vec3& p) {
    for (const auto& q : pts)
      if ((q - p).squaredNorm() <= 1e-24) return false;
    pts.push_back(p);
    return true;
  };
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) {
        const int nonzero = (x != 0) + (y != 0) + (z != 0);
        if (nonzero == 1 || nonzero == 3) add(support(av, bv, Vec3(x, y, z)));
      }

  // Tolerances scale with the size of the Minkowski difference.
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tie = 1e-9 * std::max(scale, 1.0);
  const double converge = 1e-11 * std::max(scale, 1.0);

  auto prefer = [](const Vec3& p, const Vec3& q) {
    for (int axis = 0; axis < 3; ++axis) {
      if (p[axis] > q[axis] + 1e-9) return true;
      if (p[axis] < q[axis] - 1e-9) return false;
    }
    return false;
  };

  for (int iter = 0; iter < 256; ++iter) {
    const Hull poly = quickhull(pts, QuickhullOptions{.grid_apex = false, .parallel = false});
    double nearest = std::numeric_limits<double>::infinity();
    for (double off : poly.offsets) nearest = std::min(nearest, off);

    bool expanded = false;
    std::optional<std::size_t> chosen;
    for (std::size_t f = 0; f < poly.faces.size(); ++f) {
      if (poly.offsets[f] > nearest + tie) continue;
      const Vec3 w = support(av, bv, poly.normals[f]);
      if (poly.normals[f].dot(w) - poly.offsets[f] > converge && add(w)) {
        expanded = true;
        continue;
      }
      if (!chosen || prefer(poly.normals[f], poly.normals[*chosen])) chosen = f;
    }
    if (!expanded && chosen) {
      return {std::max(0.0, poly.offsets[*chosen]), poly.normals[*chosen]};
    }
    if (!expanded) break;
  }
  throw Error(ErrorCode::NoConvergence, "penetration expansion did not converge for " + a.owner + "/" + b.owner);
}

bool overlaps(const Hull& a, const Hull& b, double slack) {
  if (!collide(a, b)) return false;
  return penetration_depth(a, b).depth > slack;
}

namespace {

void push_axis(std::vector<Vec3>& axes, Vec3 n) {
  const double len = n.norm();
  if (len < 1e-12) return;
  n /= len;
  for (const auto& a : axes)
    if ((a - n).squaredNorm() < 1e-18) return;
  axes.push_back(n);
}

void push_edges(std::vector<Vec3>& dirs, const Hull& h) {
  for (const auto& f : h.faces)
    for (int k = 0; k < 3; ++k) {
      Vec3 e = h.vertices[f[(k + 1) % 3]] - h.vertices[f[k]];
      const double len = e.norm();
      if (len < 1e-12) continue;
      e /= len;
      // canonical sign so e and -e dedupe together
      for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(e[axis]) < 1e-12) continue;
        if (e[axis] < 0) e = -e;
        break;
      }
      push_axis(dirs, e);
    }
}

double support_value(const std::vector<Vec3>& pts, const Vec3& n) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::max(best, n.dot(p));
  return best;
}

}  // namespace

std::optional<double> drop_contact(const Hull& moving, const Hull& obstacle, double tolerance) {
  // Moving M down by t overlaps O iff -t*z lies in D = O - M. D is the
  // intersection of half-spaces over face normals and edge-pair crosses.
  std::vector<Vec3> axes;
  for (const auto& n : obstacle.normals) push_axis(axes, n);
  for (const auto& n : moving.normals) push_axis(axes, -n);
  std::vector<Vec3> edges_o, edges_m;
  push_edges(edges_o, obstacle);
  push_edges(edges_m, moving);
  for (const auto& eo : edges_o)
    for (const auto& em : edges_m) {
      const Vec3 c = eo.cross(em);
      const double len = c.norm();
      if (len < 1e-12) continue;
      axes.push_back(c / len);
      axes.push_back(-c / len);
    }

  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  for (const auto& n : axes) {
    const double h = support_value(obstacle.vertices, n) + support_value(moving.vertices, -n);
    if (std::abs(n.z()) < 1e-12) {
      if (h <= tolerance) return std::nullopt;
      continue;
    }
    const double bound = -h / n.z();
    if (n.z() > 0)
      t_in = std::max(t_in, bound);
    else
      t_out = std::min(t_out, bound);
  }
  const double start = std::max(t_in, 0.0);
  if (t_out <= start + tolerance) return std::nullopt;
  return start;
}

double segment_distance(const Vec3& p0, const Vec3& p1, const Hull& hull) {
  const std::array<Vec3, 2> seg{p0, p1};
  return gjk_distance(seg, hull.vertices).distance;
}

}  // namespace nestplan
