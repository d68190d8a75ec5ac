#pragma once

// Conic spray deposition on mesh vertices, and the two evaluation metrics:
// pose-wise Chamfer distance and paint coverage.

#include "objective.hpp"

#include <numeric>

namespace paintpath {

struct SprayGunModel {
  double cone_half_angle = 40.0 * std::numbers::pi / 180.0;
  double max_range = 1.0;
  double flux = 1.0;

  void validate() const {
    require(cone_half_angle > 0.0 && cone_half_angle < 0.5 * std::numbers::pi, "cone half-angle must be in (0, pi/2)");
    require(max_range > 0.0, "max range must be > 0");
    require(flux > 0.0, "flux must be > 0");
  }
};

struct ThicknessField {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct CoverageReport {
  double threshold = 0.0;
  std::size_t gt_covered = 0;
  std::size_t pred_covered_of_gt = 0;
  double pc = 0.0;
};

// ---------------------------------------------------------------------------
// Bounding-volume hierarchy for segment occlusion queries.

namespace detail {

/// Moller-Trumbore for the segment o + t d, t in (1e-9, 1 - 1e-7). Edges are
/// widened by a relative 1e-10 so rays through a shared edge cannot slip
/// between the two adjacent triangles.
inline bool segment_hits_triangle(const Vec3 &o, const Vec3 &d, const Vec3 &v0, const Vec3 &v1, const Vec3 &v2) {
  constexpr double kEdgeTol = 1e-10;
  const Vec3 e1 = v1 - v0, e2 = v2 - v0;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14)
    return false;
  const double inv = 1.0 / det;
  const Vec3 s = o - v0;
  const double u = s.dot(p) * inv;
  if (u < -kEdgeTol || u > 1.0 + kEdgeTol)
    return false;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol)
    return false;
  const double t = e2.dot(q) * inv;
  return t > 1e-9 && t < 1.0 - 1e-7;
}

} // namespace detail

class TriangleBvh {
public:
  explicit TriangleBvh(const TriMesh &mesh) : mesh_(mesh) {
    tris_.resize(mesh.faces.size());
    std::iota(tris_.begin(), tris_.end(), 0);
    centroids_.reserve(mesh.faces.size());
    for (const auto &f : mesh.faces)
      centroids_.push_back((mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0);
    if (!tris_.empty())
      build(0, tris_.size());
  }

  /// True if some triangle not incident to vertex `skip` crosses the open
  /// segment from `a` toward `b` strictly before reaching `b`.
  bool occluded(const Vec3 &a, const Vec3 &b, int skip) const {
    if (nodes_.empty())
      return false;
    const Vec3 d = b - a;
    const Vec3 inv(1.0 / d.x(), 1.0 / d.y(), 1.0 / d.z());
    std::size_t stack[96];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node &node = nodes_[stack[--top]];
      if (!hits_box(node, a, inv))
        continue;
      if (node.count > 0) {
        for (std::size_t i = node.first; i < node.first + node.count; ++i) {
          const auto &f = mesh_.faces[static_cast<std::size_t>(tris_[i])];
          if (f[0] == skip || f[1] == skip || f[2] == skip)
            continue;
          if (detail::segment_hits_triangle(a, d, mesh_.vertices[f[0]], mesh_.vertices[f[1]], mesh_.vertices[f[2]]))
            return true;
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return false;
  }

private:
  struct Node {
    Vec3 lo, hi;
    std::size_t left = 0, right = 0;
    std::size_t first = 0, count = 0;
  };

  static bool hits_box(const Node &n, const Vec3 &o, const Vec3 &inv) {
    double t0 = 0.0, t1 = 1.0;
    for (int a = 0; a < 3; ++a) {
      double ta = (n.lo[a] - o[a]) * inv[a];
      double tb = (n.hi[a] - o[a]) * inv[a];
      if (std::isnan(ta) || std::isnan(tb)) {
        // Segment parallel to and lying in a slab boundary.
        if (o[a] < n.lo[a] || o[a] > n.hi[a])
          return false;
        continue;
      }
      if (ta > tb)
        std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1)
        return false;
    }
    return true;
  }

  std::size_t build(std::size_t first, std::size_t count) {
    Node node;
    node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    Vec3 clo = node.lo, chi = node.hi;
    for (std::size_t i = first; i < first + count; ++i) {
      const auto &f = mesh_.faces[static_cast<std::size_t>(tris_[i])];
      for (int k = 0; k < 3; ++k) {
        node.lo = node.lo.cwiseMin(mesh_.vertices[f[k]]);
        node.hi = node.hi.cwiseMax(mesh_.vertices[f[k]]);
      }
      clo = clo.cwiseMin(centroids_[static_cast<std::size_t>(tris_[i])]);
      chi = chi.cwiseMax(centroids_[static_cast<std::size_t>(tris_[i])]);
    }
    // Pad so axis-flat boxes still intersect grazing segments.
    node.lo.array() -= 1e-9;
    node.hi.array() += 1e-9;
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (count <= 4) {
      nodes_[id].first = first;
      nodes_[id].count = count;
      return id;
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const auto mid = tris_.begin() + static_cast<std::ptrdiff_t>(first + count / 2);
    std::nth_element(tris_.begin() + static_cast<std::ptrdiff_t>(first), mid,
                     tris_.begin() + static_cast<std::ptrdiff_t>(first + count), [&](int x, int y) {
                       const double cx = centroids_[static_cast<std::size_t>(x)][axis];
                       const double cy = centroids_[static_cast<std::size_t>(y)][axis];
                       return cx < cy || (cx == cy && x < y);
                     });
    const std::size_t left = build(first, count / 2);
    const std::size_t right = build(first + count / 2, count - count / 2);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const TriMesh &mesh_;
  std::vector<int> tris_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Deposition.

namespace detail {

// Contributions are accumulated in 2^-32 fixed point so that the field is
// exactly additive over disjoint pose sets regardless of summation order.
inline constexpr double kThicknessQuantum = 0x1.0p-32;

inline long long quantize_thickness(double v) { return std::llround(v / kThicknessQuantum); }

} // namespace detail

/// Every pose adds flux * cos(angle) / r^2 to each vertex inside its cone and
/// range whose line of sight is not blocked by another triangle.
inline ThicknessField deposit_poses(const TriMesh &mesh, std::span<const Pose> poses, const SprayGunModel &gun) {
  gun.validate();
  ThicknessField field;
  field.values.assign(mesh.vertices.size(), 0.0);
  if (poses.empty())
    return field;
  const TriangleBvh bvh(mesh);
  const double cos_limit = std::cos(gun.cone_half_angle);
  const double range2 = gun.max_range * gun.max_range;
  for (std::size_t vi = 0; vi < mesh.vertices.size(); ++vi) {
    const Vec3 &v = mesh.vertices[vi];
    long long acc = 0;
    for (const auto &pose : poses) {
      const Vec3 d = v - pose.position;
      const double r2 = d.squaredNorm();
      if (r2 > range2 || r2 == 0.0)
        continue;
      const double r = std::sqrt(r2);
      const double cosang = d.dot(pose.orientation) / r;
      if (cosang < cos_limit)
        continue;
      if (bvh.occluded(pose.position, v, static_cast<int>(vi)))
        continue;
      acc += detail::quantize_thickness(gun.flux * cosang / r2);
    }
    field.values[vi] = static_cast<double>(acc) * detail::kThicknessQuantum;
  }
  return field;
}

inline ThicknessField deposit(const TriMesh &mesh, const std::vector<Stroke> &strokes, const SprayGunModel &gun) {
  std::vector<Pose> poses;
  for (const auto &s : strokes)
    poses.insert(poses.end(), s.poses.begin(), s.poses.end());
  return deposit_poses(mesh, poses, gun);
}

/// 10th percentile (linear interpolation between order statistics) of the
/// strictly positive entries.
inline double coverage_threshold(const ThicknessField &gt) {
  std::vector<double> nz;
  for (double v : gt.values)
    if (v > 0.0)
      nz.push_back(v);
  require(!nz.empty(), "coverage_threshold: ground-truth field is all zero");
  std::sort(nz.begin(), nz.end());
  const double h = 0.1 * static_cast<double>(nz.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, nz.size() - 1);
  return nz[lo] + (h - static_cast<double>(lo)) * (nz[hi] - nz[lo]);
}

inline CoverageReport paint_coverage(const ThicknessField &pred, const ThicknessField &gt) {
  require(pred.size() == gt.size(), "paint_coverage: field length mismatch");
  CoverageReport rep;
  rep.threshold = coverage_threshold(gt);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.values[i] >= rep.threshold) {
      ++rep.gt_covered;
      if (pred.values[i] >= rep.threshold)
        ++rep.pred_covered_of_gt;
    }
  }
  rep.pc = 100.0 * static_cast<double>(rep.pred_covered_of_gt) / static_cast<double>(rep.gt_covered);
  return rep;
}

/// Symmetric Chamfer over individual poses (connectivity ignored).
inline double pose_chamfer(std::span<const Pose> pred, std::span<const Pose> gt, const LossWeights &w) {
  require(!pred.empty() && !gt.empty(), "pose_chamfer: empty pose set");
  std::vector<double> best_gt(gt.size(), std::numeric_limits<double>::infinity());
  double fwd = 0.0;
  for (const auto &p : pred) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const double d = weighted_pose_distance(p, gt[j], w);
      best = std::min(best, d);
      best_gt[j] = std::min(best_gt[j], d);
    }
    fwd += best;
  }
  double bwd = 0.0;
  for (double d : best_gt)
    bwd += d;
  return fwd / static_cast<double>(pred.size()) + bwd / static_cast<double>(gt.size());
}

inline constexpr double kPcdReportScale = 1e4;

inline void save_thickness(const std::filesystem::path &path, const ThicknessField &f) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write thickness file " + path.string());
  for (double v : f.values)
    out << format_double(v) << '\n';
}

inline ThicknessField load_thickness(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open thickness file " + path.string());
  ThicknessField f;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#')
      continue;
    f.values.push_back(parse_double(tok[0]));
  }
  return f;
}

inline KeyValues coverage_to_kv(const CoverageReport &r) {
  KeyValues kv;
  kv.set("threshold", r.threshold);
  kv.set("gt_covered", r.gt_covered);
  kv.set("pred_covered_of_gt", r.pred_covered_of_gt);
  kv.set("pc", r.pc);
  return kv;
}

} // namespace paintpath
