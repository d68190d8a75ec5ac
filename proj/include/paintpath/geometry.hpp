#pragma once

#include "core.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace paintpath {

/// Triangle mesh in meters. Faces index into `vertices`.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  double face_area(std::size_t f) const {
    const auto &t = faces[f];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }

  double total_area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f)
      a += face_area(f);
    return a;
  }
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto &p : points)
      c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
  }
};

/// Centering plus isotropic down-scaling: x' = (x - centroid) / scale.
struct NormalizationTransform {
  Vec3 centroid = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3 &p) const { return (p - centroid) / scale; }
  Vec3 invert(const Vec3 &p) const { return p * scale + centroid; }
};

// ---------------------------------------------------------------------------
// Mesh I/O: "v x y z" and "f i j k" lines with 1-based indices, '#' comments.

struct MeshLoadResult {
  TriMesh mesh;
  std::size_t dropped_faces = 0;
};

inline void validate_mesh(const TriMesh &mesh) {
  require(mesh.vertices.size() >= 3, "mesh needs at least 3 vertices");
  require(!mesh.faces.empty(), "mesh has no faces");
  const int nv = static_cast<int>(mesh.vertices.size());
  for (const auto &f : mesh.faces)
    for (int i : f)
      require(i >= 0 && i < nv, "face index out of range");
}

/// Parses mesh text. Zero-area faces are dropped and counted.
inline MeshLoadResult parse_mesh(std::istream &in) {
  MeshLoadResult res;
  std::vector<std::array<long long, 3>> raw_faces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#')
      continue;
    try {
      if (tok[0] == "v") {
        if (tok.size() < 4)
          throw IoError("short vertex line");
        res.mesh.vertices.emplace_back(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
        if (!res.mesh.vertices.back().allFinite())
          throw IoError("non-finite vertex");
      } else if (tok[0] == "f") {
        if (tok.size() != 4)
          throw IoError("face line must have exactly 3 indices");
        raw_faces.push_back({parse_int(tok[1]), parse_int(tok[2]), parse_int(tok[3])});
      } else {
        throw IoError("unknown record '" + std::string(tok[0]) + "'");
      }
    } catch (const IoError &e) {
      throw IoError("mesh parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  const auto nv = static_cast<long long>(res.mesh.vertices.size());
  if (nv < 3 || raw_faces.empty())
    throw IoError("mesh parse error: empty mesh");
  for (const auto &rf : raw_faces) {
    std::array<int, 3> f{};
    for (int k = 0; k < 3; ++k) {
      if (rf[k] < 1 || rf[k] > nv)
        throw IoError("mesh parse error: face index " + std::to_string(rf[k]) + " out of range");
      f[k] = static_cast<int>(rf[k] - 1);
    }
    res.mesh.faces.push_back(f);
  }
  std::vector<std::array<int, 3>> kept;
  kept.reserve(res.mesh.faces.size());
  for (std::size_t i = 0; i < res.mesh.faces.size(); ++i) {
    if (res.mesh.face_area(i) > 0.0)
      kept.push_back(res.mesh.faces[i]);
    else
      ++res.dropped_faces;
  }
  res.mesh.faces = std::move(kept);
  if (res.mesh.faces.empty())
    throw IoError("mesh parse error: every face is degenerate");
  return res;
}

inline MeshLoadResult load_mesh(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open mesh file " + path.string());
  return parse_mesh(in);
}

/// Writes a mesh; when `vertex_scalar` is given each vertex line carries it
/// as a fourth value (used for colour-mapped thickness export).
inline void write_mesh(std::ostream &out, const TriMesh &mesh, std::span<const double> vertex_scalar = {}) {
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto &v = mesh.vertices[i];
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z());
    if (!vertex_scalar.empty())
      out << ' ' << format_double(vertex_scalar[i]);
    out << '\n';
  }
  for (const auto &f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void save_mesh(const std::filesystem::path &path, const TriMesh &mesh,
                      std::span<const double> vertex_scalar = {}) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write mesh file " + path.string());
  write_mesh(out, mesh, vertex_scalar);
}

inline void save_point_cloud(const std::filesystem::path &path, const PointCloud &cloud) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write point cloud " + path.string());
  for (const auto &p : cloud.points)
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
}

inline PointCloud load_point_cloud(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open point cloud " + path.string());
  PointCloud cloud;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#')
      continue;
    if (tok.size() != 3)
      throw IoError("point cloud line must have 3 values: " + path.string());
    cloud.points.emplace_back(parse_double(tok[0]), parse_double(tok[1]), parse_double(tok[2]));
  }
  if (cloud.points.empty())
    throw IoError("empty point cloud " + path.string());
  return cloud;
}

// ---------------------------------------------------------------------------
// Surface sampling.

struct SamplerConfig {
  /// Thinning radius in mesh units; <= 0 selects 0.5 * sqrt(area / n).
  double radius = 0.0;
  /// Candidate points drawn per requested point before thinning.
  int oversample = 4;
};

/// Area-weighted uniform candidates followed by greedy dart-throwing
/// thinning. Returns exactly `n` points; if thinning accepts fewer than `n`
/// candidates, the rejected ones fill the remainder in draw order.
inline PointCloud sample_point_cloud(const TriMesh &mesh, std::size_t n, std::uint64_t seed,
                                     const SamplerConfig &cfg = {}) {
  require(n >= 1, "sample_point_cloud: n must be >= 1");
  validate_mesh(mesh);

  std::vector<double> cdf(mesh.faces.size());
  double acc = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    acc += mesh.face_area(f);
    cdf[f] = acc;
  }
  require(acc > 0.0, "sample_point_cloud: mesh has zero area");

  Rng rng(seed);
  const std::size_t m = n * static_cast<std::size_t>(std::max(1, cfg.oversample));
  std::vector<Vec3> candidates;
  candidates.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    const std::size_t f = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
    const auto &t = mesh.faces[f];
    const double su = std::sqrt(rng.uniform());
    const double v = rng.uniform();
    const double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
    candidates.push_back(b0 * mesh.vertices[t[0]] + b1 * mesh.vertices[t[1]] + b2 * mesh.vertices[t[2]]);
  }

  const double radius = cfg.radius > 0.0 ? cfg.radius : 0.5 * std::sqrt(acc / static_cast<double>(n));
  const double r2 = radius * radius;
  auto cell_of = [radius](const Vec3 &p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor(p.x() / radius)),
                                    static_cast<long long>(std::floor(p.y() / radius)),
                                    static_cast<long long>(std::floor(p.z() / radius))};
  };
  auto key_of = [](long long x, long long y, long long z) {
    return static_cast<std::uint64_t>(x * 73856093LL) ^ static_cast<std::uint64_t>(y * 19349663LL) ^
           static_cast<std::uint64_t>(z * 83492791LL);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;

  PointCloud cloud;
  cloud.points.reserve(n);
  std::vector<std::size_t> rejected;
  for (std::size_t i = 0; i < m && cloud.points.size() < n; ++i) {
    const Vec3 &p = candidates[i];
    const auto c = cell_of(p);
    bool ok = true;
    for (long long dx = -1; dx <= 1 && ok; ++dx)
      for (long long dy = -1; dy <= 1 && ok; ++dy)
        for (long long dz = -1; dz <= 1 && ok; ++dz) {
          auto it = grid.find(key_of(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == grid.end())
            continue;
          for (std::size_t j : it->second)
            if ((cloud.points[j] - p).squaredNorm() < r2) {
              ok = false;
              break;
            }
        }
    if (ok) {
      grid[key_of(c[0], c[1], c[2])].push_back(cloud.points.size());
      cloud.points.push_back(p);
    } else {
      rejected.push_back(i);
    }
  }
  for (std::size_t k = 0; cloud.points.size() < n && k < rejected.size(); ++k)
    cloud.points.push_back(candidates[rejected[k]]);
  return cloud;
}

// ---------------------------------------------------------------------------
// Normalization.

struct Normalized {
  PointCloud cloud;
  std::vector<Stroke> strokes;
  NormalizationTransform transform;
};

inline Stroke transform_stroke(const Stroke &s, const NormalizationTransform &t, bool inverse) {
  Stroke out = s;
  for (auto &p : out.poses)
    p.position = inverse ? t.invert(p.position) : t.apply(p.position);
  return out;
}

/// Centers the cloud on its mean and divides by `scale`; strokes receive the
/// same transform on positions only.
inline Normalized normalize(const PointCloud &cloud, const std::vector<Stroke> &strokes, double scale) {
  require(scale > 0.0 && std::isfinite(scale), "normalize: scale must be positive");
  require(cloud.size() > 0, "normalize: empty cloud");
  Normalized out;
  out.transform.centroid = cloud.centroid();
  out.transform.scale = scale;
  out.cloud.points.reserve(cloud.size());
  for (const auto &p : cloud.points)
    out.cloud.points.push_back(out.transform.apply(p));
  for (const auto &s : strokes)
    out.strokes.push_back(transform_stroke(s, out.transform, false));
  return out;
}

inline std::vector<Stroke> denormalize(const std::vector<Stroke> &strokes, const NormalizationTransform &t) {
  std::vector<Stroke> out;
  out.reserve(strokes.size());
  for (const auto &s : strokes)
    out.push_back(transform_stroke(s, t, true));
  return out;
}

inline PointCloud denormalize(const PointCloud &cloud, const NormalizationTransform &t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto &p : cloud.points)
    out.points.push_back(t.invert(p));
  return out;
}

/// Closest point on triangle (a, b, c) to p.
inline Vec3 closest_point_on_triangle(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0)
    return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3)
    return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0)
    return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6)
    return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0)
    return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Brute-force nearest surface point.
inline Vec3 closest_point_on_mesh(const TriMesh &mesh, const Vec3 &p) {
  Vec3 best = mesh.vertices.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto &f : mesh.faces) {
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    const double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

} // namespace paintpath
