#pragma once

// Procedural (mesh, expert stroke) pairs for four object families, stroke
// down-sampling, and fixed-length segment decomposition.

#include "geometry.hpp"
#include "kvfile.hpp"

#include <map>
#include <numbers>

namespace paintpath {

/// Fixed-length ordered pose window.
struct Segment {
  std::vector<Pose> poses;

  std::size_t size() const { return poses.size(); }
  const Pose &front() const { return poses.front(); }
  const Pose &back() const { return poses.back(); }
  bool operator==(const Segment &) const = default;
};

/// Unordered set of equal-length segments. `overlap` is the number of poses
/// shared by consecutive segments cut from the same stroke.
struct SegmentSet {
  std::vector<Segment> segments;
  int lambda = 4;
  int overlap = 1;

  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }

  std::vector<Pose> all_poses() const {
    std::vector<Pose> out;
    out.reserve(segments.size() * static_cast<std::size_t>(lambda));
    for (const auto &s : segments)
      out.insert(out.end(), s.poses.begin(), s.poses.end());
    return out;
  }
};

enum class Category { Cuboids, Windows, Shelves, Containers };

inline const std::vector<Category> &all_categories() {
  static const std::vector<Category> cats{Category::Cuboids, Category::Windows, Category::Shelves,
                                          Category::Containers};
  return cats;
}

inline std::string to_string(Category c) {
  switch (c) {
  case Category::Cuboids:
    return "cuboids";
  case Category::Windows:
    return "windows";
  case Category::Shelves:
    return "shelves";
  case Category::Containers:
    return "containers";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  for (auto c : all_categories())
    if (to_string(c) == s)
      return c;
  throw ValidationError("invalid category '" + std::string(s) + "'");
}

/// Default total pose budget per category after down-sampling.
inline std::size_t default_budget(Category c) {
  switch (c) {
  case Category::Cuboids:
    return 2000;
  case Category::Windows:
    return 500;
  case Category::Shelves:
    return 4000;
  case Category::Containers:
    return 1000;
  }
  return 2000;
}

struct SampleRecord {
  TriMesh mesh;
  std::vector<Stroke> strokes;
  Category category = Category::Cuboids;
  std::uint64_t seed = 0;
};

struct Range {
  double lo, hi;
  double mid() const { return 0.5 * (lo + hi); }
};

struct GeneratorConfig {
  /// Stand-off distance as a fraction of the smallest non-thin object extent.
  double standoff_fraction = 0.2;
  /// Fractional overlap of adjacent raster pass footprints.
  double footprint_overlap = 0.3;
  /// Cone half-angle used to size pass pitch (radians).
  double footprint_half_angle = 40.0 * std::numbers::pi / 180.0;
  /// Target triangle edge length of generated meshes (m).
  double mesh_edge = 0.08;
  /// Raw pose count of every cuboid stroke.
  int cuboid_stroke_poses = 333;
  /// Raw pose spacing for the other families (m).
  double pose_spacing = 0.002;
  /// Uniform random translation applied to each object (m, per axis).
  double jitter = 0.1;

  Range cuboid_extent{0.6, 1.2};
  Range window_size{0.8, 1.3};
  Range window_bar{0.1, 0.18};
  Range window_depth{0.04, 0.08};
  Range shelf_width{0.8, 1.4};
  Range shelf_height{1.0, 1.6};
  Range shelf_depth{0.3, 0.45};
  double shelf_panel = 0.03;
  Range container_side{0.5, 0.9};
  Range container_height{0.35, 0.6};
};

namespace detail {

/// Accumulates axis-aligned grid quads, then welds shared vertices.
class MeshBuilder {
public:
  explicit MeshBuilder(double edge) : edge_(edge) {}

  /// Quad spanned by `origin + s*u + t*v`, s,t in [0,1].
  void quad(const Vec3 &origin, const Vec3 &u, const Vec3 &v) {
    const int nu = std::max(1, static_cast<int>(std::ceil(u.norm() / edge_)));
    const int nv = std::max(1, static_cast<int>(std::ceil(v.norm() / edge_)));
    const int base = static_cast<int>(mesh_.vertices.size());
    for (int j = 0; j <= nv; ++j)
      for (int i = 0; i <= nu; ++i)
        mesh_.vertices.push_back(origin + u * (static_cast<double>(i) / nu) + v * (static_cast<double>(j) / nv));
    auto id = [&](int i, int j) { return base + j * (nu + 1) + i; };
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nu; ++i) {
        mesh_.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        mesh_.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
  }

  /// Closed axis-aligned box [lo, hi].
  void box(const Vec3 &lo, const Vec3 &hi) {
    const Vec3 d = hi - lo;
    const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
    quad(lo, ey, ez);
    quad(lo + ex, ey, ez);
    quad(lo, ex, ez);
    quad(lo + ey, ex, ez);
    quad(lo, ex, ey);
    quad(lo + ez, ex, ey);
  }

  TriMesh finish() {
    std::map<std::array<long long, 3>, int> index;
    std::vector<int> remap(mesh_.vertices.size());
    TriMesh out;
    for (std::size_t i = 0; i < mesh_.vertices.size(); ++i) {
      const auto &p = mesh_.vertices[i];
      std::array<long long, 3> key{std::llround(p.x() * 1e9), std::llround(p.y() * 1e9), std::llround(p.z() * 1e9)};
      auto [it, inserted] = index.emplace(key, static_cast<int>(out.vertices.size()));
      if (inserted)
        out.vertices.push_back(p);
      remap[i] = it->second;
    }
    for (const auto &f : mesh_.faces) {
      std::array<int, 3> g{remap[f[0]], remap[f[1]], remap[f[2]]};
      if (g[0] != g[1] && g[1] != g[2] && g[0] != g[2])
        out.faces.push_back(g);
    }
    return out;
  }

private:
  double edge_;
  TriMesh mesh_;
};

/// Piecewise-linear path with per-vertex orientation held constant along
/// each piece (raster passes).
struct Polyline {
  std::vector<Vec3> points;
  std::vector<Vec3> orientation; // one per piece

  double length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      l += (points[i] - points[i - 1]).norm();
    return l;
  }

  /// `n` poses uniformly spaced by arc length; endpoints included.
  Stroke resample(std::size_t n) const {
    Stroke s;
    const double total = length();
    std::size_t piece = 0;
    double piece_start = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = total * static_cast<double>(k) / static_cast<double>(n - 1);
      while (piece + 2 < points.size() && piece_start + (points[piece + 1] - points[piece]).norm() < a) {
        piece_start += (points[piece + 1] - points[piece]).norm();
        ++piece;
      }
      const double len = (points[piece + 1] - points[piece]).norm();
      const double t = len > 0 ? std::clamp((a - piece_start) / len, 0.0, 1.0) : 0.0;
      Pose p;
      p.position = points[piece] + t * (points[piece + 1] - points[piece]);
      p.orientation = orientation[piece];
      s.poses.push_back(p);
    }
    return s;
  }
};

inline std::size_t count_for_spacing(double length, double spacing) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(length / spacing)) + 1);
}

inline double pass_pitch(const GeneratorConfig &cfg, double standoff) {
  return (1.0 - cfg.footprint_overlap) * 2.0 * standoff * std::tan(cfg.footprint_half_angle);
}

/// Passes needed to raster an extent at the family's nominal dimensions, so
/// every object of a family shares the same stroke topology.
inline int nominal_passes(const GeneratorConfig &cfg, double extent, double nominal_standoff) {
  return std::max(1, static_cast<int>(std::lround(extent / pass_pitch(cfg, nominal_standoff))));
}

/// Boustrophedon raster over a planar rectangle: passes run along `u`,
/// stepping along `v`; poses sit `standoff` along `normal`, aimed at -normal.
inline Polyline raster(const Vec3 &center, const Vec3 &normal, const Vec3 &u_axis, double u_extent,
                       const Vec3 &v_axis, double v_extent, double standoff, int passes) {
  Polyline pl;
  const Vec3 base = center + normal * standoff;
  for (int i = 0; i < passes; ++i) {
    const double v = -0.5 * v_extent + (i + 0.5) * v_extent / passes;
    const double dir = (i % 2 == 0) ? 1.0 : -1.0;
    pl.points.push_back(base + u_axis * (-0.5 * u_extent * dir) + v_axis * v);
    pl.points.push_back(base + u_axis * (0.5 * u_extent * dir) + v_axis * v);
  }
  pl.orientation.assign(pl.points.size() - 1, -normal);
  return pl;
}

/// Smallest bounding extent that is not a thin plate dimension.
inline double characteristic_extent(std::initializer_list<double> extents) {
  const double mx = std::max(extents);
  double mn = mx;
  for (double e : extents)
    if (e >= 0.25 * mx)
      mn = std::min(mn, e);
  return mn;
}

inline Vec3 jitter(Rng &rng, double amount) {
  return Vec3(rng.uniform(-amount, amount), rng.uniform(-amount, amount), rng.uniform(-amount, amount));
}

inline SampleRecord make_cuboid(Rng &rng, const GeneratorConfig &cfg) {
  const Vec3 ext(rng.uniform(cfg.cuboid_extent.lo, cfg.cuboid_extent.hi),
                 rng.uniform(cfg.cuboid_extent.lo, cfg.cuboid_extent.hi),
                 rng.uniform(cfg.cuboid_extent.lo, cfg.cuboid_extent.hi));
  const Vec3 c = jitter(rng, cfg.jitter);
  MeshBuilder mb(cfg.mesh_edge);
  mb.box(c - 0.5 * ext, c + 0.5 * ext);

  SampleRecord rec;
  rec.category = Category::Cuboids;
  rec.mesh = mb.finish();
  const double standoff = cfg.standoff_fraction * ext.minCoeff();
  const double nominal = cfg.cuboid_extent.mid();
  const int passes = nominal_passes(cfg, nominal, cfg.standoff_fraction * nominal);
  // Face order: +x, -x, +y, -y, +z, -z; (u, v) axes in the face plane.
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = axis == 0 ? 1 : 0;
    const int va = axis == 2 ? 1 : 2;
    for (double sign : {1.0, -1.0}) {
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 center = c;
      center[axis] += sign * 0.5 * ext[axis];
      const auto pl = raster(center, n, Vec3::Unit(ua), ext[ua], Vec3::Unit(va), ext[va], standoff, passes);
      rec.strokes.push_back(pl.resample(static_cast<std::size_t>(cfg.cuboid_stroke_poses)));
    }
  }
  return rec;
}

inline SampleRecord make_window(Rng &rng, const GeneratorConfig &cfg) {
  const double W = rng.uniform(cfg.window_size.lo, cfg.window_size.hi);
  const double H = rng.uniform(cfg.window_size.lo, cfg.window_size.hi);
  const double w = rng.uniform(cfg.window_bar.lo, cfg.window_bar.hi);
  const double t = rng.uniform(cfg.window_depth.lo, cfg.window_depth.hi);
  const Vec3 c = jitter(rng, cfg.jitter);
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();

  MeshBuilder mb(cfg.mesh_edge);
  for (double yside : {-0.5 * t, 0.5 * t}) {
    const Vec3 o = c + Vec3(-0.5 * W, yside, -0.5 * H);
    mb.quad(o + ez * (H - w), ex * W, ez * w);                // top bar
    mb.quad(o, ex * W, ez * w);                               // bottom bar
    mb.quad(o + ez * w, ex * w, ez * (H - 2 * w));            // left bar
    mb.quad(o + ex * (W - w) + ez * w, ex * w, ez * (H - 2 * w)); // right bar
  }
  const Vec3 back = c + Vec3(-0.5 * W, -0.5 * t, -0.5 * H);
  mb.quad(back, ey * t, ez * H);
  mb.quad(back + ex * W, ey * t, ez * H);
  mb.quad(back, ex * W, ey * t);
  mb.quad(back + ez * H, ex * W, ey * t);
  const Vec3 inner = back + Vec3(w, 0, w);
  mb.quad(inner, ey * t, ez * (H - 2 * w));
  mb.quad(inner + ex * (W - 2 * w), ey * t, ez * (H - 2 * w));
  mb.quad(inner, ex * (W - 2 * w), ey * t);
  mb.quad(inner + ez * (H - 2 * w), ex * (W - 2 * w), ey * t);

  SampleRecord rec;
  rec.category = Category::Windows;
  rec.mesh = mb.finish();
  const double standoff = cfg.standoff_fraction * characteristic_extent({W, H, t});
  const double nominal_standoff = cfg.standoff_fraction * cfg.window_size.mid();
  const int passes = nominal_passes(cfg, cfg.window_bar.mid(), nominal_standoff);
  // One raster per bar, circulating top -> right -> bottom -> left.
  for (double yside : {-1.0, 1.0}) {
    const Vec3 n = ey * yside;
    const Vec3 f = c + n * (0.5 * t);
    const double zb = 0.5 * H - 0.5 * w, xb = 0.5 * W - 0.5 * w;
    rec.strokes.push_back(raster(f + ez * zb, n, ex, W, ez, w, standoff, passes).resample(count_for_spacing(W, cfg.pose_spacing)));
    rec.strokes.push_back(raster(f + ex * xb, n, -ez, H, ex, w, standoff, passes).resample(count_for_spacing(H, cfg.pose_spacing)));
    rec.strokes.push_back(raster(f - ez * zb, n, -ex, W, ez, w, standoff, passes).resample(count_for_spacing(W, cfg.pose_spacing)));
    rec.strokes.push_back(raster(f - ex * xb, n, ez, H, ex, w, standoff, passes).resample(count_for_spacing(H, cfg.pose_spacing)));
  }
  return rec;
}

inline SampleRecord make_shelf(Rng &rng, const GeneratorConfig &cfg) {
  const double W = rng.uniform(cfg.shelf_width.lo, cfg.shelf_width.hi);
  const double H = rng.uniform(cfg.shelf_height.lo, cfg.shelf_height.hi);
  const double D = rng.uniform(cfg.shelf_depth.lo, cfg.shelf_depth.hi);
  const double p = cfg.shelf_panel;
  const Vec3 c = jitter(rng, cfg.jitter);
  const Vec3 lo = c - 0.5 * Vec3(W, D, H);

  MeshBuilder mb(cfg.mesh_edge);
  mb.box(lo, lo + Vec3(p, D, H));
  mb.box(lo + Vec3(W - p, 0, 0), lo + Vec3(W, D, H));
  mb.box(lo + Vec3(p, D - p, 0), lo + Vec3(W - p, D, H));
  constexpr int boards = 4;
  for (int b = 0; b < boards; ++b) {
    const double z = (H - p) * b / (boards - 1);
    mb.box(lo + Vec3(p, 0, z), lo + Vec3(W - p, D - p, z + p));
  }

  SampleRecord rec;
  rec.category = Category::Shelves;
  rec.mesh = mb.finish();
  const double standoff = cfg.standoff_fraction * characteristic_extent({W, H, D});
  const double nominal_standoff =
      cfg.standoff_fraction * characteristic_extent({cfg.shelf_width.mid(), cfg.shelf_height.mid(), cfg.shelf_depth.mid()});
  const int passes = nominal_passes(cfg, cfg.shelf_height.mid(), nominal_standoff);
  // Long parallel horizontal passes in front of the opening, all left to right.
  const double y = lo.y() - standoff;
  for (int i = 0; i < passes; ++i) {
    const double z = lo.z() + (i + 0.5) * H / passes;
    Polyline pl;
    pl.points = {Vec3(lo.x(), y, z), Vec3(lo.x() + W, y, z)};
    pl.orientation = {Vec3::UnitY()};
    rec.strokes.push_back(pl.resample(count_for_spacing(W, cfg.pose_spacing)));
  }
  return rec;
}

/// Point at arc parameter `a` on the loop offset by `r` around the
/// rectangle [-hx, hx] x [-hy, hy], starting mid front side (y = -hy - r) and
/// running counter-clockwise. Also returns the matching rectangle point.
inline std::pair<Vec3, Vec3> offset_loop_point(double hx, double hy, double r, double a) {
  const double q = 0.5 * std::numbers::pi * r;
  const double sides[4] = {2 * hx, 2 * hy, 2 * hx, 2 * hy};
  const double perim = 4 * hx + 4 * hy + 4 * q;
  a = std::fmod(a, perim);
  if (a < 0)
    a += perim;
  // Start half-way along the front side.
  a += hx;
  a = std::fmod(a, perim);
  // Corners in CCW order: (+hx,-hy), (+hx,+hy), (-hx,+hy), (-hx,-hy).
  const double cx[4] = {hx, hx, -hx, -hx}, cy[4] = {-hy, hy, hy, -hy};
  const double start_angle[4] = {-0.5 * std::numbers::pi, 0.0, 0.5 * std::numbers::pi, std::numbers::pi};
  // Side k runs from corner k-1 to corner k.
  for (int k = 0; k < 4; ++k) {
    if (a <= sides[k]) {
      const int prev = (k + 3) % 4;
      const Vec3 from(cx[prev], cy[prev], 0), to(cx[k], cy[k], 0);
      const Vec3 on = from + (to - from) * (a / sides[k]);
      const double ang = start_angle[k];
      const Vec3 out(std::cos(ang), std::sin(ang), 0);
      return {on + out * r, on};
    }
    a -= sides[k];
    if (a <= q) {
      const double ang = start_angle[k] + a / r;
      const Vec3 corner(cx[k], cy[k], 0);
      return {corner + r * Vec3(std::cos(ang), std::sin(ang), 0), corner};
    }
    a -= q;
  }
  return {Vec3(cx[3] + 0, cy[3] - r, 0), Vec3(cx[3], cy[3], 0)};
}

inline SampleRecord make_container(Rng &rng, const GeneratorConfig &cfg) {
  const double W = rng.uniform(cfg.container_side.lo, cfg.container_side.hi);
  const double D = rng.uniform(cfg.container_side.lo, cfg.container_side.hi);
  const double H = rng.uniform(cfg.container_height.lo, cfg.container_height.hi);
  const Vec3 c = jitter(rng, cfg.jitter);
  const Vec3 lo = c - 0.5 * Vec3(W, D, H);
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();

  MeshBuilder mb(cfg.mesh_edge);
  mb.quad(lo, ex * W, ey * D);
  mb.quad(lo, ex * W, ez * H);
  mb.quad(lo + ey * D, ex * W, ez * H);
  mb.quad(lo, ey * D, ez * H);
  mb.quad(lo + ex * W, ey * D, ez * H);

  SampleRecord rec;
  rec.category = Category::Containers;
  rec.mesh = mb.finish();
  const double standoff = cfg.standoff_fraction * characteristic_extent({W, D, H});
  const double nominal_standoff =
      cfg.standoff_fraction * characteristic_extent({cfg.container_side.mid(), cfg.container_side.mid(),
                                                     cfg.container_height.mid()});
  const double nominal_pitch = pass_pitch(cfg, nominal_standoff);
  const int turns = nominal_passes(cfg, cfg.container_height.mid(), nominal_standoff);

  // Outer spiral descending around the wall loop.
  {
    const double pitch = H / turns;
    const double z_top = lo.z() + H - 0.5 * pitch, z_bot = lo.z() + 0.5 * pitch;
    const double perim = 2 * W + 2 * D + 2 * std::numbers::pi * standoff;
    const double loop_len = perim * turns;
    const double length = std::hypot(loop_len, z_top - z_bot);
    const std::size_t n = count_for_spacing(length, cfg.pose_spacing);
    Stroke s;
    for (std::size_t k = 0; k < n; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(n - 1);
      auto [pos, target] = offset_loop_point(0.5 * W, 0.5 * D, standoff, f * loop_len);
      const double z = z_top + (z_bot - z_top) * f;
      Pose p;
      p.position = Vec3(c.x() + pos.x(), c.y() + pos.y(), z);
      p.orientation = (Vec3(c.x() + target.x(), c.y() + target.y(), z) - p.position).normalized();
      s.poses.push_back(p);
    }
    rec.strokes.push_back(std::move(s));
  }
  // Inner bottom raster from above, inset from the walls.
  {
    const double inset = 1.5 * standoff;
    const double u = W - 2 * inset, v = D - 2 * inset;
    const int passes = std::max(1, static_cast<int>(std::lround((cfg.container_side.mid() - 3 * nominal_standoff) / nominal_pitch)));
    const Vec3 center(c.x(), c.y(), lo.z());
    const auto pl = raster(center, ez, ex, u, ey, v, standoff, passes);
    rec.strokes.push_back(pl.resample(count_for_spacing(pl.length(), cfg.pose_spacing)));
  }
  return rec;
}

} // namespace detail

/// Deterministic per (category, seed, config).
inline SampleRecord generate_object(Category category, std::uint64_t seed, const GeneratorConfig &cfg = {}) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(category) + 101));
  SampleRecord rec;
  switch (category) {
  case Category::Cuboids:
    rec = detail::make_cuboid(rng, cfg);
    break;
  case Category::Windows:
    rec = detail::make_window(rng, cfg);
    break;
  case Category::Shelves:
    rec = detail::make_shelf(rng, cfg);
    break;
  case Category::Containers:
    rec = detail::make_container(rng, cfg);
    break;
  }
  rec.seed = seed;
  return rec;
}

inline std::size_t total_poses(const std::vector<Stroke> &strokes) {
  std::size_t n = 0;
  for (const auto &s : strokes)
    n += s.size();
  return n;
}

/// Proportional per-stroke down-sampling to a total budget `budget`, shares
/// apportioned by largest remainder (ties to the lower stroke index). Each
/// stroke keeps its endpoints and takes evenly strided indices; strokes are
/// never up-sampled, so a budget above the available pose count leaves the
/// affected strokes unchanged.
inline std::vector<Stroke> downsample_strokes(const std::vector<Stroke> &strokes, std::size_t budget) {
  require(!strokes.empty(), "downsample_strokes: no strokes");
  require(budget >= 2 * strokes.size(), "downsample_strokes: budget too small for stroke count");
  for (const auto &s : strokes)
    require(s.size() >= 2, "downsample_strokes: stroke shorter than 2 poses");
  const std::size_t total = total_poses(strokes);
  const std::size_t m = strokes.size();
  std::vector<std::size_t> count(m), rem(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const unsigned __int128 q = static_cast<unsigned __int128>(budget) * strokes[i].size();
    count[i] = static_cast<std::size_t>(q / total);
    rem[i] = static_cast<std::size_t>(q % total);
    assigned += count[i];
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < budget && k < m; ++k, ++assigned)
    ++count[order[k]];

  std::vector<Stroke> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto &s = strokes[i];
    const auto n_in = static_cast<long long>(s.size());
    const long long n = std::clamp<long long>(static_cast<long long>(count[i]), 2, n_in);
    Stroke d;
    d.poses.reserve(static_cast<std::size_t>(n));
    for (long long j = 0; j < n; ++j) {
      // round(j * (n_in - 1) / (n - 1)) in exact integer arithmetic
      const long long idx = (2 * j * (n_in - 1) + (n - 1)) / (2 * (n - 1));
      d.poses.push_back(s.poses[static_cast<std::size_t>(idx)]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline void validate_window(int lambda, int overlap) {
  require(lambda >= 1, "segment length must be >= 1");
  if (lambda == 1)
    require(overlap == 0, "single-pose segments cannot overlap");
  else
    require(overlap >= 1 && overlap < lambda, "overlap must satisfy 1 <= overlap < lambda");
}

/// Windows of a stroke of length n: floor((n - lambda) / (lambda - overlap)) + 1.
inline std::size_t segments_per_stroke(std::size_t n, int lambda, int overlap) {
  validate_window(lambda, overlap);
  const auto l = static_cast<std::size_t>(lambda);
  if (n < l)
    return 0;
  return (n - l) / static_cast<std::size_t>(lambda - overlap) + 1;
}

/// Output slot count that fits every sample with `total_poses` poses.
inline std::size_t output_slot_count(std::size_t total_poses, int lambda, int overlap) {
  require(total_poses >= static_cast<std::size_t>(lambda), "output_slot_count: fewer poses than lambda");
  return segments_per_stroke(total_poses, lambda, overlap);
}

/// Sliding windows with stride lambda - overlap; trailing poses that do not
/// fill a window are dropped.
inline SegmentSet decompose_segments(const std::vector<Stroke> &strokes, int lambda, int overlap) {
  validate_window(lambda, overlap);
  SegmentSet out;
  out.lambda = lambda;
  out.overlap = overlap;
  const auto stride = static_cast<std::size_t>(lambda - overlap);
  for (const auto &s : strokes) {
    require(s.size() >= static_cast<std::size_t>(lambda), "decompose_segments: stroke shorter than lambda");
    const std::size_t count = segments_per_stroke(s.size(), lambda, overlap);
    for (std::size_t k = 0; k < count; ++k) {
      Segment seg;
      const auto begin = s.poses.begin() + static_cast<std::ptrdiff_t>(k * stride);
      seg.poses.assign(begin, begin + lambda);
      out.segments.push_back(std::move(seg));
    }
  }
  return out;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Random 80/20 index split (train share rounded to nearest), each side
/// sorted ascending.
inline Split split_indices(std::size_t n, std::uint64_t seed) {
  require(n >= 5, "split needs at least 5 records");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = i;
  Rng rng(mix_seed(seed, 0x5711));
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

template <typename Record>
std::pair<std::vector<Record>, std::vector<Record>> split_dataset(const std::vector<Record> &records,
                                                                  std::uint64_t seed) {
  const Split s = split_indices(records.size(), seed);
  std::pair<std::vector<Record>, std::vector<Record>> out;
  for (auto i : s.train)
    out.first.push_back(records[i]);
  for (auto i : s.test)
    out.second.push_back(records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Stroke and record files.

inline void write_stroke(std::ostream &out, const Stroke &s) {
  for (const auto &p : s.poses)
    out << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
        << format_double(p.position.z()) << ' ' << format_double(p.orientation.x()) << ' '
        << format_double(p.orientation.y()) << ' ' << format_double(p.orientation.z()) << '\n';
}

inline Pose parse_pose(const std::vector<std::string_view> &tok, std::size_t first) {
  Pose p;
  p.position = Vec3(parse_double(tok[first]), parse_double(tok[first + 1]), parse_double(tok[first + 2]));
  p.orientation = Vec3(parse_double(tok[first + 3]), parse_double(tok[first + 4]), parse_double(tok[first + 5]));
  return p;
}

inline Stroke read_stroke(std::istream &in) {
  Stroke s;
  std::string line;
  while (std::getline(in, line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#')
      continue;
    if (tok.size() != 6)
      throw IoError("stroke line must have 6 values");
    s.poses.push_back(parse_pose(tok, 0));
  }
  return s;
}

inline void save_stroke(const std::filesystem::path &path, const Stroke &s) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write stroke file " + path.string());
  write_stroke(out, s);
}

inline Stroke load_stroke(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open stroke file " + path.string());
  try {
    return read_stroke(in);
  } catch (const IoError &e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline std::string stroke_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "stroke_%03zu.txt", i);
  return buf;
}

/// Writes stroke_000.txt, stroke_001.txt, ... into `dir`.
inline void save_strokes(const std::filesystem::path &dir, const std::vector<Stroke> &strokes) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < strokes.size(); ++i)
    save_stroke(dir / stroke_file_name(i), strokes[i]);
}

inline std::vector<Stroke> load_strokes(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("not a stroke directory: " + dir.string());
  std::vector<Stroke> out;
  for (std::size_t i = 0;; ++i) {
    const auto p = dir / stroke_file_name(i);
    if (!std::filesystem::exists(p))
      break;
    out.push_back(load_stroke(p));
  }
  return out;
}

/// Record directory: mesh.obj, stroke_NNN.txt, meta.txt.
inline void save_record(const std::filesystem::path &dir, const SampleRecord &rec, const KeyValues &extra = {}) {
  std::filesystem::create_directories(dir);
  save_mesh(dir / "mesh.obj", rec.mesh);
  save_strokes(dir, rec.strokes);
  KeyValues meta = extra;
  meta.set("category", to_string(rec.category));
  meta.set("seed", std::to_string(rec.seed));
  meta.set("strokes", rec.strokes.size());
  meta.save(dir / "meta.txt");
}

inline SampleRecord load_record(const std::filesystem::path &dir) {
  SampleRecord rec;
  const auto meta = KeyValues::load(dir / "meta.txt");
  rec.category = parse_category(meta.get("category"));
  rec.seed = static_cast<std::uint64_t>(std::stoull(meta.get("seed")));
  rec.mesh = load_mesh(dir / "mesh.obj").mesh;
  rec.strokes = load_strokes(dir);
  if (rec.strokes.size() != static_cast<std::size_t>(meta.get_int("strokes")))
    throw IoError("stroke count mismatch in " + dir.string());
  return rec;
}

} // namespace paintpath
