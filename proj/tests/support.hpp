#pragma once

// Shared helpers for the unit and acceptance suites.

#include "paintpath/paintpath.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace paintpath::testing {

inline Pose random_pose(Rng &rng, double spread = 1.0) {
  Vec3 o(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  if (o.norm() < 1e-3)
    o = Vec3::UnitZ();
  return Pose{Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread)),
              o.normalized()};
}

inline SegmentSet random_segments(Rng &rng, std::size_t n, int lambda, double spread = 1.0) {
  SegmentSet set;
  set.lambda = lambda;
  set.overlap = lambda > 1 ? 1 : 0;
  for (std::size_t k = 0; k < n; ++k) {
    Segment s;
    for (int l = 0; l < lambda; ++l)
      s.poses.push_back(random_pose(rng, spread));
    set.segments.push_back(std::move(s));
  }
  return set;
}

/// Central finite difference of f at x along every coordinate.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)> &f,
                                            std::span<const double> x0s, double h) {
  std::vector<double> x(x0s.begin(), x0s.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, tiny).
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

/// Smallest gap between the best and second-best candidate in any argmin
/// the Chamfer and attraction terms take; a finite-difference step must stay
/// well below it for the loss to be locally smooth.
inline double min_assignment_gap(std::span<const double> y, std::size_t ny, std::span<const double> s, std::size_t ns,
                                 int lambda, double wo) {
  const std::size_t row = static_cast<std::size_t>(lambda) * kPoseDims;
  double gap = std::numeric_limits<double>::infinity();
  auto second_gap = [](std::vector<double> v) {
    if (v.size() < 2)
      return std::numeric_limits<double>::infinity();
    std::partial_sort(v.begin(), v.begin() + 2, v.end());
    return v[1] - v[0];
  };
  std::vector<double> d;
  for (std::size_t k = 0; k < ny; ++k) {
    d.clear();
    for (std::size_t j = 0; j < ns; ++j)
      d.push_back(detail::row_distance(&y[k * row], &s[j * row], row, wo));
    gap = std::min(gap, second_gap(d));
  }
  for (std::size_t j = 0; j < ns; ++j) {
    d.clear();
    for (std::size_t k = 0; k < ny; ++k)
      d.push_back(detail::row_distance(&y[k * row], &s[j * row], row, wo));
    gap = std::min(gap, second_gap(d));
  }
  const std::size_t last = static_cast<std::size_t>(lambda - 1) * kPoseDims;
  for (auto [from, to] : {std::pair{std::size_t{0}, last}, std::pair{last, std::size_t{0}}})
    for (std::size_t k = 0; k < ny; ++k) {
      d.clear();
      for (std::size_t j = 0; j < ny; ++j)
        if (j != k)
          d.push_back(detail::row_distance(&y[k * row + from], &y[j * row + to], kPoseDims, wo));
      gap = std::min(gap, second_gap(d));
    }
  return gap;
}

/// n x n grid on the plane z = z0 spanning [-half, half]^2.
inline TriMesh plane_grid(int n, double half, double z0, bool flip = false) {
  TriMesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.emplace_back(-half + 2 * half * i / n, -half + 2 * half * j / n, z0);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (flip) {
        m.faces.push_back({id(i, j), id(i, j + 1), id(i + 1, j)});
        m.faces.push_back({id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)});
      } else {
        m.faces.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
        m.faces.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
  return m;
}

inline TriMesh merge_meshes(const TriMesh &a, const TriMesh &b) {
  TriMesh m = a;
  const int off = static_cast<int>(a.vertices.size());
  m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto f : b.faces)
    m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  return m;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto p = std::filesystem::temp_directory_path() / ("paintpath_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Relative path -> file contents for every regular file below `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file())
      continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    out[std::filesystem::relative(e.path(), root).generic_string()] = buf.str();
  }
  return out;
}

} // namespace paintpath::testing
