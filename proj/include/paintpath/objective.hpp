#pragma once

// Segment-level training losses with analytic gradients.
//
// Gradients are flat arrays laid out as [segment][pose][px py pz ox oy oz],
// i.e. entry ((k * lambda) + l) * 6 + c.

#include "synthdata.hpp"

#include <limits>

namespace paintpath {

struct LossWeights {
  double alpha = 0.5;
  double orientation_weight = 0.25;

  void validate() const {
    require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
    require(std::isfinite(orientation_weight) && orientation_weight >= 0.0,
            "orientation weight must be finite and >= 0");
  }
};

struct LossReport {
  double total = 0.0;
  double y2s = 0.0;
  double b2e = 0.0;
  std::vector<double> gradient;
};

struct LossGrad {
  double value = 0.0;
  std::vector<double> gradient;
};

inline constexpr int kPoseDims = 6;

/// Squared position distance plus weighted squared orientation distance.
/// For unit orientations the second term equals 2 - 2 cos(angle).
inline double weighted_pose_distance(const Pose &a, const Pose &b, const LossWeights &w) {
  return (a.position - b.position).squaredNorm() + w.orientation_weight * (a.orientation - b.orientation).squaredNorm();
}

inline double segment_distance_sq(const Segment &y, const Segment &s, const LossWeights &w) {
  require(y.size() == s.size(), "segment_distance_sq: length mismatch");
  double d = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l)
    d += weighted_pose_distance(y.poses[l], s.poses[l], w);
  return d;
}

// ---------------------------------------------------------------------------
// Flat-array kernels. A row is one segment of `row` = lambda * 6 doubles.

namespace detail {

inline std::vector<double> flatten(const SegmentSet &set) {
  std::vector<double> out;
  out.reserve(set.size() * static_cast<std::size_t>(set.lambda) * kPoseDims);
  for (const auto &s : set.segments) {
    require(s.size() == static_cast<std::size_t>(set.lambda), "segment length differs from lambda");
    for (const auto &p : s.poses) {
      out.insert(out.end(), {p.position.x(), p.position.y(), p.position.z()});
      out.insert(out.end(), {p.orientation.x(), p.orientation.y(), p.orientation.z()});
    }
  }
  return out;
}

inline double row_distance(const double *a, const double *b, std::size_t row, double wo) {
  double d = 0.0;
  for (std::size_t i = 0; i < row; i += kPoseDims) {
    const double p0 = a[i] - b[i], p1 = a[i + 1] - b[i + 1], p2 = a[i + 2] - b[i + 2];
    const double o0 = a[i + 3] - b[i + 3], o1 = a[i + 4] - b[i + 4], o2 = a[i + 5] - b[i + 5];
    d += p0 * p0 + p1 * p1 + p2 * p2 + wo * (o0 * o0 + o1 * o1 + o2 * o2);
  }
  return d;
}

/// grad[a] += scale * d/da dist(a, b)
inline void add_row_grad(double *grad, const double *a, const double *b, std::size_t row, double wo, double scale) {
  for (std::size_t i = 0; i < row; i += kPoseDims) {
    for (int c = 0; c < 3; ++c)
      grad[i + c] += scale * 2.0 * (a[i + c] - b[i + c]);
    for (int c = 3; c < 6; ++c)
      grad[i + c] += scale * 2.0 * wo * (a[i + c] - b[i + c]);
  }
}

/// Symmetric Chamfer between rows of y (ny rows) and s (ns rows); gradient
/// with respect to y is accumulated into `grad` (same layout as y).
inline double chamfer_rows(std::span<const double> y, std::size_t ny, std::span<const double> s, std::size_t ns,
                           std::size_t row, double wo, double *grad) {
  require(ny > 0 && ns > 0, "chamfer: empty segment set");
  std::vector<double> dist(ny * ns);
  for (std::size_t k = 0; k < ny; ++k)
    for (std::size_t j = 0; j < ns; ++j)
      dist[k * ns + j] = row_distance(&y[k * row], &s[j * row], row, wo);

  double fwd = 0.0;
  const double inv_ny = 1.0 / static_cast<double>(ny);
  for (std::size_t k = 0; k < ny; ++k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < ns; ++j)
      if (dist[k * ns + j] < dist[k * ns + best])
        best = j;
    fwd += dist[k * ns + best];
    if (grad)
      add_row_grad(grad + k * row, &y[k * row], &s[best * row], row, wo, inv_ny);
  }
  double bwd = 0.0;
  const double inv_ns = 1.0 / static_cast<double>(ns);
  for (std::size_t j = 0; j < ns; ++j) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < ny; ++k)
      if (dist[k * ns + j] < dist[best * ns + j])
        best = k;
    bwd += dist[best * ns + j];
    if (grad)
      add_row_grad(grad + best * row, &y[best * row], &s[j * row], row, wo, inv_ns);
  }
  return fwd * inv_ny + bwd * inv_ns;
}

/// Begin-to-end attraction over rows of y; pose offsets for the first and
/// last pose of a row are 0 and (lambda - 1) * 6.
inline double attraction_rows(std::span<const double> y, std::size_t ny, int lambda, double wo, double *grad) {
  if (ny < 2)
    return 0.0;
  const std::size_t row = static_cast<std::size_t>(lambda) * kPoseDims;
  const std::size_t last = static_cast<std::size_t>(lambda - 1) * kPoseDims;
  const double scale = 1.0 / (2.0 * static_cast<double>(ny));
  double sum = 0.0;
  // from_off: pose of k being attracted; to_off: pose of j it is attracted to.
  auto pass = [&](std::size_t from_off, std::size_t to_off) {
    for (std::size_t k = 0; k < ny; ++k) {
      const double *a = &y[k * row + from_off];
      std::size_t best = std::numeric_limits<std::size_t>::max();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ny; ++j) {
        if (j == k)
          continue;
        const double d = row_distance(a, &y[j * row + to_off], kPoseDims, wo);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      sum += best_d;
      if (grad) {
        const double *b = &y[best * row + to_off];
        add_row_grad(grad + k * row + from_off, a, b, kPoseDims, wo, scale);
        add_row_grad(grad + best * row + to_off, b, a, kPoseDims, wo, scale);
      }
    }
  };
  pass(0, last);
  pass(last, 0);
  return sum * scale;
}

} // namespace detail

/// Symmetric segment Chamfer: mean over Y of the nearest S distance plus
/// mean over S of the nearest Y distance. Ties go to the lowest index.
inline LossGrad chamfer_segments(const SegmentSet &Y, const SegmentSet &S, const LossWeights &w) {
  require(!Y.empty() && !S.empty(), "chamfer_segments: empty segment set");
  require(Y.lambda == S.lambda, "chamfer_segments: lambda mismatch");
  const auto y = detail::flatten(Y);
  const auto s = detail::flatten(S);
  LossGrad out;
  out.gradient.assign(y.size(), 0.0);
  out.value = detail::chamfer_rows(y, Y.size(), s, S.size(), static_cast<std::size_t>(Y.lambda) * kPoseDims,
                                   w.orientation_weight, out.gradient.data());
  return out;
}

/// Pulls every segment's first pose toward some other segment's last pose and
/// vice versa. Defined as 0 for fewer than two segments.
inline LossGrad attraction_loss(const SegmentSet &Y, const LossWeights &w) {
  const auto y = detail::flatten(Y);
  LossGrad out;
  out.gradient.assign(y.size(), 0.0);
  out.value = detail::attraction_rows(y, Y.size(), Y.lambda, w.orientation_weight, out.gradient.data());
  return out;
}

/// L = chamfer + alpha * attraction, on flat prediction rows.
inline LossReport total_loss_flat(std::span<const double> y, std::size_t ny, std::span<const double> s,
                                  std::size_t ns, int lambda, const LossWeights &w) {
  w.validate();
  const std::size_t row = static_cast<std::size_t>(lambda) * kPoseDims;
  LossReport rep;
  rep.gradient.assign(y.size(), 0.0);
  rep.y2s = detail::chamfer_rows(y, ny, s, ns, row, w.orientation_weight, rep.gradient.data());
  if (w.alpha > 0.0) {
    std::vector<double> g(y.size(), 0.0);
    rep.b2e = detail::attraction_rows(y, ny, lambda, w.orientation_weight, g.data());
    for (std::size_t i = 0; i < g.size(); ++i)
      rep.gradient[i] += w.alpha * g[i];
  } else {
    rep.b2e = detail::attraction_rows(y, ny, lambda, w.orientation_weight, nullptr);
  }
  rep.total = rep.y2s + w.alpha * rep.b2e;
  return rep;
}

inline LossReport total_loss(const SegmentSet &Y, const SegmentSet &S, const LossWeights &w) {
  require(!Y.empty() && !S.empty(), "total_loss: empty segment set");
  require(Y.lambda == S.lambda, "total_loss: lambda mismatch");
  const auto y = detail::flatten(Y);
  const auto s = detail::flatten(S);
  return total_loss_flat(y, Y.size(), s, S.size(), Y.lambda, w);
}

/// Index-aligned squared error (multi-path regression baseline): mean over
/// rows of the row distance. Reported in the y2s slot; b2e is zero.
inline LossReport regression_loss_flat(std::span<const double> y, std::span<const double> s, std::size_t rows,
                                       std::size_t row, const LossWeights &w) {
  require(y.size() == s.size() && y.size() == rows * row, "regression_loss: shape mismatch");
  LossReport rep;
  rep.gradient.assign(y.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    rep.y2s += detail::row_distance(&y[k * row], &s[k * row], row, w.orientation_weight) * inv;
    detail::add_row_grad(rep.gradient.data() + k * row, &y[k * row], &s[k * row], row, w.orientation_weight, inv);
  }
  rep.total = rep.y2s;
  return rep;
}

} // namespace paintpath
