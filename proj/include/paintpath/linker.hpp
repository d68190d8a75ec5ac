#pragma once

// Greedy, degree-constrained linking of predicted segments into strokes.

#include "objective.hpp"

#include <queue>
#include <tuple>

namespace paintpath {

struct LinkConfig {
  double tau = 0.15;
  LossWeights weights{};

  void validate() const {
    require(tau >= 0.0 && !std::isnan(tau), "tau must be >= 0");
    weights.validate();
  }
};

/// Directed successor graph over segment indices; -1 means no edge.
struct LinkGraph {
  std::vector<int> next;
  std::vector<int> prev;

  explicit LinkGraph(std::size_t n = 0) : next(n, -1), prev(n, -1) {}

  std::size_t size() const { return next.size(); }
  int out_degree(std::size_t k) const { return next[k] >= 0 ? 1 : 0; }
  int in_degree(std::size_t k) const { return prev[k] >= 0 ? 1 : 0; }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (int j : next)
      n += j >= 0;
    return n;
  }
};

/// Proximity of j's start to k's end plus mismatch of their step directions
/// (positions only).
inline double link_distance(const Segment &k, const Segment &j, const LossWeights &w) {
  require(k.size() >= 2 && j.size() >= 2, "link_distance: segments need at least 2 poses");
  const std::size_t L = k.size();
  const Vec3 step_k = k.poses[L - 1].position - k.poses[L - 2].position;
  const Vec3 step_j = j.poses[1].position - j.poses[0].position;
  return weighted_pose_distance(k.back(), j.front(), w) + (step_k - step_j).squaredNorm();
}

/// Commits edges k -> argmin_j d(k, j) in ascending d while d < tau, keeping
/// out- and in-degree at most one. A candidate whose target got taken is
/// re-evaluated against the remaining free targets. Ties resolve by (k, j).
inline LinkGraph link_segments(const SegmentSet &Y, const LinkConfig &cfg) {
  cfg.validate();
  const std::size_t n = Y.size();
  LinkGraph g(n);
  if (n < 2 || Y.lambda < 2)
    return g;
  for (const auto &s : Y.segments)
    require(s.size() == static_cast<std::size_t>(Y.lambda), "concatenate: segment length differs from lambda");

  // Candidate distances are reused on re-evaluation.
  std::vector<double> dist(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      dist[k * n + j] = k == j ? std::numeric_limits<double>::infinity()
                               : link_distance(Y.segments[k], Y.segments[j], cfg.weights);

  using Cand = std::tuple<double, std::size_t, std::size_t>;
  std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> queue;
  auto best_free = [&](std::size_t k) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j)
      if (j != k && g.prev[j] < 0 && (best == n || dist[k * n + j] < dist[k * n + best]))
        best = j;
    return best;
  };
  auto push = [&](std::size_t k) {
    const std::size_t j = best_free(k);
    if (j < n && dist[k * n + j] < cfg.tau)
      queue.emplace(dist[k * n + j], k, j);
  };
  for (std::size_t k = 0; k < n; ++k)
    push(k);
  while (!queue.empty()) {
    const auto [d, k, j] = queue.top();
    queue.pop();
    if (g.next[k] >= 0)
      continue;
    if (g.prev[j] >= 0) {
      push(k);
      continue;
    }
    g.next[k] = static_cast<int>(j);
    g.prev[j] = static_cast<int>(k);
  }
  return g;
}

/// Opens every cycle by removing the edge entering its smallest index.
inline void cut_cycles(LinkGraph &g) {
  const std::size_t n = g.size();
  std::vector<char> seen(n, 0);
  for (std::size_t h = 0; h < n; ++h)
    if (g.prev[h] < 0)
      for (int k = static_cast<int>(h); k >= 0 && !seen[k]; k = g.next[k])
        seen[k] = 1;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s])
      continue;
    // s is the smallest unseen index, hence the smallest index on its cycle.
    const int pred = g.prev[s];
    g.next[pred] = -1;
    g.prev[s] = -1;
    for (int k = static_cast<int>(s); k >= 0 && !seen[k]; k = g.next[k])
      seen[k] = 1;
  }
}

/// Junction pose: mean position and re-normalized mean orientation.
/// Identical orientations are kept bit-for-bit.
inline Pose merge_poses(const Pose &a, const Pose &b) {
  Pose m;
  m.position = 0.5 * (a.position + b.position);
  m.orientation = a.orientation == b.orientation ? a.orientation : normalized_or_fallback(a.orientation + b.orientation);
  return m;
}

/// Emits one stroke per chain, heads in ascending index order.
inline std::vector<Stroke> emit_strokes(const SegmentSet &Y, const LinkGraph &g) {
  std::vector<Stroke> out;
  for (std::size_t h = 0; h < g.size(); ++h) {
    if (g.prev[h] >= 0)
      continue;
    Stroke s;
    s.poses = Y.segments[h].poses;
    for (int k = g.next[h]; k >= 0; k = g.next[k]) {
      const auto &seg = Y.segments[static_cast<std::size_t>(k)].poses;
      s.poses.back() = merge_poses(s.poses.back(), seg.front());
      s.poses.insert(s.poses.end(), seg.begin() + 1, seg.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct ConcatResult {
  std::vector<Stroke> strokes;
  LinkGraph graph;
};

inline ConcatResult concatenate(const SegmentSet &Y, const LinkConfig &cfg) {
  ConcatResult r;
  r.graph = link_segments(Y, cfg);
  cut_cycles(r.graph);
  r.strokes = emit_strokes(Y, r.graph);
  return r;
}

/// Each segment as its own stroke (no post-processing).
inline std::vector<Stroke> segments_as_strokes(const SegmentSet &Y) {
  std::vector<Stroke> out;
  out.reserve(Y.size());
  for (const auto &s : Y.segments)
    out.push_back(Stroke{s.poses});
  return out;
}

} // namespace paintpath
