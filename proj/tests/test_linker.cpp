#include "support.hpp"

#include <gtest/gtest.h>

using namespace paintpath;
using namespace paintpath::testing;

namespace {

Segment line_segment(Vec3 start, Vec3 step, int lambda) {
  Segment s;
  for (int l = 0; l < lambda; ++l)
    s.poses.push_back(Pose{start + static_cast<double>(l) * step, Vec3::UnitZ()});
  return s;
}

Stroke wavy_stroke(std::size_t n, const Vec3 &origin) {
  Stroke s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 0.05 * static_cast<double>(i);
    s.poses.push_back(Pose{origin + Vec3(t, 0.1 * std::sin(3 * t), 0), Vec3(0.1 * std::cos(t), 0, -1).normalized()});
  }
  return s;
}

void expect_degree_constraints(const LinkGraph &g) {
  std::vector<int> in(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.next[k] < 0)
      continue;
    EXPECT_NE(g.next[k], static_cast<int>(k));
    EXPECT_EQ(g.prev[static_cast<std::size_t>(g.next[k])], static_cast<int>(k));
    ++in[static_cast<std::size_t>(g.next[k])];
  }
  for (int d : in)
    EXPECT_LE(d, 1);
}

std::size_t pose_count(const std::vector<Stroke> &strokes) {
  std::size_t n = 0;
  for (const auto &s : strokes)
    n += s.size();
  return n;
}

} // namespace

TEST(LinkDistance, Examples) {
  const LossWeights w{};
  const Segment k = line_segment(Vec3::Zero(), Vec3(0.1, 0, 0), 4);
  const Segment k2 = line_segment(Vec3::Zero(), Vec3(0.125, 0, 0), 4);
  EXPECT_EQ(link_distance(k2, line_segment(Vec3(0.375, 0, 0), Vec3(0.125, 0, 0), 4), w), 0.0);
  EXPECT_NEAR(link_distance(k, line_segment(Vec3(0.3, 0, 0), Vec3(-0.1, 0, 0), 4), w), 0.04, 1e-15);
  EXPECT_NEAR(link_distance(k, line_segment(Vec3(0.5, 0, 0), Vec3(0.1, 0, 0), 4), w), 0.04, 1e-15);
}

TEST(Concatenate, SingleStrokeRoundTrip) {
  const Stroke s = wavy_stroke(23, Vec3::Zero());
  const auto Y = decompose_segments({s}, 4, 1);
  const auto r = concatenate(Y, LinkConfig{1e9, {}});
  ASSERT_EQ(r.strokes.size(), 1u);
  // 23 poses give 7 segments covering the first 22.
  ASSERT_EQ(r.strokes[0].size(), 22u);
  for (std::size_t i = 0; i < 22; ++i)
    EXPECT_EQ(r.strokes[0].poses[i], s.poses[i]);
}

TEST(Concatenate, ZeroTauKeepsSegments) {
  const auto Y = decompose_segments({wavy_stroke(31, Vec3::Zero())}, 4, 1);
  const auto r = concatenate(Y, LinkConfig{0.0, {}});
  ASSERT_EQ(r.strokes.size(), Y.size());
  for (std::size_t k = 0; k < Y.size(); ++k)
    EXPECT_EQ(r.strokes[k].poses, Y.segments[k].poses);
}

TEST(Concatenate, TwoDistantGroups) {
  auto Y = decompose_segments({wavy_stroke(19, Vec3::Zero()), wavy_stroke(19, Vec3(10, 10, 0))}, 4, 1);
  // Interleave so the groups are not contiguous in index order.
  Rng rng(3);
  rng.shuffle(Y.segments);
  const auto r = concatenate(Y, LinkConfig{});
  EXPECT_EQ(r.strokes.size(), 2u);
}

TEST(Concatenate, JunctionAveraging) {
  SegmentSet Y;
  Y.lambda = 2;
  Segment a, b;
  a.poses = {Pose{Vec3(0, 0, 0), Vec3::UnitZ()}, Pose{Vec3(1, 0, 0), Vec3::UnitZ()}};
  b.poses = {Pose{Vec3(1, 0.02, 0), Vec3::UnitX()}, Pose{Vec3(2, 0.02, 0), Vec3::UnitX()}};
  Y.segments = {a, b};
  const auto r = concatenate(Y, LinkConfig{10.0, {}});
  ASSERT_EQ(r.strokes.size(), 1u);
  ASSERT_EQ(r.strokes[0].size(), 3u);
  EXPECT_TRUE(r.strokes[0].poses[1].position.isApprox(Vec3(1, 0.01, 0)));
  EXPECT_TRUE(r.strokes[0].poses[1].orientation.isApprox(Vec3(1, 0, 1).normalized()));
}

TEST(Concatenate, CycleIsCutAtSmallestIndex) {
  // Square loop split into four segments, given in rotated order.
  SegmentSet Y;
  Y.lambda = 3;
  const Vec3 c[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  for (int i : {2, 3, 0, 1}) {
    Segment s;
    const Vec3 a = c[i], b = c[(i + 1) % 4];
    for (int l = 0; l < 3; ++l)
      s.poses.push_back(Pose{a + 0.5 * l * (b - a), Vec3::UnitZ()});
    Y.segments.push_back(s);
  }
  const auto r = concatenate(Y, LinkConfig{10.0, {}});
  ASSERT_EQ(r.strokes.size(), 1u);
  EXPECT_EQ(r.graph.edge_count(), 3u);
  EXPECT_EQ(r.strokes[0].poses.front(), Y.segments[0].poses.front());
  EXPECT_EQ(r.strokes[0].size(), 12u - 3u);
}

TEST(Concatenate, PropertiesOnRandomInput) {
  Rng rng(11);
  for (int t = 0; t < 60; ++t) {
    const auto Y = random_segments(rng, 2 + rng.below(20), 2 + static_cast<int>(rng.below(4)), 0.5);
    std::size_t prev_edges = 0;
    for (double tau : {0.0, 0.05, 0.2, 0.5, 1.0, 3.0, 1e9}) {
      const auto r = concatenate(Y, LinkConfig{tau, {}});
      expect_degree_constraints(r.graph);
      EXPECT_EQ(pose_count(r.strokes), Y.size() * static_cast<std::size_t>(Y.lambda) - r.graph.edge_count());
      // Chains only: after cycle cutting every stroke starts at a head.
      std::size_t heads = 0;
      for (std::size_t k = 0; k < r.graph.size(); ++k)
        heads += r.graph.prev[k] < 0;
      EXPECT_EQ(heads, r.strokes.size());
      // Before cycle cuts, committed edges are monotone in tau.
      const auto g = link_segments(Y, LinkConfig{tau, {}});
      expect_degree_constraints(g);
      EXPECT_GE(g.edge_count(), prev_edges);
      prev_edges = g.edge_count();
    }
  }
}

TEST(Concatenate, DeterministicAndIdempotent) {
  const Stroke s = wavy_stroke(40, Vec3::Zero());
  const auto Y = decompose_segments({s}, 4, 1);
  const LinkConfig cfg{1e9, {}};
  const auto a = concatenate(Y, cfg).strokes;
  EXPECT_EQ(concatenate(Y, cfg).strokes, a);
  const auto again = concatenate(decompose_segments(a, 4, 1), cfg).strokes;
  EXPECT_EQ(again, a);
}

TEST(Concatenate, RejectsMixedLengths) {
  SegmentSet Y;
  Y.lambda = 3;
  Y.segments = {line_segment(Vec3::Zero(), Vec3(1, 0, 0), 3), line_segment(Vec3::Zero(), Vec3(1, 0, 0), 2)};
  EXPECT_THROW(concatenate(Y, LinkConfig{}), ValidationError);
  EXPECT_THROW((LinkConfig{-1.0, {}}.validate()), ValidationError);
}

TEST(SegmentsAsStrokes, OneStrokePerSegment) {
  const auto Y = decompose_segments({wavy_stroke(13, Vec3::Zero())}, 4, 1);
  const auto s = segments_as_strokes(Y);
  ASSERT_EQ(s.size(), Y.size());
  EXPECT_EQ(s[1].poses, Y.segments[1].poses);
}
