#include "paintpath/synthdata.hpp"

#include <gtest/gtest.h>

using namespace paintpath;

namespace {

Stroke line_stroke(std::size_t n, double step = 0.1) {
  Stroke s;
  for (std::size_t i = 0; i < n; ++i)
    s.poses.push_back(Pose{Vec3(step * static_cast<double>(i), 0.01 * static_cast<double>(i * i), 0), Vec3(0, 0, -1)});
  return s;
}

/// Oracle: enumerate every window start that fits.
std::vector<std::pair<std::size_t, std::size_t>> enumerate_windows(std::size_t n, int lambda, int overlap) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto stride = static_cast<std::size_t>(lambda - overlap);
  for (std::size_t start = 0; start + static_cast<std::size_t>(lambda) <= n; start += stride)
    out.emplace_back(start, start + static_cast<std::size_t>(lambda) - 1);
  return out;
}

} // namespace

TEST(GenerateObject, CuboidsHaveSixStrokesOf333) {
  const auto rec = generate_object(Category::Cuboids, 0);
  ASSERT_EQ(rec.strokes.size(), 6u);
  for (const auto &s : rec.strokes)
    EXPECT_EQ(s.size(), 333u);
}

TEST(GenerateObject, ContainerSpiralWrapsWallLoop) {
  const auto rec = generate_object(Category::Containers, 7);
  ASSERT_GE(rec.strokes.size(), 1u);
  const auto &spiral = rec.strokes[0];
  Vec3 center = Vec3::Zero();
  for (const auto &v : rec.mesh.vertices)
    center += v;
  center /= static_cast<double>(rec.mesh.vertices.size());
  // Accumulated azimuth around the vertical axis through the object.
  double turned = 0.0;
  for (std::size_t i = 1; i < spiral.size(); ++i) {
    const Vec3 a = spiral.poses[i - 1].position - center, b = spiral.poses[i].position - center;
    turned += std::atan2(a.x() * b.y() - a.y() * b.x(), a.x() * b.x() + a.y() * b.y());
  }
  EXPECT_GT(std::abs(turned), 2 * std::numbers::pi);
  EXPECT_GT(spiral.poses.front().position.z(), spiral.poses.back().position.z());
}

TEST(GenerateObject, DeterministicPerSeed) {
  for (auto c : all_categories()) {
    const auto a = generate_object(c, 3), b = generate_object(c, 3);
    EXPECT_EQ(a.mesh.vertices, b.mesh.vertices);
    EXPECT_EQ(a.mesh.faces, b.mesh.faces);
    EXPECT_EQ(a.strokes, b.strokes);
    EXPECT_NE(generate_object(c, 4).strokes, a.strokes);
  }
}

TEST(GenerateObject, InvalidCategory) { EXPECT_THROW(parse_category("teapots"), ValidationError); }

TEST(GenerateObject, OrientationsAreUnitAndFaceTheSurface) {
  for (auto c : all_categories()) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto rec = generate_object(c, seed);
      for (const auto &s : rec.strokes) {
        ASSERT_GE(s.size(), 2u);
        for (std::size_t i = 0; i < s.size(); i += 17) {
          const Pose &p = s.poses[i];
          EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-6);
          const Vec3 q = closest_point_on_mesh(rec.mesh, p.position);
          const Vec3 to_surface = q - p.position;
          EXPECT_GT(to_surface.norm(), 1e-3) << to_string(c) << " pose touches the surface";
          EXPECT_GT(to_surface.dot(p.orientation), 0.0) << to_string(c) << " seed " << seed << " pose " << i;
        }
        for (std::size_t i = 1; i < s.size(); ++i)
          EXPECT_NE(s.poses[i].position, s.poses[i - 1].position);
      }
    }
  }
}

TEST(DownsampleStrokes, CuboidBudget) {
  const auto rec = generate_object(Category::Cuboids, 0);
  const auto d = downsample_strokes(rec.strokes, 2000);
  ASSERT_EQ(d.size(), 6u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(d[i].size() == 333u || d[i].size() == 334u);
    EXPECT_EQ(d[i].poses.front(), rec.strokes[i].poses.front());
    EXPECT_EQ(d[i].poses.back(), rec.strokes[i].poses.back());
    total += d[i].size();
  }
  // 6 x 333 raw poses sit just under the budget, so nothing is dropped.
  EXPECT_EQ(total, 1998u);
}

TEST(DownsampleStrokes, IdentityAtFullBudget) {
  const auto s = line_stroke(100);
  EXPECT_EQ(downsample_strokes({s}, 100)[0], s);
}

TEST(DownsampleStrokes, HalfBudgetUniformStride) {
  const auto s = line_stroke(100);
  const auto d = downsample_strokes({s}, 50)[0];
  ASSERT_EQ(d.size(), 50u);
  EXPECT_EQ(d.poses.front(), s.poses.front());
  EXPECT_EQ(d.poses.back(), s.poses.back());
  // Index j maps to round(j * 99 / 49).
  for (std::size_t j = 0; j < 50; ++j) {
    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(j) * 99.0 / 49.0));
    EXPECT_EQ(d.poses[j], s.poses[idx]) << j;
  }
}

TEST(DownsampleStrokes, ProportionalAndOrdered) {
  const std::vector<Stroke> strokes{line_stroke(300), line_stroke(100)};
  const auto d = downsample_strokes(strokes, 200);
  EXPECT_EQ(d[0].size(), 150u);
  EXPECT_EQ(d[1].size(), 50u);
  for (std::size_t i = 1; i < d[0].size(); ++i)
    EXPECT_GT(d[0].poses[i].position.x(), d[0].poses[i - 1].position.x());
}

TEST(DownsampleStrokes, TotalMatchesBudgetExactly) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<Stroke> strokes;
    std::size_t total = 0;
    for (std::size_t i = 0, n = 1 + rng.below(8); i < n; ++i) {
      strokes.push_back(line_stroke(2 + rng.below(60)));
      total += strokes.back().size();
    }
    const std::size_t budget = 2 * strokes.size() + rng.below(total - 2 * strokes.size() + 1);
    const auto d = downsample_strokes(strokes, budget);
    std::size_t got = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      got += d[i].size();
      EXPECT_LE(d[i].size(), strokes[i].size());
    }
    // Clamping to two poses per stroke can only push the total up.
    EXPECT_GE(got, budget);
    if (got != budget) {
      bool clamped = false;
      for (const auto &s : d)
        clamped |= s.size() == 2;
      EXPECT_TRUE(clamped);
    }
  }
}

TEST(DownsampleStrokes, BudgetTooSmall) {
  EXPECT_THROW(downsample_strokes({line_stroke(10), line_stroke(10)}, 3), ValidationError);
}

TEST(DecomposeSegments, TenPosesLambdaFour) {
  const auto s = line_stroke(10);
  const auto set = decompose_segments({s}, 4, 1);
  ASSERT_EQ(set.size(), 3u);
  const auto windows = enumerate_windows(10, 4, 1);
  ASSERT_EQ(windows.size(), 3u);
  EXPECT_EQ(windows[0], (std::pair<std::size_t, std::size_t>(0, 3)));
  EXPECT_EQ(windows[1], (std::pair<std::size_t, std::size_t>(3, 6)));
  EXPECT_EQ(windows[2], (std::pair<std::size_t, std::size_t>(6, 9)));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < 4; ++l)
      EXPECT_EQ(set.segments[k].poses[l], s.poses[windows[k].first + l]);
}

TEST(DecomposeSegments, ExactFit) { EXPECT_EQ(decompose_segments({line_stroke(4)}, 4, 1).size(), 1u); }

TEST(DecomposeSegments, CuboidCount) {
  const auto rec = generate_object(Category::Cuboids, 0);
  const auto set = decompose_segments(rec.strokes, 4, 1);
  std::size_t enumerated = 0;
  for (const auto &s : rec.strokes)
    enumerated += enumerate_windows(s.size(), 4, 1).size();
  EXPECT_EQ(enumerated, 660u);
  EXPECT_EQ(set.size(), 660u);
}

TEST(DecomposeSegments, ShortStrokeIsError) {
  EXPECT_THROW(decompose_segments({line_stroke(3)}, 4, 1), ValidationError);
  EXPECT_THROW(decompose_segments({line_stroke(10)}, 4, 4), ValidationError);
  EXPECT_THROW(decompose_segments({line_stroke(10)}, 4, 0), ValidationError);
}

TEST(DecomposeSegments, PointwiseWindows) {
  const auto set = decompose_segments({line_stroke(7)}, 1, 0);
  EXPECT_EQ(set.size(), 7u);
}

TEST(DecomposeSegments, CountMatchesEnumerationExhaustively) {
  for (std::size_t n = 1; n <= 50; ++n)
    for (int lambda = 2; lambda <= 10; ++lambda)
      for (int overlap = 1; overlap < lambda; ++overlap)
        EXPECT_EQ(segments_per_stroke(n, lambda, overlap), enumerate_windows(n, lambda, overlap).size())
            << n << ' ' << lambda << ' ' << overlap;
}

TEST(DecomposeSegments, ConcatenationRoundTripIsBitwise) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    Stroke s;
    const auto n = 5 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i)
      s.poses.push_back(Pose{Vec3(rng.uniform(), rng.uniform(), rng.uniform()), Vec3(rng.uniform(), 1, 0).normalized()});
    const int lambda = 2 + static_cast<int>(rng.below(4));
    const int overlap = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(lambda - 1)));
    const auto set = decompose_segments({s}, lambda, overlap);
    std::vector<Pose> joined = set.segments[0].poses;
    for (std::size_t k = 1; k < set.size(); ++k)
      joined.insert(joined.end(), set.segments[k].poses.begin() + overlap, set.segments[k].poses.end());
    ASSERT_LE(joined.size(), s.size());
    for (std::size_t i = 0; i < joined.size(); ++i)
      EXPECT_EQ(joined[i], s.poses[i]);
    EXPECT_GT(joined.size() + static_cast<std::size_t>(lambda - overlap), s.size() - 1);
  }
}

TEST(OutputSlotCount, Formula) {
  EXPECT_EQ(output_slot_count(2000, 4, 1), 666u);
  EXPECT_EQ(output_slot_count(4, 4, 1), 1u);
  const std::vector<Stroke> two{line_stroke(10), line_stroke(10)};
  const std::size_t k = decompose_segments(two, 4, 1).size();
  EXPECT_EQ(k, 6u);
  EXPECT_EQ(output_slot_count(20, 4, 1), 6u);
  EXPECT_GE(output_slot_count(20, 4, 1), k);
}

TEST(OutputSlotCount, BoundsEverySplitOfTheBudget) {
  // Splitting a fixed pose total across strokes can only lose windows.
  for (std::size_t total = 10; total <= 40; ++total)
    for (std::size_t a = 4; a + 4 <= total; ++a) {
      const std::vector<Stroke> two{line_stroke(a), line_stroke(total - a)};
      EXPECT_GE(output_slot_count(total, 4, 1), decompose_segments(two, 4, 1).size());
    }
}

TEST(SplitDataset, Proportions) {
  std::vector<int> recs(100);
  for (int i = 0; i < 100; ++i)
    recs[static_cast<std::size_t>(i)] = i;
  auto [train, test] = split_dataset(recs, 1);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  std::vector<int> all = train;
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, recs);

  auto s5 = split_indices(5, 3);
  EXPECT_EQ(s5.train.size(), 4u);
  EXPECT_EQ(s5.test.size(), 1u);
}

TEST(SplitDataset, DeterministicAndValidated) {
  EXPECT_EQ(split_indices(50, 9).test, split_indices(50, 9).test);
  EXPECT_NE(split_indices(50, 9).test, split_indices(50, 10).test);
  EXPECT_THROW(split_indices(4, 1), ValidationError);
}

TEST(RecordIo, RoundTrip) {
  const auto rec = generate_object(Category::Windows, 2);
  const auto dir = std::filesystem::temp_directory_path() / "paintpath_record_test";
  std::filesystem::remove_all(dir);
  save_record(dir, rec);
  const auto back = load_record(dir);
  EXPECT_EQ(back.category, rec.category);
  EXPECT_EQ(back.seed, rec.seed);
  EXPECT_EQ(back.mesh.vertices, rec.mesh.vertices);
  EXPECT_EQ(back.mesh.faces, rec.mesh.faces);
  EXPECT_EQ(back.strokes, rec.strokes);
  std::filesystem::remove_all(dir);
}
