#include "support.hpp"

#include <gtest/gtest.h>

using namespace paintpath;
using namespace paintpath::testing;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.input_points = 6;
  c.latent_dim = 5;
  c.encoder_hidden = {4};
  c.head_hidden = {6};
  c.lambda = 2;
  c.overlap = 1;
  c.slots = 3;
  return c;
}

PointCloud random_cloud(Rng &rng, std::size_t n) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return c;
}

std::vector<TrainSample> cuboid_samples(std::size_t count, const ModelConfig &cfg, std::uint64_t seed) {
  std::vector<TrainSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto rec = generate_object(Category::Cuboids, seed + i);
    const auto strokes = downsample_strokes(rec.strokes, 120);
    const auto cloud = sample_point_cloud(rec.mesh, cfg.input_points, seed + i);
    const auto n = normalize(cloud, strokes, 1.0);
    const auto segs = decompose_segments(n.strokes, cfg.lambda, cfg.overlap);
    out.push_back(TrainSample{n.cloud, detail::flatten(segs), segs.size()});
  }
  return out;
}

} // namespace

TEST(EncoderForward, PermutationInvariant) {
  Rng rng(1);
  ModelConfig cfg = tiny_config();
  cfg.input_points = 64;
  const auto m = make_model(cfg, 3);
  auto cloud = random_cloud(rng, 64);
  const auto a = encoder_forward(m, cloud);
  rng.shuffle(cloud.points);
  const auto b = encoder_forward(m, cloud);
  EXPECT_EQ(a, b);
}

TEST(EncoderForward, ZeroWeightsGiveZeroLatent) {
  Rng rng(2);
  auto m = make_model(tiny_config(), 1);
  std::fill(m.params.values.begin(), m.params.values.end(), 0.0);
  EXPECT_EQ(encoder_forward(m, random_cloud(rng, 6)), Eigen::VectorXd::Zero(5));
}

TEST(EncoderForward, ShapeAndSizeCheck) {
  Rng rng(3);
  ModelConfig cfg;
  cfg.slots = 2;
  const auto m = make_model(cfg, 0);
  EXPECT_EQ(encoder_forward(m, random_cloud(rng, 512)).size(), 128);
  EXPECT_THROW(encoder_forward(m, random_cloud(rng, 511)), ValidationError);
}

TEST(HeadForward, UnitOrientationsAndShape) {
  ModelConfig cfg = tiny_config();
  cfg.slots = 666;
  cfg.lambda = 4;
  cfg.latent_dim = 8;
  const auto m = make_model(cfg, 5);
  EXPECT_EQ(m.params.layers.back().out, std::size_t{4 * 6 * 666});
  Rng rng(4);
  Eigen::VectorXd latent(8);
  for (int i = 0; i < 8; ++i)
    latent[i] = rng.uniform(0, 2);
  const auto Y = head_forward(m, latent);
  ASSERT_EQ(Y.size(), 666u);
  for (const auto &s : Y.segments) {
    ASSERT_EQ(s.size(), 4u);
    for (const auto &p : s.poses)
      EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-6);
  }
}

TEST(HeadForward, ZeroOrientationFallsBack) {
  auto m = make_model(tiny_config(), 0);
  std::fill(m.params.values.begin(), m.params.values.end(), 0.0);
  const auto Y = head_forward(m, Eigen::VectorXd::Ones(5));
  for (const auto &s : Y.segments)
    for (const auto &p : s.poses)
      EXPECT_EQ(p.orientation, Vec3(0, 0, 1));
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(5);
  const auto cfg = tiny_config();
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 10 && seed < 40; ++seed) {
    const auto m = make_model(cfg, seed);
    ASSERT_LE(m.params.size(), 500u);
    const auto cloud = random_cloud(rng, cfg.input_points);
    // Fixed random linear functional of the output.
    std::vector<double> w(cfg.output_size());
    for (auto &x : w)
      x = rng.uniform(-1, 1);
    ForwardCache cache;
    predict_flat(m, cloud, &cache);
    const auto g = backward(m, cache, w);
    auto f = [&](std::span<const double> p) {
      Model mm = m;
      std::copy(p.begin(), p.end(), mm.params.values.begin());
      const auto out = predict_flat(mm, cloud);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i)
        s += w[i] * out[i];
      return s;
    };
    const auto num = numeric_gradient(f, m.params.values, 1e-6);
    EXPECT_LT(relative_error(g, num), 1e-4) << "seed " << seed;
    ++checked;
  }
  EXPECT_EQ(checked, 10);
}

TEST(Backward, ZeroOutputGradient) {
  Rng rng(6);
  const auto m = make_model(tiny_config(), 2);
  ForwardCache cache;
  predict_flat(m, random_cloud(rng, 6), &cache);
  const auto g = backward(m, cache, std::vector<double>(m.config.output_size(), 0.0));
  for (double x : g)
    EXPECT_EQ(x, 0.0);
}

TEST(Backward, OrientationGradientOrthogonalToOutput) {
  // The normalization Jacobian projects out the radial component, so the raw
  // orientation gradient is orthogonal to the normalized output direction.
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const Vec3 v(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 u = v.normalized();
    const Vec3 gu(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 gv = (Eigen::Matrix3d::Identity() - u * u.transpose()) * gu / v.norm();
    EXPECT_NEAR(gv.dot(u), 0.0, 1e-12);
  }
  // Same property through the model: radial output gradient gives zero
  // parameter gradient on the last layer's orientation rows.
  auto m = make_model(tiny_config(), 3);
  ForwardCache cache;
  predict_flat(m, random_cloud(rng, 6), &cache);
  std::vector<double> og(m.config.output_size(), 0.0);
  for (std::size_t i = 0; i < og.size(); i += kPoseDims)
    for (int c = 0; c < 3; ++c)
      og[i + 3 + c] = cache.output[i + 3 + c];
  for (double x : backward(m, cache, og))
    EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Backward, MissingCache) {
  const auto m = make_model(tiny_config(), 0);
  ForwardCache cache;
  EXPECT_THROW(backward(m, cache, std::vector<double>(m.config.output_size())), ValidationError);
}

TEST(EndToEnd, LossGradientMatchesFiniteDifferences) {
  Rng rng(8);
  const auto cfg = tiny_config();
  const LossWeights w{};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = make_model(cfg, 100 + seed);
    const auto cloud = random_cloud(rng, cfg.input_points);
    const auto target = detail::flatten(random_segments(rng, 2, cfg.lambda, 0.5));
    ForwardCache cache;
    const auto out = predict_flat(m, cloud, &cache);
    const auto rep = total_loss_flat(out, cfg.slots, target, 2, cfg.lambda, w);
    const auto g = backward(m, cache, rep.gradient);
    auto f = [&](std::span<const double> p) {
      Model mm = m;
      std::copy(p.begin(), p.end(), mm.params.values.begin());
      return total_loss_flat(predict_flat(mm, cloud), cfg.slots, target, 2, cfg.lambda, w).total;
    };
    EXPECT_LT(relative_error(g, numeric_gradient(f, m.params.values, 1e-6)), 1e-3) << "seed " << seed;
  }
}

TEST(AdamStep, Examples) {
  std::vector<double> p{1.0, -2.0, 3.0};
  AdamState st;
  adam_step(p, std::vector<double>(3, 0.0), st, 1e-3);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));

  std::vector<double> q{0.0};
  AdamState s1;
  adam_step(q, std::vector<double>{1.0}, s1, 1e-3);
  EXPECT_NEAR(q[0], -1e-3 / (1.0 + 1e-8), 1e-15);

  // Constant gradient: every bias-corrected step is lr * sign(g).
  std::vector<double> r{0.0, 0.0};
  AdamState s2;
  double prev0 = 0.0, prev1 = 0.0;
  for (int i = 0; i < 500; ++i) {
    adam_step(r, std::vector<double>{3.0, -0.5}, s2, 1e-2);
    EXPECT_NEAR(r[0] - prev0, -1e-2, 1e-8);
    EXPECT_NEAR(r[1] - prev1, 1e-2, 1e-8);
    prev0 = r[0];
    prev1 = r[1];
  }
}

TEST(Train, LossHalvesOnCuboids) {
  ModelConfig cfg;
  cfg.input_points = 128;
  cfg.latent_dim = 32;
  cfg.encoder_hidden = {16, 32};
  cfg.head_hidden = {64, 64};
  cfg.lambda = 4;
  cfg.slots = output_slot_count(120, 4, 1);
  const auto samples = cuboid_samples(8, cfg, 10);
  TrainConfig tc;
  tc.epochs = 200;
  tc.seed = 1;
  const auto res = train(samples, make_model(cfg, 1), tc);
  ASSERT_EQ(res.history.size(), 200u);
  EXPECT_LT(res.history.back().total, 0.5 * res.history.front().total);

  // Determinism.
  tc.epochs = 20;
  const auto a = train(samples, make_model(cfg, 1), tc);
  const auto b = train(samples, make_model(cfg, 1), tc);
  for (std::size_t i = 0; i < a.history.size(); ++i)
    EXPECT_EQ(a.history[i].total, b.history[i].total);
  EXPECT_EQ(a.params.values, b.params.values);
}

TEST(Train, TrainingReducesPoseChamfer) {
  ModelConfig cfg;
  cfg.input_points = 128;
  cfg.latent_dim = 32;
  cfg.encoder_hidden = {16, 32};
  cfg.head_hidden = {64, 64};
  cfg.slots = output_slot_count(120, 4, 1);
  const auto samples = cuboid_samples(4, cfg, 30);
  TrainConfig tc;
  tc.epochs = 150;
  const auto init = make_model(cfg, 4);
  Model trained = init;
  trained.params = train(samples, init, tc).params;
  const auto &s = samples[0];
  const auto gt = to_segment_set(s.target, s.target_rows, 4, 1).all_poses();
  const auto before = predict(init, s.cloud).all_poses();
  const auto after = predict(trained, s.cloud).all_poses();
  EXPECT_LT(pose_chamfer(after, gt, LossWeights{}), pose_chamfer(before, gt, LossWeights{}));
}

TEST(Train, RejectsInconsistentShapes) {
  auto cfg = tiny_config();
  Rng rng(9);
  TrainSample s{random_cloud(rng, 5), detail::flatten(random_segments(rng, 2, 2)), 2};
  EXPECT_THROW(train({s}, make_model(cfg, 0), TrainConfig{}), ValidationError);
  TrainSample big{random_cloud(rng, 6), detail::flatten(random_segments(rng, 4, 2)), 4};
  EXPECT_THROW(train({big}, make_model(cfg, 0), TrainConfig{}), ValidationError);
  EXPECT_THROW(train({}, make_model(cfg, 0), TrainConfig{}), ValidationError);
}

TEST(Train, MultipathUsesAlignedRegression) {
  ModelConfig cfg = tiny_config();
  cfg.mode = ModelMode::MultipathRegression;
  cfg.lambda = 3;
  cfg.slots = 2;
  Rng rng(10);
  const auto target = detail::flatten(random_segments(rng, 2, 3));
  TrainSample s{random_cloud(rng, 6), target, 2};
  const auto m = make_model(cfg, 0);
  const auto pred = predict_flat(m, s.cloud);
  const auto rep = sample_loss(m, pred, s, effective_weights(cfg.mode, TrainConfig{}));
  const auto ref = regression_loss_flat(pred, target, 2, 18, LossWeights{0.0, 0.25});
  EXPECT_EQ(rep.total, ref.total);
  EXPECT_EQ(rep.b2e, 0.0);
}

TEST(ModelConfig, PointwiseRequiresUnitLambda) {
  ModelConfig c = tiny_config();
  c.mode = ModelMode::Pointwise;
  EXPECT_THROW(c.validate(), ValidationError);
  c.lambda = 1;
  c.overlap = 0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(parse_mode("transformer"), ValidationError);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto m = make_model(tiny_config(), 9);
  const auto path = std::filesystem::temp_directory_path() / "paintpath_ckpt_test.txt";
  KeyValues extra;
  extra.set("scale.cuboids", 1.25);
  save_checkpoint(path, m, extra);
  const auto ck = load_checkpoint(path);
  EXPECT_EQ(ck.model.config, m.config);
  EXPECT_EQ(ck.model.params.values, m.params.values);
  EXPECT_EQ(ck.meta.get_double("scale.cuboids"), 1.25);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), IoError);
}
