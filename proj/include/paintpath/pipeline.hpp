#pragma once

// Experiment plumbing behind the command-line tool: configs, dataset
// directories, training on a dataset, evaluation, sweeps and plots.

#include "learner.hpp"
#include "linker.hpp"
#include "spraysim.hpp"

#include <iomanip>
#include <optional>
#include <set>

namespace paintpath {

// ---------------------------------------------------------------------------
// Configuration.

struct ExperimentConfig {
  std::vector<Category> categories{Category::Cuboids};
  std::size_t count = 50;
  std::map<Category, std::size_t> counts;  // per-category override of `count`
  std::map<Category, std::size_t> budgets; // per-category override of default_budget
  std::size_t cloud_points = 512;

  int lambda = 4;
  int overlap = 1;
  std::size_t slots = 0;       // 0 = derived from the budgets
  std::size_t pose_budget = 0; // 0 = train on the stored ground truth as is
  ModelMode mode = ModelMode::Segments;
  std::size_t latent_dim = 128;
  std::vector<std::size_t> encoder_hidden{64, 128};
  std::vector<std::size_t> head_hidden{256, 256};

  TrainConfig train;
  double fraction = 1.0;
  LinkConfig link;
  bool concat = false;
  SprayGunModel gun;
  GeneratorConfig generator;
  std::uint64_t seed = 0;

  std::size_t count_for(Category c) const {
    auto it = counts.find(c);
    return it == counts.end() ? count : it->second;
  }
  std::size_t budget_for(Category c) const {
    auto it = budgets.find(c);
    return it == budgets.end() ? default_budget(c) : it->second;
  }
  LossWeights weights() const { return LossWeights{train.alpha, train.orientation_weight}; }

  void validate() const {
    require(!categories.empty(), "config: no categories");
    for (auto c : categories) {
      require(count_for(c) >= 5, "config: need at least 5 objects per category");
      require(budget_for(c) >= 2, "config: pose budget must be >= 2");
    }
    require(cloud_points >= 1, "config: points must be >= 1");
    require(fraction > 0.0 && fraction <= 1.0, "config: fraction must be in (0, 1]");
    train.validate();
    link.validate();
    gun.validate();
    require(generator.mesh_edge > 0.0, "config: mesh_edge must be > 0");
    if (mode == ModelMode::Segments)
      validate_window(lambda, overlap);
  }

  /// Malformed values are invalid input rather than I/O failures.
  static ExperimentConfig from_kv(const KeyValues &kv) {
    try {
      return parse_kv(kv);
    } catch (const IoError &e) {
      throw ValidationError(std::string("config: ") + e.what());
    }
  }

  static ExperimentConfig parse_kv(const KeyValues &kv) {
    ExperimentConfig c;
    if (kv.has("categories")) {
      c.categories.clear();
      for (const auto &s : split_char(kv.get("categories"), ','))
        c.categories.push_back(parse_category(s));
    }
    c.count = static_cast<std::size_t>(kv.get_int_or("count", static_cast<long long>(c.count)));
    for (auto cat : all_categories()) {
      const std::string n = to_string(cat);
      if (kv.has("count." + n))
        c.counts[cat] = static_cast<std::size_t>(kv.get_int("count." + n));
      if (kv.has("budget." + n))
        c.budgets[cat] = static_cast<std::size_t>(kv.get_int("budget." + n));
    }
    auto size_or = [&](const char *key, std::size_t d) {
      const long long v = kv.get_int_or(key, static_cast<long long>(d));
      require(v >= 0, std::string("config: ") + key + " must be >= 0");
      return static_cast<std::size_t>(v);
    };
    c.cloud_points = size_or("points", c.cloud_points);
    c.lambda = static_cast<int>(kv.get_int_or("lambda", c.lambda));
    c.overlap = static_cast<int>(kv.get_int_or("overlap", c.overlap));
    c.slots = size_or("slots", c.slots);
    c.pose_budget = size_or("pose_budget", c.pose_budget);
    if (kv.has("mode"))
      c.mode = parse_mode(kv.get("mode"));
    c.latent_dim = size_or("latent_dim", c.latent_dim);
    if (kv.has("encoder_hidden"))
      c.encoder_hidden = parse_sizes(kv.get("encoder_hidden"));
    if (kv.has("head_hidden"))
      c.head_hidden = parse_sizes(kv.get("head_hidden"));
    c.train.learning_rate = kv.get_double_or("learning_rate", c.train.learning_rate);
    c.train.epochs = size_or("epochs", c.train.epochs);
    c.train.alpha = kv.get_double_or("alpha", c.train.alpha);
    c.train.orientation_weight = kv.get_double_or("orientation_weight", c.train.orientation_weight);
    c.train.batch_size = size_or("batch_size", c.train.batch_size);
    c.fraction = kv.get_double_or("fraction", c.fraction);
    c.link.tau = kv.get_double_or("tau", c.link.tau);
    c.concat = kv.get_int_or("concat", 0) != 0;
    c.gun.cone_half_angle = kv.get_double_or("cone_half_angle_deg", c.gun.cone_half_angle * 180.0 / std::numbers::pi) *
                            std::numbers::pi / 180.0;
    c.gun.max_range = kv.get_double_or("max_range", c.gun.max_range);
    c.gun.flux = kv.get_double_or("flux", c.gun.flux);
    c.generator.mesh_edge = kv.get_double_or("mesh_edge", c.generator.mesh_edge);
    c.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", 0));
    c.sync();
    return c;
  }

  KeyValues to_kv() const {
    KeyValues kv;
    std::string cats;
    for (std::size_t i = 0; i < categories.size(); ++i)
      cats += (i ? "," : "") + to_string(categories[i]);
    kv.set("categories", cats);
    kv.set("count", count);
    for (const auto &[cat, n] : counts)
      kv.set("count." + to_string(cat), n);
    for (const auto &[cat, n] : budgets)
      kv.set("budget." + to_string(cat), n);
    kv.set("points", cloud_points);
    kv.set("lambda", lambda);
    kv.set("overlap", overlap);
    kv.set("slots", slots);
    kv.set("pose_budget", pose_budget);
    kv.set("mode", to_string(mode));
    kv.set("latent_dim", latent_dim);
    kv.set("encoder_hidden", join_sizes(encoder_hidden));
    kv.set("head_hidden", join_sizes(head_hidden));
    kv.set("learning_rate", train.learning_rate);
    kv.set("epochs", train.epochs);
    kv.set("alpha", train.alpha);
    kv.set("orientation_weight", train.orientation_weight);
    kv.set("batch_size", train.batch_size);
    kv.set("fraction", fraction);
    kv.set("tau", link.tau);
    kv.set("concat", concat ? 1 : 0);
    kv.set("cone_half_angle_deg", gun.cone_half_angle * 180.0 / std::numbers::pi);
    kv.set("max_range", gun.max_range);
    kv.set("flux", gun.flux);
    kv.set("mesh_edge", generator.mesh_edge);
    kv.set("seed", std::to_string(seed));
    return kv;
  }

  /// Propagates shared fields (seed, loss weights) into the sub-configs.
  void sync() {
    train.seed = seed;
    link.weights = weights();
  }
};

// ---------------------------------------------------------------------------
// Dataset directories:
//   dataset.txt               generation settings and per-category scale
//   split.txt                 "train <id>" / "test <id>" lines
//   samples/<id>/             mesh.obj, cloud.xyz, stroke_NNN.txt, meta.txt

struct DatasetEntry {
  std::string id;
  Category category = Category::Cuboids;
  bool train = true;
};

struct Dataset {
  std::filesystem::path root;
  KeyValues meta;
  std::vector<DatasetEntry> entries;

  std::filesystem::path sample_dir(const std::string &id) const { return root / "samples" / id; }

  double scale(Category c) const { return meta.get_double("scale." + to_string(c)); }
  std::size_t budget(Category c) const { return static_cast<std::size_t>(meta.get_int("budget." + to_string(c))); }

  std::vector<Category> categories() const {
    std::vector<Category> out;
    for (const auto &s : split_char(meta.get("categories"), ','))
      out.push_back(parse_category(s));
    return out;
  }

  std::vector<DatasetEntry> select(bool train, const std::vector<Category> &cats) const {
    std::vector<DatasetEntry> out;
    for (const auto &e : entries)
      if (e.train == train && std::find(cats.begin(), cats.end(), e.category) != cats.end())
        out.push_back(e);
    return out;
  }

  const DatasetEntry &entry(const std::string &id) const {
    for (const auto &e : entries)
      if (e.id == id)
        return e;
    throw ValidationError("dataset has no sample '" + id + "'");
  }
};

inline std::string sample_id(Category c, std::size_t i) {
  std::ostringstream s;
  s << to_string(c) << '_' << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

inline std::uint64_t object_seed(std::uint64_t seed, Category c, std::size_t i) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(c) + 1), i);
}

/// Largest absolute coordinate after centering on the cloud mean.
inline double centered_extent(const PointCloud &cloud, const std::vector<Stroke> &strokes) {
  const Vec3 c = cloud.centroid();
  double m = 0.0;
  for (const auto &p : cloud.points)
    m = std::max(m, (p - c).cwiseAbs().maxCoeff());
  for (const auto &s : strokes)
    for (const auto &p : s.poses)
      m = std::max(m, (p.position - c).cwiseAbs().maxCoeff());
  return m;
}

inline Dataset generate_dataset(const ExperimentConfig &cfg, const std::filesystem::path &out) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out / "samples", ec);
  if (ec)
    throw IoError("cannot create dataset directory " + out.string() + ": " + ec.message());

  Dataset ds;
  ds.root = out;
  KeyValues &meta = ds.meta;
  std::string cats;
  for (std::size_t i = 0; i < cfg.categories.size(); ++i)
    cats += (i ? "," : "") + to_string(cfg.categories[i]);
  meta.set("categories", cats);
  meta.set("seed", std::to_string(cfg.seed));
  meta.set("points", cfg.cloud_points);
  meta.set("mesh_edge", cfg.generator.mesh_edge);

  std::ofstream split_out(out / "split.txt");
  if (!split_out)
    throw IoError("cannot write " + (out / "split.txt").string());
  for (auto c : cfg.categories) {
    const std::string name = to_string(c);
    const std::size_t n = cfg.count_for(c);
    const std::size_t budget = cfg.budget_for(c);
    const Split split = split_indices(n, mix_seed(cfg.seed, 0x5b1170 + static_cast<std::uint64_t>(c)));
    std::vector<char> is_train(n, 0);
    for (auto i : split.train)
      is_train[i] = 1;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t oseed = object_seed(cfg.seed, c, i);
      SampleRecord rec = generate_object(c, oseed, cfg.generator);
      const std::size_t raw = total_poses(rec.strokes);
      rec.strokes = downsample_strokes(rec.strokes, budget);
      const PointCloud cloud = sample_point_cloud(rec.mesh, cfg.cloud_points, mix_seed(oseed, 0xc10d));
      const std::string id = sample_id(c, i);
      KeyValues extra;
      extra.set("id", id);
      extra.set("raw_poses", raw);
      extra.set("budget", budget);
      save_record(ds.sample_dir(id), rec, extra);
      save_point_cloud(ds.sample_dir(id) / "cloud.xyz", cloud);
      if (is_train[i])
        scale = std::max(scale, centered_extent(cloud, rec.strokes));
      ds.entries.push_back(DatasetEntry{id, c, is_train[i] != 0});
      split_out << (is_train[i] ? "train " : "test ") << id << '\n';
    }
    meta.set("count." + name, n);
    meta.set("budget." + name, budget);
    meta.set("scale." + name, scale);
  }
  meta.save(out / "dataset.txt");
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path &root) {
  if (!std::filesystem::exists(root / "dataset.txt"))
    throw IoError("not a dataset directory (missing dataset.txt): " + root.string());
  Dataset ds;
  ds.root = root;
  ds.meta = KeyValues::load(root / "dataset.txt");
  std::ifstream in(root / "split.txt");
  if (!in)
    throw IoError("cannot open " + (root / "split.txt").string());
  std::string line;
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty())
      continue;
    if (tok.size() != 2 || (tok[0] != "train" && tok[0] != "test"))
      throw IoError("malformed split line: " + line);
    const std::string id(tok[1]);
    const auto us = id.rfind('_');
    if (us == std::string::npos)
      throw IoError("malformed sample id: " + id);
    ds.entries.push_back(DatasetEntry{id, parse_category(id.substr(0, us)), tok[0] == "train"});
  }
  return ds;
}

struct LoadedSample {
  std::string id;
  Category category = Category::Cuboids;
  TriMesh mesh;
  PointCloud cloud;
  std::vector<Stroke> strokes;
};

inline LoadedSample load_sample(const Dataset &ds, const DatasetEntry &e, bool with_mesh = true) {
  LoadedSample s;
  s.id = e.id;
  s.category = e.category;
  const auto dir = ds.sample_dir(e.id);
  if (with_mesh)
    s.mesh = load_mesh(dir / "mesh.obj").mesh;
  s.cloud = load_point_cloud(dir / "cloud.xyz");
  s.strokes = load_strokes(dir);
  if (s.strokes.empty())
    throw IoError("sample has no strokes: " + dir.string());
  return s;
}

// ---------------------------------------------------------------------------
// Models and training on a dataset.

/// Output shape for an experiment. Segment slots default to the largest K*
/// over the categories; the point-wise baseline predicts one pose per slot;
/// multi-path regression predicts one fixed-length path per ground-truth
/// stroke.
inline ModelConfig model_config_for(const ExperimentConfig &cfg, const Dataset &ds,
                                    const std::vector<Category> &cats) {
  ModelConfig m;
  m.input_points = static_cast<std::size_t>(ds.meta.get_int("points"));
  m.latent_dim = cfg.latent_dim;
  m.encoder_hidden = cfg.encoder_hidden;
  m.head_hidden = cfg.head_hidden;
  m.mode = cfg.mode;
  std::size_t max_budget = 0;
  for (auto c : cats)
    max_budget = std::max(max_budget, cfg.pose_budget ? cfg.pose_budget : ds.budget(c));
  switch (cfg.mode) {
  case ModelMode::Segments:
    m.lambda = cfg.lambda;
    m.overlap = cfg.overlap;
    m.slots = cfg.slots ? cfg.slots : output_slot_count(max_budget, cfg.lambda, cfg.overlap);
    break;
  case ModelMode::Pointwise:
    m.lambda = 1;
    m.overlap = 0;
    m.slots = cfg.slots ? cfg.slots : max_budget;
    break;
  case ModelMode::MultipathRegression: {
    std::size_t strokes = 0, shortest = std::numeric_limits<std::size_t>::max();
    for (const auto &e : ds.select(true, cats)) {
      const auto s = load_strokes(ds.sample_dir(e.id));
      strokes = std::max(strokes, s.size());
      for (const auto &st : s)
        shortest = std::min(shortest, st.size());
    }
    require(strokes > 0, "multipath: no training strokes");
    m.lambda = static_cast<int>(shortest);
    m.overlap = 0;
    m.slots = cfg.slots ? cfg.slots : strokes;
    break;
  }
  }
  m.validate();
  return m;
}

/// Normalized training instance for one sample under a model's output shape.
inline TrainSample make_train_sample(const LoadedSample &s, double scale, const ModelConfig &m,
                                     std::size_t pose_budget) {
  const Normalized n = normalize(s.cloud, s.strokes, scale);
  const std::vector<Stroke> strokes = pose_budget ? downsample_strokes(n.strokes, pose_budget) : n.strokes;
  TrainSample t;
  t.cloud = n.cloud;
  switch (m.mode) {
  case ModelMode::Segments:
  case ModelMode::Pointwise: {
    const auto segs = decompose_segments(strokes, m.lambda, m.overlap);
    require(segs.size() <= m.slots, "sample " + s.id + " has " + std::to_string(segs.size()) +
                                        " segments but the model only has " + std::to_string(m.slots) + " slots");
    t.target = detail::flatten(segs);
    t.target_rows = segs.size();
    break;
  }
  case ModelMode::MultipathRegression: {
    require(strokes.size() == m.slots, "multipath: sample " + s.id + " stroke count differs from slots");
    SegmentSet rows;
    rows.lambda = m.lambda;
    rows.overlap = 0;
    for (const auto &st : strokes) {
      const auto r = downsample_strokes({st}, static_cast<std::size_t>(m.lambda));
      rows.segments.push_back(Segment{r[0].poses});
    }
    t.target = detail::flatten(rows);
    t.target_rows = rows.size();
    break;
  }
  }
  return t;
}

/// Training entries of the given categories, reduced to `fraction` of each
/// category (at least one sample) by a seeded draw.
inline std::vector<DatasetEntry> training_subset(const Dataset &ds, const std::vector<Category> &cats,
                                                 double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "fraction must be in (0, 1]");
  std::vector<DatasetEntry> out;
  for (auto c : cats) {
    auto pool = ds.select(true, {c});
    require(!pool.empty(), "dataset has no training samples for " + to_string(c));
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size()))));
    if (keep < pool.size()) {
      Rng rng(mix_seed(seed, 0xf7ac + static_cast<std::uint64_t>(c)));
      rng.shuffle(pool);
      pool.resize(keep);
      std::sort(pool.begin(), pool.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
    }
    out.insert(out.end(), pool.begin(), pool.end());
  }
  return out;
}

struct TrainOutcome {
  Model model;
  std::vector<EpochLoss> history;
  std::vector<std::string> sample_ids;
  KeyValues meta;
};

/// Trains from scratch, or fine-tunes `pretrained` (whose output shape is
/// kept) when given.
inline TrainOutcome train_on_dataset(const ExperimentConfig &cfg, const Dataset &ds, const std::vector<Category> &cats,
                                     const Model *pretrained = nullptr,
                                     const std::function<void(const EpochLoss &)> &on_epoch = {}) {
  cfg.validate();
  const ModelConfig mc = pretrained ? pretrained->config : model_config_for(cfg, ds, cats);
  require(mc.input_points == static_cast<std::size_t>(ds.meta.get_int("points")),
          "pretrained model input size does not match the dataset point count");
  const auto subset = training_subset(ds, cats, cfg.fraction, cfg.seed);
  std::vector<TrainSample> samples;
  TrainOutcome out;
  for (const auto &e : subset) {
    const auto s = load_sample(ds, e, false);
    samples.push_back(make_train_sample(s, ds.scale(e.category), mc, cfg.pose_budget));
    out.sample_ids.push_back(e.id);
  }
  const Model init = pretrained ? *pretrained : make_model(mc, mix_seed(cfg.seed, 0x1417));
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  auto res = train(samples, init, tc, on_epoch);
  out.model = Model{mc, std::move(res.params)};
  out.history = std::move(res.history);
  for (auto c : cats)
    out.meta.set("scale." + to_string(c), ds.scale(c));
  out.meta.set("train.samples", samples.size());
  out.meta.set("train.epochs", tc.epochs);
  out.meta.set("train.learning_rate", tc.learning_rate);
  out.meta.set("train.alpha", tc.alpha);
  out.meta.set("train.orientation_weight", tc.orientation_weight);
  out.meta.set("train.seed", std::to_string(tc.seed));
  out.meta.set("train.fraction", cfg.fraction);
  out.meta.set("train.pose_budget", cfg.pose_budget);
  out.meta.set("finetuned", pretrained ? 1 : 0);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction.

struct Prediction {
  SegmentSet segments;           // normalized coordinates
  NormalizationTransform transform;
  ModelMode mode = ModelMode::Segments;
};

inline Prediction predict_sample(const Model &m, const PointCloud &cloud, double scale) {
  const Normalized n = normalize(cloud, {}, scale);
  Prediction p;
  p.segments = predict(m, n.cloud);
  p.transform = n.transform;
  p.mode = m.config.mode;
  return p;
}

/// Strokes in normalized coordinates: linked chains when `concat` is set and
/// the prediction has multi-pose segments, otherwise one stroke per slot.
inline std::vector<Stroke> prediction_strokes(const Prediction &p, bool concat, const LinkConfig &link) {
  if (concat && p.mode == ModelMode::Segments && p.segments.lambda >= 2)
    return concatenate(p.segments, link).strokes;
  return segments_as_strokes(p.segments);
}

inline void save_prediction(const std::filesystem::path &dir, const Prediction &p, const KeyValues &extra = {}) {
  std::filesystem::create_directories(dir);
  KeyValues kv = extra;
  kv.set("lambda", p.segments.lambda);
  kv.set("overlap", p.segments.overlap);
  kv.set("slots", p.segments.size());
  kv.set("mode", to_string(p.mode));
  kv.set("scale", p.transform.scale);
  kv.set("centroid_x", p.transform.centroid.x());
  kv.set("centroid_y", p.transform.centroid.y());
  kv.set("centroid_z", p.transform.centroid.z());
  kv.save(dir / "prediction.txt");
  save_strokes(dir, denormalize(segments_as_strokes(p.segments), p.transform));
}

inline Prediction load_prediction(const std::filesystem::path &dir) {
  const auto kv = KeyValues::load(dir / "prediction.txt");
  Prediction p;
  p.mode = parse_mode(kv.get("mode"));
  p.transform.scale = kv.get_double("scale");
  p.transform.centroid = Vec3(kv.get_double("centroid_x"), kv.get_double("centroid_y"), kv.get_double("centroid_z"));
  p.segments.lambda = static_cast<int>(kv.get_int("lambda"));
  p.segments.overlap = static_cast<int>(kv.get_int("overlap"));
  for (const auto &s : load_strokes(dir)) {
    const Stroke n = transform_stroke(s, p.transform, false);
    if (n.size() != static_cast<std::size_t>(p.segments.lambda))
      throw IoError("prediction segment length differs from lambda in " + dir.string());
    p.segments.segments.push_back(Segment{n.poses});
  }
  if (p.segments.size() != static_cast<std::size_t>(kv.get_int("slots")))
    throw IoError("prediction slot count mismatch in " + dir.string());
  return p;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct MetricsRow {
  std::string id;
  double pcd = 0.0; // x 1e4
  double pc = 0.0;  // percent
  double segments = 0.0;
  double strokes = 0.0;
};

struct EvalOptions {
  bool concat = false;
  bool ground_truth = false; // evaluate the ground truth against itself
  LinkConfig link;
  SprayGunModel gun;
  int lambda = 4; // segment shape reported for ground-truth rows
  int overlap = 1;
  std::optional<std::filesystem::path> artifacts;
};

inline std::vector<Pose> flatten_poses(const std::vector<Stroke> &strokes) {
  std::vector<Pose> out;
  for (const auto &s : strokes)
    out.insert(out.end(), s.poses.begin(), s.poses.end());
  return out;
}

/// `model` may be null in ground-truth mode.
inline MetricsRow evaluate_sample(const Model *model, const LoadedSample &s, double scale, const EvalOptions &opt) {
  require(opt.ground_truth || model != nullptr, "evaluate: no model");
  const Normalized gt = normalize(s.cloud, s.strokes, scale);
  MetricsRow row;
  row.id = s.id;
  std::vector<Stroke> pred_norm;
  if (opt.ground_truth) {
    pred_norm = gt.strokes;
    row.segments = static_cast<double>(decompose_segments(gt.strokes, opt.lambda, opt.overlap).size());
  } else {
    const Prediction p = predict_sample(*model, s.cloud, scale);
    pred_norm = prediction_strokes(p, opt.concat, opt.link);
    row.segments = static_cast<double>(p.segments.size());
  }
  row.strokes = static_cast<double>(pred_norm.size());
  row.pcd = pose_chamfer(flatten_poses(pred_norm), flatten_poses(gt.strokes), opt.link.weights) * kPcdReportScale;

  const auto pred_world = denormalize(pred_norm, gt.transform);
  const ThicknessField gt_field = deposit(s.mesh, s.strokes, opt.gun);
  const ThicknessField pred_field = deposit(s.mesh, pred_world, opt.gun);
  const CoverageReport cov = paint_coverage(pred_field, gt_field);
  row.pc = cov.pc;

  if (opt.artifacts) {
    const auto dir = *opt.artifacts / s.id;
    std::filesystem::create_directories(dir / "strokes");
    save_strokes(dir / "strokes", pred_world);
    save_thickness(dir / "thickness_pred.txt", pred_field);
    save_thickness(dir / "thickness_gt.txt", gt_field);
    save_mesh(dir / "painted_pred.obj", s.mesh, pred_field.values);
    coverage_to_kv(cov).save(dir / "coverage.txt");
  }
  return row;
}

inline MetricsRow mean_row(const std::vector<MetricsRow> &rows) {
  require(!rows.empty(), "mean_row: no rows");
  MetricsRow m;
  m.id = "mean";
  for (const auto &r : rows) {
    m.pcd += r.pcd;
    m.pc += r.pc;
    m.segments += r.segments;
    m.strokes += r.strokes;
  }
  const double n = static_cast<double>(rows.size());
  m.pcd /= n;
  m.pc /= n;
  m.segments /= n;
  m.strokes /= n;
  return m;
}

/// Evaluates every test sample of the given categories, rows sorted by id.
inline std::vector<MetricsRow> evaluate_dataset(const Model *model, const Dataset &ds, const std::vector<Category> &cats,
                                                const EvalOptions &opt) {
  std::vector<MetricsRow> rows;
  for (const auto &e : ds.select(false, cats))
    rows.push_back(evaluate_sample(model, load_sample(ds, e), ds.scale(e.category), opt));
  require(!rows.empty(), "evaluate: no test samples");
  std::sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
  return rows;
}

inline constexpr const char *kMetricsHeader = "id,pcd_x1e4,pc_percent,segments,strokes";

inline void write_metrics_csv(const std::filesystem::path &path, const std::vector<MetricsRow> &rows) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  auto put = [&](const MetricsRow &r) {
    out << r.id << ',' << format_double(r.pcd) << ',' << format_double(r.pc) << ',' << format_double(r.segments) << ','
        << format_double(r.strokes) << '\n';
  };
  for (const auto &r : rows)
    put(r);
  put(mean_row(rows));
}

/// Returns every row including the trailing mean row.
inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw IoError("unexpected metrics header in " + path.string());
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto f = split_char(line, ',');
    if (f.size() != 5)
      throw IoError("malformed metrics row: " + line);
    rows.push_back(MetricsRow{f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::size_t slots = 0;
  std::size_t predicted_poses = 0;
  MetricsRow mean;
};

/// Overlap sweeps hold the number of predicted poses fixed: the slot count
/// is K* for overlap 1 and the ground truth used for training is thinned so
/// that its segment count fits.
inline ExperimentConfig overlap_variant(const ExperimentConfig &base, const Dataset &ds,
                                        const std::vector<Category> &cats, int overlap) {
  ExperimentConfig cfg = base;
  std::size_t budget = 0;
  for (auto c : cats)
    budget = std::max(budget, ds.budget(c));
  const std::size_t slots = output_slot_count(budget, base.lambda, 1);
  cfg.overlap = overlap;
  cfg.slots = slots;
  cfg.pose_budget = (slots - 1) * static_cast<std::size_t>(base.lambda - overlap) + static_cast<std::size_t>(base.lambda);
  cfg.mode = ModelMode::Segments;
  return cfg;
}

/// Runs train + evaluate per value of `parameter` (lambda or overlap), or
/// evaluate only per tau on `fixed` (trained once from `base` if null).
inline std::vector<SweepRow> run_sweep(const std::string &parameter, const std::vector<double> &values,
                                       const ExperimentConfig &base, const Dataset &ds,
                                       const std::vector<Category> &cats, const Model *fixed = nullptr) {
  require(!values.empty(), "sweep: empty value list");
  require(parameter == "lambda" || parameter == "overlap" || parameter == "tau",
          "sweep: parameter must be lambda, overlap or tau");
  std::vector<SweepRow> rows;
  std::optional<Model> trained;
  if (parameter == "tau" && !fixed) {
    trained = train_on_dataset(base, ds, cats).model;
    fixed = &*trained;
  }
  for (double v : values) {
    ExperimentConfig cfg = base;
    EvalOptions opt;
    opt.link = cfg.link;
    opt.gun = cfg.gun;
    opt.concat = cfg.concat;
    Model model;
    if (parameter == "tau") {
      require(v >= 0.0, "sweep: tau must be >= 0");
      opt.concat = true;
      opt.link.tau = v;
      model = *fixed;
    } else {
      const auto iv = static_cast<int>(std::llround(v));
      require(static_cast<double>(iv) == v, "sweep: " + parameter + " values must be integers");
      if (parameter == "lambda") {
        cfg.lambda = iv;
        cfg.slots = 0;
        cfg.mode = ModelMode::Segments;
      } else {
        cfg = overlap_variant(base, ds, cats, iv);
      }
      cfg.validate();
      model = train_on_dataset(cfg, ds, cats).model;
    }
    SweepRow row;
    row.parameter = parameter;
    row.value = v;
    row.slots = model.config.slots;
    row.predicted_poses = model.config.slots * static_cast<std::size_t>(model.config.lambda);
    row.mean = mean_row(evaluate_dataset(&model, ds, cats, opt));
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_csv(const std::filesystem::path &path, const std::vector<SweepRow> &rows) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "parameter,value,slots,predicted_poses,pcd_x1e4,pc_percent,strokes\n";
  for (const auto &r : rows)
    out << r.parameter << ',' << format_double(r.value) << ',' << r.slots << ',' << r.predicted_poses << ','
        << format_double(r.mean.pcd) << ',' << format_double(r.mean.pc) << ',' << format_double(r.mean.strokes) << '\n';
}

namespace detail {

inline std::string svg_num(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

/// One line chart panel with axes, ticks at the data x values and min/max y.
inline void svg_panel(std::ostream &out, double x0, double y0, double w, double h, const std::string &title,
                      const std::string &xlabel, const std::vector<double> &xs, const std::vector<double> &ys,
                      const char *colour) {
  const auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  double xmin = *xmin_it, xmax = *xmax_it, ymin = *ymin_it, ymax = *ymax_it;
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax == ymin) {
    const double pad = std::max(1e-9, std::abs(ymax) * 0.1 + 1e-9);
    ymin -= pad;
    ymax += pad;
  }
  const double L = x0 + 60, R = x0 + w - 20, T = y0 + 30, B = y0 + h - 45;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (R - L); };
  auto py = [&](double y) { return B - (y - ymin) / (ymax - ymin) * (B - T); };
  out << "<text x=\"" << svg_num((L + R) / 2) << "\" y=\"" << svg_num(y0 + 18)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << svg_num(L) << "\" y1=\"" << svg_num(B) << "\" x2=\"" << svg_num(R) << "\" y2=\""
      << svg_num(B) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << svg_num(L) << "\" y1=\"" << svg_num(T) << "\" x2=\"" << svg_num(L) << "\" y2=\""
      << svg_num(B) << "\" stroke=\"black\"/>\n";
  for (double x : xs)
    out << "<text x=\"" << svg_num(px(x)) << "\" y=\"" << svg_num(B + 16)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(x) << "</text>\n";
  for (double y : {ymin, ymax})
    out << "<text x=\"" << svg_num(L - 6) << "\" y=\"" << svg_num(py(y) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << svg_num(y) << "</text>\n";
  out << "<text x=\"" << svg_num((L + R) / 2) << "\" y=\"" << svg_num(B + 34)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << (i ? " " : "") << svg_num(px(xs[i])) << ',' << svg_num(py(ys[i]));
  out << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << svg_num(px(xs[i])) << "\" cy=\"" << svg_num(py(ys[i])) << "\" r=\"3\" fill=\"" << colour
        << "\"/>\n";
}

} // namespace detail

/// Two panels: mean PCD and mean PC against the swept parameter.
inline void write_sweep_svg(const std::filesystem::path &path, const std::vector<SweepRow> &rows) {
  require(!rows.empty(), "sweep plot: no rows");
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  std::vector<double> xs, pcd, pc;
  for (const auto &r : rows) {
    xs.push_back(r.value);
    pcd.push_back(r.mean.pcd);
    pc.push_back(r.mean.pc);
  }
  const std::string &p = rows.front().parameter;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"300\" viewBox=\"0 0 760 300\">\n";
  out << "<rect width=\"760\" height=\"300\" fill=\"white\"/>\n";
  detail::svg_panel(out, 0, 0, 380, 300, "PCD (x1e4)", p, xs, pcd, "#1f77b4");
  detail::svg_panel(out, 380, 0, 380, 300, "PC (%)", p, xs, pc, "#d62728");
  out << "</svg>\n";
}

} // namespace paintpath
