#pragma once

// Point-cloud encoder (shared per-point MLP + channel max-pool) and a pose
// head emitting `slots` segments of `lambda` poses. Hand-written forward and
// backward passes over a flat parameter array.

#include "objective.hpp"

#include <Eigen/Dense>

#include <functional>

namespace paintpath {

enum class ModelMode { Segments, Pointwise, MultipathRegression };

inline std::string to_string(ModelMode m) {
  switch (m) {
  case ModelMode::Segments:
    return "segments";
  case ModelMode::Pointwise:
    return "pointwise";
  case ModelMode::MultipathRegression:
    return "multipath_regression";
  }
  return "?";
}

inline ModelMode parse_mode(std::string_view s) {
  for (auto m : {ModelMode::Segments, ModelMode::Pointwise, ModelMode::MultipathRegression})
    if (to_string(m) == s)
      return m;
  throw ValidationError("invalid model mode '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t input_points = 512;
  std::size_t latent_dim = 128;
  std::vector<std::size_t> encoder_hidden{64, 128};
  std::vector<std::size_t> head_hidden{256, 256};
  int lambda = 4;
  int overlap = 1;
  std::size_t slots = 1;
  ModelMode mode = ModelMode::Segments;

  std::size_t output_size() const { return slots * static_cast<std::size_t>(lambda) * kPoseDims; }

  void validate() const {
    require(input_points >= 1 && latent_dim >= 1 && slots >= 1 && lambda >= 1, "model dimensions must be >= 1");
    for (auto h : encoder_hidden)
      require(h >= 1, "encoder widths must be >= 1");
    for (auto h : head_hidden)
      require(h >= 1, "head widths must be >= 1");
    if (mode == ModelMode::Pointwise)
      require(lambda == 1 && overlap == 0, "pointwise mode requires lambda = 1 and overlap = 0");
    else if (mode == ModelMode::Segments)
      validate_window(lambda, overlap);
  }

  bool operator==(const ModelConfig &) const = default;
};

struct LayerSlice {
  std::size_t in = 0, out = 0;
  std::size_t weight = 0; // offset of the in x out row-major weight block
  std::size_t bias = 0;   // offset of the out-length bias
};

/// All learnable weights, flattened, with a per-layer offset table. The first
/// `encoder_layers` entries belong to the encoder.
/// Parameter and gradient storage. Eigen maps layers at fixed offsets into
/// these buffers; a fixed base alignment keeps vectorized reductions in the
/// same order from run to run.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

struct ModelParams {
  ParamVector values;
  std::vector<LayerSlice> layers;
  std::size_t encoder_layers = 0;

  std::size_t size() const { return values.size(); }
};

inline ModelParams layout_params(const ModelConfig &cfg) {
  cfg.validate();
  ModelParams p;
  std::size_t off = 0;
  auto add = [&](std::size_t in, std::size_t out) {
    LayerSlice l{in, out, off, off + in * out};
    off += in * out + out;
    p.layers.push_back(l);
  };
  std::size_t prev = 3;
  for (auto h : cfg.encoder_hidden) {
    add(prev, h);
    prev = h;
  }
  add(prev, cfg.latent_dim);
  p.encoder_layers = p.layers.size();
  prev = cfg.latent_dim;
  for (auto h : cfg.head_hidden) {
    add(prev, h);
    prev = h;
  }
  add(prev, cfg.output_size());
  p.values.assign(off, 0.0);
  return p;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline ModelParams init_params(const ModelConfig &cfg, std::uint64_t seed) {
  ModelParams p = layout_params(cfg);
  Rng rng(mix_seed(seed, 0x1417));
  for (const auto &l : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < l.in * l.out + l.out; ++i)
      p.values[l.weight + i] = rng.uniform(-bound, bound);
  }
  return p;
}

struct Model {
  ModelConfig config;
  ModelParams params;
};

inline Model make_model(const ModelConfig &cfg, std::uint64_t seed) { return Model{cfg, init_params(cfg, seed)}; }

/// Activations retained by a forward pass for the backward pass.
struct ForwardCache {
  using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<MatR> encoder_acts;            // [0] = input points, then post-ReLU per layer
  std::vector<Eigen::Index> argmax;          // winning point per latent channel
  std::vector<Eigen::VectorXd> head_acts;    // [0] = latent, then post-ReLU hidden
  Eigen::VectorXd raw;                       // head output before normalization
  std::vector<double> output;                // normalized output, flat
  bool valid = false;
};

namespace detail {

using MatR = ForwardCache::MatR;
using ConstMapR = Eigen::Map<const MatR>;
using MapR = Eigen::Map<MatR>;

inline ConstMapR weight(const ModelParams &p, const LayerSlice &l) {
  return ConstMapR(p.values.data() + l.weight, static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(l.out));
}

inline Eigen::Map<const Eigen::VectorXd> bias(const ModelParams &p, const LayerSlice &l) {
  return Eigen::Map<const Eigen::VectorXd>(p.values.data() + l.bias, static_cast<Eigen::Index>(l.out));
}

inline void check_layout(const Model &m) {
  require(m.params.layers.size() == m.config.encoder_hidden.size() + m.config.head_hidden.size() + 2 &&
              m.params.encoder_layers == m.config.encoder_hidden.size() + 1,
          "parameter layout does not match model config");
}

} // namespace detail

/// Max-pooled per-point features. Ties in the max go to the lowest point index.
inline Eigen::VectorXd encoder_forward(const Model &m, const PointCloud &cloud, ForwardCache *cache = nullptr) {
  detail::check_layout(m);
  require(cloud.size() == m.config.input_points, "encoder_forward: point count does not match model input size");
  using detail::MatR;
  const auto P = static_cast<Eigen::Index>(cloud.size());
  MatR act(P, 3);
  for (Eigen::Index i = 0; i < P; ++i)
    act.row(i) = cloud.points[static_cast<std::size_t>(i)].transpose();
  std::vector<MatR> acts;
  if (cache)
    acts.push_back(act);
  for (std::size_t li = 0; li < m.params.encoder_layers; ++li) {
    const auto &l = m.params.layers[li];
    MatR z = act * detail::weight(m.params, l);
    z.rowwise() += detail::bias(m.params, l).transpose();
    act = z.cwiseMax(0.0);
    if (cache)
      acts.push_back(act);
  }
  const Eigen::Index C = act.cols();
  Eigen::VectorXd latent(C);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(C), 0);
  for (Eigen::Index c = 0; c < C; ++c) {
    double best = act(0, c);
    Eigen::Index bi = 0;
    for (Eigen::Index i = 1; i < P; ++i)
      if (act(i, c) > best) {
        best = act(i, c);
        bi = i;
      }
    latent[c] = best;
    arg[static_cast<std::size_t>(c)] = bi;
  }
  if (cache) {
    cache->encoder_acts = std::move(acts);
    cache->argmax = std::move(arg);
  }
  return latent;
}

/// Flat head output with every orientation triple L2-normalized; a zero
/// triple maps to the fallback axis (0, 0, 1).
inline std::vector<double> head_forward_flat(const Model &m, const Eigen::VectorXd &latent,
                                             ForwardCache *cache = nullptr) {
  detail::check_layout(m);
  require(static_cast<std::size_t>(latent.size()) == m.config.latent_dim, "head_forward: latent size mismatch");
  Eigen::VectorXd h = latent;
  std::vector<Eigen::VectorXd> acts;
  if (cache)
    acts.push_back(h);
  const std::size_t n = m.params.layers.size();
  for (std::size_t li = m.params.encoder_layers; li < n; ++li) {
    const auto &l = m.params.layers[li];
    Eigen::VectorXd z = detail::weight(m.params, l).transpose() * h + detail::bias(m.params, l);
    if (li + 1 < n) {
      h = z.cwiseMax(0.0);
      if (cache)
        acts.push_back(h);
    } else {
      h = std::move(z);
    }
  }
  std::vector<double> out(h.data(), h.data() + h.size());
  for (std::size_t i = 0; i < out.size(); i += kPoseDims) {
    const Vec3 u = normalized_or_fallback(Vec3(out[i + 3], out[i + 4], out[i + 5]));
    out[i + 3] = u.x();
    out[i + 4] = u.y();
    out[i + 5] = u.z();
  }
  if (cache) {
    cache->head_acts = std::move(acts);
    cache->raw = std::move(h);
    cache->output = out;
    cache->valid = true;
  }
  return out;
}

inline SegmentSet to_segment_set(std::span<const double> flat, std::size_t slots, int lambda, int overlap) {
  SegmentSet set;
  set.lambda = lambda;
  set.overlap = overlap;
  const auto L = static_cast<std::size_t>(lambda);
  require(flat.size() == slots * L * kPoseDims, "to_segment_set: size mismatch");
  set.segments.resize(slots);
  for (std::size_t k = 0; k < slots; ++k) {
    auto &seg = set.segments[k];
    seg.poses.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const double *v = &flat[(k * L + l) * kPoseDims];
      seg.poses[l].position = Vec3(v[0], v[1], v[2]);
      seg.poses[l].orientation = Vec3(v[3], v[4], v[5]);
    }
  }
  return set;
}

inline SegmentSet head_forward(const Model &m, const Eigen::VectorXd &latent, ForwardCache *cache = nullptr) {
  const auto flat = head_forward_flat(m, latent, cache);
  return to_segment_set(flat, m.config.slots, m.config.lambda, m.config.overlap);
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) for the
/// forward pass held in `cache`. Only the points that win a max-pool channel
/// receive encoder gradient.
inline void backward_accumulate(const Model &m, const ForwardCache &cache, std::span<const double> out_grad,
                                std::span<double> grad) {
  require(cache.valid, "backward: no cached forward pass");
  require(out_grad.size() == m.config.output_size(), "backward: output gradient size mismatch");
  require(grad.size() == m.params.size(), "backward: parameter gradient size mismatch");
  using detail::MatR;

  // Orientation normalization Jacobian: (I - u u^T) / |v|.
  Eigen::VectorXd g(static_cast<Eigen::Index>(out_grad.size()));
  for (std::size_t i = 0; i < out_grad.size(); i += kPoseDims) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (int c = 0; c < 3; ++c)
      g[ii + c] = out_grad[i + c];
    const Vec3 v(cache.raw[ii + 3], cache.raw[ii + 4], cache.raw[ii + 5]);
    const double nv = v.norm();
    Vec3 gv = Vec3::Zero();
    if (nv > 0.0 && std::isfinite(nv)) {
      const Vec3 u = v / nv;
      const Vec3 gu(out_grad[i + 3], out_grad[i + 4], out_grad[i + 5]);
      gv = (gu - u * u.dot(gu)) / nv;
    }
    for (int c = 0; c < 3; ++c)
      g[ii + 3 + c] = gv[c];
  }

  // Head, last layer first.
  const std::size_t n = m.params.layers.size();
  for (std::size_t li = n; li-- > m.params.encoder_layers;) {
    const auto &l = m.params.layers[li];
    const Eigen::VectorXd &h_in = cache.head_acts[li - m.params.encoder_layers];
    detail::MapR gw(grad.data() + l.weight, static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(l.out));
    gw.noalias() += h_in * g.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + l.bias, static_cast<Eigen::Index>(l.out)) += g;
    Eigen::VectorXd g_in = detail::weight(m.params, l) * g;
    // h_in is post-ReLU for hidden layers; the latent is a max of ReLUs and
    // needs no mask.
    if (li > m.params.encoder_layers)
      for (Eigen::Index i = 0; i < g_in.size(); ++i)
        if (!(h_in[i] > 0.0))
          g_in[i] = 0.0;
    g = std::move(g_in);
  }

  // Encoder: scatter the latent gradient onto the winning rows only.
  std::vector<Eigen::Index> rows(cache.argmax.begin(), cache.argmax.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  const auto R = static_cast<Eigen::Index>(rows.size());
  const auto C = static_cast<Eigen::Index>(cache.argmax.size());
  MatR G = MatR::Zero(R, C);
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto r = std::lower_bound(rows.begin(), rows.end(), cache.argmax[static_cast<std::size_t>(c)]) - rows.begin();
    G(r, c) = g[c];
  }
  for (std::size_t li = m.params.encoder_layers; li-- > 0;) {
    const auto &l = m.params.layers[li];
    const MatR &a_out = cache.encoder_acts[li + 1];
    const MatR &a_in = cache.encoder_acts[li];
    MatR a_in_rows(R, a_in.cols());
    for (Eigen::Index r = 0; r < R; ++r) {
      const Eigen::Index src = rows[static_cast<std::size_t>(r)];
      a_in_rows.row(r) = a_in.row(src);
      for (Eigen::Index c = 0; c < G.cols(); ++c)
        if (!(a_out(src, c) > 0.0))
          G(r, c) = 0.0;
    }
    detail::MapR gw(grad.data() + l.weight, static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(l.out));
    gw.noalias() += a_in_rows.transpose() * G;
    Eigen::Map<Eigen::VectorXd>(grad.data() + l.bias, static_cast<Eigen::Index>(l.out)) += G.colwise().sum().transpose();
    if (li > 0) {
      MatR next = G * detail::weight(m.params, l).transpose();
      G = std::move(next);
    }
  }
}

inline ParamVector backward(const Model &m, const ForwardCache &cache, std::span<const double> out_grad) {
  ParamVector grad(m.params.size(), 0.0);
  backward_accumulate(m, cache, out_grad, grad);
  return grad;
}

inline SegmentSet predict(const Model &m, const PointCloud &cloud) {
  return head_forward(m, encoder_forward(m, cloud));
}

inline std::vector<double> predict_flat(const Model &m, const PointCloud &cloud, ForwardCache *cache = nullptr) {
  return head_forward_flat(m, encoder_forward(m, cloud, cache), cache);
}

// ---------------------------------------------------------------------------
// Adam.

struct AdamState {
  std::vector<double> m, v;
  long long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState &state, double lr) {
  require(params.size() == grad.size(), "adam_step: length mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 1200;
  double alpha = 0.5;
  double orientation_weight = 0.25;
  std::uint64_t seed = 0;
  /// Samples per optimizer step; 0 means the whole training set.
  std::size_t batch_size = 0;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be > 0");
    require(epochs >= 1, "epochs must be >= 1");
    LossWeights{alpha, orientation_weight}.validate();
  }
};

/// One training instance in normalized coordinates. `target` holds rows of
/// lambda poses (segments, or whole equal-length strokes for regression).
struct TrainSample {
  PointCloud cloud;
  std::vector<double> target;
  std::size_t target_rows = 0;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double total = 0.0, y2s = 0.0, b2e = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLoss> history;
};

/// Loss weights actually used for a mode: the baselines ignore segment
/// connectivity, so attraction is disabled for them.
inline LossWeights effective_weights(ModelMode mode, const TrainConfig &tc) {
  LossWeights w{tc.alpha, tc.orientation_weight};
  if (mode != ModelMode::Segments)
    w.alpha = 0.0;
  return w;
}

inline LossReport sample_loss(const Model &m, std::span<const double> pred, const TrainSample &s, const LossWeights &w) {
  const std::size_t row = static_cast<std::size_t>(m.config.lambda) * kPoseDims;
  require(s.target.size() == s.target_rows * row, "training target shape does not match lambda");
  if (m.config.mode == ModelMode::MultipathRegression) {
    require(s.target_rows == m.config.slots, "regression target must have exactly `slots` strokes");
    return regression_loss_flat(pred, s.target, m.config.slots, row, w);
  }
  return total_loss_flat(pred, m.config.slots, s.target, s.target_rows, m.config.lambda, w);
}

/// Adam over (mini-)batches; gradients are averaged over the batch and
/// summed in sample order. The recorded epoch loss is the mean of the
/// per-sample losses seen during that epoch.
inline TrainResult train(const std::vector<TrainSample> &samples, const Model &initial, const TrainConfig &tc,
                         const std::function<void(const EpochLoss &)> &on_epoch = {}) {
  tc.validate();
  initial.config.validate();
  require(!samples.empty(), "train: empty training set");
  for (const auto &s : samples) {
    require(s.cloud.size() == initial.config.input_points, "train: inconsistent point cloud size");
    require(s.target_rows >= 1, "train: empty target");
    if (initial.config.mode != ModelMode::MultipathRegression)
      require(s.target_rows <= initial.config.slots, "train: sample has more segments than output slots");
  }
  const LossWeights w = effective_weights(initial.config.mode, tc);
  Model model = initial;
  AdamState adam;
  Rng rng(mix_seed(tc.seed, 0x7a11));
  const std::size_t batch = tc.batch_size == 0 ? samples.size() : std::min(tc.batch_size, samples.size());

  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  ParamVector grad(model.params.size());
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = i;
    if (batch < samples.size())
      rng.shuffle(order);
    EpochLoss el;
    el.epoch = epoch + 1;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto &s = samples[order[b]];
        const auto pred = predict_flat(model, s.cloud, &cache);
        auto rep = sample_loss(model, pred, s, w);
        el.total += rep.total;
        el.y2s += rep.y2s;
        el.b2e += rep.b2e;
        backward_accumulate(model, cache, rep.gradient, grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto &g : grad)
        g *= inv;
      adam_step(model.params.values, grad, adam, tc.learning_rate);
    }
    const double n = static_cast<double>(samples.size());
    el.total /= n;
    el.y2s /= n;
    el.b2e /= n;
    result.history.push_back(el);
    if (on_epoch)
      on_epoch(el);
  }
  result.params = std::move(model.params);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: a versioned text header with the config, then the parameters.

inline constexpr const char *kCheckpointMagic = "paintpath-checkpoint 1";

inline std::string join_sizes(const std::vector<std::size_t> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<std::size_t> parse_sizes(const std::string &s) {
  std::vector<std::size_t> out;
  for (const auto &p : split_char(s, ','))
    out.push_back(static_cast<std::size_t>(parse_int(p)));
  return out;
}

inline KeyValues model_config_to_kv(const ModelConfig &c) {
  KeyValues kv;
  kv.set("input_points", c.input_points);
  kv.set("latent_dim", c.latent_dim);
  kv.set("encoder_hidden", join_sizes(c.encoder_hidden));
  kv.set("head_hidden", join_sizes(c.head_hidden));
  kv.set("lambda", c.lambda);
  kv.set("overlap", c.overlap);
  kv.set("slots", c.slots);
  kv.set("mode", to_string(c.mode));
  return kv;
}

inline ModelConfig model_config_from_kv(const KeyValues &kv) {
  ModelConfig c;
  c.input_points = static_cast<std::size_t>(kv.get_int("input_points"));
  c.latent_dim = static_cast<std::size_t>(kv.get_int("latent_dim"));
  c.encoder_hidden = parse_sizes(kv.get("encoder_hidden"));
  c.head_hidden = parse_sizes(kv.get("head_hidden"));
  c.lambda = static_cast<int>(kv.get_int("lambda"));
  c.overlap = static_cast<int>(kv.get_int("overlap"));
  c.slots = static_cast<std::size_t>(kv.get_int("slots"));
  c.mode = parse_mode(kv.get("mode"));
  c.validate();
  return c;
}

/// `extra` carries caller metadata (e.g. per-category scale factors).
inline void save_checkpoint(const std::filesystem::path &path, const Model &m, const KeyValues &extra = {}) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n';
  KeyValues kv = extra;
  kv.merge(model_config_to_kv(m.config));
  kv.write(out);
  out << "params " << m.params.size() << '\n';
  for (double v : m.params.values)
    out << format_double(v) << '\n';
}

struct Checkpoint {
  Model model;
  KeyValues meta;
};

inline Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw IoError("not a paintpath checkpoint (bad header): " + path.string());
  std::stringstream header;
  std::size_t count = 0;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("params ", 0) == 0) {
      count = static_cast<std::size_t>(parse_int(line.substr(7)));
      found = true;
      break;
    }
    header << line << '\n';
  }
  if (!found)
    throw IoError("checkpoint has no parameter block: " + path.string());
  Checkpoint ck;
  ck.meta = KeyValues::parse(header);
  ck.model.config = model_config_from_kv(ck.meta);
  ck.model.params = layout_params(ck.model.config);
  if (ck.model.params.size() != count)
    throw IoError("checkpoint parameter count does not match its config: " + path.string());
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw IoError("truncated checkpoint: " + path.string());
    ck.model.params.values[i] = parse_double(line);
  }
  return ck;
}

inline void save_loss_history(const std::filesystem::path &path, const std::vector<EpochLoss> &hist) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write loss history " + path.string());
  out << "epoch,total,y2s,b2e\n";
  for (const auto &e : hist)
    out << e.epoch << ',' << format_double(e.total) << ',' << format_double(e.y2s) << ',' << format_double(e.b2e)
        << '\n';
}

} // namespace paintpath
