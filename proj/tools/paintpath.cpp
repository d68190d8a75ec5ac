// paintpath command-line tool: generate, train, predict, concat, simulate,
// evaluate, sweep. Exit codes: 0 ok, 1 invalid input, 2 I/O failure.

#include "paintpath/paintpath.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace paintpath;

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::optional<int> lambda;
  std::optional<int> overlap;
  std::optional<double> tau;
  std::optional<double> fraction;
  std::optional<long long> epochs;
  std::string categories;
  bool concat = false;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--config", o.config, "key = value experiment file");
  cmd->add_option("--set", o.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "experiment seed");
  cmd->add_option("--lambda", o.lambda, "segment length");
  cmd->add_option("--overlap", o.overlap, "poses shared by consecutive segments");
  cmd->add_option("--tau", o.tau, "linking threshold (normalized units)");
  cmd->add_option("--fraction", o.fraction, "share of the training split to use");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--categories", o.categories, "comma-separated categories");
}

/// Config file, then --set pairs, then dedicated flags; later wins.
KeyValues merged_kv(const CommonOptions &o) {
  KeyValues kv;
  if (!o.config.empty())
    kv = KeyValues::load(o.config);
  for (const auto &s : o.sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects key=value, got '" + s + "'");
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t"), e = t.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (o.seed)
    kv.set("seed", std::to_string(*o.seed));
  if (o.lambda)
    kv.set("lambda", *o.lambda);
  if (o.overlap)
    kv.set("overlap", *o.overlap);
  if (o.tau)
    kv.set("tau", *o.tau);
  if (o.fraction)
    kv.set("fraction", *o.fraction);
  if (o.epochs)
    kv.set("epochs", *o.epochs);
  if (!o.categories.empty())
    kv.set("categories", o.categories);
  if (o.concat)
    kv.set("concat", 1);
  return kv;
}

/// Categories named in the config, or every category of the dataset.
std::vector<Category> categories_for(const KeyValues &kv, const ExperimentConfig &cfg, const Dataset &ds) {
  return kv.has("categories") ? cfg.categories : ds.categories();
}

void ensure_dir(const fs::path &p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

std::vector<double> parse_values(const std::string &s) {
  std::vector<double> out;
  for (const auto &v : split_char(s, ','))
    out.push_back(parse_double(v));
  return out;
}

void print_row(const MetricsRow &r) {
  std::cout << r.id << ": PCD(x1e4) " << format_double(r.pcd) << "  PC " << format_double(r.pc) << "%  segments "
            << format_double(r.segments) << "  strokes " << format_double(r.strokes) << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Segment-based spray-painting path prediction"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, pred_o, concat_o, sim_o, eval_o, sweep_o;
  std::string out, data, checkpoint, pretrained, id, input, mesh, strokes, gt, param, values;
  bool ground_truth = false, artifacts = false;

  auto *gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, gen_o);
  gen->add_option("--out", out, "dataset directory")->required();

  auto *trn = app.add_subcommand("train", "train a model on a dataset");
  add_common(trn, train_o);
  trn->add_option("--data", data, "dataset directory")->required();
  trn->add_option("--out", out, "output directory")->required();
  trn->add_option("--pretrained", pretrained, "checkpoint to fine-tune");

  auto *prd = app.add_subcommand("predict", "predict segments for one dataset sample");
  add_common(prd, pred_o);
  prd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  prd->add_option("--data", data, "dataset directory")->required();
  prd->add_option("--id", id, "sample id")->required();
  prd->add_option("--out", out, "output directory")->required();

  auto *cat = app.add_subcommand("concat", "link predicted segments into strokes");
  add_common(cat, concat_o);
  cat->add_option("--input", input, "prediction directory")->required();
  cat->add_option("--out", out, "output directory")->required();

  auto *sim = app.add_subcommand("simulate", "deposit paint for a set of strokes");
  add_common(sim, sim_o);
  sim->add_option("--mesh", mesh, "mesh file")->required();
  sim->add_option("--strokes", strokes, "directory of stroke files")->required();
  sim->add_option("--gt", gt, "ground-truth stroke directory for coverage");
  sim->add_option("--out", out, "output directory")->required();

  auto *evl = app.add_subcommand("evaluate", "PCD and PC on the test split");
  add_common(evl, eval_o);
  evl->add_option("--checkpoint", checkpoint, "model checkpoint");
  evl->add_option("--data", data, "dataset directory")->required();
  evl->add_option("--out", out, "output directory")->required();
  evl->add_flag("--concat", eval_o.concat, "link segments before scoring");
  evl->add_flag("--ground-truth", ground_truth, "score the ground truth against itself");
  evl->add_flag("--artifacts", artifacts, "write per-sample strokes and thickness fields");

  auto *swp = app.add_subcommand("sweep", "train/evaluate across parameter values");
  add_common(swp, sweep_o);
  swp->add_option("--param", param, "lambda, overlap or tau")->required();
  swp->add_option("--values", values, "comma-separated values")->required();
  swp->add_option("--data", data, "dataset directory")->required();
  swp->add_option("--out", out, "output directory")->required();
  swp->add_option("--checkpoint", checkpoint, "fixed model for tau sweeps");
  swp->add_flag("--concat", sweep_o.concat, "link segments before scoring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      const auto cfg = ExperimentConfig::from_kv(merged_kv(gen_o));
      const auto ds = generate_dataset(cfg, out);
      std::cout << "wrote " << ds.entries.size() << " samples to " << out << '\n';
    } else if (*trn) {
      const auto kv = merged_kv(train_o);
      const auto cfg = ExperimentConfig::from_kv(kv);
      const auto ds = load_dataset(data);
      const auto cats = categories_for(kv, cfg, ds);
      ensure_dir(out);
      std::optional<Checkpoint> pre;
      if (!pretrained.empty())
        pre = load_checkpoint(pretrained);
      const auto res = train_on_dataset(cfg, ds, cats, pre ? &pre->model : nullptr);
      KeyValues meta = res.meta;
      if (pre) {
        meta.set("pretrain.epochs", pre->meta.get_or("train.epochs", "unknown"));
        meta.set("pretrain.samples", pre->meta.get_or("train.samples", "unknown"));
        const fs::path pre_loss = fs::path(pretrained).parent_path() / "loss.csv";
        if (fs::exists(pre_loss))
          fs::copy_file(pre_loss, fs::path(out) / "pretrain_loss.csv", fs::copy_options::overwrite_existing);
      }
      save_checkpoint(fs::path(out) / "checkpoint.txt", res.model, meta);
      save_loss_history(fs::path(out) / "loss.csv", res.history);
      cfg.to_kv().save(fs::path(out) / "config.txt");
      std::cout << "trained on " << res.sample_ids.size() << " samples, final loss "
                << format_double(res.history.back().total) << '\n';
    } else if (*prd) {
      const auto ck = load_checkpoint(checkpoint);
      const auto ds = load_dataset(data);
      const auto &e = ds.entry(id);
      const auto s = load_sample(ds, e, false);
      const auto p = predict_sample(ck.model, s.cloud, ds.scale(e.category));
      KeyValues extra;
      extra.set("id", id);
      save_prediction(out, p, extra);
      std::cout << "wrote " << p.segments.size() << " segments to " << out << '\n';
    } else if (*cat) {
      const auto cfg = ExperimentConfig::from_kv(merged_kv(concat_o));
      const auto p = load_prediction(input);
      require(p.segments.lambda >= 2, "concat: segments need at least 2 poses");
      const auto r = concatenate(p.segments, cfg.link);
      ensure_dir(out);
      save_strokes(out, denormalize(r.strokes, p.transform));
      KeyValues kv;
      kv.set("tau", cfg.link.tau);
      kv.set("segments", p.segments.size());
      kv.set("edges", r.graph.edge_count());
      kv.set("strokes", r.strokes.size());
      kv.save(fs::path(out) / "concat.txt");
      std::cout << "linked " << p.segments.size() << " segments into " << r.strokes.size() << " strokes\n";
    } else if (*sim) {
      const auto cfg = ExperimentConfig::from_kv(merged_kv(sim_o));
      const auto m = load_mesh(mesh);
      const auto pred = deposit(m.mesh, load_strokes(strokes), cfg.gun);
      ensure_dir(out);
      save_thickness(fs::path(out) / "thickness.txt", pred);
      save_mesh(fs::path(out) / "painted.obj", m.mesh, pred.values);
      if (!gt.empty()) {
        const auto ref = deposit(m.mesh, load_strokes(gt), cfg.gun);
        const auto cov = paint_coverage(pred, ref);
        coverage_to_kv(cov).save(fs::path(out) / "coverage.txt");
        std::cout << "PC " << format_double(cov.pc) << "%\n";
      }
    } else if (*evl) {
      const auto kv = merged_kv(eval_o);
      const auto cfg = ExperimentConfig::from_kv(kv);
      const auto ds = load_dataset(data);
      const auto cats = categories_for(kv, cfg, ds);
      require(ground_truth || !checkpoint.empty(), "evaluate: --checkpoint or --ground-truth is required");
      std::optional<Checkpoint> ck;
      if (!checkpoint.empty())
        ck = load_checkpoint(checkpoint);
      EvalOptions opt;
      opt.concat = cfg.concat;
      opt.ground_truth = ground_truth;
      opt.link = cfg.link;
      opt.gun = cfg.gun;
      opt.lambda = ck ? std::max(ck->model.config.lambda, 1) : cfg.lambda;
      opt.overlap = ck ? ck->model.config.overlap : cfg.overlap;
      if (ground_truth)
        validate_window(opt.lambda, opt.overlap);
      ensure_dir(out);
      if (artifacts)
        opt.artifacts = fs::path(out) / "samples";
      const auto rows = evaluate_dataset(ck ? &ck->model : nullptr, ds, cats, opt);
      write_metrics_csv(fs::path(out) / "metrics.csv", rows);
      print_row(mean_row(rows));
    } else if (*swp) {
      const auto kv = merged_kv(sweep_o);
      const auto cfg = ExperimentConfig::from_kv(kv);
      const auto ds = load_dataset(data);
      const auto cats = categories_for(kv, cfg, ds);
      std::optional<Checkpoint> ck;
      if (!checkpoint.empty())
        ck = load_checkpoint(checkpoint);
      const auto rows = run_sweep(param, parse_values(values), cfg, ds, cats, ck ? &ck->model : nullptr);
      ensure_dir(out);
      write_sweep_csv(fs::path(out) / "sweep.csv", rows);
      write_sweep_svg(fs::path(out) / "sweep.svg", rows);
      for (const auto &r : rows)
        std::cout << param << ' ' << format_double(r.value) << ": PCD(x1e4) " << format_double(r.mean.pcd) << "  PC "
                  << format_double(r.mean.pc) << "%\n";
    }
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
