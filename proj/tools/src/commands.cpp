#include "g2p/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "g2p/augment.hpp"
#include "g2p/boundary.hpp"
#include "g2p/cli/config.hpp"
#include "g2p/errors.hpp"
#include "g2p/gradcheck.hpp"
#include "g2p/losses.hpp"
#include "g2p/metrics.hpp"
#include "g2p/scene_io.hpp"

namespace g2p::cli {
namespace {

Json config_json(const PipelineConfig& cfg) {
  return Json{{"r_match", cfg.r_match},
              {"k", cfg.k},
              {"r_sem", cfg.r_sem},
              {"eta", cfg.eta},
              {"background_ids", std::vector<Label>(cfg.background_ids.begin(), cfg.background_ids.end())},
              {"lambda_b", cfg.lambda_b},
              {"lambda_d", cfg.lambda_d},
              {"eps_sigma", cfg.eps_sigma},
              {"distance_metric", std::string(to_string(cfg.distance_metric))}};
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void write_json(const std::filesystem::path& path, const Json& j) {
  const auto text = j.dump(2) + "\n";
  write_file(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::filesystem::path sidecar(const std::filesystem::path& path, const std::string& suffix) {
  return std::filesystem::path(path.string() + suffix);
}

}  // namespace

std::vector<Label> read_label_source(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") {
    const auto file = load_points(path);
    if (!file.has_labels) throw SchemaError(path.string() + ": point file has no label property");
    std::vector<Label> out;
    for (const auto& p : file.points) out.push_back(*p.label);
    return out;
  }
  if (ext == ".g2pa") {
    const auto cloud = load_augmented(path);
    std::vector<Label> out;
    for (const auto& p : cloud.points) out.push_back(p.label.value_or(kNoLabel));
    return out;
  }
  return load_labels(path);
}

Json run_augment(const AugmentOptions& opts) {
  opts.config.validate();
  const auto start = std::chrono::steady_clock::now();

  auto cloud = load_points(opts.points, opts.mode);
  if (opts.labels) attach_labels(std::span(cloud.points), load_labels(*opts.labels));
  auto scene = load_splats(opts.splats, opts.mode);
  const auto gaussians = prepare_gaussians(std::move(scene.gaussians), opts.config.eps_sigma);
  const auto result = augment_cloud(cloud.points, gaussians, opts.config, opts.threads);
  save_augmented(result.points, opts.out);

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json manifest{
      {"command", "augment"},
      {"inputs", {{"points", opts.points.string()}, {"splats", opts.splats.string()}}},
      {"output", opts.out.string()},
      {"config", config_json(opts.config)},
      {"matching_mode",
       opts.config.distance_metric == DistanceMetric::kEuclidean ? "euclidean_baseline" : "mahalanobis"},
      {"parse_mode", opts.mode == ParseMode::kStrict ? "strict" : "lenient"},
      {"counts",
       {{"points", result.points.size()},
        {"gaussians", gaussians.size()},
        {"direct", result.stats.direct},
        {"fallback", result.stats.fallback},
        {"unmatched", result.stats.unmatched},
        {"dropped_points", cloud.dropped_records.size()},
        {"dropped_gaussians", scene.dropped_records.size()}}},
      {"threads", opts.threads},
      {"timing_seconds", seconds},
  };
  write_json(sidecar(opts.out, ".manifest.json"), manifest);
  return manifest;
}

Json run_boundary(const BoundaryOptions& opts) {
  opts.config.validate();
  auto cloud = load_augmented(opts.augmented);
  if (opts.labels) attach_labels(std::span(cloud.points), load_labels(*opts.labels));

  const bool labeled = !cloud.points.empty() && std::all_of(cloud.points.begin(), cloud.points.end(),
                                                            [](const auto& p) { return p.label.has_value(); });
  ScaleBoundary scale;
  std::vector<std::uint8_t> sem;
  if (labeled) {
    scale = extract_scale_boundary(cloud.points, opts.config.background_ids, opts.config.eta);
    sem = extract_semantic_boundary(cloud.points, opts.config.r_sem, opts.threads);
  } else {
    // Without labels there is no background to exclude and no semantic set.
    std::vector<AugmentedPoint> bare = cloud.points;
    for (auto& p : bare) p.label.reset();
    scale = extract_scale_boundary(bare, {}, opts.config.eta);
    sem.assign(cloud.points.size(), 0);
  }
  const auto labels = union_boundary(scale, sem);

  save_boundary_flags(opts.out, boundary_flags(cloud.points, labels));
  if (opts.augmented_out) save_augmented(cloud.points, labels, *opts.augmented_out);

  Json report{
      {"command", "boundary"},
      {"input", opts.augmented.string()},
      {"output", opts.out.string()},
      {"mode", labeled ? "scale+semantic" : "scale_only"},
      {"config", config_json(opts.config)},
      {"tau", finite_or_null(scale.tau)},
      {"counts",
       {{"points", cloud.points.size()},
        {"object_points", scale.object_points},
        {"scale", labels.count_scale()},
        {"semantic", labels.count_sem()},
        {"union", labels.count_union()}}},
  };
  if (scale.object_points == 0) report["warning"] = "no object points; scale boundary is empty";
  write_json(sidecar(opts.out, ".json"), report);
  return report;
}

namespace {

Taxonomy load_taxonomy(const EvalOptions& opts, const std::vector<Label>& pred, const std::vector<Label>& truth) {
  if (opts.taxonomy == "scannet20") return Taxonomy::scannet20();
  if (opts.taxonomy == "generic") {
    std::size_t classes = opts.classes.value_or(0);
    if (!opts.classes) {
      for (const auto* v : {&pred, &truth})
        for (Label l : *v)
          if (!(opts.ignore && l == *opts.ignore)) classes = std::max<std::size_t>(classes, l + 1u);
    }
    return Taxonomy::generic(classes);
  }
  const auto bytes = read_file(opts.taxonomy);
  Json j;
  try {
    j = Json::parse(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Json::exception& e) {
    throw SchemaError(opts.taxonomy + ": " + e.what());
  }
  Taxonomy t;
  try {
    t.class_names = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("groups")) {
      for (const auto& g : j.at("groups")) {
        ClassGroup group{g.at("name").get<std::string>(), g.at("classes").get<std::vector<std::size_t>>()};
        for (auto c : group.classes)
          if (c >= t.class_names.size()) throw SchemaError("group " + group.name + " lists unknown class");
        t.groups.push_back(std::move(group));
      }
    }
  } catch (const Json::exception& e) {
    throw SchemaError(opts.taxonomy + ": " + e.what());
  }
  return t;
}

}  // namespace

Json run_eval(const EvalOptions& opts) {
  const auto pred = read_label_source(opts.pred);
  const auto truth = read_label_source(opts.truth);
  const auto taxonomy = load_taxonomy(opts, pred, truth);
  const auto cm = g2p::accumulate(pred, truth, taxonomy.size(), opts.ignore);
  const auto report = summarize(cm, taxonomy);

  Json classes = Json::array();
  for (std::size_t c = 0; c < taxonomy.size(); ++c) {
    const auto& m = report.per_class[c];
    classes.push_back({{"id", c},
                       {"name", taxonomy.class_names[c]},
                       {"support", m.support},
                       {"iou", optional_number(m.iou)},
                       {"accuracy", optional_number(m.accuracy)}});
  }
  Json groups = Json::array();
  for (const auto& g : report.groups) {
    groups.push_back({{"name", g.name}, {"mean_iou", optional_number(g.mean_iou)}, {"classes_present", g.classes_present}});
  }
  return Json{{"command", "eval"},
              {"scored_points", report.total},
              {"miou", report.miou},
              {"macc", report.macc},
              {"oa", report.oa},
              {"groups", groups},
              {"ungrouped", taxonomy.ungrouped()},
              {"classes", classes}};
}

namespace {

class CheckRng {
 public:
  explicit CheckRng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

FeatureBatch random_features(CheckRng& rng) {
  const auto n = static_cast<Eigen::Index>(rng.index(1, 12));
  const auto d = static_cast<Eigen::Index>(rng.index(1, 8));
  const auto d_out = static_cast<Eigen::Index>(rng.index(1, 8));
  FeatureBatch b;
  b.student = rng.matrix(n, d, 1.0);
  b.teacher = rng.matrix(n, d_out, 1.0);
  b.mapping.weight = rng.matrix(d_out, d, 0.5);
  b.mapping.bias = rng.matrix(d_out, 1, 0.1).col(0);
  return b;
}

SemBatch random_sem(CheckRng& rng) {
  const auto n = static_cast<Eigen::Index>(rng.index(1, 12));
  const auto c = static_cast<Eigen::Index>(rng.index(2, 6));
  SemBatch b;
  b.logits = rng.matrix(n, c, 2.0);
  for (Eigen::Index i = 0; i < n; ++i) b.labels.push_back(static_cast<Label>(rng.index(0, c - 1)));
  return b;
}

BouBatch random_bou(CheckRng& rng) {
  const auto n = static_cast<Eigen::Index>(rng.index(1, 16));
  BouBatch b;
  b.logits = rng.matrix(n, 1, 2.0).col(0);
  b.targets = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) b.targets[i] = static_cast<double>(rng.index(0, 1));
  return b;
}

// The Lovasz surrogate is piecewise smooth; finite differences straddling a
// change of sort order are meaningless, so such instances are redrawn.
bool sorted_errors_separated(const SemBatch& b) {
  const Matrix p = softmax_rows(b.logits);
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    std::vector<double> e;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      e.push_back(std::abs((b.labels[i] == static_cast<Label>(c) ? 1.0 : 0.0) - p(i, c)));
    }
    std::sort(e.begin(), e.end());
    for (std::size_t i = 1; i < e.size(); ++i)
      if (e[i] - e[i - 1] < 1e-3) return false;
  }
  return true;
}

struct TermCheck {
  double max_error = 0.0;
  std::size_t instances = 0;
  std::size_t redrawn = 0;
};

Json term_json(const TermCheck& t) {
  return Json{{"max_relative_error", t.max_error}, {"instances", t.instances}, {"redrawn", t.redrawn},
              {"passed", t.max_error <= kLossCheckTolerance}};
}

}  // namespace

Json run_losses_check(const LossesCheckOptions& opts) {
  if (opts.trials == 0) throw ValidationError("trials must be >= 1");
  CheckRng rng(opts.seed);
  TermCheck distill, sem, bou;

  for (std::size_t t = 0; t < opts.trials; ++t) {
    const auto b = random_features(rng);
    const auto analytic = distill_loss(b).gradient;
    const auto r = check_gradient(
        [&](const Matrix& x) {
          FeatureBatch c = b;
          c.student = x;
          return distill_loss(c).value;
        },
        b.student, analytic);
    distill.max_error = std::max(distill.max_error, r.max_relative_error);
    ++distill.instances;
  }
  while (sem.instances < opts.trials) {
    const auto b = random_sem(rng);
    if (!sorted_errors_separated(b)) {
      ++sem.redrawn;
      continue;
    }
    const auto analytic = sem_loss(b).gradient;
    const auto r = check_gradient(
        [&](const Matrix& x) {
          SemBatch c = b;
          c.logits = x;
          return sem_loss(c).value;
        },
        b.logits, analytic);
    sem.max_error = std::max(sem.max_error, r.max_relative_error);
    ++sem.instances;
  }
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const auto b = random_bou(rng);
    const Matrix analytic = bou_loss(b).gradient;
    const auto r = check_gradient(
        [&](const Matrix& x) {
          BouBatch c = b;
          c.logits = x.col(0);
          return bou_loss(c).value;
        },
        Matrix(b.logits), analytic);
    bou.max_error = std::max(bou.max_error, r.max_relative_error);
    ++bou.instances;
  }

  const auto sample = evaluate_losses(random_sem(rng), random_bou(rng), random_features(rng));
  const bool passed = std::max({distill.max_error, sem.max_error, bou.max_error}) <= kLossCheckTolerance;
  return Json{{"command", "losses-check"},
              {"seed", opts.seed},
              {"trials", opts.trials},
              {"step", kFiniteDifferenceStep},
              {"tolerance", kLossCheckTolerance},
              {"distill", term_json(distill)},
              {"sem", term_json(sem)},
              {"bou", term_json(bou)},
              {"sample",
               {{"sem", sample.sem},
                {"bou", sample.bou},
                {"distill", sample.distill},
                {"lambda_b", sample.weights.lambda_b},
                {"lambda_d", sample.weights.lambda_d},
                {"total", sample.total}}},
              {"passed", passed}};
}

Json run_synth(const SynthOptions& opts) {
  const auto scene = generate_scene(opts.spec);
  std::filesystem::create_directories(opts.out);
  save_points(opts.out / "points.ply", scene.points);
  save_splats(opts.out / "splats.ply", scene.gaussians);
  save_boundary_flags(opts.out / "boundary_gt.u8", scene.boundary_truth);
  std::vector<Label> labels;
  for (const auto& p : scene.points) labels.push_back(*p.label);
  save_labels(opts.out / "labels.u16", labels);

  const auto gt = static_cast<std::size_t>(std::count(scene.boundary_truth.begin(), scene.boundary_truth.end(), 1));
  Json report{{"command", "synth"},
              {"preset", std::string(to_string(opts.spec.preset))},
              {"seed", opts.spec.seed},
              {"point_density", opts.spec.point_density},
              {"gaussian_density", opts.spec.gaussian_density},
              {"edge_band", opts.spec.edge_band},
              {"edge_scale_factor", opts.spec.edge_scale_factor},
              {"edge_density_multiplier", opts.spec.band_density_multiplier()},
              {"counts", {{"points", scene.points.size()}, {"gaussians", scene.gaussians.size()}, {"boundary_truth", gt}}},
              {"files", {"points.ply", "splats.ply", "boundary_gt.u8", "labels.u16"}}};
  write_json(opts.out / "scene.json", report);
  return report;
}

namespace {

/// Config file first, then explicit flags on top.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::optional<double> r_match, r_sem, eta, eps_sigma;
  std::optional<std::size_t> k;
  std::optional<std::string> metric, background;

  void add_to(CLI::App& app, bool matching, bool boundary) {
    app.add_option("--config", config_file, "key = value config file (PipelineConfig field names)");
    if (matching) {
      app.add_option("--r-match", r_match, "candidate prefilter radius, meters (default 0.10)");
      app.add_option("--k", k, "neighbors per point (default 20)");
      app.add_option("--metric", metric, "mahalanobis or euclidean")->check(CLI::IsMember({"mahalanobis", "euclidean"}));
      app.add_option("--eps-sigma", eps_sigma, "covariance eigenvalue floor, m^2");
    }
    if (boundary) {
      app.add_option("--eta", eta, "fraction of largest scales pruned (default 0.7)");
      app.add_option("--r-sem", r_sem, "semantic boundary radius, meters (default 0.04)");
      app.add_option("--background", background, "comma-separated background label ids (default 0,1; 'none')");
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (config_file) apply_config_file(*config_file, cfg);
    if (r_match) cfg.r_match = *r_match;
    if (k) cfg.k = *k;
    if (metric) cfg.distance_metric = parse_distance_metric(*metric);
    if (eps_sigma) cfg.eps_sigma = *eps_sigma;
    if (eta) cfg.eta = *eta;
    if (r_sem) cfg.r_sem = *r_sem;
    if (background) cfg.background_ids = parse_label_list(*background);
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-to-point feature augmentation and boundary pseudo-labels"};
  app.name("g2p");
  app.require_subcommand(1);

  std::optional<std::size_t> threads_flag;
  const auto threads = [&] {
    const auto n = threads_flag ? *threads_flag : default_threads();
    if (n == 0) throw ValidationError("--threads must be >= 1");
    return n;
  };
  std::function<Json()> action;

  AugmentOptions aug;
  ConfigFlags aug_cfg;
  std::optional<std::string> aug_labels;
  bool lenient = false;
  auto* augment = app.add_subcommand("augment", "extend points with aggregated Gaussian scale and opacity");
  augment->add_option("--points", aug.points, "point cloud PLY")->required();
  augment->add_option("--splats", aug.splats, "3DGS scene PLY")->required();
  augment->add_option("--out", aug.out, "augmented cloud (.g2pa); manifest goes to <out>.manifest.json")->required();
  augment->add_option("--labels", aug_labels, "u16 label file for the points");
  augment->add_option("--threads", threads_flag, "worker threads (default $G2P_THREADS or all cores)");
  augment->add_flag("--lenient", lenient, "drop malformed records instead of failing");
  aug_cfg.add_to(*augment, true, false);
  augment->callback([&] {
    action = [&] {
      aug.config = aug_cfg.resolve();
      aug.threads = threads();
      aug.mode = lenient ? ParseMode::kLenient : ParseMode::kStrict;
      if (aug_labels) aug.labels = *aug_labels;
      return run_augment(aug);
    };
  });

  BoundaryOptions bnd;
  ConfigFlags bnd_cfg;
  std::optional<std::string> bnd_labels, bnd_aug_out;
  auto* boundary = app.add_subcommand("boundary", "scale, semantic and union boundary pseudo-labels");
  boundary->add_option("--augmented", bnd.augmented, "augmented cloud (.g2pa)")->required();
  boundary->add_option("--out", bnd.out, "boundary flags, one byte per point; report goes to <out>.json")->required();
  boundary->add_option("--labels", bnd_labels, "u16 label file (overrides labels in the cloud)");
  boundary->add_option("--augmented-out", bnd_aug_out, "also write the cloud with boundary flags set");
  boundary->add_option("--threads", threads_flag, "worker threads (default $G2P_THREADS or all cores)");
  bnd_cfg.add_to(*boundary, false, true);
  boundary->callback([&] {
    action = [&] {
      bnd.config = bnd_cfg.resolve();
      bnd.threads = threads();
      if (bnd_labels) bnd.labels = *bnd_labels;
      if (bnd_aug_out) bnd.augmented_out = *bnd_aug_out;
      return run_boundary(bnd);
    };
  });

  EvalOptions ev;
  std::optional<std::size_t> ev_ignore;
  bool no_ignore = false;
  std::optional<std::string> ev_out;
  auto* eval = app.add_subcommand("eval", "mIoU, mAcc, OA and class-group means");
  eval->add_option("--pred", ev.pred, "predicted labels (.ply, .g2pa or u16 file)")->required();
  eval->add_option("--truth", ev.truth, "true labels (.ply, .g2pa or u16 file)")->required();
  eval->add_option("--taxonomy", ev.taxonomy, "scannet20, generic, or a JSON file")->capture_default_str();
  eval->add_option("--classes", ev.classes, "class count for the generic taxonomy");
  eval->add_option("--ignore", ev_ignore, "true label to skip (default 65535)");
  eval->add_flag("--no-ignore", no_ignore, "score every point");
  eval->add_option("--out", ev_out, "also write the report here");
  eval->callback([&] {
    action = [&] {
      if (ev_ignore) {
        if (*ev_ignore > kNoLabel) throw ValidationError("--ignore out of range");
        ev.ignore = static_cast<Label>(*ev_ignore);
      }
      if (no_ignore) ev.ignore.reset();
      auto report = run_eval(ev);
      if (ev_out) write_json(*ev_out, report);
      return report;
    };
  });

  LossesCheckOptions lc;
  std::optional<std::string> lc_out;
  auto* losses = app.add_subcommand("losses-check", "finite-difference check of the loss gradients");
  losses->add_option("--seed", lc.seed, "random seed")->capture_default_str();
  losses->add_option("--trials", lc.trials, "instances per loss term")->capture_default_str();
  losses->add_option("--out", lc_out, "also write the report here");
  losses->callback([&] {
    action = [&] {
      auto report = run_losses_check(lc);
      if (lc_out) write_json(*lc_out, report);
      return report;
    };
  });

  SynthOptions sy;
  std::string preset = "door-on-wall";
  std::optional<double> edge_density;
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic scene with matching splats");
  synth->add_option("--preset", preset, "door-on-wall or box-on-floor")->capture_default_str();
  synth->add_option("--seed", sy.spec.seed, "random seed")->capture_default_str();
  synth->add_option("--out", sy.out, "output directory")->required();
  synth->add_option("--point-density", sy.spec.point_density, "points per m^2")->capture_default_str();
  synth->add_option("--gaussian-density", sy.spec.gaussian_density, "gaussians per m^2")->capture_default_str();
  synth->add_option("--edge-band", sy.spec.edge_band, "edge band width, meters")->capture_default_str();
  synth->add_option("--edge-scale", sy.spec.edge_scale_factor, "scale multiplier inside the band")->capture_default_str();
  synth->add_option("--edge-density", edge_density, "gaussian density multiplier inside the band");
  synth->callback([&] {
    action = [&] {
      sy.spec.preset = parse_scene_preset(preset);
      if (edge_density) sy.spec.edge_density_multiplier = *edge_density;
      return run_synth(sy);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    const auto report = action();
    out << report.dump(2) << "\n";
    if (report.contains("passed") && !report["passed"].get<bool>()) return kExitValidation;
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace g2p::cli
