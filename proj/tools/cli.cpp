#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "planekit/config.hpp"
#include "planekit/dataset_io.hpp"
#include "planekit/exemplars.hpp"
#include "planekit/losses.hpp"
#include "planekit/matching.hpp"
#include "planekit/mesh.hpp"
#include "planekit/metrics.hpp"
#include "planekit/plane_fitting.hpp"
#include "planekit/random.hpp"
#include "planekit/synth.hpp"

namespace planekit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kEnvPrefix = "PLANEKIT_";

// Per-image input layout under an images directory.
constexpr const char* kDepthFloat = "depth.fdm";
constexpr const char* kDepthPng = "depth.png";
constexpr const char* kSegmentationMask = "segmentation.png";
constexpr const char* kSegmentationTable = "segmentation.json";
constexpr const char* kTargetsFile = "targets.json";

struct CommonOptions {
  std::string camera;
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string domain = "indoor";
  double depth_scale = 1000.0;
};

std::string env(const char* name) { return std::string(kEnvPrefix) + name; }

void add_camera(CLI::App* cmd, CommonOptions& o, bool required) {
  auto* opt = cmd->add_option("--camera", o.camera, "Intrinsics JSON {fx, fy, cx, cy, width, height}")
                  ->envname(env("CAMERA"));
  if (required) opt->required();
}
void add_config(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Tool config JSON")->envname(env("CONFIG"));
}
void add_seed(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Base seed for all randomness")->envname(env("SEED"));
}
void add_jobs(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--jobs", o.jobs, "Images processed concurrently")
      ->envname(env("JOBS"))
      ->check(CLI::Range(1, 1024));
}
void add_domain(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--domain", o.domain, "Recall threshold set")
      ->envname(env("DOMAIN"))
      ->check(CLI::IsMember({"indoor", "outdoor"}));
}
void add_depth_scale(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--depth-scale", o.depth_scale, "16-bit PNG depth units per meter")
      ->envname(env("DEPTH_SCALE"))
      ->check(CLI::PositiveNumber);
}

ToolConfig load_tool_config(const CommonOptions& o) {
  return o.config.empty() ? ToolConfig{} : load_config(o.config);
}

CameraIntrinsics load_camera(const std::string& path, std::ostream& err) {
  if (!fs::exists(path)) throw Error(ErrorKind::kConfiguration, "camera file not found: " + path);
  LoadedIntrinsics loaded = load_intrinsics(path);
  for (const auto& w : loaded.warnings) err << "warning: " << path << ": " << w << "\n";
  return loaded.camera;
}

// Sorted names of the subdirectories of `root`.
std::vector<std::string> list_stems(const std::string& root) {
  if (!fs::is_directory(root)) throw Error(ErrorKind::kConfiguration, "not a directory: " + root);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) stems.push_back(entry.path().filename().string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw Error(ErrorKind::kFormat, "no image directories under " + root);
  return stems;
}

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).string(); }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Runs task(i) for i in [0, n) on up to `jobs` threads. The first failure in
// index order is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Progress {
 public:
  Progress(std::ostream& err, std::size_t total) : err_(err), total_(total) {}
  void report(const std::string& stem, const std::string& message) {
    const std::lock_guard lock(mutex_);
    err_ << "[" << ++done_ << "/" << total_ << "] " << stem << ": " << message << "\n";
  }
  void warn(const std::string& stem, const std::string& message) {
    const std::lock_guard lock(mutex_);
    err_ << "warning: " << stem << ": " << message << "\n";
  }

 private:
  std::ostream& err_;
  std::size_t total_;
  std::size_t done_ = 0;
  std::mutex mutex_;
};

CameraIntrinsics default_camera(int width, int height) {
  const double f = 525.0 * width / 640.0;
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
}

// ---- subcommands ----------------------------------------------------------

struct SynthOptions {
  std::string out;
  int count = 1;
  int planes = 5;
  int width = 640;
  int height = 480;
  double noise = 0.0;
  double depth_min = 1.0;
  double depth_max = 10.0;
  std::string semantic_class = "wall";
};

int run_synth(const SynthOptions& s, const CommonOptions& o, std::ostream& err) {
  const CameraIntrinsics camera =
      o.camera.empty() ? default_camera(s.width, s.height) : load_camera(o.camera, err);
  camera.validate();
  const std::uint64_t seed = o.seed.value_or(0);
  save_intrinsics(camera, join(s.out, "camera.json"));
  Progress progress(err, static_cast<std::size_t>(s.count));
  parallel_for(static_cast<std::size_t>(s.count), o.jobs, [&](std::size_t i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%04zu", i);
    SceneSpec spec;
    spec.plane_count = s.planes;
    spec.depth_min = s.depth_min;
    spec.depth_max = s.depth_max;
    spec.noise_sigma = s.noise;
    spec.semantic_class = s.semantic_class;
    spec.seed = derive_seed(seed, i);
    const SyntheticScene scene = synth_scene(spec, camera);
    const std::string image_dir = join(join(s.out, "images"), stem);
    save_depth(scene.depth, join(image_dir, kDepthFloat));
    save_segmentation(scene.segmentation, join(image_dir, kSegmentationMask),
                      join(image_dir, kSegmentationTable));
    save_annotation(scene.ground_truth, join(join(s.out, "gt"), stem));
    progress.report(stem, std::to_string(scene.planes.size()) + " planes");
  });
  return kExitOk;
}

struct IoOptions {
  std::string input;
  std::string out;
};

int run_annotate(const IoOptions& io, const CommonOptions& o, std::ostream& err) {
  const CameraIntrinsics camera = load_camera(o.camera, err);
  ToolConfig config = load_tool_config(o);
  if (o.seed) config.fitting.seed = *o.seed;
  const DepthEncoding encoding{o.depth_scale, 0};
  const std::vector<std::string> stems = list_stems(io.input);
  Progress progress(err, stems.size());
  parallel_for(stems.size(), o.jobs, [&](std::size_t i) {
    const std::string dir = join(io.input, stems[i]);
    const std::string depth_path =
        fs::exists(join(dir, kDepthFloat)) ? join(dir, kDepthFloat) : join(dir, kDepthPng);
    const DepthMap depth = load_depth(depth_path, encoding);
    const std::string table = join(dir, kSegmentationTable);
    const LoadedSegmentation seg =
        load_segmentation(join(dir, kSegmentationMask), fs::exists(table) ? table : "");
    for (const auto& w : seg.warnings) progress.warn(stems[i], w);

    FittingConfig fitting = config.fitting;
    // Keyed by name so an image's result does not depend on its neighbors.
    fitting.seed = derive_seed(config.fitting.seed, fnv1a(stems[i]));
    const PlaneAnnotation annotation =
        annotate_image(depth, seg.segmentation, camera, config.ranges, fitting, 1);
    save_annotation(annotation, join(io.out, stems[i]));
    std::string message = std::to_string(annotation.planes.size()) + " planes";
    if (!annotation.underfilled_instances.empty()) {
      message += ", " + std::to_string(annotation.underfilled_instances.size()) +
                 " instances below their category minimum";
    }
    progress.report(stems[i], message);
  });
  return kExitOk;
}

struct ClusterOptions {
  std::string input;
  std::string out;
  int normals = kDefaultNormalExemplars;
  int per_group = kDefaultOffsetExemplarsPerGroup;
  double split = kDefaultOffsetSplit;
};

int run_cluster(const ClusterOptions& c, const CommonOptions& o, std::ostream& err) {
  const std::uint64_t seed = o.seed.value_or(0);
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> offsets;
  for (const std::string& stem : list_stems(c.input)) {
    for (const PlaneInstance& p : load_annotation(join(c.input, stem)).planes) {
      normals.push_back(p.plane.normal());
      offsets.push_back(p.plane.offset());
    }
  }
  err << "clustering " << normals.size() << " planes\n";
  OffsetExemplars offset_set = build_offset_exemplars(offsets, c.split, c.per_group, seed);
  for (const auto& w : offset_set.warnings) err << "warning: " << w << "\n";
  ExemplarSet exemplars(build_normal_exemplars(normals, c.normals, derive_seed(seed, 2)),
                        offset_set.values, c.split, seed);
  exemplars.provenance = {offset_set.near_group_size, offset_set.far_group_size};
  save_exemplars(exemplars, c.out);
  err << "wrote " << exemplars.normal_count() << " normal and " << exemplars.offset_count()
      << " offset exemplars to " << c.out << "\n";
  return kExitOk;
}

int run_encode(const IoOptions& io, const std::string& exemplar_path, const CommonOptions& o,
               std::ostream& err) {
  const ExemplarSet exemplars = load_exemplars(exemplar_path);
  const std::vector<std::string> stems = list_stems(io.input);
  Progress progress(err, stems.size());
  parallel_for(stems.size(), o.jobs, [&](std::size_t i) {
    std::vector<PlaneTarget> targets;
    for (const PlaneInstance& p : load_annotation(join(io.input, stems[i])).planes) {
      targets.push_back(encode_plane(p.plane, exemplars));
    }
    save_targets(targets, join(join(io.out, stems[i]), kTargetsFile));
    progress.report(stems[i], std::to_string(targets.size()) + " targets");
  });
  return kExitOk;
}

json report_to_json(const EvalReport& r) {
  json j = {{"images", r.image_count},
            {"rand_index", r.rand_index()},
            {"voi", r.voi()},
            {"seg_covering", r.seg_covering()},
            {"gt_planes", r.recall.gt_count},
            {"matched_planes", r.recall.pairs.size()},
            {"depth_thresholds", r.recall.depth_thresholds},
            {"depth_recall", r.recall.depth_recall()},
            {"normal_thresholds", r.recall.normal_thresholds},
            {"normal_recall", r.recall.normal_recall()}};
  return j;
}

struct EvaluateOptions {
  std::string pred;
  std::string gt;
  std::string out;
};

int run_evaluate(const EvaluateOptions& e, const CommonOptions& o, std::ostream& out,
                 std::ostream& err) {
  const RecallSpec spec = o.domain == "outdoor" ? RecallSpec::outdoor() : RecallSpec::indoor();
  const std::vector<std::string> stems = list_stems(e.gt);
  std::vector<EvalReport> reports(stems.size());
  Progress progress(err, stems.size());
  parallel_for(stems.size(), o.jobs, [&](std::size_t i) {
    const PlaneAnnotation gt = load_annotation(join(e.gt, stems[i]));
    const std::string pred_dir = join(e.pred, stems[i]);
    if (!fs::is_directory(pred_dir)) {
      throw Error(ErrorKind::kFormat, "missing prediction for " + stems[i]);
    }
    const PlaneAnnotation pred = load_annotation(pred_dir);
    const CameraIntrinsics camera = o.camera.empty() ? gt.camera : load_camera(o.camera, err);
    reports[i] = evaluate_image(pred, gt, camera, spec);
    progress.report(stems[i], std::to_string(reports[i].recall.pairs.size()) + "/" +
                                  std::to_string(gt.planes.size()) + " planes matched");
  });

  EvalReport total;
  json per_image = json::array();
  for (std::size_t i = 0; i < stems.size(); ++i) {
    total.merge(reports[i]);
    json entry = report_to_json(reports[i]);
    entry["stem"] = stems[i];
    per_image.push_back(entry);
  }
  json summary = report_to_json(total);
  summary["domain"] = o.domain;
  out << summary.dump(2) << "\n";
  if (!e.out.empty()) {
    summary["per_image"] = per_image;
    write_text_file(e.out, summary.dump(2) + "\n");
  }
  return kExitOk;
}

int run_render_depth(const IoOptions& io, const CommonOptions& o, std::ostream& err) {
  const PlaneAnnotation annotation = load_annotation(io.input);
  const DepthMap depth = render_annotation_depth(annotation);
  save_depth(depth, io.out, DepthEncoding{o.depth_scale, 0});
  err << "rendered " << depth.valid_count() << " planar pixels to " << io.out << "\n";
  return kExitOk;
}

int run_export_mesh(const IoOptions& io, const CommonOptions& o, std::ostream& err) {
  const PlaneAnnotation annotation = load_annotation(io.input);
  const CameraIntrinsics camera = o.camera.empty() ? annotation.camera : load_camera(o.camera, err);
  const Mesh mesh = export_mesh(annotation, camera);
  write_ply(mesh, io.out);
  err << "wrote " << mesh.vertices.size() << " vertices and " << mesh.faces.size()
      << " faces to " << io.out << "\n";
  return kExitOk;
}

struct LossCheckOptions {
  std::string pred;
  std::string gt;
  std::string exemplars;
};

int run_loss_check(const LossCheckOptions& l, const CommonOptions& o, std::ostream& out) {
  const ToolConfig config = load_tool_config(o);
  const PredictionSet predictions = load_predictions(l.pred);
  const PlaneAnnotation gt = load_annotation(l.gt);
  const ExemplarSet exemplars = load_exemplars(l.exemplars);
  predictions.validate(exemplars.normal_count(), exemplars.offset_count());
  if (predictions.width != gt.width() || predictions.height != gt.height()) {
    throw Error(ErrorKind::kConfiguration, "prediction and annotation sizes differ");
  }

  std::vector<PlaneTarget> targets;
  for (const PlaneInstance& p : gt.planes) targets.push_back(encode_plane(p.plane, exemplars));
  const Eigen::MatrixXd cost = matching_cost(predictions, gt, config.loss_weights);
  const Assignment assignment = hungarian(cost);
  const LossBreakdown b =
      compute_losses(predictions, gt, targets, render_annotation_depth(gt),
                     render_annotation_normals(gt), assignment, config.loss_weights);

  json pairs = json::array();
  for (const auto& [q, g] : assignment) pairs.push_back({q, g});
  const json report = {{"assignment", pairs},
                       {"matching_cost", assignment_cost(cost, assignment)},
                       {"losses",
                        {{"classification", b.classification},
                         {"mask", b.mask},
                         {"normal_class", b.normal_class},
                         {"normal_residual", b.normal_residual},
                         {"offset_class", b.offset_class},
                         {"offset_residual", b.offset_residual},
                         {"pixel_depth", b.pixel_depth},
                         {"pixel_normal_l1", b.pixel_normal_l1},
                         {"pixel_normal_cos", b.pixel_normal_cos},
                         {"total", b.total}}}};
  out << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration:
      return kExitConfiguration;
    case ErrorKind::kFormat:
      return kExitFormat;
    case ErrorKind::kDegenerateSample:
    case ErrorKind::kDomain:
    case ErrorKind::kDecode:
      return kExitDomain;
    case ErrorKind::kGeneration:
      return kExitGeneration;
  }
  return kExitFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plane annotation, exemplar and evaluation tools", "planekit"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* synth = app.add_subcommand("synth", "Generate seeded piecewise-planar scenes");
  SynthOptions synth_opts;
  synth->add_option("--out", synth_opts.out, "Output root")->required();
  synth->add_option("--count", synth_opts.count, "Number of scenes")->check(CLI::Range(1, 1000000));
  synth->add_option("--planes", synth_opts.planes, "Planes per scene")->check(CLI::Range(1, 65535));
  synth->add_option("--width", synth_opts.width, "Image width without --camera")
      ->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_opts.height, "Image height without --camera")
      ->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_opts.noise, "Relative depth noise sigma")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--depth-min", synth_opts.depth_min, "Nearest plane depth (m)");
  synth->add_option("--depth-max", synth_opts.depth_max, "Farthest plane depth (m)");
  synth->add_option("--class", synth_opts.semantic_class, "Semantic class of every region");
  add_camera(synth, common, false);
  add_seed(synth, common);
  add_jobs(synth, common);

  auto* annotate = app.add_subcommand("annotate", "Fit planes to depth + instance segmentation");
  IoOptions annotate_io;
  annotate->add_option("--input", annotate_io.input, "Directory of per-image directories")
      ->required();
  annotate->add_option("--out", annotate_io.out, "Annotation output root")->required();
  add_camera(annotate, common, true);
  add_config(annotate, common);
  add_seed(annotate, common);
  add_jobs(annotate, common);
  add_depth_scale(annotate, common);

  auto* cluster = app.add_subcommand("cluster", "Build normal and offset exemplars");
  ClusterOptions cluster_opts;
  cluster->add_option("--input", cluster_opts.input, "Annotation root")->required();
  cluster->add_option("--out", cluster_opts.out, "Exemplar JSON path")->required();
  cluster->add_option("--normals", cluster_opts.normals, "Normal exemplars")
      ->check(CLI::Range(1, 4096));
  cluster->add_option("--per-group", cluster_opts.per_group, "Offset exemplars per depth group")
      ->check(CLI::Range(1, 4096));
  cluster->add_option("--split", cluster_opts.split, "Near/far offset split (m)")
      ->check(CLI::PositiveNumber);
  add_seed(cluster, common);

  auto* encode = app.add_subcommand("encode", "Encode annotation planes as exemplar targets");
  IoOptions encode_io;
  std::string encode_exemplars;
  encode->add_option("--input", encode_io.input, "Annotation root")->required();
  encode->add_option("--exemplars", encode_exemplars, "Exemplar JSON")->required();
  encode->add_option("--out", encode_io.out, "Target output root")->required();
  add_jobs(encode, common);

  auto* evaluate = app.add_subcommand("evaluate", "Score predicted against reference annotations");
  EvaluateOptions evaluate_opts;
  evaluate->add_option("--pred", evaluate_opts.pred, "Predicted annotation root")->required();
  evaluate->add_option("--gt", evaluate_opts.gt, "Reference annotation root")->required();
  evaluate->add_option("--out", evaluate_opts.out, "Also write a per-image JSON report");
  add_camera(evaluate, common, false);
  add_domain(evaluate, common);
  add_jobs(evaluate, common);

  auto* render = app.add_subcommand("render-depth", "Render planar depth from an annotation");
  IoOptions render_io;
  render->add_option("--input", render_io.input, "Annotation directory")->required();
  render->add_option("--out", render_io.out, "Depth path (.png or .fdm)")->required();
  add_depth_scale(render, common);

  auto* mesh = app.add_subcommand("export-mesh", "Write an annotation as a PLY mesh");
  IoOptions mesh_io;
  mesh->add_option("--input", mesh_io.input, "Annotation directory")->required();
  mesh->add_option("--out", mesh_io.out, "PLY path")->required();
  add_camera(mesh, common, false);

  auto* loss = app.add_subcommand("loss-check", "Evaluate the training loss on a prediction dump");
  LossCheckOptions loss_opts;
  loss->add_option("--pred", loss_opts.pred, "Prediction JSON")->required();
  loss->add_option("--gt", loss_opts.gt, "Annotation directory")->required();
  loss->add_option("--exemplars", loss_opts.exemplars, "Exemplar JSON")->required();
  add_config(loss, common);

  try {
    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return run_synth(synth_opts, common, err);
    if (*annotate) return run_annotate(annotate_io, common, err);
    if (*cluster) return run_cluster(cluster_opts, common, err);
    if (*encode) return run_encode(encode_io, encode_exemplars, common, err);
    if (*evaluate) return run_evaluate(evaluate_opts, common, out, err);
    if (*render) return run_render_depth(render_io, common, err);
    if (*mesh) return run_export_mesh(mesh_io, common, err);
    if (*loss) return run_loss_check(loss_opts, common, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace planekit::cli
